//! Sparse revised simplex for `min c^T x  s.t.  A x = b, x >= 0`.
//!
//! The basis inverse is kept in product form: a diagonal crash basis followed
//! by one eta column per pivot. Flat-norm programs have `+-1` boundary
//! matrices, so pivots stay well conditioned and no reinversion is done.
//! Pricing is Dantzig's rule, falling back to Bland's rule during long runs of
//! degenerate pivots.

use std::fmt::Write as _;

use serde::Serialize;

const PIVOT_TOL: f64 = 1e-9;
const COST_TOL: f64 = 1e-9;
const FEAS_TOL: f64 = 1e-7;
const DEGENERATE_RUN: usize = 50;
const PERTURBATION: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
}

#[derive(Debug, Clone, Default)]
pub struct LinearProgram {
    pub num_rows: usize,
    pub cost: Vec<f64>,
    pub rhs: Vec<f64>,
    /// Column-major sparse matrix: `columns[j]` lists `(row, value)`.
    pub columns: Vec<Vec<(usize, f64)>>,
    pub var_names: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LpSolution {
    pub status: LpStatus,
    pub objective: f64,
    pub x: Vec<f64>,
    pub iterations: usize,
}

impl LinearProgram {
    pub fn new(num_rows: usize) -> Self {
        LinearProgram {
            num_rows,
            rhs: vec![0.0; num_rows],
            ..Default::default()
        }
    }

    /// Appends a variable with objective coefficient `cost` and column entries.
    pub fn add_var(&mut self, name: impl Into<String>, cost: f64, column: Vec<(usize, f64)>) -> usize {
        self.cost.push(cost);
        self.columns.push(column.into_iter().filter(|&(_, v)| v != 0.0).collect());
        self.var_names.push(name.into());
        self.cost.len() - 1
    }

    pub fn num_vars(&self) -> usize {
        self.cost.len()
    }

    /// CPLEX LP text format.
    pub fn to_lp_format(&self) -> String {
        let mut s = String::from("\\ flat norm linear program\nMinimize\n obj:");
        for (j, &c) in self.cost.iter().enumerate() {
            let _ = write!(s, " {} {}", signed(c), self.var_names[j]);
            if j % 8 == 7 {
                s.push_str("\n     ");
            }
        }
        s.push_str("\nSubject To\n");
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); self.num_rows];
        for (j, col) in self.columns.iter().enumerate() {
            for &(i, v) in col {
                rows[i].push((j, v));
            }
        }
        for (i, row) in rows.iter().enumerate() {
            let _ = write!(s, " c{i}:");
            if row.is_empty() {
                s.push_str(" 0 ");
                s.push_str(&self.var_names[0]);
            }
            for &(j, v) in row {
                let _ = write!(s, " {} {}", signed(v), self.var_names[j]);
            }
            let _ = writeln!(s, " = {:.17e}", self.rhs[i]);
        }
        s.push_str("End\n");
        s
    }
}

fn signed(v: f64) -> String {
    if v < 0.0 {
        format!("- {:.17e}", -v)
    } else {
        format!("+ {v:.17e}")
    }
}

struct Eta {
    pivot: usize,
    col: Vec<(usize, f64)>,
    pivot_val: f64,
}

struct Simplex<'a> {
    lp: &'a LinearProgram,
    m: usize,
    n: usize,
    /// Diagonal of the crash basis (`+-a_ij` for singletons, `+1` for artificials).
    diag: Vec<f64>,
    etas: Vec<Eta>,
    head: Vec<usize>,
    is_basic: Vec<bool>,
    x_b: Vec<f64>,
    /// Row sign flips applied so that the right-hand side is nonnegative.
    flip: Vec<f64>,
}

impl<'a> Simplex<'a> {
    fn column(&self, j: usize, out: &mut [f64]) {
        out.iter_mut().for_each(|x| *x = 0.0);
        if j < self.n {
            for &(i, v) in &self.lp.columns[j] {
                out[i] = v * self.flip[i];
            }
        } else {
            out[j - self.n] = 1.0;
        }
    }

    fn ftran(&self, y: &mut [f64]) {
        for (yi, d) in y.iter_mut().zip(&self.diag) {
            *yi /= d;
        }
        for eta in &self.etas {
            let yp = y[eta.pivot];
            if yp == 0.0 {
                continue;
            }
            let yp = yp / eta.pivot_val;
            for &(i, v) in &eta.col {
                y[i] -= v * yp;
            }
            y[eta.pivot] = yp;
        }
    }

    fn btran(&self, pi: &mut [f64]) {
        for eta in self.etas.iter().rev() {
            let mut acc = pi[eta.pivot];
            for &(i, v) in &eta.col {
                acc -= v * pi[i];
            }
            pi[eta.pivot] = acc / eta.pivot_val;
        }
        for (p, d) in pi.iter_mut().zip(&self.diag) {
            *p /= d;
        }
    }

    fn reduced_cost(&self, j: usize, cost: &[f64], pi: &[f64]) -> f64 {
        if j < self.n {
            cost[j] - self.lp.columns[j].iter().map(|&(i, v)| v * self.flip[i] * pi[i]).sum::<f64>()
        } else {
            cost[j] - pi[j - self.n]
        }
    }

    /// Runs simplex iterations for `cost` (length `n + m`). Artificials may not
    /// enter when `allow_artificial` is false.
    fn run(&mut self, cost: &[f64], allow_artificial: bool, max_iter: usize, iters: &mut usize) -> LpStatus {
        let m = self.m;
        let total = if allow_artificial { self.n + m } else { self.n };
        let mut pi = vec![0.0; m];
        let mut alpha = vec![0.0; m];
        let mut degenerate_run = 0usize;
        loop {
            if *iters >= max_iter {
                return LpStatus::IterationLimit;
            }
            for (p, &h) in pi.iter_mut().zip(&self.head) {
                *p = cost[h];
            }
            self.btran(&mut pi);
            let bland = degenerate_run >= DEGENERATE_RUN;
            let mut entering = None;
            let mut best = -COST_TOL;
            for j in 0..total {
                if self.is_basic[j] {
                    continue;
                }
                let d = self.reduced_cost(j, cost, &pi);
                if d < best {
                    entering = Some(j);
                    if bland {
                        break;
                    }
                    best = d;
                }
            }
            let Some(q) = entering else {
                return LpStatus::Optimal;
            };
            self.column(q, &mut alpha);
            self.ftran(&mut alpha);
            let mut leave: Option<usize> = None;
            let mut ratio = f64::INFINITY;
            if !allow_artificial {
                // Basic artificials sit at zero in phase 2; pivot them out first.
                leave = (0..m).find(|&i| self.head[i] >= self.n && alpha[i].abs() > PIVOT_TOL);
                if leave.is_some() {
                    ratio = 0.0;
                }
            }
            if leave.is_none() {
                for i in 0..m {
                    let a = alpha[i];
                    if a <= PIVOT_TOL {
                        continue;
                    }
                    let r = self.x_b[i].max(0.0) / a;
                    let better = match leave {
                        None => true,
                        Some(l) => {
                            r < ratio - 1e-12
                                || (r <= ratio + 1e-12 && if bland { self.head[i] < self.head[l] } else { a > alpha[l] })
                        }
                    };
                    if better {
                        ratio = r;
                        leave = Some(i);
                    }
                }
            }
            let Some(p) = leave else {
                return LpStatus::Unbounded;
            };
            let step = ratio;
            for i in 0..m {
                if i != p {
                    self.x_b[i] -= step * alpha[i];
                }
            }
            self.x_b[p] = step;
            if step > 1e-12 {
                degenerate_run = 0;
            } else {
                degenerate_run += 1;
            }
            let col: Vec<(usize, f64)> = alpha
                .iter()
                .enumerate()
                .filter(|&(i, &v)| i != p && v != 0.0)
                .map(|(i, &v)| (i, v))
                .collect();
            self.etas.push(Eta {
                pivot: p,
                col,
                pivot_val: alpha[p],
            });
            self.is_basic[self.head[p]] = false;
            self.is_basic[q] = true;
            self.head[p] = q;
            *iters += 1;
        }
    }
}

/// Solves the program. `max_iter` bounds the total number of pivots.
///
/// The right-hand side is first perturbed by small distinct positive amounts,
/// which removes the heavy degeneracy of flat-norm programs. The final basis
/// is then re-evaluated with the true right-hand side; if it is not primal
/// feasible there, the program is re-solved unperturbed.
pub fn solve(lp: &LinearProgram, max_iter: usize) -> LpSolution {
    let flip: Vec<f64> = lp.rhs.iter().map(|&b| if b < 0.0 { -1.0 } else { 1.0 }).collect();
    let b: Vec<f64> = lp.rhs.iter().zip(&flip).map(|(b, f)| b * f).collect();
    let scale = b.iter().fold(1.0f64, |a, &x| a.max(x));
    let perturbed: Vec<f64> = b
        .iter()
        .enumerate()
        .map(|(i, &x)| x + PERTURBATION * scale * (1.0 + ((i as u64).wrapping_mul(2654435761) % 1000) as f64 / 1000.0))
        .collect();
    let mut iters = 0;
    let (mut s, st) = run_phases(lp, &flip, &perturbed, max_iter, &mut iters);
    if st == LpStatus::Optimal {
        let mut x_b = b.clone();
        s.ftran(&mut x_b);
        if x_b.iter().all(|&x| x >= -FEAS_TOL * scale) && s.head.iter().zip(&x_b).all(|(&h, &x)| h < s.n || x.abs() <= FEAS_TOL * scale) {
            s.x_b = x_b;
            return finish(&s, st, iters);
        }
    }
    let (s, st) = run_phases(lp, &flip, &b, max_iter, &mut iters);
    finish(&s, st, iters)
}

fn run_phases<'a>(lp: &'a LinearProgram, flip: &[f64], b: &[f64], max_iter: usize, iters: &mut usize) -> (Simplex<'a>, LpStatus) {
    let m = lp.num_rows;
    let n = lp.num_vars();
    // Crash: a column with a single entry, of the right sign, per row.
    let mut head: Vec<usize> = (0..m).map(|i| n + i).collect();
    let mut diag = vec![1.0; m];
    let mut is_basic = vec![false; n + m];
    let mut taken = vec![false; m];
    for (j, col) in lp.columns.iter().enumerate() {
        if let [(i, v)] = col.as_slice() {
            let v = v * flip[*i];
            if !taken[*i] && v > 0.0 {
                taken[*i] = true;
                head[*i] = j;
                diag[*i] = v;
            }
        }
    }
    for &h in &head {
        is_basic[h] = true;
    }
    let x_b: Vec<f64> = (0..m).map(|i| b[i] / diag[i]).collect();
    let mut s = Simplex {
        lp,
        m,
        n,
        diag,
        etas: Vec::new(),
        head,
        is_basic,
        x_b,
        flip: flip.to_vec(),
    };
    if s.head.iter().any(|&h| h >= n) {
        let mut c1 = vec![0.0; n + m];
        c1[n..].iter_mut().for_each(|c| *c = 1.0);
        let st = s.run(&c1, true, max_iter, iters);
        if st == LpStatus::IterationLimit {
            return (s, st);
        }
        let infeas: f64 = s.head.iter().zip(&s.x_b).filter(|(&h, _)| h >= n).map(|(_, &x)| x).sum();
        if infeas > FEAS_TOL * (1.0 + b.iter().sum::<f64>()) {
            return (s, LpStatus::Infeasible);
        }
    }
    let mut c2 = lp.cost.clone();
    c2.extend(std::iter::repeat_n(0.0, m));
    let st = s.run(&c2, false, max_iter, iters);
    (s, st)
}

fn finish(s: &Simplex, status: LpStatus, iterations: usize) -> LpSolution {
    let mut x = vec![0.0; s.n];
    for (&h, &v) in s.head.iter().zip(&s.x_b) {
        if h < s.n {
            x[h] = v.max(0.0);
        }
    }
    let objective = x.iter().zip(&s.lp.cost).map(|(a, c)| a * c).sum();
    LpSolution {
        status,
        objective,
        x,
        iterations,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_program() {
        // min -x - y  s.t. x + s1 = 2, y + s2 = 3, x + y + s3 = 4
        let mut lp = LinearProgram::new(3);
        lp.rhs = vec![2.0, 3.0, 4.0];
        lp.add_var("x", -1.0, vec![(0, 1.0), (2, 1.0)]);
        lp.add_var("y", -1.0, vec![(1, 1.0), (2, 1.0)]);
        for i in 0..3 {
            lp.add_var(format!("s{i}"), 0.0, vec![(i, 1.0)]);
        }
        let sol = solve(&lp, 1000);
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!((sol.objective + 4.0).abs() < 1e-12);
    }

    #[test]
    fn needs_phase_one() {
        // min x + 2y  s.t. x + y = 1, x - y = 0
        let mut lp = LinearProgram::new(2);
        lp.rhs = vec![1.0, 0.0];
        lp.add_var("x", 1.0, vec![(0, 1.0), (1, 1.0)]);
        lp.add_var("y", 2.0, vec![(0, 1.0), (1, -1.0)]);
        let sol = solve(&lp, 100);
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!((sol.objective - 1.5).abs() < 1e-12);
        assert!((sol.x[0] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn infeasible_and_unbounded() {
        let mut lp = LinearProgram::new(1);
        lp.rhs = vec![-1.0];
        lp.add_var("x", 1.0, vec![(0, 1.0)]);
        assert_eq!(solve(&lp, 100).status, LpStatus::Infeasible);

        let mut lp = LinearProgram::new(1);
        lp.rhs = vec![1.0];
        lp.add_var("x", -1.0, vec![(0, 1.0)]);
        lp.add_var("y", 0.0, vec![(0, -1.0)]);
        assert_eq!(solve(&lp, 100).status, LpStatus::Unbounded);
    }

    #[test]
    fn lp_text_mentions_every_row() {
        let mut lp = LinearProgram::new(2);
        lp.rhs = vec![1.0, -2.0];
        lp.add_var("a", 1.0, vec![(0, 1.0), (1, -1.0)]);
        let txt = lp.to_lp_format();
        assert!(txt.starts_with("\\"));
        assert!(txt.contains(" c0:") && txt.contains(" c1:") && txt.ends_with("End\n"));
    }
}
