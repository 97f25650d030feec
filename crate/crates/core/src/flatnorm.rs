//! Simplicial flat norm as a linear program, and a planar overlay that puts
//! two triangulations on a common refinement.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use serde::Serialize;
use spade::{ConstrainedDelaunayTriangulation, Point2, Triangulation};

use crate::currents::{current_sub, mass, same_complex, SimplicialCurrent};
use crate::error::{input_err, Error, Result};
use crate::geom;
use crate::lp::{solve, LinearProgram, LpStatus};
use crate::mesh::{EmbeddedComplex, DEFAULT_SNAP_EPS};
use crate::spatial::{bounding_box, BoxGrid};

pub const DEFAULT_MAX_PIVOTS: usize = 2_000_000;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FlatNormResult {
    pub value: f64,
    pub dim: usize,
    /// Real (k+1)-chain `S`, by simplex index.
    pub filling: BTreeMap<usize, f64>,
    /// Real k-chain `T - boundary S`.
    pub residual: BTreeMap<usize, f64>,
    pub solver_status: LpStatus,
    pub pivots: usize,
}

impl FlatNormResult {
    pub fn filling_mass(&self, ambient: &EmbeddedComplex) -> f64 {
        self.filling.iter().map(|(&i, v)| v.abs() * ambient.volume(self.dim + 1, i)).sum()
    }

    pub fn residual_mass(&self, ambient: &EmbeddedComplex) -> f64 {
        self.residual.iter().map(|(&i, v)| v.abs() * ambient.volume(self.dim, i)).sum()
    }

    /// Whether the optimal filling is integral (within `1e-9`).
    pub fn is_integral(&self) -> bool {
        self.filling.values().all(|v| (v - v.round()).abs() <= 1e-9)
    }
}

#[derive(Debug, Clone, Default)]
pub struct FlatNormOptions<'a> {
    /// Write the program in CPLEX LP format here before solving.
    pub dump_lp: Option<&'a Path>,
    pub max_pivots: Option<usize>,
}

/// The program `min sum vol_k |r| + sum vol_{k+1} |s|` subject to
/// `r + boundary s = t`, with each free variable split into two nonnegative parts.
pub fn flat_norm_program(t: &SimplicialCurrent, ambient: &EmbeddedComplex) -> LinearProgram {
    let k = t.dim();
    let nk = ambient.num_simplices(k);
    let nk1 = ambient.num_simplices(k + 1);
    let mut lp = LinearProgram::new(nk);
    for (&i, &m) in t.entries() {
        lp.rhs[i] = m as f64;
    }
    for i in 0..nk {
        let w = ambient.volume(k, i);
        lp.add_var(format!("rp{i}"), w, vec![(i, 1.0)]);
        lp.add_var(format!("rm{i}"), w, vec![(i, -1.0)]);
    }
    for j in 0..nk1 {
        let w = ambient.volume(k + 1, j);
        let col: Vec<(usize, f64)> = ambient
            .faces(k + 1, j)
            .iter()
            .enumerate()
            .map(|(f, &face)| (face, if f % 2 == 0 { 1.0 } else { -1.0 }))
            .collect();
        let neg: Vec<(usize, f64)> = col.iter().map(|&(i, v)| (i, -v)).collect();
        lp.add_var(format!("sp{j}"), w, col);
        lp.add_var(format!("sm{j}"), w, neg);
    }
    lp
}

pub fn flat_norm(t: &SimplicialCurrent, ambient: &Arc<EmbeddedComplex>) -> Result<FlatNormResult> {
    flat_norm_with(t, ambient, &FlatNormOptions::default())
}

pub fn flat_norm_with(t: &SimplicialCurrent, ambient: &Arc<EmbeddedComplex>, opts: &FlatNormOptions) -> Result<FlatNormResult> {
    if !same_complex(t.complex(), ambient) {
        return input_err("current does not live on the ambient complex");
    }
    let k = t.dim();
    let top = ambient.top_dim();
    if k > top {
        return input_err(format!("{k}-current on a complex of dimension {top}"));
    }
    if k == top {
        // No (k+1)-simplices: the only filling is zero.
        return Ok(FlatNormResult {
            value: mass(t).total,
            dim: k,
            filling: BTreeMap::new(),
            residual: t.entries().iter().map(|(&i, &m)| (i, m as f64)).collect(),
            solver_status: LpStatus::Optimal,
            pivots: 0,
        });
    }
    let lp = flat_norm_program(t, ambient);
    if let Some(path) = opts.dump_lp {
        std::fs::write(path, lp.to_lp_format())?;
    }
    let sol = solve(&lp, opts.max_pivots.unwrap_or(DEFAULT_MAX_PIVOTS));
    let nk = ambient.num_simplices(k);
    let mut residual = BTreeMap::new();
    for i in 0..nk {
        let r = sol.x[2 * i] - sol.x[2 * i + 1];
        if r.abs() > 1e-12 {
            residual.insert(i, r);
        }
    }
    let mut filling = BTreeMap::new();
    for j in 0..ambient.num_simplices(k + 1) {
        let s = sol.x[2 * nk + 2 * j] - sol.x[2 * nk + 2 * j + 1];
        if s.abs() > 1e-12 {
            filling.insert(j, s);
        }
    }
    if sol.status != LpStatus::Optimal && sol.status != LpStatus::IterationLimit {
        return Err(Error::Solver(format!("flat norm program ended {:?}", sol.status)));
    }
    Ok(FlatNormResult {
        value: sol.objective,
        dim: k,
        filling,
        residual,
        solver_status: sol.status,
        pivots: sol.iterations,
    })
}

pub fn flat_distance(a: &SimplicialCurrent, b: &SimplicialCurrent, ambient: &Arc<EmbeddedComplex>) -> Result<FlatNormResult> {
    flat_norm(&current_sub(a, b)?, ambient)
}

/// Common refinement of two planar triangulations.
#[derive(Debug, Clone)]
pub struct OverlayComplex {
    pub merged: Arc<EmbeddedComplex>,
    /// For each triangle of the first input, the merged triangles inside it.
    pub lift1: Vec<Vec<usize>>,
    pub lift2: Vec<Vec<usize>>,
    /// Input vertices snapped onto an earlier vertex, as `(input, vertex)`.
    pub snapped: Vec<(usize, usize)>,
}

struct TriangleLocator<'a> {
    c: &'a EmbeddedComplex,
    grid: BoxGrid,
}

impl<'a> TriangleLocator<'a> {
    fn new(c: &'a EmbeddedComplex) -> Self {
        let boxes: Vec<(Vec<f64>, Vec<f64>)> = (0..c.num_simplices(2)).map(|i| bounding_box(&c.simplex_points(2, i))).collect();
        TriangleLocator {
            c,
            grid: BoxGrid::new(2, &boxes),
        }
    }

    fn locate(&self, p: &[f64]) -> Option<usize> {
        self.grid
            .query(p, p, 0.0)
            .into_iter()
            .find(|&i| geom::point_in_simplex(&self.c.simplex_points(2, i), p, 1e-12))
    }
}

/// Overlay of two 2-dimensional complexes in the plane via a constrained
/// Delaunay triangulation with every input edge as a constraint, split at
/// crossings. Triangles outside both carriers are dropped.
pub fn overlay_2d(c1: &EmbeddedComplex, c2: &EmbeddedComplex) -> Result<OverlayComplex> {
    for c in [c1, c2] {
        if c.ambient_dim() != 2 || c.top_dim() != 2 {
            return Err(Error::UnsupportedDimension("overlay needs 2-dimensional complexes in R^2".into()));
        }
    }
    let mut cdt: ConstrainedDelaunayTriangulation<Point2<f64>> = ConstrainedDelaunayTriangulation::new();
    let mut snapped = Vec::new();
    let mut handles: [Vec<_>; 2] = [Vec::new(), Vec::new()];
    let mut seen: Vec<(Vec<f64>, spade::handles::FixedVertexHandle)> = Vec::new();
    let all_pts: Vec<Vec<f64>> = c1.vertices().chain(c2.vertices()).map(|p| p.to_vec()).collect();
    let refs: Vec<&[f64]> = all_pts.iter().map(|p| p.as_slice()).collect();
    let boxes: Vec<(Vec<f64>, Vec<f64>)> = refs.iter().map(|p| (p.to_vec(), p.to_vec())).collect();
    let grid = BoxGrid::new(2, &boxes);
    for (which, c) in [c1, c2].into_iter().enumerate() {
        for v in 0..c.num_vertices() {
            let p = c.vertex(v);
            let gidx = if which == 0 { v } else { c1.num_vertices() + v };
            let earlier = grid
                .query(p, p, DEFAULT_SNAP_EPS)
                .into_iter()
                .filter(|&j| j < gidx && geom::dist(&all_pts[j], p) <= DEFAULT_SNAP_EPS)
                .min();
            let h = match earlier {
                Some(j) => {
                    if all_pts[j] != p {
                        snapped.push((which + 1, v));
                    }
                    seen[j].1
                }
                None => cdt
                    .insert(Point2::new(p[0], p[1]))
                    .map_err(|e| Error::Geometry(format!("cannot insert vertex {p:?}: {e:?}")))?,
            };
            seen.push((p.to_vec(), h));
            handles[which].push(h);
        }
    }
    // Constraints are split at input vertices lying on them, so collinear
    // overlapping edges share vertices instead of crossing at round-off.
    for (which, c) in [c1, c2].into_iter().enumerate() {
        for e in 0..c.num_simplices(1) {
            let vs = c.simplex_vertices(1, e);
            let (a, b) = (handles[which][vs[0]], handles[which][vs[1]]);
            if a == b {
                continue;
            }
            let (pa, pb) = (c.vertex(vs[0]), c.vertex(vs[1]));
            let d = geom::sub(pb, pa);
            let len2 = geom::dot(&d, &d);
            let (lo, hi) = bounding_box(&[pa, pb]);
            let mut on: Vec<(f64, spade::handles::FixedVertexHandle)> = grid
                .query(&lo, &hi, DEFAULT_SNAP_EPS)
                .into_iter()
                .filter_map(|j| {
                    let h = seen[j].1;
                    let t = geom::dot(&geom::sub(&all_pts[j], pa), &d) / len2;
                    let foot: Vec<f64> = pa.iter().zip(&d).map(|(x, dx)| x + t * dx).collect();
                    let inside = t > 0.0 && t < 1.0 && geom::dist(&foot, &all_pts[j]) <= DEFAULT_SNAP_EPS;
                    (inside && h != a && h != b).then_some((t, h))
                })
                .collect();
            on.sort_by(|x, y| x.0.total_cmp(&y.0));
            on.dedup_by_key(|x| x.1);
            let mut prev = a;
            for h in on.into_iter().map(|x| x.1).chain([b]) {
                if h != prev {
                    cdt.add_constraint_and_split(prev, h, |p| p);
                    prev = h;
                }
            }
        }
    }
    let loc1 = TriangleLocator::new(c1);
    let loc2 = TriangleLocator::new(c2);
    let mut index: BTreeMap<usize, usize> = BTreeMap::new();
    let mut verts: Vec<Vec<f64>> = Vec::new();
    let mut tris: Vec<Vec<usize>> = Vec::new();
    let mut owners: Vec<(Option<usize>, Option<usize>)> = Vec::new();
    for f in cdt.inner_faces() {
        let vs = f.vertices();
        let pts: Vec<Vec<f64>> = vs.iter().map(|v| vec![v.position().x, v.position().y]).collect();
        let refs: Vec<&[f64]> = pts.iter().map(|p| p.as_slice()).collect();
        let bc = geom::barycenter(&refs);
        let (o1, o2) = (loc1.locate(&bc), loc2.locate(&bc));
        if o1.is_none() && o2.is_none() {
            continue;
        }
        let mut tri = Vec::with_capacity(3);
        for (v, p) in vs.iter().zip(pts) {
            let next = verts.len();
            let id = *index.entry(v.fix().index()).or_insert(next);
            if id == next {
                verts.push(p);
            }
            tri.push(id);
        }
        tris.push(tri);
        owners.push((o1, o2));
    }
    let merged = Arc::new(EmbeddedComplex::from_maximal(2, verts, tris.clone()).map_err(|e| {
        Error::Geometry(format!("overlay produced a degenerate triangle: {e}"))
    })?);
    let mut lift1 = vec![Vec::new(); c1.num_simplices(2)];
    let mut lift2 = vec![Vec::new(); c2.num_simplices(2)];
    for (t, &(o1, o2)) in owners.iter().enumerate() {
        let idx = merged.find_simplex(&tris[t]).expect("triangle was inserted").index;
        if let Some(i) = o1 {
            lift1[i].push(idx);
        }
        if let Some(i) = o2 {
            lift2[i].push(idx);
        }
    }
    for (c, lift) in [(c1, &lift1), (c2, &lift2)] {
        for (i, parts) in lift.iter().enumerate() {
            let area: f64 = parts.iter().map(|&j| merged.volume(2, j)).sum();
            let want = c.volume(2, i);
            if (area - want).abs() > 1e-9 * want.max(1.0) {
                return Err(Error::Geometry(format!(
                    "overlay pieces of triangle {i} cover area {area}, expected {want}"
                )));
            }
        }
    }
    Ok(OverlayComplex {
        merged,
        lift1,
        lift2,
        snapped,
    })
}

impl OverlayComplex {
    /// Transports a 2-current from input `which` (1 or 2) onto the merged complex.
    pub fn lift(&self, which: usize, t: &SimplicialCurrent) -> Result<SimplicialCurrent> {
        let lift = match which {
            1 => &self.lift1,
            2 => &self.lift2,
            _ => return input_err("overlay input index must be 1 or 2"),
        };
        if t.dim() != 2 || t.complex().num_simplices(2) != lift.len() {
            return input_err("only 2-currents on the corresponding input complex can be lifted");
        }
        let c = t.complex();
        let mut entries = Vec::new();
        for (&i, &m) in t.entries() {
            let s_in = geom::signed_volume(&c.simplex_points(2, i)).signum();
            for &j in &lift[i] {
                let s_out = geom::signed_volume(&self.merged.simplex_points(2, j)).signum();
                entries.push((j, m * (s_in * s_out) as i64));
            }
        }
        SimplicialCurrent::from_entries(self.merged.clone(), 2, entries)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::currents::boundary;

    /// `n x n` grid on `[lo, hi]^2`, each cell split along its main diagonal.
    fn grid(n: usize, lo: f64, hi: f64) -> Arc<EmbeddedComplex> {
        let h = (hi - lo) / n as f64;
        let mut v = Vec::new();
        for j in 0..=n {
            for i in 0..=n {
                v.push(vec![lo + i as f64 * h, lo + j as f64 * h]);
            }
        }
        let id = |i: usize, j: usize| j * (n + 1) + i;
        let mut t = Vec::new();
        for j in 0..n {
            for i in 0..n {
                t.push(vec![id(i, j), id(i + 1, j), id(i + 1, j + 1)]);
                t.push(vec![id(i, j), id(i + 1, j + 1), id(i, j + 1)]);
            }
        }
        Arc::new(EmbeddedComplex::from_maximal(2, v, t).unwrap())
    }

    #[test]
    fn zero_and_small_square() {
        let c = grid(4, 0.0, 4.0);
        let z = SimplicialCurrent::zero(c.clone(), 1);
        let r = flat_norm(&z, &c).unwrap();
        assert_eq!(r.value, 0.0);
        assert!(r.filling.is_empty());
        let ids: Vec<usize> = (0..c.num_simplices(2))
            .filter(|&i| {
                let b = c.barycenter(2, i);
                (1.0..2.0).contains(&b[0]) && (1.0..2.0).contains(&b[1])
            })
            .collect();
        let sq = SimplicialCurrent::standard_top(c.clone(), ids, 1).unwrap();
        let r = flat_norm(&boundary(&sq).unwrap(), &c).unwrap();
        assert!((r.value - 1.0).abs() < 1e-9, "{}", r.value);
        assert!((r.filling_mass(&c) + r.residual_mass(&c) - r.value).abs() < 1e-9);
        assert!(r.is_integral());
    }

    #[test]
    fn overlay_shifted_squares() {
        let a = grid(1, 0.0, 1.0);
        let b = Arc::new(
            EmbeddedComplex::from_maximal(
                2,
                vec![vec![0.5, 0.0], vec![1.5, 0.0], vec![1.5, 1.0], vec![0.5, 1.0]],
                vec![vec![0, 1, 2], vec![0, 2, 3]],
            )
            .unwrap(),
        );
        let o = overlay_2d(&a, &b).unwrap();
        let area: f64 = (0..o.merged.num_simplices(2)).map(|i| o.merged.volume(2, i)).sum();
        assert!((area - 1.5).abs() < 1e-9);
        let ta = SimplicialCurrent::standard_full(a.clone()).unwrap();
        assert!((mass(&o.lift(1, &ta).unwrap()).total - 1.0).abs() < 1e-12);

        let same = overlay_2d(&a, &a).unwrap();
        assert!((mass(&same.lift(2, &ta).unwrap()).total - 1.0).abs() < 1e-12);

        let far = grid(1, 5.0, 6.0);
        let o = overlay_2d(&a, &far).unwrap();
        assert_eq!(o.merged.num_simplices(2), 4);
    }
}
