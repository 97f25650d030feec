#![allow(dead_code)]

use std::sync::Arc;

use intcur::{boundary, EmbeddedComplex, SimplicialCurrent};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `nx x ny` grid on `[lo, hi]^2`, each cell cut along its main diagonal.
pub fn grid_2d(nx: usize, ny: usize, lo: f64, hi: f64) -> Arc<EmbeddedComplex> {
    let mut verts = Vec::new();
    for j in 0..=ny {
        for i in 0..=nx {
            verts.push(vec![lo + (hi - lo) * i as f64 / nx as f64, lo + (hi - lo) * j as f64 / ny as f64]);
        }
    }
    let id = |i: usize, j: usize| j * (nx + 1) + i;
    let mut tris = Vec::new();
    for j in 0..ny {
        for i in 0..nx {
            tris.push(vec![id(i, j), id(i + 1, j), id(i + 1, j + 1)]);
            tris.push(vec![id(i, j), id(i + 1, j + 1), id(i, j + 1)]);
        }
    }
    Arc::new(EmbeddedComplex::from_maximal(2, verts, tris).unwrap())
}

/// `n^3` unit cubes, six Kuhn tetrahedra each.
pub fn kuhn_3d(n: usize) -> Arc<EmbeddedComplex> {
    let id = |i: usize, j: usize, k: usize| (k * (n + 1) + j) * (n + 1) + i;
    let mut verts = Vec::new();
    for k in 0..=n {
        for j in 0..=n {
            for i in 0..=n {
                verts.push(vec![i as f64, j as f64, k as f64]);
            }
        }
    }
    let perms = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
    let mut tets = Vec::new();
    for k in 0..n {
        for j in 0..n {
            for i in 0..n {
                for p in &perms {
                    let mut c = [i, j, k];
                    let mut t = vec![id(c[0], c[1], c[2])];
                    for &axis in p {
                        c[axis] += 1;
                        t.push(id(c[0], c[1], c[2]));
                    }
                    tets.push(t);
                }
            }
        }
    }
    Arc::new(EmbeddedComplex::from_maximal(3, verts, tets).unwrap())
}

/// Up to `max_len` random k-simplices with multiplicities in `[-3, 3]`.
pub fn random_chain(c: &Arc<EmbeddedComplex>, k: usize, max_len: usize, r: &mut ChaCha8Rng) -> SimplicialCurrent {
    let n = c.num_simplices(k);
    let len = r.random_range(1..=max_len.min(n));
    let entries: Vec<(usize, i64)> = (0..len).map(|_| (r.random_range(0..n), r.random_range(-3..=3))).collect();
    let mut acc = std::collections::BTreeMap::new();
    for (i, m) in entries {
        *acc.entry(i).or_insert(0i64) += m;
    }
    SimplicialCurrent::from_entries(c.clone(), k, acc.into_iter().filter(|(_, m)| *m != 0)).unwrap()
}

/// Signed edge chain along a vertex path in a complex.
pub fn path_chain(c: &Arc<EmbeddedComplex>, path: &[usize], mult: i64) -> SimplicialCurrent {
    let mut t = SimplicialCurrent::zero(c.clone(), 1);
    for w in path.windows(2) {
        let e = c.find_simplex(w).expect("path follows edges").index;
        let s = if w[0] < w[1] { mult } else { -mult };
        t = t.add(&SimplicialCurrent::from_entries(c.clone(), 1, [(e, s)]).unwrap()).unwrap();
    }
    t
}

/// Random lattice walk of `steps` moves on the vertices of [`grid_2d`].
pub fn random_walk(nx: usize, ny: usize, steps: usize, r: &mut ChaCha8Rng) -> Vec<usize> {
    let (mut i, mut j) = (r.random_range(0..=nx), r.random_range(0..=ny));
    let mut path = vec![j * (nx + 1) + i];
    for _ in 0..steps {
        // Grid edges: axis moves plus the main diagonal.
        let moves: [(i64, i64); 6] = [(1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (-1, -1)];
        let (di, dj) = moves[r.random_range(0..6)];
        let (ni, nj) = (i as i64 + di, j as i64 + dj);
        if ni < 0 || nj < 0 || ni > nx as i64 || nj > ny as i64 {
            continue;
        }
        (i, j) = (ni as usize, nj as usize);
        path.push(j * (nx + 1) + i);
    }
    path
}

/// `min over S in {-1,0,1}^triangles of M(T - dS) + M(S)` by enumeration.
pub fn brute_force(t: &SimplicialCurrent) -> f64 {
    let c = t.complex();
    let nt = c.num_simplices(2);
    let ne = c.num_simplices(1);
    let bd: Vec<Vec<(usize, i64)>> = (0..nt)
        .map(|i| {
            let s = SimplicialCurrent::from_entries(c.clone(), 2, [(i, 1)]).unwrap();
            boundary(&s).unwrap().entries().iter().map(|(&e, &m)| (e, m)).collect()
        })
        .collect();
    let len: Vec<f64> = (0..ne).map(|e| c.volume(1, e)).collect();
    let area: Vec<f64> = (0..nt).map(|i| c.volume(2, i)).collect();
    let base: Vec<i64> = (0..ne).map(|e| t.multiplicity(e)).collect();
    let mut best = f64::INFINITY;
    let total = 3usize.pow(nt as u32);
    let mut s = vec![0i64; nt];
    for code in 0..total {
        let mut r = code;
        for si in s.iter_mut() {
            *si = (r % 3) as i64 - 1;
            r /= 3;
        }
        let mut res = base.clone();
        let mut cost = 0.0;
        for (i, &si) in s.iter().enumerate() {
            if si != 0 {
                cost += area[i];
                for &(e, m) in &bd[i] {
                    res[e] -= si * m;
                }
            }
        }
        cost += res.iter().zip(&len).map(|(&m, &l)| m.unsigned_abs() as f64 * l).sum::<f64>();
        best = best.min(cost);
    }
    best
}
