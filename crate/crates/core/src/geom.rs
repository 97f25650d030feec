//! Small dense geometry kernels on coordinate slices.
//!
//! Everything here works for simplices of any dimension `k` embedded in `R^d`
//! (`k <= d`), with closed forms for the segment and planar-triangle cases that
//! dominate the instance meshes.

use nalgebra::{DMatrix, DVector};

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

fn factorial(k: usize) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

/// Edge matrix `d x k` with columns `p_j - p_0`.
pub fn edge_matrix(points: &[&[f64]]) -> DMatrix<f64> {
    let d = points[0].len();
    let k = points.len() - 1;
    DMatrix::from_fn(d, k, |r, c| points[c + 1][r] - points[0][r])
}

/// k-dimensional Hausdorff volume of the simplex spanned by `points`
/// (`sqrt(det(E^T E)) / k!`).
pub fn simplex_volume(points: &[&[f64]]) -> f64 {
    let k = points.len() - 1;
    match k {
        0 => 1.0,
        1 => dist(points[0], points[1]),
        2 => {
            let a = sub(points[1], points[0]);
            let b = sub(points[2], points[0]);
            if a.len() == 2 {
                0.5 * (a[0] * b[1] - a[1] * b[0]).abs()
            } else {
                let aa = dot(&a, &a);
                let bb = dot(&b, &b);
                let ab = dot(&a, &b);
                0.5 * (aa * bb - ab * ab).max(0.0).sqrt()
            }
        }
        _ => {
            let e = edge_matrix(points);
            let g = e.transpose() * &e;
            g.determinant().max(0.0).sqrt() / factorial(k)
        }
    }
}

/// Signed volume of a top-dimensional simplex (`k == d`): `det(E) / k!`.
pub fn signed_volume(points: &[&[f64]]) -> f64 {
    let k = points.len() - 1;
    match k {
        1 => points[1][0] - points[0][0],
        2 => {
            let (a0, a1) = (points[1][0] - points[0][0], points[1][1] - points[0][1]);
            let (b0, b1) = (points[2][0] - points[0][0], points[2][1] - points[0][1]);
            0.5 * (a0 * b1 - a1 * b0)
        }
        _ => edge_matrix(points).determinant() / factorial(k),
    }
}

/// Barycentric coordinates of the orthogonal projection of `p` onto the affine
/// hull of the simplex, plus the distance from `p` to that hull.
pub fn barycentric(points: &[&[f64]], p: &[f64]) -> (Vec<f64>, f64) {
    let k = points.len() - 1;
    if k == 0 {
        return (vec![1.0], dist(points[0], p));
    }
    if k == 2 && p.len() == 2 {
        let (x0, y0) = (points[0][0], points[0][1]);
        let (x1, y1) = (points[1][0] - x0, points[1][1] - y0);
        let (x2, y2) = (points[2][0] - x0, points[2][1] - y0);
        let det = x1 * y2 - x2 * y1;
        let (px, py) = (p[0] - x0, p[1] - y0);
        let l1 = (px * y2 - x2 * py) / det;
        let l2 = (x1 * py - px * y1) / det;
        return (vec![1.0 - l1 - l2, l1, l2], 0.0);
    }
    let e = edge_matrix(points);
    let rhs = DVector::from_iterator(p.len(), p.iter().zip(points[0]).map(|(a, b)| a - b));
    let g = e.transpose() * &e;
    let lam = match g.clone().lu().solve(&(e.transpose() * &rhs)) {
        Some(l) => l,
        None => return (vec![f64::NAN; k + 1], f64::INFINITY),
    };
    let resid = (&e * &lam - &rhs).norm();
    let mut out = Vec::with_capacity(k + 1);
    out.push(1.0 - lam.sum());
    out.extend(lam.iter().copied());
    (out, resid)
}

/// Whether `p` lies in the closed simplex, up to `eps` measured in ambient
/// distance (barycentric slack is scaled by the simplex diameter).
pub fn point_in_simplex(points: &[&[f64]], p: &[f64], eps: f64) -> bool {
    let (lam, resid) = barycentric(points, p);
    if !(resid <= eps) {
        return false;
    }
    let diam = diameter(points).max(f64::MIN_POSITIVE);
    let slack = eps / diam;
    lam.iter().all(|&l| l >= -slack)
}

pub fn diameter(points: &[&[f64]]) -> f64 {
    let mut d: f64 = 0.0;
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            d = d.max(dist(points[i], points[j]));
        }
    }
    d
}

pub fn barycenter(points: &[&[f64]]) -> Vec<f64> {
    let n = points.len() as f64;
    let mut c = vec![0.0; points[0].len()];
    for p in points {
        for (ci, pi) in c.iter_mut().zip(p.iter()) {
            *ci += pi;
        }
    }
    c.iter_mut().for_each(|x| *x /= n);
    c
}

/// Orthonormal basis of the orthogonal complement of the unit vector `v`,
/// oriented so that `det[w_1, ..., w_{n-1}, v] = +1`.
pub fn complement_frame(v: &[f64]) -> Vec<Vec<f64>> {
    let n = v.len();
    let mut basis: Vec<Vec<f64>> = vec![v.to_vec()];
    let mut frame = Vec::with_capacity(n.saturating_sub(1));
    for axis in 0..n {
        if frame.len() + 1 == n {
            break;
        }
        let mut w = vec![0.0; n];
        w[axis] = 1.0;
        for b in &basis {
            let c = dot(&w, b);
            for (wi, bi) in w.iter_mut().zip(b) {
                *wi -= c * bi;
            }
        }
        let len = norm(&w);
        if len > 1e-8 {
            w.iter_mut().for_each(|x| *x /= len);
            basis.push(w.clone());
            frame.push(w);
        }
    }
    if n >= 2 {
        let mut cols: Vec<&[f64]> = frame.iter().map(|w| w.as_slice()).collect();
        cols.push(v);
        let m = DMatrix::from_fn(n, n, |r, c| cols[c][r]);
        if m.determinant() < 0.0 {
            frame[0].iter_mut().for_each(|x| *x = -*x);
        }
    }
    frame
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn volumes_by_hand() {
        let t: [&[f64]; 3] = [&[0.0, 0.0], &[2.0, 0.0], &[0.0, 2.0]];
        assert!((simplex_volume(&t) - 2.0).abs() < 1e-15);
        let t3: [&[f64]; 3] = [&[0.0, 0.0, 1.0], &[2.0, 0.0, 1.0], &[0.0, 2.0, 1.0]];
        assert!((simplex_volume(&t3) - 2.0).abs() < 1e-15);
        let tet: [&[f64]; 4] = [&[0.0; 3], &[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0], &[0.0, 0.0, 1.0]];
        assert!((simplex_volume(&tet) - 1.0 / 6.0).abs() < 1e-15);
        assert!((signed_volume(&tet) - 1.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn frame_orientation() {
        let f = complement_frame(&[0.0, 1.0]);
        assert_eq!(f, vec![vec![1.0, 0.0]]);
        let f = complement_frame(&[0.0, 0.0, 1.0]);
        let m = DMatrix::from_fn(3, 3, |r, c| [f[0].as_slice(), f[1].as_slice(), &[0.0, 0.0, 1.0]][c][r]);
        assert!((m.determinant() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn barycentric_in_3d_triangle() {
        let t: [&[f64]; 3] = [&[0.0, 0.0, 0.0], &[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0]];
        let (l, r) = barycentric(&t, &[0.25, 0.25, 0.5]);
        assert!((r - 0.5).abs() < 1e-12);
        assert!((l[0] - 0.5).abs() < 1e-12);
        assert!(!point_in_simplex(&t, &[0.25, 0.25, 0.5], 1e-9));
        assert!(point_in_simplex(&t, &[0.25, 0.25, 0.0], 1e-9));
    }
}
