//! Piecewise-affine maps: vertex images extended affinely over each simplex.
//!
//! The pushforward sums signed multiplicities over preimages, so folded
//! sheets cancel. The caller supplies a target complex that tiles the image
//! of every carried simplex; [`pushforward`] verifies that and names the
//! first offending pair otherwise.

use std::collections::BTreeMap;
use std::sync::Arc;

use nalgebra::{DMatrix, Matrix2};
use serde::Serialize;

use crate::currents::{mass, SimplicialCurrent};
use crate::error::{input_err, Error, Result};
use crate::geom;
use crate::mesh::{EmbeddedComplex, DEFAULT_SNAP_EPS};
use crate::spatial::{bounding_box, BoxGrid};

pub const DEFAULT_SO_TOL: f64 = 1e-6;
const REFINEMENT_REL_TOL: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct PiecewiseAffineMap {
    source: Arc<EmbeddedComplex>,
    target_dim: usize,
    images: Vec<f64>,
}

impl PiecewiseAffineMap {
    pub fn new(source: Arc<EmbeddedComplex>, target_dim: usize, vertex_images: Vec<Vec<f64>>) -> Result<Self> {
        if target_dim == 0 {
            return input_err("target dimension must be positive");
        }
        if vertex_images.len() != source.num_vertices() {
            return input_err(format!(
                "{} vertex images for {} source vertices",
                vertex_images.len(),
                source.num_vertices()
            ));
        }
        let mut images = Vec::with_capacity(vertex_images.len() * target_dim);
        for (i, p) in vertex_images.iter().enumerate() {
            if p.len() != target_dim || p.iter().any(|x| !x.is_finite()) {
                return input_err(format!("image of vertex {i} is not a finite point of R^{target_dim}"));
            }
            images.extend_from_slice(p);
        }
        Ok(PiecewiseAffineMap {
            source,
            target_dim,
            images,
        })
    }

    /// Samples `f` at the source vertices.
    pub fn from_fn(source: Arc<EmbeddedComplex>, target_dim: usize, f: impl Fn(&[f64]) -> Vec<f64>) -> Result<Self> {
        let imgs = source.vertices().map(&f).collect();
        Self::new(source, target_dim, imgs)
    }

    pub fn identity(source: Arc<EmbeddedComplex>) -> Self {
        let d = source.ambient_dim();
        Self::from_fn(source, d, |p| p.to_vec()).expect("identity images are well formed")
    }

    pub fn source(&self) -> &Arc<EmbeddedComplex> {
        &self.source
    }

    pub fn target_dim(&self) -> usize {
        self.target_dim
    }

    pub fn image(&self, v: usize) -> &[f64] {
        &self.images[v * self.target_dim..(v + 1) * self.target_dim]
    }

    pub fn vertex_images(&self) -> Vec<Vec<f64>> {
        self.images.chunks_exact(self.target_dim).map(|c| c.to_vec()).collect()
    }

    pub fn simplex_image(&self, k: usize, i: usize) -> Vec<&[f64]> {
        self.source.simplex_vertices(k, i).iter().map(|&v| self.image(v)).collect()
    }

    /// Image of a point given by barycentric coordinates in a simplex.
    pub fn eval_bary(&self, k: usize, i: usize, bary: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.target_dim];
        for (&v, &l) in self.source.simplex_vertices(k, i).iter().zip(bary) {
            for (o, x) in out.iter_mut().zip(self.image(v)) {
                *o += l * x;
            }
        }
        out
    }

    /// Image of a carrier point (first maximal simplex containing it).
    pub fn eval(&self, p: &[f64]) -> Result<Vec<f64>> {
        let host = self.source.locate(p, DEFAULT_SNAP_EPS);
        let Some(id) = host.first() else {
            return input_err(format!("point {p:?} is off the source carrier"));
        };
        let (bary, _) = geom::barycentric(&self.source.simplex_points(id.dim, id.index), p);
        Ok(self.eval_bary(id.dim, id.index, &bary))
    }

    /// Differential of the affine piece on a k-simplex, as an `m x k` matrix in
    /// an orthonormal frame of the simplex's tangent space (the ambient frame
    /// when `k` equals the source ambient dimension).
    pub fn differential(&self, k: usize, i: usize) -> DMatrix<f64> {
        let pts = self.source.simplex_points(k, i);
        let imgs = self.simplex_image(k, i);
        let e_src = geom::edge_matrix(&pts);
        let e_img = geom::edge_matrix(&imgs);
        if k == self.source.ambient_dim() {
            let inv = e_src.try_inverse().expect("nondegenerate simplex");
            e_img * inv
        } else {
            let r = e_src.qr().r();
            let rinv = r.try_inverse().expect("nondegenerate simplex");
            e_img * rinv
        }
    }

    /// Affine piece `x -> D x + b` on a top-dimensional source simplex.
    pub fn affine_piece(&self, i: usize) -> (DMatrix<f64>, Vec<f64>) {
        let d = self.source.ambient_dim();
        let dm = self.differential(d, i);
        let v0 = self.source.simplex_vertices(d, i)[0];
        let x0 = self.source.vertex(v0);
        let y0 = self.image(v0);
        let b: Vec<f64> = (0..self.target_dim)
            .map(|r| y0[r] - (0..d).map(|c| dm[(r, c)] * x0[c]).sum::<f64>())
            .collect();
        (dm, b)
    }
}

pub fn singular_values(m: &DMatrix<f64>) -> Vec<f64> {
    if m.nrows() == 2 && m.ncols() == 2 {
        let m2 = Matrix2::new(m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]);
        let s = m2.norm_squared();
        let det = m2.determinant();
        let disc = (s * s - 4.0 * det * det).max(0.0).sqrt();
        let s1 = ((s + disc) / 2.0).max(0.0).sqrt();
        let s2 = ((s - disc) / 2.0).max(0.0).sqrt();
        return vec![s1, s2];
    }
    let mut sv: Vec<f64> = m.clone().svd(false, false).singular_values.iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    sv
}

/// Operator-norm maximum over maximal simplices. Exact for the length metric
/// on convex carriers; an upper bound for the ambient metric otherwise.
pub fn lipschitz_constant(psi: &PiecewiseAffineMap) -> f64 {
    let src = psi.source();
    let mut lip: f64 = 0.0;
    for id in src.maximal_simplices() {
        if id.dim == 0 {
            continue;
        }
        let sv = singular_values(&psi.differential(id.dim, id.index));
        lip = lip.max(sv[0]);
    }
    lip
}

/// Builds the complex with the same combinatorics as the source and vertex
/// positions at the images. Only valid as a pushforward target when the map
/// does not fold.
pub fn image_complex(psi: &PiecewiseAffineMap) -> Result<EmbeddedComplex> {
    let src = psi.source();
    let simplices: Vec<Vec<usize>> = src
        .maximal_simplices()
        .into_iter()
        .map(|id| src.simplex_vertices(id.dim, id.index).to_vec())
        .collect();
    EmbeddedComplex::from_maximal(psi.target_dim(), psi.vertex_images(), simplices)
}

/// One covered (source, target) pair of a pushforward.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Cover {
    pub source: usize,
    pub target: usize,
    /// Orientation of the image of `source` relative to `target`'s vertex order.
    pub sign: i64,
}

#[derive(Debug, Clone)]
pub struct Pushforward {
    pub current: SimplicialCurrent,
    pub covers: Vec<Cover>,
    /// Carried source simplices whose image is degenerate (contribute 0).
    pub degenerate: Vec<usize>,
}

/// Orientation of `img` (in vertex order) relative to `tau` (in vertex order),
/// both k-simplices in a common k-plane of `R^m`.
fn relative_orientation(img: &[&[f64]], tau: &[&[f64]]) -> i64 {
    let k = img.len() - 1;
    let m = img[0].len();
    let s = if k == m {
        geom::signed_volume(img).signum() * geom::signed_volume(tau).signum()
    } else {
        let ep = geom::edge_matrix(img);
        let et = geom::edge_matrix(tau);
        let g = ep.transpose() * &ep;
        match g.lu().solve(&(ep.transpose() * et)) {
            Some(c) => c.determinant().signum(),
            None => 0.0,
        }
    };
    s as i64
}

/// Push `t` forward along `psi` onto `target`, keeping the covering relation.
pub fn pushforward_detailed(psi: &PiecewiseAffineMap, t: &SimplicialCurrent, target: &Arc<EmbeddedComplex>) -> Result<Pushforward> {
    if !crate::currents::same_complex(t.complex(), psi.source()) {
        return input_err("current does not live on the map's source complex");
    }
    if target.ambient_dim() != psi.target_dim() {
        return input_err(format!(
            "target complex lives in R^{}, map lands in R^{}",
            target.ambient_dim(),
            psi.target_dim()
        ));
    }
    let k = t.dim();
    let n_tau = target.num_simplices(k);
    let boxes: Vec<(Vec<f64>, Vec<f64>)> = (0..n_tau).map(|j| bounding_box(&target.simplex_points(k, j))).collect();
    let grid = BoxGrid::new(target.ambient_dim(), &boxes);
    let eps = DEFAULT_SNAP_EPS;

    let mut acc: BTreeMap<usize, i64> = BTreeMap::new();
    let mut covers = Vec::new();
    let mut degenerate = Vec::new();
    for (&sigma, &theta) in t.entries() {
        let img = psi.simplex_image(k, sigma);
        let vol_img = geom::simplex_volume(&img);
        if k > 0 && vol_img <= target.volume_eps() {
            degenerate.push(sigma);
            continue;
        }
        let (lo, hi) = bounding_box(&img);
        let mut covered_vol = 0.0;
        let mut partial: Option<usize> = None;
        for tau in grid.query(&lo, &hi, eps) {
            let tp = target.simplex_points(k, tau);
            let bc = geom::barycenter(&tp);
            let inside_bc = geom::point_in_simplex(&img, &bc, eps);
            if inside_bc {
                if !tp.iter().all(|p| geom::point_in_simplex(&img, p, eps)) {
                    return Err(Error::Refinement {
                        source_simplex: sigma,
                        target_simplex: Some(tau),
                    });
                }
                let s = if k == 0 { 1 } else { relative_orientation(&img, &tp) };
                covered_vol += target.volume(k, tau);
                covers.push(Cover {
                    source: sigma,
                    target: tau,
                    sign: s,
                });
                *acc.entry(tau).or_insert(0) += s * theta;
            } else if partial.is_none() && k > 0 {
                let strictly_inside = tp.iter().any(|p| {
                    let (lam, resid) = geom::barycentric(&img, p);
                    resid <= eps && lam.iter().all(|&l| l > 1e-7)
                });
                if strictly_inside {
                    partial = Some(tau);
                }
            }
        }
        let mismatch = (covered_vol - vol_img).abs() > REFINEMENT_REL_TOL * vol_img.max(1.0);
        if partial.is_some() || mismatch {
            return Err(Error::Refinement {
                source_simplex: sigma,
                target_simplex: partial,
            });
        }
    }
    acc.retain(|_, m| *m != 0);
    let current = SimplicialCurrent::from_entries(target.clone(), k, acc)?;
    Ok(Pushforward {
        current,
        covers,
        degenerate,
    })
}

pub fn pushforward(psi: &PiecewiseAffineMap, t: &SimplicialCurrent, target: &Arc<EmbeddedComplex>) -> Result<SimplicialCurrent> {
    Ok(pushforward_detailed(psi, t, target)?.current)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimplexGradient {
    pub singular_values: Vec<f64>,
    pub det_sign: i8,
    pub is_special_orthogonal: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GlobalGradientVerdict {
    /// One rigid motion on the whole carrier.
    ConstantRotation,
    /// Every piece orthogonal, but the pieces disagree (or reflect).
    OrthogonalMixed,
    /// Some singular value below 1.
    ContractiveSomewhere,
    /// Some singular value above 1 (not 1-Lipschitz).
    ExpansiveSomewhere,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComponentMotion {
    pub simplices: usize,
    pub constant_motion: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GradientClassification {
    pub per_simplex: BTreeMap<usize, SimplexGradient>,
    pub components: Vec<ComponentMotion>,
    pub global: GlobalGradientVerdict,
}

impl GradientClassification {
    pub fn all_special_orthogonal(&self) -> bool {
        self.per_simplex.values().all(|g| g.is_special_orthogonal)
    }
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

/// Connected components of the carried top simplices, joined across shared
/// codimension-one faces. Returned as lists of simplex ids, ordered by
/// smallest member.
pub fn carried_components(t: &SimplicialCurrent) -> Vec<Vec<usize>> {
    let k = t.dim();
    let ids: Vec<usize> = t.entries().keys().copied().collect();
    if k == 0 {
        return ids.into_iter().map(|i| vec![i]).collect();
    }
    let pos: BTreeMap<usize, usize> = ids.iter().enumerate().map(|(p, &i)| (i, p)).collect();
    let mut parent: Vec<usize> = (0..ids.len()).collect();
    let mut face_owner: BTreeMap<usize, usize> = BTreeMap::new();
    for &i in &ids {
        for &f in t.complex().faces(k, i) {
            match face_owner.get(&f) {
                Some(&j) => {
                    let (a, b) = (find(&mut parent, pos[&i]), find(&mut parent, pos[&j]));
                    if a != b {
                        parent[a.max(b)] = a.min(b);
                    }
                }
                None => {
                    face_owner.insert(f, i);
                }
            }
        }
    }
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (p, &i) in ids.iter().enumerate() {
        let r = find(&mut parent, p);
        groups.entry(r).or_default().push(i);
    }
    groups.into_values().collect()
}

/// Per-simplex singular values, determinant sign, and SO(n) membership, plus
/// a global verdict on whether the map is a single rigid motion.
pub fn classify_gradients(psi: &PiecewiseAffineMap, t: &SimplicialCurrent, tol: f64) -> Result<GradientClassification> {
    let n = t.dim();
    if n != psi.source().ambient_dim() || n != psi.target_dim() {
        return Err(Error::UnsupportedDimension(format!(
            "gradient classification needs a top-dimensional current R^n -> R^n (dim {n}, source R^{}, target R^{})",
            psi.source().ambient_dim(),
            psi.target_dim()
        )));
    }
    let mut per_simplex = BTreeMap::new();
    let mut pieces: BTreeMap<usize, (DMatrix<f64>, Vec<f64>)> = BTreeMap::new();
    let mut any_expansive = false;
    let mut any_contractive = false;
    for &i in t.entries().keys() {
        let (dm, b) = psi.affine_piece(i);
        let sv = singular_values(&dm);
        let det = dm.determinant();
        let det_sign = if det.abs() <= tol {
            0
        } else if det > 0.0 {
            1
        } else {
            -1
        };
        any_expansive |= sv.iter().any(|&s| s > 1.0 + tol);
        any_contractive |= sv.iter().any(|&s| s < 1.0 - tol);
        let orthogonal = sv.iter().all(|&s| (s - 1.0).abs() <= tol);
        let so = orthogonal && det_sign == 1 && (det - 1.0).abs() <= tol;
        per_simplex.insert(
            i,
            SimplexGradient {
                singular_values: sv,
                det_sign,
                is_special_orthogonal: so,
            },
        );
        pieces.insert(i, (dm, b));
    }
    let same_piece = |a: &(DMatrix<f64>, Vec<f64>), b: &(DMatrix<f64>, Vec<f64>)| {
        (&a.0 - &b.0).amax() <= tol && a.1.iter().zip(&b.1).all(|(x, y)| (x - y).abs() <= tol)
    };
    let comps = carried_components(t);
    let mut components = Vec::with_capacity(comps.len());
    for comp in &comps {
        let first = &pieces[&comp[0]];
        let constant = comp.iter().all(|i| per_simplex[i].is_special_orthogonal && same_piece(first, &pieces[i]));
        components.push(ComponentMotion {
            simplices: comp.len(),
            constant_motion: constant,
        });
    }
    let global = if any_expansive {
        GlobalGradientVerdict::ExpansiveSomewhere
    } else if any_contractive {
        GlobalGradientVerdict::ContractiveSomewhere
    } else {
        let one_motion = match pieces.values().next() {
            None => true,
            Some(first) => {
                per_simplex.values().all(|g| g.is_special_orthogonal) && pieces.values().all(|p| same_piece(first, p))
            }
        };
        if one_motion {
            GlobalGradientVerdict::ConstantRotation
        } else {
            GlobalGradientVerdict::OrthogonalMixed
        }
    };
    Ok(GradientClassification {
        per_simplex,
        components,
        global,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MassNonincrease {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

/// `M(psi# T) <= Lip(psi)^n M(T)`.
pub fn mass_nonincrease_check(psi: &PiecewiseAffineMap, t: &SimplicialCurrent, target: &Arc<EmbeddedComplex>) -> Result<MassNonincrease> {
    let lhs = mass(&pushforward(psi, t, target)?).total;
    let rhs = lipschitz_constant(psi).powi(t.dim() as i32) * mass(t).total;
    Ok(MassNonincrease {
        lhs,
        rhs,
        holds: lhs <= rhs + 1e-9,
    })
}
