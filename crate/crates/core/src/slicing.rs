//! Slices of top-dimensional currents by `pi = p o psi`, where `p` is the
//! orthogonal projection of `R^n` onto `v^perp`.
//!
//! Each slice is a polygonal 1-chain on its own fiber complex: one vertex per
//! crossed codimension-one face of the source, one edge per crossed carried
//! simplex. Orientation follows `T restricted by dpi_1 ^ ... ^ dpi_{n-1}`, which
//! makes `psi# <T, p o psi, z> = <psi# T, p, z>` hold with sign +1.

use std::collections::BTreeMap;
use std::sync::Arc;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::currents::{boundary, mass, SimplicialCurrent};
use crate::error::{input_err, Error, Result};
use crate::geom;
use crate::mesh::EmbeddedComplex;
use crate::pa_maps::{lipschitz_constant, pushforward, PiecewiseAffineMap};
use crate::spatial::{bounding_box, BoxGrid};

pub const DEFAULT_LEVELS: usize = 256;
/// Levels closer than this to a projected vertex are shifted.
pub const LEVEL_EPS: f64 = 1e-9;
pub const LEVEL_JITTER: f64 = 3e-9;
/// Relative slack allowed for midpoint quadrature in the slice-mass bound.
pub const QUADRATURE_REL_TOL: f64 = 5e-3;
const BARY_EPS: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevelShift {
    pub index: usize,
    pub from: Vec<f64>,
    pub to: Vec<f64>,
}

/// Sample points `z` in `v^perp` (coordinates in the frame of
/// [`geom::complement_frame`]) with quadrature weights.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Levels {
    pub points: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
    pub shifts: Vec<LevelShift>,
    /// Retry a degenerate level with [`LEVEL_JITTER`] instead of failing.
    pub auto_jitter: bool,
}

impl Levels {
    pub fn explicit(points: Vec<Vec<f64>>) -> Self {
        let weights = vec![1.0; points.len()];
        Levels {
            points,
            weights,
            shifts: Vec::new(),
            auto_jitter: false,
        }
    }

    /// Midpoints of a uniform grid with `per_axis` cells on each axis of the box.
    pub fn uniform(lo: &[f64], hi: &[f64], per_axis: usize) -> Self {
        let dim = lo.len();
        let per_axis = per_axis.max(1);
        let widths: Vec<f64> = lo.iter().zip(hi).map(|(a, b)| (b - a) / per_axis as f64).collect();
        let weight: f64 = widths.iter().product();
        let total = per_axis.pow(dim as u32);
        let mut points = Vec::with_capacity(total);
        for flat in 0..total {
            let mut rem = flat;
            let mut p = vec![0.0; dim];
            for a in (0..dim).rev() {
                let i = rem % per_axis;
                rem /= per_axis;
                p[a] = lo[a] + (i as f64 + 0.5) * widths[a];
            }
            points.push(p);
        }
        Levels {
            weights: vec![weight; points.len()],
            points,
            shifts: Vec::new(),
            auto_jitter: true,
        }
    }

    /// Moves every level within [`LEVEL_EPS`] of a projected vertex by
    /// [`LEVEL_JITTER`] on each axis, repeating until clear, and records the shifts.
    pub fn make_generic(&mut self, projections: &[Vec<f64>]) {
        if projections.is_empty() {
            return;
        }
        let dim = projections[0].len();
        let boxes: Vec<(Vec<f64>, Vec<f64>)> = projections.iter().map(|p| (p.clone(), p.clone())).collect();
        let grid = BoxGrid::new(dim, &boxes);
        for (i, z) in self.points.iter_mut().enumerate() {
            let from = z.clone();
            for _ in 0..64 {
                let hit = grid
                    .query(z, z, LEVEL_EPS)
                    .into_iter()
                    .any(|j| projections[j].iter().zip(z.iter()).all(|(a, b)| (a - b).abs() <= LEVEL_EPS));
                if !hit {
                    break;
                }
                z.iter_mut().for_each(|x| *x += LEVEL_JITTER);
            }
            if *z != from {
                self.shifts.push(LevelShift {
                    index: i,
                    from,
                    to: z.clone(),
                });
            }
        }
    }
}

/// The projection `p : R^n -> v^perp ~ R^{n-1}` in a fixed oriented frame.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Projector {
    pub direction: Vec<f64>,
    pub frame: Vec<Vec<f64>>,
}

impl Projector {
    pub fn new(v: &[f64]) -> Result<Self> {
        if v.len() < 2 {
            return Err(Error::UnsupportedDimension("slicing needs n >= 2".into()));
        }
        if ((geom::norm(v)) - 1.0).abs() > 1e-12 {
            return input_err(format!("slicing direction {v:?} is not a unit vector"));
        }
        Ok(Projector {
            direction: v.to_vec(),
            frame: geom::complement_frame(v),
        })
    }

    pub fn project(&self, y: &[f64]) -> Vec<f64> {
        self.frame.iter().map(|w| geom::dot(w, y)).collect()
    }

    pub fn along(&self, y: &[f64]) -> f64 {
        geom::dot(&self.direction, y)
    }
}

/// One slice `<T, pi, z>`.
#[derive(Debug, Clone)]
pub struct SliceLevel {
    pub z: Vec<f64>,
    pub weight: f64,
    /// Fiber complex; vertices sit on crossed codimension-one source faces.
    pub fiber: Arc<EmbeddedComplex>,
    /// Source face crossed at each fiber vertex.
    pub crossed_faces: Vec<usize>,
    /// `psi` evaluated at each fiber vertex.
    pub vertex_images: Vec<Vec<f64>>,
    pub current: SimplicialCurrent,
    /// `<boundary T, pi, z>` as a 0-chain on the fiber complex.
    pub boundary_slice: SimplicialCurrent,
}

#[derive(Debug, Clone)]
pub struct SliceFamily {
    pub projector: Projector,
    pub levels: Levels,
    pub slices: Vec<SliceLevel>,
    pub n: usize,
    pub source_mass: f64,
    /// Lipschitz constant of `pi` (per-simplex operator norm).
    pub lip_pi: f64,
    /// Carried simplices skipped because `pi` has rank below `n - 1` there.
    pub degenerate_simplices: usize,
}

/// `pi = p o psi` as a map into `R^{n-1}`.
pub fn composed_projection(psi: &PiecewiseAffineMap, proj: &Projector) -> Result<PiecewiseAffineMap> {
    let imgs = (0..psi.source().num_vertices()).map(|v| proj.project(psi.image(v))).collect();
    PiecewiseAffineMap::new(psi.source().clone(), proj.frame.len(), imgs)
}

/// Axis-aligned box around the projected carrier of `t`.
pub fn projected_box(t: &SimplicialCurrent, psi: &PiecewiseAffineMap, proj: &Projector) -> (Vec<f64>, Vec<f64>) {
    let pts: Vec<Vec<f64>> = t.carrier_vertices().into_iter().map(|v| proj.project(psi.image(v))).collect();
    if pts.is_empty() {
        return (vec![0.0; proj.frame.len()], vec![0.0; proj.frame.len()]);
    }
    let refs: Vec<&[f64]> = pts.iter().map(|p| p.as_slice()).collect();
    bounding_box(&refs)
}

/// Uniform midpoint levels over the projected carrier, made generic with
/// respect to the projected source vertices.
pub fn uniform_levels(t: &SimplicialCurrent, psi: &PiecewiseAffineMap, proj: &Projector, per_axis: usize) -> Levels {
    let (lo, hi) = projected_box(t, psi, proj);
    let mut levels = Levels::uniform(&lo, &hi, per_axis);
    let projections: Vec<Vec<f64>> = t.carrier_vertices().into_iter().map(|v| proj.project(psi.image(v))).collect();
    levels.make_generic(&projections);
    levels
}

fn minor_det(a: &DMatrix<f64>, skip: usize) -> f64 {
    let r = a.nrows();
    let m = DMatrix::from_fn(r, r, |i, j| a[(i, if j < skip { j } else { j + 1 })]);
    m.determinant()
}

struct Prepared<'a> {
    t: &'a SimplicialCurrent,
    psi: &'a PiecewiseAffineMap,
    /// Projected vertex images, `n - 1` per vertex.
    proj: Vec<f64>,
    m: usize,
    bt: SimplicialCurrent,
    carried: Vec<(usize, i64)>,
    grid: BoxGrid,
}

impl<'a> Prepared<'a> {
    fn proj_of(&self, v: usize) -> &[f64] {
        &self.proj[v * self.m..(v + 1) * self.m]
    }
}

struct Crossing {
    face: usize,
    bary: Vec<f64>,
}

/// Fiber segment through carried simplex `sigma`, oriented positively.
/// `Ok(None)` when the fiber misses the simplex or `pi` is rank-deficient there.
fn cross_simplex(prep: &Prepared, sigma: usize, z: &[f64]) -> Result<Option<(Crossing, Crossing)>> {
    let c = prep.t.complex();
    let n = prep.t.dim();
    let m = prep.m;
    let verts = c.simplex_vertices(n, sigma);
    let p0 = prep.proj_of(verts[0]);
    let a = DMatrix::from_fn(m, n, |r, j| prep.proj_of(verts[j + 1])[r] - p0[r]);
    // Positively oriented kernel: det [A; k^T] = sum of squared minors > 0.
    let kern: Vec<f64> = (0..n)
        .map(|j| {
            let s = if (m + j).is_multiple_of(2) { 1.0 } else { -1.0 };
            s * minor_det(&a, j)
        })
        .collect();
    let scale = a.amax().max(f64::MIN_POSITIVE).powi(m as i32);
    if geom::norm(&kern) <= 1e-12 * scale {
        return Ok(None);
    }
    let rhs = DMatrix::from_fn(m, 1, |r, _| z[r] - p0[r]);
    let aat = &a * a.transpose();
    let Some(y) = aat.lu().solve(&rhs) else {
        return Ok(None);
    };
    let cstar = a.transpose() * y;
    // lambda_0 = 1 - sum c, lambda_i = c_{i-1}; each affine in t along the kernel.
    let mut alpha = vec![1.0 - cstar.sum()];
    alpha.extend(cstar.iter().copied());
    let mut beta = vec![-kern.iter().sum::<f64>()];
    beta.extend(kern.iter().copied());
    let (mut t_lo, mut i_lo) = (f64::NEG_INFINITY, usize::MAX);
    let (mut t_hi, mut i_hi) = (f64::INFINITY, usize::MAX);
    let bnorm = geom::norm(&beta);
    for i in 0..=n {
        if beta[i].abs() <= BARY_EPS * bnorm {
            if alpha[i] < -BARY_EPS {
                return Ok(None);
            }
            if alpha[i] <= BARY_EPS {
                return Err(Error::DegenerateLevel { level: z.to_vec() });
            }
            continue;
        }
        let root = -alpha[i] / beta[i];
        if beta[i] > 0.0 {
            if root > t_lo {
                t_lo = root;
                i_lo = i;
            }
        } else if root < t_hi {
            t_hi = root;
            i_hi = i;
        }
    }
    let lam = |t: f64| -> Vec<f64> { (0..=n).map(|i| alpha[i] + t * beta[i]).collect() };
    let span = (t_hi - t_lo) * bnorm;
    if span < -BARY_EPS {
        return Ok(None);
    }
    if span <= BARY_EPS {
        return Err(Error::DegenerateLevel { level: z.to_vec() });
    }
    let (l_lo, l_hi) = (lam(t_lo), lam(t_hi));
    for (l, skip) in [(&l_lo, i_lo), (&l_hi, i_hi)] {
        if l.iter().enumerate().any(|(i, &x)| i != skip && x.abs() <= BARY_EPS) {
            return Err(Error::DegenerateLevel { level: z.to_vec() });
        }
    }
    let faces = c.faces(n, sigma);
    let mk = |mut l: Vec<f64>, i: usize| {
        l[i] = 0.0;
        Crossing { face: faces[i], bary: l }
    };
    Ok(Some((mk(l_lo, i_lo), mk(l_hi, i_hi))))
}

fn slice_level(prep: &Prepared, z: &[f64], weight: f64) -> Result<SliceLevel> {
    let c = prep.t.complex();
    let n = prep.t.dim();
    let d = c.ambient_dim();
    let mut segs: Vec<(Crossing, Crossing, usize, i64)> = Vec::new();
    for id in prep.grid.query(z, z, LEVEL_EPS) {
        let (sigma, theta) = prep.carried[id];
        if let Some((a, b)) = cross_simplex(prep, sigma, z)? {
            segs.push((a, b, sigma, theta));
        }
    }
    let mut vertex_of_face: BTreeMap<usize, (Vec<f64>, Vec<f64>)> = BTreeMap::new();
    for (a, b, sigma, _) in &segs {
        let verts = c.simplex_vertices(n, *sigma);
        for x in [a, b] {
            vertex_of_face.entry(x.face).or_insert_with(|| {
                let mut p = vec![0.0; d];
                let mut q = vec![0.0; prep.psi.target_dim()];
                for (&v, &l) in verts.iter().zip(&x.bary) {
                    p.iter_mut().zip(c.vertex(v)).for_each(|(o, y)| *o += l * y);
                    q.iter_mut().zip(prep.psi.image(v)).for_each(|(o, y)| *o += l * y);
                }
                (p, q)
            });
        }
    }
    let index: BTreeMap<usize, usize> = vertex_of_face.keys().enumerate().map(|(i, &f)| (f, i)).collect();
    let crossed_faces: Vec<usize> = vertex_of_face.keys().copied().collect();
    let (points, vertex_images): (Vec<Vec<f64>>, Vec<Vec<f64>>) = vertex_of_face.into_values().unzip();
    let edges: Vec<Vec<usize>> = segs.iter().map(|(a, b, _, _)| vec![index[&a.face], index[&b.face]]).collect();
    let fiber = Arc::new(
        EmbeddedComplex::from_maximal(d, points, edges).map_err(|_| Error::DegenerateLevel { level: z.to_vec() })?,
    );
    let mut entries = Vec::with_capacity(segs.len());
    for (a, b, _, theta) in &segs {
        let (ia, ib) = (index[&a.face], index[&b.face]);
        let e = fiber.find_simplex(&[ia, ib]).expect("edge was inserted").index;
        entries.push((e, if ia < ib { *theta } else { -*theta }));
    }
    let current = SimplicialCurrent::from_entries(fiber.clone(), 1, entries)?;

    let mut bentries = Vec::new();
    for (&f, &mult) in prep.bt.entries() {
        let Some(&iv) = index.get(&f) else { continue };
        let fv = c.simplex_vertices(n - 1, f);
        let q0 = prep.proj_of(fv[0]);
        let af = DMatrix::from_fn(prep.m, n - 1, |r, j| prep.proj_of(fv[j + 1])[r] - q0[r]);
        let s = af.determinant().signum() as i64;
        bentries.push((iv, s * mult));
    }
    let boundary_slice = SimplicialCurrent::from_entries(fiber.clone(), 0, bentries)?;
    Ok(SliceLevel {
        z: z.to_vec(),
        weight,
        fiber,
        crossed_faces,
        vertex_images,
        current,
        boundary_slice,
    })
}

/// Slices `t` by `p o psi` at every level.
pub fn slice(t: &SimplicialCurrent, psi: &PiecewiseAffineMap, v: &[f64], levels: &Levels) -> Result<SliceFamily> {
    let n = t.dim();
    if n != psi.target_dim() {
        return Err(Error::UnsupportedDimension(format!(
            "slicing needs an n-current mapped to R^n (current dim {n}, map into R^{})",
            psi.target_dim()
        )));
    }
    if !crate::currents::same_complex(t.complex(), psi.source()) {
        return input_err("current does not live on the map's source complex");
    }
    if v.len() != n {
        return input_err(format!("direction has {} components, expected {n}", v.len()));
    }
    let projector = Projector::new(v)?;
    let m = n - 1;
    if let Some(bad) = levels.points.iter().find(|z| z.len() != m) {
        return input_err(format!("level {bad:?} is not a point of R^{m}"));
    }
    let c = t.complex();
    let proj: Vec<f64> = (0..c.num_vertices()).flat_map(|v| projector.project(psi.image(v))).collect();
    let carried: Vec<(usize, i64)> = t.entries().iter().map(|(&i, &m)| (i, m)).collect();
    let boxes: Vec<(Vec<f64>, Vec<f64>)> = carried
        .iter()
        .map(|&(i, _)| {
            let pts: Vec<&[f64]> = c.simplex_vertices(n, i).iter().map(|&v| &proj[v * m..(v + 1) * m]).collect();
            bounding_box(&pts)
        })
        .collect();
    let prep = Prepared {
        t,
        psi,
        proj,
        m,
        bt: boundary(t)?,
        carried,
        grid: BoxGrid::new(m, &boxes),
    };
    let mut degenerate = 0;
    for &(sigma, _) in &prep.carried {
        let verts = c.simplex_vertices(n, sigma);
        let p0 = prep.proj_of(verts[0]);
        let a = DMatrix::from_fn(m, n, |r, j| prep.proj_of(verts[j + 1])[r] - p0[r]);
        if a.rank(1e-12 * a.amax().max(f64::MIN_POSITIVE)) < m {
            degenerate += 1;
        }
    }
    let mut levels = levels.clone();
    let mut slices = Vec::with_capacity(levels.points.len());
    for i in 0..levels.points.len() {
        let from = levels.points[i].clone();
        let mut z = from.clone();
        let mut tries = 0;
        let s = loop {
            match slice_level(&prep, &z, levels.weights[i]) {
                Err(Error::DegenerateLevel { .. }) if levels.auto_jitter && tries < 16 => {
                    z.iter_mut().for_each(|x| *x += LEVEL_JITTER);
                    tries += 1;
                }
                r => break r?,
            }
        };
        if z != from {
            levels.points[i] = z.clone();
            levels.shifts.push(LevelShift { index: i, from, to: z });
        }
        slices.push(s);
    }
    let lip_pi = lipschitz_constant(&composed_projection(psi, &projector)?);
    Ok(SliceFamily {
        projector,
        levels,
        slices,
        n,
        source_mass: mass(t).total,
        lip_pi,
        degenerate_simplices: degenerate,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundaryCheck {
    pub per_level: Vec<f64>,
    pub max_defect: f64,
}

/// Mass of `boundary <T,pi,z> - (-1)^{n-1} <boundary T, pi, z>` per level.
pub fn slice_boundary_check(fam: &SliceFamily) -> Result<BoundaryCheck> {
    let sign = if fam.n % 2 == 1 { 1 } else { -1 };
    let mut per_level = Vec::with_capacity(fam.slices.len());
    for s in &fam.slices {
        let lhs = boundary(&s.current)?;
        let diff = lhs.add(&s.boundary_slice.scale(-sign))?;
        per_level.push(mass(&diff).total);
    }
    let max_defect = per_level.iter().copied().fold(0.0, f64::max);
    Ok(BoundaryCheck { per_level, max_defect })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SliceMassIntegral {
    pub integral: f64,
    pub mass_bound: f64,
    pub holds: bool,
    pub per_level: Vec<(Vec<f64>, f64)>,
}

/// Quadrature of `z -> M(<T,pi,z>)` against `Lip(pi)^{n-1} M(T)`.
pub fn slice_mass_integral(fam: &SliceFamily) -> SliceMassIntegral {
    let mut integral = 0.0;
    let mut per_level = Vec::with_capacity(fam.slices.len());
    for s in &fam.slices {
        let m = mass(&s.current).total;
        integral += s.weight * m;
        per_level.push((s.z.clone(), m));
    }
    let mass_bound = fam.lip_pi.powi(fam.n as i32 - 1) * fam.source_mass;
    SliceMassIntegral {
        integral,
        mass_bound,
        holds: integral <= mass_bound * (1.0 + QUADRATURE_REL_TOL) + 1e-9,
        per_level,
    }
}

/// Oriented 1-chain on the fiber line `p^{-1}(z)`, as signed intervals of the
/// coordinate along `v`.
fn line_intervals(s: &SliceLevel, proj: &Projector) -> Vec<(f64, f64, i64)> {
    let mut out = Vec::with_capacity(s.current.len());
    for (&e, &m) in s.current.entries() {
        let vs = s.fiber.simplex_vertices(1, e);
        let ta = proj.along(&s.vertex_images[vs[0]]);
        let tb = proj.along(&s.vertex_images[vs[1]]);
        if ta == tb {
            continue;
        }
        let sign = if tb > ta { 1 } else { -1 };
        out.push((ta.min(tb), ta.max(tb), sign * m));
    }
    out
}

/// `integral |f - g|` for two signed interval densities on a line.
fn interval_l1(f: &[(f64, f64, i64)], g: &[(f64, f64, i64)]) -> f64 {
    let mut events: Vec<(f64, i64)> = Vec::with_capacity(2 * (f.len() + g.len()));
    for &(a, b, m) in f {
        events.push((a, m));
        events.push((b, -m));
    }
    for &(a, b, m) in g {
        events.push((a, -m));
        events.push((b, m));
    }
    events.sort_by(|x, y| x.0.total_cmp(&y.0));
    let mut total = 0.0;
    let mut density = 0i64;
    for w in 0..events.len() {
        density += events[w].1;
        if w + 1 < events.len() {
            total += density.unsigned_abs() as f64 * (events[w + 1].0 - events[w].0);
        }
    }
    total
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CommutationCheck {
    pub levels: Vec<Vec<f64>>,
    pub per_level: Vec<f64>,
    pub max_defect: f64,
}

/// `M(psi# <T, p o psi, z> - <psi# T, p, z>)` per level. The levels are made
/// generic for both the source and the target vertices.
pub fn commutation_check(
    t: &SimplicialCurrent,
    psi: &PiecewiseAffineMap,
    target: &Arc<EmbeddedComplex>,
    v: &[f64],
    levels: &Levels,
) -> Result<CommutationCheck> {
    let proj = Projector::new(v)?;
    let mut levels = levels.clone();
    let mut projections: Vec<Vec<f64>> = t.carrier_vertices().into_iter().map(|v| proj.project(psi.image(v))).collect();
    projections.extend(target.vertices().map(|y| proj.project(y)));
    levels.make_generic(&projections);
    let pushed = pushforward(psi, t, target)?;
    let ident = PiecewiseAffineMap::identity(target.clone());
    let src = slice(t, psi, v, &levels)?;
    let tgt = slice(&pushed, &ident, v, &levels)?;
    let per_level: Vec<f64> = src
        .slices
        .iter()
        .zip(&tgt.slices)
        .map(|(a, b)| interval_l1(&line_intervals(a, &proj), &line_intervals(b, &proj)))
        .collect();
    let max_defect = per_level.iter().copied().fold(0.0, f64::max);
    Ok(CommutationCheck {
        levels: levels.points,
        per_level,
        max_defect,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoareaCheck {
    /// `sum |theta| C_n(d psi) vol`.
    pub lhs: f64,
    /// `sum |theta| lambda vol = M(T)`.
    pub rhs: f64,
    pub holds: bool,
    /// `integral of the unsigned preimage count`, from the pushforward covers.
    pub multiplicity_integral: Option<f64>,
    pub oracle_agrees: Option<bool>,
}

/// Coarea inequality `C_n(d psi) <= lambda = 1`, integrated against `|theta|`.
/// With a target, the left side is cross-checked against the integral of the
/// unsigned multiplicity sum over target simplices.
pub fn coarea_inequality_check(
    t: &SimplicialCurrent,
    psi: &PiecewiseAffineMap,
    target: Option<&Arc<EmbeddedComplex>>,
) -> Result<CoareaCheck> {
    let n = t.dim();
    if n != psi.target_dim() {
        return Err(Error::UnsupportedDimension(format!(
            "coarea check needs an n-current mapped to R^n (dim {n}, map into R^{})",
            psi.target_dim()
        )));
    }
    let c = t.complex();
    let mut lhs = 0.0;
    for (&i, &m) in t.entries() {
        let d = psi.differential(n, i);
        let jac = crate::pa_maps::singular_values(&d).iter().product::<f64>();
        lhs += m.unsigned_abs() as f64 * jac * c.volume(n, i);
    }
    let rhs = mass(t).total;
    let (multiplicity_integral, oracle_agrees) = match target {
        Some(tg) => {
            let pf = crate::pa_maps::pushforward_detailed(psi, t, tg)?;
            let mi: f64 = pf
                .covers
                .iter()
                .map(|cv| t.multiplicity(cv.source).unsigned_abs() as f64 * tg.volume(n, cv.target))
                .sum();
            (Some(mi), Some((mi - lhs).abs() <= 1e-9 * lhs.max(1.0)))
        }
        None => (None, None),
    };
    Ok(CoareaCheck {
        lhs,
        rhs,
        holds: lhs <= rhs + 1e-9,
        multiplicity_integral,
        oracle_agrees,
    })
}
