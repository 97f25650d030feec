//! Checks for the rigidity theorem: a 1-Lipschitz `psi` with `psi# T = [[B_1]]`,
//! `M(T) = M(psi# T)` and `psi` injective on `set(boundary T)` with image in
//! the unit sphere must be an isometry. The hypotheses are measured, the
//! conclusion is measured as a distortion, and the intermediate equality
//! chains of the proof are evaluated on the discrete data.

use std::collections::BTreeMap;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::currents::{boundary, current_sub, mass, SimplicialCurrent};
use crate::curves::decompose_1current;
use crate::error::{input_err, Error, Result};
use crate::geom;
use crate::mesh::{EmbeddedComplex, LengthGraph, MetricMode};
use crate::pa_maps::{classify_gradients, pushforward_detailed, singular_values, PiecewiseAffineMap, Pushforward, DEFAULT_SO_TOL};
use crate::slicing::{slice, Levels, Projector};
use crate::spatial::BoxGrid;

pub const DEFAULT_HYPOTHESIS_TOL: f64 = 1e-6;
pub const DEFAULT_SAMPLES: usize = 2048;
/// Image points closer than this count as a collision.
pub const COLLISION_EPS: f64 = 1e-9;
/// Distortion tolerance in units of the source mesh size.
pub const DISTORTION_MESH_FACTOR: f64 = 5.0;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundaryInjectivity {
    pub pass: bool,
    /// Closest pair of distinct boundary-carrier vertices in the image.
    pub worst_pair: Option<(usize, usize)>,
    pub min_image_gap: f64,
    pub min_source_gap: f64,
    /// `min_image_gap / min_source_gap`; exposed, not thresholded.
    pub gap_ratio: f64,
    /// `max | |psi(x)| - 1 |` over boundary-carrier vertices.
    pub sphere_defect: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Hypotheses {
    pub pushforward_is_ball: bool,
    /// `M(psi# T - ball)`.
    pub pushforward_defect: f64,
    pub mass_preserved: bool,
    /// `|M(T) - M(psi# T)|`.
    pub mass_defect: f64,
    pub boundary_injective: BoundaryInjectivity,
}

impl Hypotheses {
    /// Numbers (1-based) of the hypotheses that fail.
    pub fn violated(&self) -> Vec<u8> {
        let mut v = Vec::new();
        if !self.pushforward_is_ball {
            v.push(1);
        }
        if !self.mass_preserved {
            v.push(2);
        }
        if !self.boundary_injective.pass {
            v.push(3);
        }
        v
    }
}

fn hypotheses_from(t: &SimplicialCurrent, psi: &PiecewiseAffineMap, ball: &SimplicialCurrent, pushed: &SimplicialCurrent, tol: f64) -> Result<Hypotheses> {
    let pushforward_defect = mass(&current_sub(pushed, ball)?).total;
    let mass_defect = (mass(t).total - mass(pushed).total).abs();
    Ok(Hypotheses {
        pushforward_is_ball: pushforward_defect <= tol,
        pushforward_defect,
        mass_preserved: mass_defect <= tol,
        mass_defect,
        boundary_injective: boundary_injectivity(t, psi, tol)?,
    })
}

/// Hypotheses (1) to (3) on the discrete instance.
pub fn check_hypotheses(t: &SimplicialCurrent, psi: &PiecewiseAffineMap, ball: &SimplicialCurrent, tol: f64) -> Result<Hypotheses> {
    let pushed = pushforward_detailed(psi, t, ball.complex())?.current;
    hypotheses_from(t, psi, ball, &pushed, tol)
}

/// Injectivity of `psi` on boundary-carrier vertices, and their distance to the
/// unit sphere.
pub fn boundary_injectivity(t: &SimplicialCurrent, psi: &PiecewiseAffineMap, tol: f64) -> Result<BoundaryInjectivity> {
    let bt = boundary(t)?;
    let verts: Vec<usize> = bt.carrier_vertices().into_iter().collect();
    let c = t.complex();
    let imgs: Vec<&[f64]> = verts.iter().map(|&v| psi.image(v)).collect();
    let sphere_defect = imgs.iter().map(|y| (geom::norm(y) - 1.0).abs()).fold(0.0, f64::max);
    let (pair, min_image_gap) = closest_pair(&imgs);
    let srcs: Vec<&[f64]> = verts.iter().map(|&v| c.vertex(v)).collect();
    let (_, min_source_gap) = closest_pair(&srcs);
    let worst_pair = pair.map(|(a, b)| (verts[a], verts[b]));
    let collision = min_image_gap <= COLLISION_EPS;
    Ok(BoundaryInjectivity {
        pass: !collision && sphere_defect <= tol,
        worst_pair,
        min_image_gap,
        min_source_gap,
        gap_ratio: if min_source_gap > 0.0 { min_image_gap / min_source_gap } else { f64::INFINITY },
        sphere_defect,
    })
}

/// Closest pair by a grid sweep with a cell size from the bounding box.
fn closest_pair(pts: &[&[f64]]) -> (Option<(usize, usize)>, f64) {
    if pts.len() < 2 {
        return (None, f64::INFINITY);
    }
    let d = pts[0].len();
    let (lo, hi) = crate::spatial::bounding_box(pts);
    let extent = lo.iter().zip(&hi).map(|(a, b)| b - a).fold(0.0, f64::max).max(1e-300);
    let mut radius = extent / (pts.len() as f64).powf(1.0 / d as f64);
    let boxes: Vec<(Vec<f64>, Vec<f64>)> = pts.iter().map(|p| (p.to_vec(), p.to_vec())).collect();
    let grid = BoxGrid::new(d, &boxes);
    loop {
        let mut best = (None, f64::INFINITY);
        for (i, p) in pts.iter().enumerate() {
            for j in grid.query(p, p, radius) {
                if j <= i {
                    continue;
                }
                let dd = geom::dist(p, pts[j]);
                if dd < best.1 {
                    best = (Some((i, j)), dd);
                }
            }
        }
        if best.1 <= radius {
            return best;
        }
        radius *= 4.0;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Distortion {
    pub max_distortion: f64,
    pub argmax: Option<(usize, usize)>,
    pub pairs: usize,
    pub unreachable_pairs: usize,
}

/// Seeded vertex pairs on the carrier, plus the extreme pairs along each axis.
pub fn sample_pairs(t: &SimplicialCurrent, samples: usize, seed: u64) -> Vec<(usize, Vec<usize>)> {
    let verts: Vec<usize> = t.carrier_vertices().into_iter().collect();
    if verts.len() < 2 {
        return Vec::new();
    }
    let c = t.complex();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let per_source = 32usize;
    let sources = samples.div_ceil(per_source).max(1);
    let mut out: Vec<(usize, Vec<usize>)> = Vec::with_capacity(sources + c.ambient_dim());
    for _ in 0..sources {
        let a = verts[rng.random_range(0..verts.len())];
        let targets = (0..per_source).map(|_| verts[rng.random_range(0..verts.len())]).collect();
        out.push((a, targets));
    }
    for axis in 0..c.ambient_dim() {
        let key = |v: &usize| c.vertex(*v)[axis];
        let lo = *verts.iter().min_by(|a, b| key(a).total_cmp(&key(b)).then(a.cmp(b))).unwrap();
        let hi = *verts.iter().max_by(|a, b| key(a).total_cmp(&key(b)).then(b.cmp(a))).unwrap();
        out.push((lo, vec![hi]));
    }
    out
}

/// `max |d(x1, x2) - |psi(x1) - psi(x2)||` over sampled carrier vertex pairs.
pub fn distortion(t: &SimplicialCurrent, psi: &PiecewiseAffineMap, metric: MetricMode, samples: usize, seed: u64) -> Result<Distortion> {
    metric.validate()?;
    let c = t.complex();
    let pairs = sample_pairs(t, samples, seed);
    let graph = match metric {
        MetricMode::LengthGraph { refinement } => Some(LengthGraph::new(c, refinement)),
        MetricMode::AmbientEuclidean => None,
    };
    let mut best = Distortion {
        max_distortion: 0.0,
        argmax: None,
        pairs: 0,
        unreachable_pairs: 0,
    };
    for (a, targets) in pairs {
        let dists: Vec<f64> = match &graph {
            Some(g) => g.vertex_distances_from(a, &targets).iter().map(|d| d.value()).collect(),
            None => targets.iter().map(|&b| geom::dist(c.vertex(a), c.vertex(b))).collect(),
        };
        for (&b, d) in targets.iter().zip(dists) {
            best.pairs += 1;
            let e = if d.is_finite() {
                (d - geom::dist(psi.image(a), psi.image(b))).abs()
            } else {
                best.unreachable_pairs += 1;
                f64::INFINITY
            };
            if e > best.max_distortion {
                best.max_distortion = e;
                best.argmax = Some((a, b));
            }
        }
    }
    Ok(best)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SliceIsometryLevel {
    pub z: Vec<f64>,
    pub two_point_boundary: bool,
    pub mass_equals_segment: bool,
    pub segment_defect: f64,
    pub endpoints_distance_defect: f64,
    pub passes: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SliceIsometryReport {
    pub levels: Vec<SliceIsometryLevel>,
    pub fraction_passing: f64,
    pub shifted_levels: usize,
}

/// Per level: the slice has exactly two boundary points, its mass equals the
/// chord of the ball on the same fiber, and the endpoint distance is preserved.
pub fn slice_isometry_check(
    t: &SimplicialCurrent,
    psi: &PiecewiseAffineMap,
    ball: &SimplicialCurrent,
    v: &[f64],
    levels: &Levels,
    metric: MetricMode,
    tol: f64,
) -> Result<SliceIsometryReport> {
    metric.validate()?;
    let src = slice(t, psi, v, levels)?;
    let ident = PiecewiseAffineMap::identity(ball.complex().clone());
    let chords = slice(ball, &ident, v, &src.levels)?;
    let graph = match metric {
        MetricMode::LengthGraph { refinement } => Some(LengthGraph::new(t.complex(), refinement)),
        MetricMode::AmbientEuclidean => None,
    };
    let mut out = Vec::with_capacity(src.slices.len());
    for (s, ch) in src.slices.iter().zip(&chords.slices) {
        let tz = &s.current;
        let bd = boundary(tz)?;
        let two_point = bd.len() == 2 && bd.entries().values().all(|m| m.abs() == 1) && bd.entries().values().sum::<i64>() == 0;
        let m = mass(tz).total;
        let chord = mass(&ch.current).total;
        let segment_defect = (m - chord).abs();
        let endpoints_distance_defect = if two_point {
            let mut it = bd.entries().iter();
            let (&p, _) = it.next().unwrap();
            let (&q, _) = it.next().unwrap();
            let (xa, xb) = (s.fiber.vertex(p), s.fiber.vertex(q));
            let d = match &graph {
                Some(g) => g.distance(xa, xb)?.value(),
                None => geom::dist(xa, xb),
            };
            (d - geom::dist(&s.vertex_images[p], &s.vertex_images[q])).abs()
        } else {
            f64::INFINITY
        };
        let dec = decompose_1current(tz)?;
        let single_curve = dec.curves.len() == 1 && dec.loops.is_empty();
        let mass_equals_segment = segment_defect <= tol;
        out.push(SliceIsometryLevel {
            z: s.z.clone(),
            two_point_boundary: two_point,
            mass_equals_segment,
            segment_defect,
            endpoints_distance_defect,
            passes: two_point && single_curve && mass_equals_segment && endpoints_distance_defect <= tol,
        });
    }
    let fraction_passing = if out.is_empty() {
        1.0
    } else {
        out.iter().filter(|l| l.passes).count() as f64 / out.len() as f64
    };
    Ok(SliceIsometryReport {
        levels: out,
        fraction_passing,
        shifted_levels: src.levels.shifts.len(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EssentialInjectivity {
    pub fraction_injective: f64,
    pub fraction_unit_multiplicity: f64,
    pub samples: usize,
}

fn injectivity_from(t: &SimplicialCurrent, pf: &Pushforward, target: &EmbeddedComplex, samples: usize, seed: u64) -> EssentialInjectivity {
    let n = t.dim();
    let mut by_target: BTreeMap<usize, (usize, i64)> = BTreeMap::new();
    for cv in &pf.covers {
        let e = by_target.entry(cv.target).or_insert((0, 0));
        e.0 += 1;
        e.1 += t.multiplicity(cv.source).abs();
    }
    let covered: Vec<usize> = by_target.keys().copied().collect();
    if covered.is_empty() || samples == 0 {
        return EssentialInjectivity {
            fraction_injective: 0.0,
            fraction_unit_multiplicity: 0.0,
            samples: 0,
        };
    }
    // Area-weighted sampling of covered target simplices.
    let mut cdf = Vec::with_capacity(covered.len());
    let mut acc = 0.0;
    for &tau in &covered {
        acc += target.volume(n, tau);
        cdf.push(acc);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut inj, mut unit) = (0usize, 0usize);
    for _ in 0..samples {
        let u: f64 = rng.random::<f64>() * acc;
        let k = cdf.partition_point(|&x| x < u).min(covered.len() - 1);
        let (count, sum) = by_target[&covered[k]];
        inj += (count == 1) as usize;
        unit += (sum == 1) as usize;
    }
    EssentialInjectivity {
        fraction_injective: inj as f64 / samples as f64,
        fraction_unit_multiplicity: unit as f64 / samples as f64,
        samples,
    }
}

/// Seeded target points: fraction with exactly one preimage simplex, and
/// fraction where the unsigned multiplicity sum over preimages is 1.
pub fn essential_injectivity_estimate(
    t: &SimplicialCurrent,
    psi: &PiecewiseAffineMap,
    target: &Arc<EmbeddedComplex>,
    samples: usize,
    seed: u64,
) -> Result<EssentialInjectivity> {
    let pf = pushforward_detailed(psi, t, target)?;
    Ok(injectivity_from(t, &pf, target, samples, seed))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OverlapDirection {
    pub v: Vec<f64>,
    pub overlap_measure_estimate: f64,
    /// Set when the centroids coincide and a sample pair fixed the direction.
    pub fallback: bool,
}

fn interval_union(mut iv: Vec<(f64, f64)>) -> Vec<(f64, f64)> {
    iv.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut out: Vec<(f64, f64)> = Vec::new();
    for (a, b) in iv {
        match out.last_mut() {
            Some(last) if a <= last.1 => last.1 = last.1.max(b),
            _ => out.push((a, b)),
        }
    }
    out
}

/// Direction from the centroid of `a1` to that of `a2`, and the measure of the
/// overlap of the `h`-thickened projections of both samples onto `v^perp`.
pub fn overlap_direction(a1: &[Vec<f64>], a2: &[Vec<f64>], h: f64) -> Result<OverlapDirection> {
    if a1.is_empty() || a2.is_empty() {
        return input_err("overlap_direction needs two nonempty point sets");
    }
    let n = a1[0].len();
    if n < 2 || a1.iter().chain(a2).any(|p| p.len() != n) {
        return input_err("points must share a dimension n >= 2");
    }
    let centroid = |s: &[Vec<f64>]| {
        let r: Vec<&[f64]> = s.iter().map(|p| p.as_slice()).collect();
        geom::barycenter(&r)
    };
    let diff = geom::sub(&centroid(a2), &centroid(a1));
    let (mut dir, mut fallback) = (diff.clone(), false);
    if geom::norm(&diff) <= 1e-12 {
        fallback = true;
        let q = a2.iter().find(|q| geom::dist(q, &a1[0]) > 1e-12);
        dir = match q {
            Some(q) => geom::sub(q, &a1[0]),
            None => {
                let mut e = vec![0.0; n];
                e[0] = 1.0;
                e
            }
        };
    }
    let len = geom::norm(&dir);
    let v: Vec<f64> = dir.iter().map(|x| x / len).collect();
    let proj = Projector::new(&v)?;
    let p1: Vec<Vec<f64>> = a1.iter().map(|p| proj.project(p)).collect();
    let p2: Vec<Vec<f64>> = a2.iter().map(|p| proj.project(p)).collect();
    let overlap = if n == 2 {
        let u1 = interval_union(p1.iter().map(|p| (p[0] - h, p[0] + h)).collect());
        let u2 = interval_union(p2.iter().map(|p| (p[0] - h, p[0] + h)).collect());
        let mut total = 0.0;
        for &(a, b) in &u1 {
            for &(c, d) in &u2 {
                total += (b.min(d) - a.max(c)).max(0.0);
            }
        }
        total
    } else {
        // Cells of side h hit by both thickened samples.
        let cells = |ps: &[Vec<f64>]| -> std::collections::BTreeSet<Vec<i64>> {
            let mut s = std::collections::BTreeSet::new();
            for p in ps {
                let base: Vec<i64> = p.iter().map(|x| (x / h).floor() as i64).collect();
                let m = base.len();
                for code in 0..3usize.pow(m as u32) {
                    let mut c = base.clone();
                    let mut r = code;
                    for ci in c.iter_mut() {
                        *ci += (r % 3) as i64 - 1;
                        r /= 3;
                    }
                    s.insert(c);
                }
            }
            s
        };
        let (c1, c2) = (cells(&p1), cells(&p2));
        c1.intersection(&c2).count() as f64 * h.powi((n - 1) as i32)
    };
    Ok(OverlapDirection {
        v,
        overlap_measure_estimate: overlap,
        fallback,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RigidityChain {
    /// `M(psi# T)`, `int |theta~|`, `int sum |theta|`, `int |theta| |det D psi|`, `M(T)`.
    pub chain: [f64; 5],
    pub gaps: [f64; 4],
    pub all_equal: bool,
    /// When the chain is tight: whether every carried piece is in SO(n).
    pub gradients_special_orthogonal: Option<bool>,
}

fn chain_from(t: &SimplicialCurrent, psi: &PiecewiseAffineMap, pf: &Pushforward, target: &EmbeddedComplex, tol: f64) -> Result<RigidityChain> {
    let n = t.dim();
    let c = t.complex();
    let pushed_mass = mass(&pf.current).total;
    let theta_tilde: f64 = pf.current.entries().iter().map(|(&i, &m)| m.unsigned_abs() as f64 * target.volume(n, i)).sum();
    let preimage_sum: f64 = pf
        .covers
        .iter()
        .map(|cv| t.multiplicity(cv.source).unsigned_abs() as f64 * target.volume(n, cv.target))
        .sum();
    let mut det_integral = 0.0;
    for (&i, &m) in t.entries() {
        let jac: f64 = singular_values(&psi.differential(n, i)).iter().product();
        det_integral += m.unsigned_abs() as f64 * jac * c.volume(n, i);
    }
    let chain = [pushed_mass, theta_tilde, preimage_sum, det_integral, mass(t).total];
    let gaps = [chain[1] - chain[0], chain[2] - chain[1], chain[3] - chain[2], chain[4] - chain[3]];
    let scale = chain[4].max(1.0);
    let all_equal = gaps.iter().all(|g| g.abs() < tol * scale);
    let gradients_special_orthogonal = if all_equal && n == psi.target_dim() && n == c.ambient_dim() {
        Some(classify_gradients(psi, t, DEFAULT_SO_TOL)?.all_special_orthogonal())
    } else {
        None
    };
    Ok(RigidityChain {
        chain,
        gaps,
        all_equal,
        gradients_special_orthogonal,
    })
}

/// The five-line chain `M(psi# T) <= int |theta~| <= int sum |theta| <=
/// int |theta| |det| <= M(T)` by per-simplex quadrature.
pub fn euclidean_rigidity_chain(t: &SimplicialCurrent, psi: &PiecewiseAffineMap, target: &Arc<EmbeddedComplex>, tol: f64) -> Result<RigidityChain> {
    if t.dim() != psi.target_dim() {
        return Err(Error::UnsupportedDimension("the rigidity chain needs a top-dimensional current".into()));
    }
    let pf = pushforward_detailed(psi, t, target)?;
    chain_from(t, psi, &pf, target, tol)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "hypotheses")]
pub enum Verdict {
    ConsistentWithIsometry,
    HypothesesViolated(Vec<u8>),
    RigidityFailed,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RigidityReport {
    pub hypotheses: Hypotheses,
    pub essential_injectivity: EssentialInjectivity,
    pub distortion: Distortion,
    pub distortion_tolerance: f64,
    pub mesh_size: f64,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, Copy)]
pub struct RigidityOptions {
    pub metric: MetricMode,
    pub samples: usize,
    pub seed: u64,
    pub tol: f64,
    /// Defaults to [`DISTORTION_MESH_FACTOR`] times the mesh size.
    pub distortion_tol: Option<f64>,
}

impl Default for RigidityOptions {
    fn default() -> Self {
        RigidityOptions {
            metric: MetricMode::AmbientEuclidean,
            samples: DEFAULT_SAMPLES,
            seed: 0,
            tol: DEFAULT_HYPOTHESIS_TOL,
            distortion_tol: None,
        }
    }
}

/// Hypotheses, injectivity estimate, distortion and verdict in one pass.
pub fn rigidity_check(t: &SimplicialCurrent, psi: &PiecewiseAffineMap, ball: &SimplicialCurrent, opts: &RigidityOptions) -> Result<RigidityReport> {
    let target = ball.complex();
    let pf = pushforward_detailed(psi, t, target)?;
    let hypotheses = hypotheses_from(t, psi, ball, &pf.current, opts.tol)?;
    let essential_injectivity = injectivity_from(t, &pf, target, opts.samples, opts.seed);
    let distortion = distortion(t, psi, opts.metric, opts.samples, opts.seed)?;
    let mesh_size = t.complex().mesh_size();
    let distortion_tolerance = opts.distortion_tol.unwrap_or(DISTORTION_MESH_FACTOR * mesh_size);
    let violated = hypotheses.violated();
    let verdict = if !violated.is_empty() {
        Verdict::HypothesesViolated(violated)
    } else if distortion.max_distortion > distortion_tolerance {
        Verdict::RigidityFailed
    } else {
        Verdict::ConsistentWithIsometry
    };
    Ok(RigidityReport {
        hypotheses,
        essential_injectivity,
        distortion,
        distortion_tolerance,
        mesh_size,
        verdict,
    })
}
