//! Instance generators (disk, annulus, split disks, Schwarzschild graph) and
//! the stability runner producing convergence tables.

use std::f64::consts::PI;
use std::io::Write;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::currents::{mass, SimplicialCurrent};
use crate::error::{input_err, Result};
use crate::flatnorm::flat_distance;
use crate::geom;
use crate::mesh::{EmbeddedComplex, MetricMode};
use crate::pa_maps::{pushforward, PiecewiseAffineMap};
use crate::rigidity::{distortion, DEFAULT_SAMPLES};

pub const DEFAULT_SEGMENTS: usize = 512;
pub const DEFAULT_GRID: usize = 128;
/// Relative slack for the monotonicity of the five-term chain.
pub const DEFAULT_CHAIN_TOL: f64 = 0.02;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum InstanceSpec {
    Disk { n_segments: usize },
    Annulus { eps: f64, n_segments: usize },
    SplitDisks { n_segments: usize },
    /// Graph of `sqrt(8 m (rho - 2 m))` over `r0 <= rho <= r` in `R^3`, on a
    /// `grid x grid` polar grid.
    SchwarzschildGraph { m: f64, r: f64, r0: f64, grid: usize },
}

impl InstanceSpec {
    pub fn schwarzschild(m: f64, r: f64) -> Self {
        InstanceSpec::SchwarzschildGraph {
            m,
            r,
            r0: 2.0 * m,
            grid: DEFAULT_GRID,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let segs = |n: usize| {
            if n < 8 || !n.is_multiple_of(8) {
                input_err(format!("n_segments must be a positive multiple of 8, got {n}"))
            } else {
                Ok(())
            }
        };
        match *self {
            InstanceSpec::Disk { n_segments } | InstanceSpec::SplitDisks { n_segments } => segs(n_segments),
            InstanceSpec::Annulus { eps, n_segments } => {
                segs(n_segments)?;
                if !(eps > 0.0 && eps < 1.0) {
                    return input_err(format!("annulus eps must lie in (0, 1), got {eps}"));
                }
                Ok(())
            }
            InstanceSpec::SchwarzschildGraph { m, r, r0, grid } => {
                if !(m > 0.0 && r0 >= 2.0 * m && r > r0 && grid >= 4) {
                    return input_err(format!("schwarzschild needs m > 0, r > r0 >= 2m, grid >= 4; got m={m}, r={r}, r0={r0}, grid={grid}"));
                }
                Ok(())
            }
        }
    }

    /// The family parameter used to order table rows.
    pub fn parameter(&self) -> f64 {
        match *self {
            InstanceSpec::Disk { n_segments } | InstanceSpec::SplitDisks { n_segments } => n_segments as f64,
            InstanceSpec::Annulus { eps, .. } => eps,
            InstanceSpec::SchwarzschildGraph { m, .. } => m,
        }
    }

    /// Radius of the target ball.
    pub fn radius(&self) -> f64 {
        match *self {
            InstanceSpec::SchwarzschildGraph { r, .. } => r,
            _ => 1.0,
        }
    }
}

/// A generated instance: `t` on `X`, the map `psi` from `X`, and the ball
/// current on the target complex.
#[derive(Debug, Clone)]
pub struct Instance {
    pub spec: InstanceSpec,
    pub t: SimplicialCurrent,
    pub psi: PiecewiseAffineMap,
    pub target: Arc<EmbeddedComplex>,
    pub ball: SimplicialCurrent,
    pub mesh_size: f64,
}

/// Unit vector at angle `2 pi i / n`, exact at multiples of `pi / 2`.
fn unit_dir(i: usize, n: usize) -> [f64; 2] {
    let i = i % n;
    if (4 * i).is_multiple_of(n) {
        return match 4 * i / n {
            0 => [1.0, 0.0],
            1 => [0.0, 1.0],
            2 => [-1.0, 0.0],
            _ => [0.0, -1.0],
        };
    }
    let a = 2.0 * PI * i as f64 / n as f64;
    [a.cos(), a.sin()]
}

/// Polar disk: ring `k` (radius `radii[k]`, `radii[0] = 0`) has `8k` vertices.
/// Each octant strip is triangulated on its own so the axis rays are edges.
/// Returns vertices, triangles, and the ring of each triangle's outer edge.
struct PolarDisk {
    vertices: Vec<Vec<f64>>,
    triangles: Vec<Vec<usize>>,
    ring: Vec<usize>,
}

fn polar_disk(radii: &[f64]) -> PolarDisk {
    let rings = radii.len() - 1;
    let mut vertices = vec![vec![0.0, 0.0]];
    let mut start = vec![0usize];
    for (k, &r) in radii.iter().enumerate().skip(1) {
        start.push(vertices.len());
        for i in 0..8 * k {
            let d = unit_dir(i, 8 * k);
            vertices.push(vec![r * d[0], r * d[1]]);
        }
    }
    let idx = |k: usize, i: usize| if k == 0 { 0 } else { start[k] + i % (8 * k) };
    let mut triangles = Vec::with_capacity(8 * rings * rings);
    let mut ring = Vec::with_capacity(8 * rings * rings);
    for k in 1..=rings {
        for j in 0..8 {
            let (o, n) = (j * k, j * (k - 1));
            for i in 0..k {
                triangles.push(vec![idx(k, o + i), idx(k, o + i + 1), idx(k - 1, n + i)]);
                ring.push(k);
            }
            for i in 0..k - 1 {
                triangles.push(vec![idx(k - 1, n + i), idx(k, o + i + 1), idx(k - 1, n + i + 1)]);
                ring.push(k);
            }
        }
    }
    PolarDisk { vertices, triangles, ring }
}

fn uniform_radii(rings: usize, radius: f64) -> Vec<f64> {
    (0..=rings).map(|k| radius * k as f64 / rings as f64).collect()
}

/// Radii with a ring exactly at `eps`; returns the radii and that ring's index.
fn radii_through(rings: usize, eps: f64) -> (Vec<f64>, usize) {
    let k_eps = ((eps * rings as f64).round() as usize).clamp(1, rings - 1);
    let radii = (0..=rings)
        .map(|k| {
            if k <= k_eps {
                eps * k as f64 / k_eps as f64
            } else {
                eps + (1.0 - eps) * (k - k_eps) as f64 / (rings - k_eps) as f64
            }
        })
        .collect();
    (radii, k_eps)
}

/// Keeps only the listed triangles and drops unused vertices. Returns the
/// compacted complex data and the old index of each kept vertex.
fn compact(vertices: &[Vec<f64>], triangles: Vec<Vec<usize>>) -> (Vec<Vec<f64>>, Vec<Vec<usize>>, Vec<usize>) {
    let mut map = vec![usize::MAX; vertices.len()];
    let mut old = Vec::new();
    let tris = triangles
        .into_iter()
        .map(|t| {
            t.into_iter()
                .map(|v| {
                    if map[v] == usize::MAX {
                        map[v] = old.len();
                        old.push(v);
                    }
                    map[v]
                })
                .collect()
        })
        .collect();
    let verts = old.iter().map(|&v| vertices[v].clone()).collect();
    (verts, tris, old)
}

fn disk_target(n_segments: usize) -> Result<(Arc<EmbeddedComplex>, SimplicialCurrent)> {
    let d = polar_disk(&uniform_radii(n_segments / 8, 1.0));
    let c = Arc::new(EmbeddedComplex::from_maximal(2, d.vertices, d.triangles)?);
    let ball = SimplicialCurrent::standard_full(c.clone())?;
    Ok((c, ball))
}

fn schwarzschild_profile(m: f64, rho: f64) -> f64 {
    (8.0 * m * (rho - 2.0 * m)).max(0.0).sqrt()
}

/// Build the instance described by `spec`.
pub fn generate(spec: &InstanceSpec) -> Result<Instance> {
    spec.validate()?;
    let inst = match *spec {
        InstanceSpec::Disk { n_segments } => {
            let (target, ball) = disk_target(n_segments)?;
            let psi = PiecewiseAffineMap::identity(target.clone());
            Instance {
                spec: *spec,
                t: ball.clone(),
                psi,
                mesh_size: target.mesh_size(),
                target,
                ball,
            }
        }
        InstanceSpec::Annulus { eps, n_segments } => {
            let (radii, k_eps) = radii_through(n_segments / 8, eps);
            let d = polar_disk(&radii);
            let outer: Vec<Vec<usize>> = d.triangles.iter().zip(&d.ring).filter(|(_, &k)| k > k_eps).map(|(t, _)| t.clone()).collect();
            let (verts, tris, old) = compact(&d.vertices, outer);
            let x = Arc::new(EmbeddedComplex::from_maximal(2, verts, tris)?);
            let target = Arc::new(EmbeddedComplex::from_maximal(2, d.vertices.clone(), d.triangles)?);
            let images = old.iter().map(|&v| d.vertices[v].clone()).collect();
            let psi = PiecewiseAffineMap::new(x.clone(), 2, images)?;
            Instance {
                spec: *spec,
                t: SimplicialCurrent::standard_full(x.clone())?,
                psi,
                mesh_size: x.mesh_size(),
                ball: SimplicialCurrent::standard_full(target.clone())?,
                target,
            }
        }
        InstanceSpec::SplitDisks { n_segments } => {
            let d = polar_disk(&uniform_radii(n_segments / 8, 1.0));
            // Left half translated by -1, right half by +1; axis vertices get one copy per side.
            let mut copy = vec![[usize::MAX; 2]; d.vertices.len()];
            let mut verts: Vec<Vec<f64>> = Vec::new();
            let mut images: Vec<Vec<f64>> = Vec::new();
            let mut tris = Vec::with_capacity(d.triangles.len());
            for t in &d.triangles {
                let pts: Vec<&[f64]> = t.iter().map(|&v| d.vertices[v].as_slice()).collect();
                let side = usize::from(geom::barycenter(&pts)[0] > 0.0);
                let shift = if side == 0 { -1.0 } else { 1.0 };
                tris.push(
                    t.iter()
                        .map(|&v| {
                            if copy[v][side] == usize::MAX {
                                copy[v][side] = verts.len();
                                let p = &d.vertices[v];
                                verts.push(vec![p[0] + shift, p[1]]);
                                images.push(p.clone());
                            }
                            copy[v][side]
                        })
                        .collect(),
                );
            }
            let x = Arc::new(EmbeddedComplex::from_maximal(2, verts, tris)?);
            let target = Arc::new(EmbeddedComplex::from_maximal(2, d.vertices, d.triangles)?);
            Instance {
                spec: *spec,
                t: SimplicialCurrent::standard_full(x.clone())?,
                psi: PiecewiseAffineMap::new(x.clone(), 2, images)?,
                mesh_size: x.mesh_size(),
                ball: SimplicialCurrent::standard_full(target.clone())?,
                target,
            }
        }
        InstanceSpec::SchwarzschildGraph { m, r, r0, grid } => {
            // Radial nodes graded toward r0, where the profile has a square-root singularity.
            let radial: Vec<f64> = (0..=grid).map(|i| {
                let s = i as f64 / grid as f64;
                r0 + (r - r0) * s * s
            }).collect();
            let na = grid;
            let mut graph_verts = Vec::with_capacity((grid + 1) * na);
            let mut plane_verts = Vec::with_capacity((grid + 1) * na + 1);
            for &rho in &radial {
                for a in 0..na {
                    let d = unit_dir(a, na);
                    graph_verts.push(vec![rho * d[0], rho * d[1], schwarzschild_profile(m, rho)]);
                    plane_verts.push(vec![rho * d[0], rho * d[1]]);
                }
            }
            let id = |i: usize, a: usize| i * na + a % na;
            let mut tris = Vec::with_capacity(2 * grid * na);
            for i in 0..grid {
                for a in 0..na {
                    tris.push(vec![id(i, a), id(i + 1, a), id(i + 1, a + 1)]);
                    tris.push(vec![id(i, a), id(i + 1, a + 1), id(i, a + 1)]);
                }
            }
            let x = Arc::new(EmbeddedComplex::from_maximal(3, graph_verts, tris.clone())?);
            let entries: Vec<(usize, i64)> = (0..x.num_simplices(2))
                .map(|i| {
                    let p = x.simplex_points(2, i);
                    let flat: Vec<Vec<f64>> = p.iter().map(|q| q[..2].to_vec()).collect();
                    let flat: Vec<&[f64]> = flat.iter().map(|q| q.as_slice()).collect();
                    (i, geom::signed_volume(&flat).signum() as i64)
                })
                .collect();
            let t = SimplicialCurrent::from_entries(x.clone(), 2, entries)?;
            let images = plane_verts.clone();
            // Fill the inner disk with a fan so the target carries the full ball.
            let center = plane_verts.len();
            plane_verts.push(vec![0.0, 0.0]);
            for a in 0..na {
                tris.push(vec![center, id(0, a), id(0, a + 1)]);
            }
            let target = Arc::new(EmbeddedComplex::from_maximal(2, plane_verts, tris)?);
            Instance {
                spec: *spec,
                t,
                psi: PiecewiseAffineMap::new(x.clone(), 2, images)?,
                mesh_size: x.mesh_size(),
                ball: SimplicialCurrent::standard_full(target.clone())?,
                target,
            }
        }
    };
    Ok(inst)
}

/// Continuum area of the Schwarzschild graph over `r0 <= rho <= r`, by
/// Gauss-Legendre quadrature in `s` with `rho = r0 + (r - r0) s^2`.
pub fn schwarzschild_area(m: f64, r: f64, r0: f64) -> f64 {
    // Area element 2 pi rho sqrt(rho / (rho - 2m)); the substitution removes the endpoint singularity.
    let f = |s: f64| {
        let rho = r0 + (r - r0) * s * s;
        let drho = 2.0 * (r - r0) * s;
        let gap = rho - 2.0 * m;
        if gap <= 0.0 {
            // Limit of drho / sqrt(rho - 2m) at s = 0 when r0 = 2m.
            return 2.0 * PI * rho * rho.sqrt() * 2.0 * (r - r0).sqrt();
        }
        2.0 * PI * rho * (rho / gap).sqrt() * drho
    };
    let (nodes, weights) = gauss_legendre_16();
    let panels = 64;
    let mut total = 0.0;
    for p in 0..panels {
        let (a, b) = (p as f64 / panels as f64, (p + 1) as f64 / panels as f64);
        for (x, w) in nodes.iter().zip(&weights) {
            total += 0.5 * (b - a) * w * f(0.5 * (a + b) + 0.5 * (b - a) * x);
        }
    }
    total
}

fn gauss_legendre_16() -> (Vec<f64>, Vec<f64>) {
    let half = [
        (0.0950125098376374, 0.1894506104550685),
        (0.2816035507792589, 0.1826034150449236),
        (0.4580167776572274, 0.1691565193950025),
        (0.6178762444026438, 0.1495959888165767),
        (0.755_404_408_355_003, 0.1246289712555339),
        (0.8656312023878318, 0.0951585116824928),
        (0.9445750230732326, 0.0622535239386479),
        (0.9894009349916499, 0.0271524594117541),
    ];
    let mut x = Vec::new();
    let mut w = Vec::new();
    for &(a, b) in &half {
        x.extend([-a, a]);
        w.extend([b, b]);
    }
    (x, w)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub kind: String,
    pub parameter: f64,
    pub mass: f64,
    pub flat_distance_to_ball: f64,
    pub max_distortion: f64,
    pub mesh_size: f64,
    /// `vol B(R) <= M(psi# T_inf) <= M(T_inf) <= M(T_j) <= vol B(R)`, with the
    /// limit current taken as the ball on the target mesh and `M(T_j)`
    /// standing in for the liminf.
    pub chain: [f64; 5],
    pub chain_monotone: bool,
    /// `(max - min) / vol B(R)` over the chain.
    pub chain_spread: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceTable {
    pub rows: Vec<ConvergenceRow>,
    pub flat_distance_decreasing: bool,
    /// `|M(T) - M(ball)|` decreasing along the rows.
    pub mass_gap_decreasing: bool,
}

#[derive(Debug, Clone, Copy)]
pub struct StabilityOptions {
    pub metric: MetricMode,
    pub samples: usize,
    pub seed: u64,
    pub chain_tol: f64,
}

impl Default for StabilityOptions {
    fn default() -> Self {
        StabilityOptions {
            metric: MetricMode::AmbientEuclidean,
            samples: DEFAULT_SAMPLES,
            seed: 0,
            chain_tol: DEFAULT_CHAIN_TOL,
        }
    }
}

fn kind_name(spec: &InstanceSpec) -> &'static str {
    match spec {
        InstanceSpec::Disk { .. } => "disk",
        InstanceSpec::Annulus { .. } => "annulus",
        InstanceSpec::SplitDisks { .. } => "split_disks",
        InstanceSpec::SchwarzschildGraph { .. } => "schwarzschild_graph",
    }
}

pub fn stability_row(spec: &InstanceSpec, opts: &StabilityOptions) -> Result<ConvergenceRow> {
    let inst = generate(spec)?;
    let radius = spec.radius();
    let vol_ball = PI * radius * radius;
    let ball_mass = mass(&inst.ball).total;
    let pushed = pushforward(&inst.psi, &inst.t, &inst.target)?;
    let flat = flat_distance(&pushed, &inst.ball, &inst.target)?;
    let dist = distortion(&inst.t, &inst.psi, opts.metric, opts.samples, opts.seed)?;
    let m = mass(&inst.t).total;
    let chain = [vol_ball, ball_mass, ball_mass, m, vol_ball];
    let slack = opts.chain_tol * vol_ball;
    let chain_monotone = chain.windows(2).all(|w| w[0] <= w[1] + slack);
    let (lo, hi) = chain.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
    Ok(ConvergenceRow {
        kind: kind_name(spec).to_string(),
        parameter: spec.parameter(),
        mass: m,
        flat_distance_to_ball: flat.value,
        max_distortion: dist.max_distortion,
        mesh_size: inst.mesh_size,
        chain,
        chain_monotone,
        chain_spread: (hi - lo) / vol_ball,
    })
}

/// One row per spec, ordered by decreasing parameter (the direction of
/// convergence for annuli and Schwarzschild families).
pub fn stability_run(specs: &[InstanceSpec], opts: &StabilityOptions) -> Result<ConvergenceTable> {
    let mut rows = specs.iter().map(|s| stability_row(s, opts)).collect::<Result<Vec<_>>>()?;
    rows.sort_by(|a, b| b.parameter.total_cmp(&a.parameter));
    let flat_distance_decreasing = rows.windows(2).all(|w| w[1].flat_distance_to_ball < w[0].flat_distance_to_ball);
    let gap = |r: &ConvergenceRow| (r.mass - r.chain[1]).abs();
    let mass_gap_decreasing = rows.windows(2).all(|w| gap(&w[1]) < gap(&w[0]));
    Ok(ConvergenceTable {
        rows,
        flat_distance_decreasing,
        mass_gap_decreasing,
    })
}

pub const CSV_HEADER: [&str; 13] = [
    "kind",
    "parameter",
    "mass",
    "flat_distance_to_ball",
    "max_distortion",
    "mesh_size",
    "chain_vol_ball",
    "chain_pushforward_limit",
    "chain_limit",
    "chain_liminf",
    "chain_vol_ball_end",
    "chain_monotone",
    "chain_spread",
];

impl ConvergenceTable {
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let io = |e: csv::Error| crate::Error::Format(e.to_string());
        out.write_record(CSV_HEADER).map_err(io)?;
        for r in &self.rows {
            let mut rec = vec![
                r.kind.clone(),
                r.parameter.to_string(),
                r.mass.to_string(),
                r.flat_distance_to_ball.to_string(),
                r.max_distortion.to_string(),
                r.mesh_size.to_string(),
            ];
            rec.extend(r.chain.iter().map(|x| x.to_string()));
            rec.push(r.chain_monotone.to_string());
            rec.push(r.chain_spread.to_string());
            out.write_record(&rec).map_err(io)?;
        }
        out.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pa_maps::lipschitz_constant;

    #[test]
    fn polar_disk_counts_and_axes() {
        let d = polar_disk(&uniform_radii(3, 1.0));
        assert_eq!(d.triangles.len(), 8 * 9);
        assert_eq!(d.vertices.len(), 1 + 8 * (1 + 2 + 3));
        assert!(d.vertices.iter().any(|v| v[0] == 0.0 && v[1] == 1.0));
        assert_eq!(unit_dir(6, 24), [0.0, 1.0]);
    }

    #[test]
    fn disk_mass_is_inscribed_polygon() {
        let inst = generate(&InstanceSpec::Disk { n_segments: 64 }).unwrap();
        let poly = 0.5 * 64.0 * (2.0 * PI / 64.0).sin();
        assert!((mass(&inst.t).total - poly).abs() < 1e-12);
    }

    #[test]
    fn annulus_hole_is_inner_polygon() {
        let inst = generate(&InstanceSpec::Annulus { eps: 0.25, n_segments: 64 }).unwrap();
        let full = mass(&inst.ball).total;
        let hole = 0.5 * 16.0 * 0.0625 * (2.0 * PI / 16.0).sin();
        assert!((full - mass(&inst.t).total - hole).abs() < 1e-12);
        assert!(lipschitz_constant(&inst.psi) <= 1.0 + 1e-9);
    }

    #[test]
    fn split_disks_push_to_ball() {
        let inst = generate(&InstanceSpec::SplitDisks { n_segments: 32 }).unwrap();
        let pushed = pushforward(&inst.psi, &inst.t, &inst.target).unwrap();
        assert_eq!(pushed, inst.ball);
        assert!(lipschitz_constant(&inst.psi) <= 1.0 + 1e-9);
    }

    #[test]
    fn schwarzschild_area_limits() {
        // Flat limit: the annulus area.
        let a = schwarzschild_area(1e-12, 2.0, 2e-12);
        assert!((a - 4.0 * PI).abs() < 1e-6);
        let inst = generate(&InstanceSpec::SchwarzschildGraph { m: 0.1, r: 2.0, r0: 0.2, grid: 64 }).unwrap();
        let exact = schwarzschild_area(0.1, 2.0, 0.2);
        assert!((mass(&inst.t).total - exact).abs() / exact < 2e-3);
        assert!(lipschitz_constant(&inst.psi) <= 1.0 + 1e-9);
    }
}
