//! Decomposition of integral 1-currents into injective curves and loops.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use serde::Serialize;

use crate::currents::{boundary, mass, SimplicialCurrent};
use crate::error::{Error, Result};
use crate::mesh::{geodesic_distance, EmbeddedComplex, MetricMode, DEFAULT_SNAP_EPS};

pub const DEFAULT_GEODESIC_TOL: f64 = 1e-6;

/// A polygonal path through complex vertices. `arcs[i]` joins `vertices[i]`
/// to `vertices[i + 1]`; its sign is +1 when that matches the edge's sorted
/// vertex order. For loops the last vertex repeats the first.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Path {
    pub vertices: Vec<usize>,
    pub arcs: Vec<(usize, i64)>,
    pub length: f64,
}

impl Path {
    pub fn start(&self) -> usize {
        self.vertices[0]
    }

    pub fn end(&self) -> usize {
        *self.vertices.last().expect("paths are nonempty")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurveDecomposition {
    pub curves: Vec<Path>,
    pub loops: Vec<Path>,
}

impl CurveDecomposition {
    pub fn total_length(&self) -> f64 {
        self.curves.iter().chain(&self.loops).map(|p| p.length).sum()
    }

    /// Sum of the pieces as a chain.
    pub fn to_current(&self, complex: &Arc<EmbeddedComplex>) -> Result<SimplicialCurrent> {
        let arcs = self.curves.iter().chain(&self.loops).flat_map(|p| p.arcs.iter().copied());
        SimplicialCurrent::from_entries(complex.clone(), 1, arcs)
    }

    /// `sum (delta_end - delta_start)` over the open curves.
    pub fn endpoint_current(&self, complex: &Arc<EmbeddedComplex>) -> Result<SimplicialCurrent> {
        let pts = self.curves.iter().flat_map(|p| [(p.end(), 1), (p.start(), -1)]);
        SimplicialCurrent::from_entries(complex.clone(), 0, pts)
    }
}

struct Multigraph {
    /// Outgoing arcs per vertex as `(head, edge, sign)`, popped from the back.
    out: BTreeMap<usize, Vec<(usize, usize, i64)>>,
    excess: BTreeMap<usize, i64>,
}

impl Multigraph {
    fn new(t: &SimplicialCurrent) -> Self {
        let c = t.complex();
        let mut out: BTreeMap<usize, Vec<(usize, usize, i64)>> = BTreeMap::new();
        let mut excess: BTreeMap<usize, i64> = BTreeMap::new();
        for (&e, &m) in t.entries() {
            let vs = c.simplex_vertices(1, e);
            let (tail, head, s) = if m > 0 { (vs[0], vs[1], 1) } else { (vs[1], vs[0], -1) };
            for _ in 0..m.unsigned_abs() {
                out.entry(tail).or_default().push((head, e, s));
            }
            *excess.entry(tail).or_insert(0) += m.abs();
            *excess.entry(head).or_insert(0) -= m.abs();
        }
        // Smallest edge id first when popping from the back.
        for arcs in out.values_mut() {
            arcs.sort_by(|a, b| b.1.cmp(&a.1));
        }
        Multigraph { out, excess }
    }

    fn pop_arc(&mut self, v: usize) -> Option<(usize, usize, i64)> {
        let arcs = self.out.get_mut(&v)?;
        let a = arcs.pop();
        if arcs.is_empty() {
            self.out.remove(&v);
        }
        a
    }
}

fn make_path(c: &EmbeddedComplex, vertices: Vec<usize>, arcs: Vec<(usize, i64)>) -> Path {
    let length = arcs.iter().map(|&(e, _)| c.volume(1, e)).sum();
    Path { vertices, arcs, length }
}

/// Walks from `start`, cutting out a loop whenever a vertex repeats, until
/// `stop` accepts the current vertex. Returns the injective remainder.
fn walk(
    g: &mut Multigraph,
    c: &EmbeddedComplex,
    start: usize,
    loops: &mut Vec<Path>,
    stop: impl Fn(&Multigraph, usize, usize) -> bool,
) -> (Vec<usize>, Vec<(usize, i64)>) {
    let mut verts = vec![start];
    let mut arcs: Vec<(usize, i64)> = Vec::new();
    let mut pos: BTreeMap<usize, usize> = BTreeMap::from([(start, 0)]);
    loop {
        let v = *verts.last().unwrap();
        if stop(g, v, verts.len()) {
            return (verts, arcs);
        }
        let Some((head, e, s)) = g.pop_arc(v) else {
            return (verts, arcs);
        };
        if let Some(&p) = pos.get(&head) {
            let mut lv: Vec<usize> = verts.drain(p + 1..).collect();
            let mut la: Vec<(usize, i64)> = arcs.drain(p..).collect();
            for x in &lv {
                pos.remove(x);
            }
            lv.insert(0, head);
            lv.push(head);
            la.push((e, s));
            loops.push(make_path(c, lv, la));
        } else {
            pos.insert(head, verts.len());
            verts.push(head);
            arcs.push((e, s));
        }
    }
}

/// Splits `t` into injective open curves running from boundary sources to
/// boundary sinks, then injective loops, until no arcs remain.
pub fn decompose_1current(t: &SimplicialCurrent) -> Result<CurveDecomposition> {
    if t.dim() != 1 {
        return Err(Error::UnsupportedDimension(format!("decomposition needs a 1-current, got dim {}", t.dim())));
    }
    let c = t.complex();
    let mut g = Multigraph::new(t);
    let mut curves = Vec::new();
    let mut loops = Vec::new();
    while let Some((&s, _)) = g.excess.iter().find(|(_, &x)| x > 0) {
        let (verts, arcs) = walk(&mut g, c, s, &mut loops, |g, v, len| len > 1 && g.excess.get(&v).copied().unwrap_or(0) < 0);
        let end = *verts.last().unwrap();
        *g.excess.get_mut(&s).unwrap() -= 1;
        *g.excess.get_mut(&end).unwrap() += 1;
        curves.push(make_path(c, verts, arcs));
    }
    while let Some(&s) = g.out.keys().next() {
        let (verts, arcs) = walk(&mut g, c, s, &mut loops, |_, _, _| false);
        if !arcs.is_empty() {
            return Err(Error::Geometry(format!("unbalanced arcs left at vertex {}", verts[0])));
        }
    }
    let order = |a: &Path, b: &Path| b.length.total_cmp(&a.length).then(a.start().cmp(&b.start()));
    curves.sort_by(order);
    loops.sort_by(order);
    Ok(CurveDecomposition { curves, loops })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GeodesicLemma {
    pub mass: f64,
    pub distance: f64,
    pub is_geodesic_segment: bool,
}

/// `M(T) >= d(a, b)` for `boundary T = delta_b - delta_a`, with equality
/// exactly when `T` is a single curve realizing the distance.
pub fn geodesic_lemma_check(t: &SimplicialCurrent, a: &[f64], b: &[f64], metric: MetricMode, tol: f64) -> Result<GeodesicLemma> {
    let c = t.complex();
    let va = c.find_vertex(a, DEFAULT_SNAP_EPS);
    let vb = c.find_vertex(b, DEFAULT_SNAP_EPS);
    let bd = boundary(t)?;
    let expected: BTreeMap<usize, i64> = match (va, vb) {
        (Some(x), Some(y)) if x != y => BTreeMap::from([(x, -1), (y, 1)]),
        _ => BTreeMap::new(),
    };
    if expected.is_empty() || bd.entries() != &expected {
        return Err(Error::Hypothesis(format!(
            "boundary is not delta_b - delta_a for a = {a:?}, b = {b:?} (boundary entries {:?})",
            bd.entries()
        )));
    }
    let distance = geodesic_distance(c, metric, a, b)?.value();
    lemma_with_distance(t, distance, tol)
}

/// The comparison part of [`geodesic_lemma_check`] for a known distance.
pub fn lemma_with_distance(t: &SimplicialCurrent, distance: f64, tol: f64) -> Result<GeodesicLemma> {
    let m = mass(t).total;
    let dec = decompose_1current(t)?;
    let single = dec.loops.is_empty() && dec.curves.len() == 1;
    let is_geodesic_segment = (m - distance).abs() < tol && single && (dec.curves[0].length - distance).abs() < tol;
    Ok(GeodesicLemma {
        mass: m,
        distance,
        is_geodesic_segment,
    })
}

/// Vertices where the decomposition's open curves start or end.
pub fn endpoints(dec: &CurveDecomposition) -> BTreeSet<usize> {
    dec.curves.iter().flat_map(|p| [p.start(), p.end()]).collect()
}
