//! Embedded simplicial complexes in `R^d`.
//!
//! Simplices are stored as sorted vertex tuples per dimension; every face of a
//! listed simplex is listed one dimension down. Orientation lives on chains
//! (see [`crate::currents`]), never on the complex.

use std::collections::hash_map::DefaultHasher;
use std::collections::HashMap;
use std::hash::{Hash, Hasher};

use petgraph::graph::{NodeIndex, UnGraph};
use serde::{Deserialize, Serialize};

use crate::error::{input_err, Error, Result};
use crate::geom;

pub const DEFAULT_VOLUME_EPS: f64 = 1e-12;
pub const DEFAULT_SNAP_EPS: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SimplexId {
    pub dim: usize,
    pub index: usize,
}

impl SimplexId {
    pub fn new(dim: usize, index: usize) -> Self {
        SimplexId { dim, index }
    }
}

/// How distances on the carrier of a complex are measured.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum MetricMode {
    /// Restriction of the Euclidean distance of the ambient space.
    AmbientEuclidean,
    /// Shortest paths in the graph of vertices plus `refinement` evenly spaced
    /// points per edge, joined by straight segments inside each simplex.
    LengthGraph { refinement: usize },
}

impl MetricMode {
    pub fn validate(&self) -> Result<()> {
        match self {
            MetricMode::LengthGraph { refinement: 0 } => input_err("length-graph refinement must be >= 1"),
            _ => Ok(()),
        }
    }
}

/// Result of a distance query; disconnected endpoints are reported separately
/// rather than as a large number.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum GeodesicDistance {
    Finite(f64),
    Unreachable,
}

impl GeodesicDistance {
    pub fn value(&self) -> f64 {
        match self {
            GeodesicDistance::Finite(d) => *d,
            GeodesicDistance::Unreachable => f64::INFINITY,
        }
    }

    pub fn is_reachable(&self) -> bool {
        matches!(self, GeodesicDistance::Finite(_))
    }
}

#[derive(Debug, Clone)]
enum Lookup {
    Packed(HashMap<u128, usize>),
    General(HashMap<Vec<usize>, usize>),
}

impl Lookup {
    fn for_dim(k: usize) -> Self {
        if k <= 3 {
            Lookup::Packed(HashMap::new())
        } else {
            Lookup::General(HashMap::new())
        }
    }

    fn pack(verts: &[usize]) -> u128 {
        let mut key: u128 = 0;
        for &v in verts {
            key = (key << 32) | (v as u128 + 1);
        }
        key
    }

    fn get(&self, verts: &[usize]) -> Option<usize> {
        match self {
            Lookup::Packed(m) => m.get(&Self::pack(verts)).copied(),
            Lookup::General(m) => m.get(verts).copied(),
        }
    }

    fn insert(&mut self, verts: &[usize], idx: usize) {
        match self {
            Lookup::Packed(m) => {
                m.insert(Self::pack(verts), idx);
            }
            Lookup::General(m) => {
                m.insert(verts.to_vec(), idx);
            }
        }
    }
}

#[derive(Debug, Clone)]
struct Level {
    verts: Vec<usize>,
    faces: Vec<usize>,
    volumes: Vec<f64>,
    coface_count: Vec<u32>,
    lookup: Lookup,
}

impl Level {
    fn new(k: usize) -> Self {
        Level {
            verts: Vec::new(),
            faces: Vec::new(),
            volumes: Vec::new(),
            coface_count: Vec::new(),
            lookup: Lookup::for_dim(k),
        }
    }
}

/// A finite simplicial complex with vertex coordinates in `R^d`.
#[derive(Debug, Clone)]
pub struct EmbeddedComplex {
    ambient_dim: usize,
    coords: Vec<f64>,
    levels: Vec<Level>,
    volume_eps: f64,
    fingerprint: u64,
}

impl PartialEq for EmbeddedComplex {
    fn eq(&self, other: &Self) -> bool {
        self.fingerprint == other.fingerprint
            && self.ambient_dim == other.ambient_dim
            && self.coords.len() == other.coords.len()
            && self.levels.len() == other.levels.len()
            && self.levels.iter().zip(&other.levels).all(|(a, b)| a.verts == b.verts)
            && self.coords.iter().zip(&other.coords).all(|(a, b)| a.to_bits() == b.to_bits())
    }
}

fn sorted(mut s: Vec<usize>) -> Vec<usize> {
    s.sort_unstable();
    s
}

impl EmbeddedComplex {
    /// Builds the closure of the given simplices (any dimensions, any vertex
    /// order). Given simplices keep their order; missing faces are appended in
    /// discovery order.
    pub fn from_maximal(ambient_dim: usize, vertices: Vec<Vec<f64>>, simplices: Vec<Vec<usize>>) -> Result<Self> {
        Self::build(ambient_dim, vertices, simplices, true, DEFAULT_VOLUME_EPS)
    }

    pub fn from_maximal_with_eps(
        ambient_dim: usize,
        vertices: Vec<Vec<f64>>,
        simplices: Vec<Vec<usize>>,
        volume_eps: f64,
    ) -> Result<Self> {
        Self::build(ambient_dim, vertices, simplices, true, volume_eps)
    }

    /// Builds from explicit per-dimension simplex lists (index `k` holds the
    /// k-simplices; the vertex list is implied). Faces must already be listed.
    pub fn from_simplices_by_dim(
        ambient_dim: usize,
        vertices: Vec<Vec<f64>>,
        by_dim: Vec<Vec<Vec<usize>>>,
    ) -> Result<Self> {
        let mut all = Vec::new();
        for (k, list) in by_dim.into_iter().enumerate().skip(1) {
            for s in list {
                if s.len() != k + 1 {
                    return input_err(format!("simplex {s:?} listed under dimension {k}"));
                }
                all.push(s);
            }
        }
        Self::build(ambient_dim, vertices, all, false, DEFAULT_VOLUME_EPS)
    }

    fn build(
        ambient_dim: usize,
        vertices: Vec<Vec<f64>>,
        simplices: Vec<Vec<usize>>,
        close: bool,
        volume_eps: f64,
    ) -> Result<Self> {
        if ambient_dim == 0 {
            return input_err("ambient dimension must be positive");
        }
        let nv = vertices.len();
        let mut coords = Vec::with_capacity(nv * ambient_dim);
        for (i, v) in vertices.iter().enumerate() {
            if v.len() != ambient_dim {
                return input_err(format!("vertex {i} has {} coordinates, expected {ambient_dim}", v.len()));
            }
            if v.iter().any(|x| !x.is_finite()) {
                return input_err(format!("vertex {i} has a non-finite coordinate"));
            }
            coords.extend_from_slice(v);
        }
        let top = simplices.iter().map(|s| s.len().saturating_sub(1)).max().unwrap_or(0);
        if top > ambient_dim {
            return input_err(format!("{top}-simplex cannot be embedded in R^{ambient_dim}"));
        }
        let mut levels: Vec<Level> = (0..=top).map(Level::new).collect();
        levels[0].verts = (0..nv).collect();

        // Insert in order of dimension so explicit simplices keep their order.
        let mut by_dim: Vec<Vec<Vec<usize>>> = vec![Vec::new(); top + 1];
        for s in simplices {
            if s.is_empty() {
                return input_err("empty simplex");
            }
            if let Some(&bad) = s.iter().find(|&&v| v >= nv) {
                return input_err(format!("simplex {s:?} references vertex {bad} out of range (n = {nv})"));
            }
            let k = s.len() - 1;
            let s = sorted(s);
            if s.windows(2).any(|w| w[0] == w[1]) {
                return input_err(format!("simplex {s:?} repeats a vertex"));
            }
            by_dim[k].push(s);
        }
        for k in 1..=top {
            for s in std::mem::take(&mut by_dim[k]) {
                if levels[k].lookup.get(&s).is_some() {
                    return input_err(format!("duplicate {k}-simplex {s:?}"));
                }
                let idx = levels[k].verts.len() / (k + 1);
                levels[k].lookup.insert(&s, idx);
                levels[k].verts.extend_from_slice(&s);
            }
        }
        // Faces, top-down so appended faces get their own faces resolved.
        for k in (1..=top).rev() {
            let count = levels[k].verts.len() / (k + 1);
            let mut faces = Vec::with_capacity(count * (k + 1));
            let mut face = Vec::with_capacity(k);
            for i in 0..count {
                for omit in 0..=k {
                    face.clear();
                    for (j, &v) in levels[k].verts[i * (k + 1)..(i + 1) * (k + 1)].iter().enumerate() {
                        if j != omit {
                            face.push(v);
                        }
                    }
                    let fidx = if k == 1 {
                        face[0]
                    } else {
                        match levels[k - 1].lookup.get(&face) {
                            Some(f) => f,
                            None if close => {
                                let f = levels[k - 1].verts.len() / k;
                                levels[k - 1].lookup.insert(&face, f);
                                levels[k - 1].verts.extend_from_slice(&face);
                                f
                            }
                            None => {
                                return input_err(format!(
                                    "face {face:?} of {k}-simplex {:?} is not listed",
                                    &levels[k].verts[i * (k + 1)..(i + 1) * (k + 1)]
                                ))
                            }
                        }
                    };
                    faces.push(fidx);
                }
            }
            levels[k].faces = faces;
        }
        for k in 0..=top {
            let count = if k == 0 { nv } else { levels[k].verts.len() / (k + 1) };
            levels[k].coface_count = vec![0; count];
        }
        for k in 1..=top {
            let faces = std::mem::take(&mut levels[k].faces);
            for &f in &faces {
                levels[k - 1].coface_count[f] += 1;
            }
            levels[k].faces = faces;
        }
        let mut c = EmbeddedComplex {
            ambient_dim,
            coords,
            levels,
            volume_eps,
            fingerprint: 0,
        };
        for k in 0..=top {
            let count = c.num_simplices(k);
            let mut vols = Vec::with_capacity(count);
            for i in 0..count {
                let v = if k == 0 { 1.0 } else { geom::simplex_volume(&c.simplex_points(k, i)) };
                if k > 0 && !(v > volume_eps) {
                    return Err(Error::Geometry(format!(
                        "{k}-simplex {:?} is degenerate (volume {v:e} <= {volume_eps:e})",
                        c.simplex_vertices(k, i)
                    )));
                }
                vols.push(v);
            }
            c.levels[k].volumes = vols;
        }
        c.fingerprint = c.compute_fingerprint();
        Ok(c)
    }

    fn compute_fingerprint(&self) -> u64 {
        let mut h = DefaultHasher::new();
        self.ambient_dim.hash(&mut h);
        for x in &self.coords {
            x.to_bits().hash(&mut h);
        }
        for l in &self.levels {
            l.verts.hash(&mut h);
        }
        h.finish()
    }

    pub fn fingerprint(&self) -> u64 {
        self.fingerprint
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn volume_eps(&self) -> f64 {
        self.volume_eps
    }

    pub fn num_vertices(&self) -> usize {
        self.coords.len() / self.ambient_dim
    }

    pub fn vertex(&self, i: usize) -> &[f64] {
        &self.coords[i * self.ambient_dim..(i + 1) * self.ambient_dim]
    }

    pub fn vertices(&self) -> impl Iterator<Item = &[f64]> {
        self.coords.chunks_exact(self.ambient_dim)
    }

    /// Highest simplex dimension present (0 for a bare point cloud).
    pub fn top_dim(&self) -> usize {
        let mut k = self.levels.len() - 1;
        while k > 0 && self.num_simplices(k) == 0 {
            k -= 1;
        }
        k
    }

    pub fn num_simplices(&self, k: usize) -> usize {
        match self.levels.get(k) {
            None => 0,
            Some(l) if k == 0 => l.verts.len(),
            Some(l) => l.verts.len() / (k + 1),
        }
    }

    pub fn contains(&self, id: SimplexId) -> bool {
        id.index < self.num_simplices(id.dim)
    }

    pub fn simplex_vertices(&self, k: usize, i: usize) -> &[usize] {
        &self.levels[k].verts[i * (k + 1)..(i + 1) * (k + 1)]
    }

    pub fn simplex_points(&self, k: usize, i: usize) -> Vec<&[f64]> {
        self.simplex_vertices(k, i).iter().map(|&v| self.vertex(v)).collect()
    }

    /// Faces of a k-simplex (k >= 1): entry `j` is the (k-1)-face omitting vertex `j`.
    pub fn faces(&self, k: usize, i: usize) -> &[usize] {
        &self.levels[k].faces[i * (k + 1)..(i + 1) * (k + 1)]
    }

    pub fn find_simplex(&self, verts: &[usize]) -> Option<SimplexId> {
        let k = verts.len().checked_sub(1)?;
        if k == 0 {
            return (verts[0] < self.num_vertices()).then(|| SimplexId::new(0, verts[0]));
        }
        let s = sorted(verts.to_vec());
        self.levels.get(k)?.lookup.get(&s).map(|i| SimplexId::new(k, i))
    }

    pub fn volume(&self, k: usize, i: usize) -> f64 {
        self.levels[k].volumes[i]
    }

    pub fn coface_count(&self, k: usize, i: usize) -> usize {
        self.levels[k].coface_count[i] as usize
    }

    pub fn is_maximal(&self, k: usize, i: usize) -> bool {
        self.coface_count(k, i) == 0
    }

    pub fn maximal_simplices(&self) -> Vec<SimplexId> {
        let mut out = Vec::new();
        for k in 0..self.levels.len() {
            for i in 0..self.num_simplices(k) {
                if self.is_maximal(k, i) {
                    out.push(SimplexId::new(k, i));
                }
            }
        }
        out
    }

    /// Longest edge; the characteristic mesh size used for tolerances.
    pub fn mesh_size(&self) -> f64 {
        (0..self.num_simplices(1)).map(|i| self.volume(1, i)).fold(0.0, f64::max)
    }

    pub fn barycenter(&self, k: usize, i: usize) -> Vec<f64> {
        geom::barycenter(&self.simplex_points(k, i))
    }

    /// Maximal simplices whose closure contains `p` within `eps`.
    pub fn locate(&self, p: &[f64], eps: f64) -> Vec<SimplexId> {
        self.maximal_simplices()
            .into_iter()
            .filter(|id| geom::point_in_simplex(&self.simplex_points(id.dim, id.index), p, eps))
            .collect()
    }

    /// Vertex index within `eps` of `p`, if any.
    pub fn find_vertex(&self, p: &[f64], eps: f64) -> Option<usize> {
        self.vertices().position(|v| geom::dist(v, p) <= eps)
    }
}

/// k-volume of a simplex by id.
pub fn simplex_volume(c: &EmbeddedComplex, s: SimplexId) -> Result<f64> {
    if !c.contains(s) {
        return input_err(format!("unknown simplex {s:?}"));
    }
    Ok(c.volume(s.dim, s.index))
}

/// Distance between two carrier points. Ambient mode is the chord; length-graph
/// mode is a shortest path in the subdivided-edge graph and never shorter
/// than the chord.
pub fn geodesic_distance(c: &EmbeddedComplex, mode: MetricMode, a: &[f64], b: &[f64]) -> Result<GeodesicDistance> {
    mode.validate()?;
    for (name, p) in [("a", a), ("b", b)] {
        if p.len() != c.ambient_dim() {
            return input_err(format!("point {name} has dimension {}, expected {}", p.len(), c.ambient_dim()));
        }
        if c.locate(p, DEFAULT_SNAP_EPS).is_empty() {
            return input_err(format!("point {name} = {p:?} is off the carrier"));
        }
    }
    match mode {
        MetricMode::AmbientEuclidean => Ok(GeodesicDistance::Finite(geom::dist(a, b))),
        MetricMode::LengthGraph { refinement } => LengthGraph::new(c, refinement).distance(a, b),
    }
}

/// Subdivided-edge graph for the length metric of a complex.
#[derive(Debug, Clone)]
pub struct LengthGraph<'a> {
    complex: &'a EmbeddedComplex,
    refinement: usize,
    graph: UnGraph<(), f64>,
}

impl<'a> LengthGraph<'a> {
    pub fn new(complex: &'a EmbeddedComplex, refinement: usize) -> Self {
        let nv = complex.num_vertices();
        let ne = complex.num_simplices(1);
        let mut graph = UnGraph::<(), f64>::with_capacity(nv + ne * refinement, 0);
        for _ in 0..nv + ne * refinement {
            graph.add_node(());
        }
        let mut lg = LengthGraph {
            complex,
            refinement,
            graph,
        };
        for id in complex.maximal_simplices() {
            if id.dim == 0 {
                continue;
            }
            let nodes = lg.simplex_nodes(id);
            lg.connect_all(&nodes);
        }
        lg
    }

    fn node_point(&self, node: usize) -> Vec<f64> {
        let nv = self.complex.num_vertices();
        if node < nv {
            return self.complex.vertex(node).to_vec();
        }
        let e = (node - nv) / self.refinement;
        let j = (node - nv) % self.refinement;
        let t = (j + 1) as f64 / (self.refinement + 1) as f64;
        let ev = self.complex.simplex_vertices(1, e);
        let (p, q) = (self.complex.vertex(ev[0]), self.complex.vertex(ev[1]));
        p.iter().zip(q).map(|(x, y)| x + t * (y - x)).collect()
    }

    fn simplex_nodes(&self, id: SimplexId) -> Vec<usize> {
        let nv = self.complex.num_vertices();
        let verts = self.complex.simplex_vertices(id.dim, id.index);
        let mut nodes: Vec<usize> = verts.to_vec();
        for a in 0..verts.len() {
            for b in a + 1..verts.len() {
                if let Some(e) = self.complex.find_simplex(&[verts[a], verts[b]]) {
                    nodes.extend((0..self.refinement).map(|j| nv + e.index * self.refinement + j));
                }
            }
        }
        nodes
    }

    fn connect_all(&mut self, nodes: &[usize]) {
        let pts: Vec<Vec<f64>> = nodes.iter().map(|&n| self.node_point(n)).collect();
        for i in 0..nodes.len() {
            for j in i + 1..nodes.len() {
                let w = geom::dist(&pts[i], &pts[j]);
                self.graph.add_edge(NodeIndex::new(nodes[i]), NodeIndex::new(nodes[j]), w);
            }
        }
    }

    /// Shortest-path distance between two vertices.
    pub fn vertex_distance(&self, a: usize, b: usize) -> GeodesicDistance {
        self.node_distance(&self.graph, NodeIndex::new(a), NodeIndex::new(b))
    }

    /// Shortest-path distances from vertex `a` to all vertices `targets`.
    pub fn vertex_distances_from(&self, a: usize, targets: &[usize]) -> Vec<GeodesicDistance> {
        let dist = petgraph::algo::dijkstra(&self.graph, NodeIndex::new(a), None, |e| *e.weight());
        targets
            .iter()
            .map(|&t| match dist.get(&NodeIndex::new(t)) {
                Some(&d) => GeodesicDistance::Finite(d),
                None => GeodesicDistance::Unreachable,
            })
            .collect()
    }

    fn node_distance(&self, g: &UnGraph<(), f64>, a: NodeIndex, b: NodeIndex) -> GeodesicDistance {
        if a == b {
            return GeodesicDistance::Finite(0.0);
        }
        let dist = petgraph::algo::dijkstra(g, a, Some(b), |e| *e.weight());
        match dist.get(&b) {
            Some(&d) => GeodesicDistance::Finite(d),
            None => GeodesicDistance::Unreachable,
        }
    }

    /// Distance between arbitrary carrier points; each is joined to every node
    /// of the maximal simplices containing it.
    pub fn distance(&self, a: &[f64], b: &[f64]) -> Result<GeodesicDistance> {
        let mut g = self.graph.clone();
        let mut ends = Vec::with_capacity(2);
        for p in [a, b] {
            let n = g.add_node(());
            let hosts = self.complex.locate(p, DEFAULT_SNAP_EPS);
            if hosts.is_empty() {
                return input_err(format!("point {p:?} is off the carrier"));
            }
            for id in hosts {
                for node in self.simplex_nodes(id) {
                    let w = geom::dist(p, &self.node_point(node));
                    g.add_edge(n, NodeIndex::new(node), w);
                }
            }
            ends.push(n);
        }
        let direct = geom::dist(a, b);
        let via = self.node_distance(&g, ends[0], ends[1]);
        // Two points in one simplex are joined by a straight segment.
        let shared = self
            .complex
            .locate(a, DEFAULT_SNAP_EPS)
            .iter()
            .any(|id| geom::point_in_simplex(&self.complex.simplex_points(id.dim, id.index), b, DEFAULT_SNAP_EPS));
        Ok(match (via, shared) {
            (_, true) => GeodesicDistance::Finite(direct),
            (v, false) => v,
        })
    }
}
