//! Integral currents as integer simplicial chains.
//!
//! A chain entry's multiplicity is signed relative to the sorted vertex order
//! of its simplex, so equal currents have identical entry maps.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use crate::error::{input_err, Error, Result};
use crate::geom;
use crate::mesh::EmbeddedComplex;

#[derive(Debug, Clone)]
pub struct SimplicialCurrent {
    complex: Arc<EmbeddedComplex>,
    dim: usize,
    entries: BTreeMap<usize, i64>,
}

impl PartialEq for SimplicialCurrent {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim && self.entries == other.entries && same_complex(&self.complex, &other.complex)
    }
}

pub fn same_complex(a: &Arc<EmbeddedComplex>, b: &Arc<EmbeddedComplex>) -> bool {
    Arc::ptr_eq(a, b) || **a == **b
}

#[derive(Debug, Clone, PartialEq)]
pub struct MassReport {
    pub total: f64,
    pub per_simplex: BTreeMap<usize, f64>,
}

impl SimplicialCurrent {
    pub fn zero(complex: Arc<EmbeddedComplex>, dim: usize) -> Self {
        SimplicialCurrent {
            complex,
            dim,
            entries: BTreeMap::new(),
        }
    }

    /// Builds a chain from `(simplex index, signed multiplicity)` pairs.
    /// Repeated indices accumulate; zero totals are dropped.
    pub fn from_entries(
        complex: Arc<EmbeddedComplex>,
        dim: usize,
        entries: impl IntoIterator<Item = (usize, i64)>,
    ) -> Result<Self> {
        let n = complex.num_simplices(dim);
        let mut map = BTreeMap::new();
        for (i, m) in entries {
            if i >= n {
                return input_err(format!("chain entry references {dim}-simplex {i}, but only {n} exist"));
            }
            *map.entry(i).or_insert(0) += m;
        }
        map.retain(|_, m| *m != 0);
        Ok(SimplicialCurrent {
            complex,
            dim,
            entries: map,
        })
    }

    /// The top-dimensional current `[[E]]` with standard orientation of `R^d`
    /// on the given d-simplices of a complex embedded in `R^d`.
    pub fn standard_top(complex: Arc<EmbeddedComplex>, ids: impl IntoIterator<Item = usize>, multiplicity: i64) -> Result<Self> {
        let d = complex.ambient_dim();
        if complex.top_dim() != d {
            return Err(Error::UnsupportedDimension(format!(
                "standard orientation needs {d}-simplices in R^{d}"
            )));
        }
        let entries: Vec<(usize, i64)> = ids
            .into_iter()
            .map(|i| {
                let s = geom::signed_volume(&complex.simplex_points(d, i));
                (i, if s > 0.0 { multiplicity } else { -multiplicity })
            })
            .collect();
        Self::from_entries(complex, d, entries)
    }

    /// `[[E]]` on every top simplex.
    pub fn standard_full(complex: Arc<EmbeddedComplex>) -> Result<Self> {
        let n = complex.num_simplices(complex.ambient_dim());
        Self::standard_top(complex, 0..n, 1)
    }

    pub fn complex(&self) -> &Arc<EmbeddedComplex> {
        &self.complex
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &BTreeMap<usize, i64> {
        &self.entries
    }

    pub fn multiplicity(&self, i: usize) -> i64 {
        self.entries.get(&i).copied().unwrap_or(0)
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn scale(&self, c: i64) -> Self {
        let mut out = self.clone();
        if c == 0 {
            out.entries.clear();
        } else {
            out.entries.values_mut().for_each(|m| *m *= c);
        }
        out
    }

    pub fn neg(&self) -> Self {
        self.scale(-1)
    }

    fn check_compatible(&self, other: &Self) -> Result<()> {
        if self.dim != other.dim {
            return input_err(format!("dimension mismatch: {} vs {}", self.dim, other.dim));
        }
        if !same_complex(&self.complex, &other.complex) {
            return input_err("chains live on different complexes");
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        let mut out = self.clone();
        for (&i, &m) in &other.entries {
            *out.entries.entry(i).or_insert(0) += m;
        }
        out.entries.retain(|_, m| *m != 0);
        Ok(out)
    }

    /// Vertices of carried simplices.
    pub fn carrier_vertices(&self) -> BTreeSet<usize> {
        let mut out = BTreeSet::new();
        for &i in self.entries.keys() {
            out.extend(self.complex.simplex_vertices(self.dim, i).iter().copied());
        }
        out
    }
}

/// `M(T) = sum |theta| vol_k`; the area factor is 1 in Euclidean ambient.
pub fn mass(t: &SimplicialCurrent) -> MassReport {
    let mut per_simplex = BTreeMap::new();
    let mut total = 0.0;
    for (&i, &m) in &t.entries {
        let c = m.unsigned_abs() as f64 * t.complex.volume(t.dim, i);
        total += c;
        per_simplex.insert(i, c);
    }
    MassReport { total, per_simplex }
}

pub fn boundary(t: &SimplicialCurrent) -> Result<SimplicialCurrent> {
    if t.dim == 0 {
        return Err(Error::UnsupportedDimension("boundary of a 0-current".into()));
    }
    let k = t.dim;
    let mut acc: BTreeMap<usize, i64> = BTreeMap::new();
    for (&i, &m) in &t.entries {
        for (j, &f) in t.complex.faces(k, i).iter().enumerate() {
            let sign = if j % 2 == 0 { 1 } else { -1 };
            *acc.entry(f).or_insert(0) += sign * m;
        }
    }
    acc.retain(|_, m| *m != 0);
    Ok(SimplicialCurrent {
        complex: t.complex.clone(),
        dim: k - 1,
        entries: acc,
    })
}

/// `T restricted to A`: keep only the entries whose simplex is in `ids`.
pub fn restrict(t: &SimplicialCurrent, ids: &BTreeSet<usize>) -> Result<SimplicialCurrent> {
    let n = t.complex.num_simplices(t.dim);
    if let Some(&bad) = ids.iter().find(|&&i| i >= n) {
        return input_err(format!("{bad} is not a {}-simplex id", t.dim));
    }
    Ok(SimplicialCurrent {
        complex: t.complex.clone(),
        dim: t.dim,
        entries: t.entries.iter().filter(|(i, _)| ids.contains(i)).map(|(&i, &m)| (i, m)).collect(),
    })
}

/// The carrier: simplices with nonzero multiplicity. Points on the relative
/// boundary of the carrier are measure-zero and not represented.
pub fn canonical_set(t: &SimplicialCurrent) -> BTreeSet<usize> {
    t.entries.keys().copied().collect()
}

pub fn current_sub(a: &SimplicialCurrent, b: &SimplicialCurrent) -> Result<SimplicialCurrent> {
    a.add(&b.neg())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square() -> Arc<EmbeddedComplex> {
        Arc::new(
            EmbeddedComplex::from_maximal(
                2,
                vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![1.0, 1.0], vec![0.0, 1.0]],
                vec![vec![0, 1, 2], vec![0, 2, 3]],
            )
            .unwrap(),
        )
    }

    #[test]
    fn mass_examples() {
        let c = square();
        let t = SimplicialCurrent::standard_full(c.clone()).unwrap();
        assert_eq!(mass(&t).total, 1.0);
        let t3 = SimplicialCurrent::from_entries(c, 2, [(0, 1), (1, 3)]).unwrap();
        let r = mass(&t3);
        assert_eq!(r.total, 2.0);
        assert_eq!(r.per_simplex[&1], 1.5);
    }

    #[test]
    fn boundary_examples() {
        let c = square();
        let tri = SimplicialCurrent::from_entries(c.clone(), 2, [(0, 1)]).unwrap();
        let b = boundary(&tri).unwrap();
        assert_eq!(b.len(), 3);
        assert!(b.entries().values().all(|m| m.abs() == 1));
        assert!(boundary(&b).unwrap().is_zero());

        let sq = SimplicialCurrent::standard_full(c.clone()).unwrap();
        let b = boundary(&sq).unwrap();
        assert_eq!(b.len(), 4);
        let diag = c.find_simplex(&[0, 2]).unwrap().index;
        assert_eq!(b.multiplicity(diag), 0);
        assert_eq!(mass(&b).total, 4.0);
        let pts = SimplicialCurrent::zero(c, 0);
        assert!(matches!(boundary(&pts), Err(Error::UnsupportedDimension(_))));
    }

    #[test]
    fn restrict_and_set() {
        let c = square();
        let t = SimplicialCurrent::standard_full(c.clone()).unwrap();
        assert_eq!(restrict(&t, &[0, 1].into()).unwrap(), t);
        assert!(restrict(&t, &BTreeSet::new()).unwrap().is_zero());
        assert_eq!(mass(&restrict(&t, &[0].into()).unwrap()).total, 0.5);
        assert!(restrict(&t, &[9].into()).is_err());
        assert_eq!(canonical_set(&t), [0, 1].into());
        assert!(canonical_set(&SimplicialCurrent::zero(c.clone(), 2)).is_empty());
        let partial = SimplicialCurrent::from_entries(c, 2, [(1, 2), (0, 0)]).unwrap();
        assert_eq!(canonical_set(&partial), [1].into());
    }

    #[test]
    fn subtraction() {
        let c = square();
        let t = SimplicialCurrent::standard_full(c.clone()).unwrap();
        assert!(current_sub(&t, &t).unwrap().is_zero());
        let a = SimplicialCurrent::from_entries(c.clone(), 2, [(0, 1)]).unwrap();
        let b = SimplicialCurrent::from_entries(c.clone(), 2, [(1, 2)]).unwrap();
        let d = current_sub(&a, &b).unwrap();
        assert_eq!(d.entries(), &BTreeMap::from([(0, 1), (1, -2)]));
        let other = Arc::new(
            EmbeddedComplex::from_maximal(2, vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]], vec![vec![0, 1, 2]]).unwrap(),
        );
        let e = SimplicialCurrent::standard_full(other).unwrap();
        assert!(current_sub(&a, &e).is_err());
    }
}
