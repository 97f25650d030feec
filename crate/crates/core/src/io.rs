//! The JSON current file: a mesh, named chains on it, named maps out of it,
//! and an optional target mesh with its own chains.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::currents::SimplicialCurrent;
use crate::error::{Error, Result};
use crate::experiments::Instance;
use crate::mesh::EmbeddedComplex;
use crate::pa_maps::PiecewiseAffineMap;

pub const FORMAT_VERSION: &str = "1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshRecord {
    pub ambient_dim: usize,
    pub vertices: Vec<Vec<f64>>,
    /// All k-simplices for `k >= 1`, keyed by `k`, in index order. Chain
    /// entries refer to positions in these lists.
    #[serde(default)]
    pub simplices: BTreeMap<usize, Vec<Vec<usize>>>,
    /// Alternative to `simplices`: the complex is the closure of these.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub maximal: Option<Vec<Vec<usize>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainRecord {
    pub dim: usize,
    pub entries: Vec<(usize, i64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapRecord {
    pub target_dim: usize,
    pub vertex_images: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetRecord {
    pub mesh: MeshRecord,
    #[serde(default)]
    pub chains: BTreeMap<String, ChainRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurrentFile {
    pub version: String,
    pub mesh: MeshRecord,
    #[serde(default)]
    pub chains: BTreeMap<String, ChainRecord>,
    #[serde(default)]
    pub maps: BTreeMap<String, MapRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<TargetRecord>,
}

impl MeshRecord {
    pub fn from_complex(c: &EmbeddedComplex) -> Self {
        let simplices = (1..=c.top_dim())
            .filter(|&k| c.num_simplices(k) > 0)
            .map(|k| (k, (0..c.num_simplices(k)).map(|i| c.simplex_vertices(k, i).to_vec()).collect()))
            .collect();
        MeshRecord {
            ambient_dim: c.ambient_dim(),
            vertices: c.vertices().map(|v| v.to_vec()).collect(),
            simplices,
            maximal: None,
        }
    }

    pub fn to_complex(&self) -> Result<EmbeddedComplex> {
        let wrap = |e: Error| Error::Format(format!("mesh: {e}"));
        match &self.maximal {
            Some(_) if !self.simplices.is_empty() => Err(Error::Format("mesh: give either `simplices` or `maximal`, not both".into())),
            Some(m) => EmbeddedComplex::from_maximal(self.ambient_dim, self.vertices.clone(), m.clone()).map_err(wrap),
            None => {
                let top = self.simplices.keys().next_back().copied().unwrap_or(0);
                let mut by_dim = vec![Vec::new(); top + 1];
                for (&k, list) in &self.simplices {
                    if k == 0 {
                        return Err(Error::Format("mesh: `simplices` starts at dimension 1; vertices are implied".into()));
                    }
                    by_dim[k] = list.clone();
                }
                EmbeddedComplex::from_simplices_by_dim(self.ambient_dim, self.vertices.clone(), by_dim).map_err(wrap)
            }
        }
    }
}

impl ChainRecord {
    pub fn from_current(t: &SimplicialCurrent) -> Self {
        ChainRecord {
            dim: t.dim(),
            entries: t.entries().iter().map(|(&i, &m)| (i, m)).collect(),
        }
    }

    pub fn to_current(&self, complex: &Arc<EmbeddedComplex>, name: &str) -> Result<SimplicialCurrent> {
        let mut seen = std::collections::BTreeSet::new();
        for &(i, _) in &self.entries {
            if !seen.insert(i) {
                return Err(Error::Format(format!("chain `{name}`: simplex {i} listed twice")));
            }
        }
        SimplicialCurrent::from_entries(complex.clone(), self.dim, self.entries.iter().copied())
            .map_err(|e| Error::Format(format!("chain `{name}`: {e}")))
    }
}

impl MapRecord {
    pub fn from_map(psi: &PiecewiseAffineMap) -> Self {
        MapRecord {
            target_dim: psi.target_dim(),
            vertex_images: psi.vertex_images(),
        }
    }

    pub fn to_map(&self, source: &Arc<EmbeddedComplex>, name: &str) -> Result<PiecewiseAffineMap> {
        PiecewiseAffineMap::new(source.clone(), self.target_dim, self.vertex_images.clone()).map_err(|e| Error::Format(format!("map `{name}`: {e}")))
    }
}

/// A parsed file with its complexes built.
#[derive(Debug, Clone)]
pub struct Loaded {
    pub complex: Arc<EmbeddedComplex>,
    pub chains: BTreeMap<String, SimplicialCurrent>,
    pub maps: BTreeMap<String, PiecewiseAffineMap>,
    pub target: Option<(Arc<EmbeddedComplex>, BTreeMap<String, SimplicialCurrent>)>,
}

impl Loaded {
    pub fn chain(&self, name: &str) -> Result<&SimplicialCurrent> {
        self.chains.get(name).ok_or_else(|| Error::Input(format!("no chain named `{name}` (have {:?})", self.chains.keys().collect::<Vec<_>>())))
    }

    pub fn map(&self, name: &str) -> Result<&PiecewiseAffineMap> {
        self.maps.get(name).ok_or_else(|| Error::Input(format!("no map named `{name}` (have {:?})", self.maps.keys().collect::<Vec<_>>())))
    }
}

impl CurrentFile {
    pub fn new(complex: &EmbeddedComplex) -> Self {
        CurrentFile {
            version: FORMAT_VERSION.to_string(),
            mesh: MeshRecord::from_complex(complex),
            chains: BTreeMap::new(),
            maps: BTreeMap::new(),
            target: None,
        }
    }

    /// `T`, `psi`, and a target section holding `ball`.
    pub fn from_instance(inst: &Instance) -> Self {
        let mut f = CurrentFile::new(inst.t.complex());
        f.chains.insert("T".into(), ChainRecord::from_current(&inst.t));
        f.maps.insert("psi".into(), MapRecord::from_map(&inst.psi));
        f.target = Some(TargetRecord {
            mesh: MeshRecord::from_complex(&inst.target),
            chains: BTreeMap::from([("ball".to_string(), ChainRecord::from_current(&inst.ball))]),
        });
        f
    }

    /// Parses JSON; syntax and schema errors carry line and column.
    pub fn parse(text: &str) -> Result<Self> {
        let f: CurrentFile = serde_json::from_str(text).map_err(|e| Error::Format(format!("line {}, column {}: {e}", e.line(), e.column())))?;
        if f.version != FORMAT_VERSION {
            return Err(Error::Format(format!("field `version`: unsupported version {:?}, expected {FORMAT_VERSION:?}", f.version)));
        }
        Ok(f)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("current files serialize");
        s.push('\n');
        s
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| Error::Format(format!("{}: {e}", path.display())))
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json())?;
        Ok(())
    }

    pub fn load(&self) -> Result<Loaded> {
        let complex = Arc::new(self.mesh.to_complex()?);
        let chains = self.chains.iter().map(|(n, c)| Ok((n.clone(), c.to_current(&complex, n)?))).collect::<Result<_>>()?;
        let maps = self.maps.iter().map(|(n, m)| Ok((n.clone(), m.to_map(&complex, n)?))).collect::<Result<_>>()?;
        let target = match &self.target {
            None => None,
            Some(t) => {
                let tc = Arc::new(t.mesh.to_complex().map_err(|e| Error::Format(format!("target {e}")))?);
                let ch = t.chains.iter().map(|(n, c)| Ok((n.clone(), c.to_current(&tc, n)?))).collect::<Result<_>>()?;
                Some((tc, ch))
            }
        };
        Ok(Loaded { complex, chains, maps, target })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::{generate, InstanceSpec};

    #[test]
    fn instance_round_trip_is_exact() {
        let inst = generate(&InstanceSpec::Annulus { eps: 0.3, n_segments: 32 }).unwrap();
        let f = CurrentFile::from_instance(&inst);
        let text = f.to_json();
        let g = CurrentFile::parse(&text).unwrap();
        assert_eq!(f, g);
        assert_eq!(g.to_json(), text);
        let l = g.load().unwrap();
        assert_eq!(*l.complex, **inst.t.complex());
        assert_eq!(l.chain("T").unwrap().entries(), inst.t.entries());
        let (tc, ch) = l.target.unwrap();
        assert_eq!(*tc, *inst.target);
        assert_eq!(ch["ball"].entries(), inst.ball.entries());
    }

    #[test]
    fn diagnostics_name_the_problem() {
        let e = CurrentFile::parse("{\"version\": \"1\",\n \"mesh\": 3}").unwrap_err().to_string();
        assert!(e.contains("line 2"), "{e}");
        let e = CurrentFile::parse(r#"{"version":"9","mesh":{"ambient_dim":1,"vertices":[]}}"#).unwrap_err().to_string();
        assert!(e.contains("version"), "{e}");
        let text = r#"{"version":"1","mesh":{"ambient_dim":1,"vertices":[[0],[1]],"maximal":[[0,1]]},
            "chains":{"bad":{"dim":1,"entries":[[5,1]]}}}"#;
        let e = CurrentFile::parse(text).unwrap().load().unwrap_err().to_string();
        assert!(e.contains("chain `bad`"), "{e}");
    }
}
