//! Integral currents on simplicial complexes embedded in Euclidean space.
//!
//! Currents are integer simplicial chains on an [`mesh::EmbeddedComplex`].
//! The crate computes mass, boundary, pushforward along piecewise-affine
//! maps, slices, 1-current decompositions and flat norms, and checks the
//! hypotheses and conclusion of the rigidity theorem for mass-preserving
//! 1-Lipschitz maps onto the unit ball.

pub mod cli;
pub mod currents;
pub mod curves;
pub mod error;
pub mod experiments;
pub mod flatnorm;
pub mod geom;
pub mod io;
pub mod lp;
pub mod mesh;
pub mod pa_maps;
pub mod rigidity;
pub mod slicing;
pub mod spatial;

pub use currents::{boundary, mass, SimplicialCurrent};
pub use error::{Error, Result};
pub use mesh::{EmbeddedComplex, MetricMode};
pub use pa_maps::PiecewiseAffineMap;
