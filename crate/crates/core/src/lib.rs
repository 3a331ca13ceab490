//! Numerical laboratory for energy gaps of perturbed quadratic Dirichlet
//! functionals on structured P1 meshes.
//!
//! The numerical core is generic over [`Real`] (`f32` or `f64`); the `*64`
//! aliases below are what the CLI and shipped configurations use.

pub mod error;
pub mod energy;
pub mod fem;
pub mod gap;
pub mod mesh;
pub mod region;
pub mod runner;
pub mod scenarios;
pub mod scalar;
pub mod shape;

pub use error::{Error, Result};
pub use scalar::Real;

pub type Mesh64 = mesh::Mesh<f64>;
pub type Mesh32 = mesh::Mesh<f32>;
pub type Region64 = region::Region<f64>;
pub type Region32 = region::Region<f32>;
pub type Coefficient64 = fem::CoefficientField<f64>;
pub type Source64 = fem::SourceTerm<f64>;
pub type Field64 = fem::DiscreteField<f64>;
