//! Krichever-Novikov bases on two-pointed Riemann surfaces, their residue
//! structure constants, the Heisenberg Fock module and the state-field map.

pub mod atlas;
pub mod distr;
pub mod fock;
pub mod numeric;
pub mod par;
pub mod tables;
pub mod vertex;

mod error;

pub use error::Error;
pub use numeric::{LaurentExpansion, Point, Scalar, ScalarMode};
