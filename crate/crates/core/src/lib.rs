//! Monte Carlo laboratory for spin fields on uniform spanning forests of Z^d.

pub mod bilap;
pub mod error;
pub mod estimators;
pub mod forest;
pub mod graph;
pub mod green;
pub mod harness;
pub mod intersection;
pub mod lattice;
pub mod oracle;
pub mod parallel;
pub mod rng;
pub mod spin;
pub mod walk;

pub use error::{Error, Result};
