//! Discrete laboratory for Muckenhoupt weights, BMO and exp-L norms, singular
//! and fractional operators, and their commutators.
//!
//! Everything lives on a uniform grid of the torus `[0,1)^n`, `n ∈ {1, 2}`.
//! Suprema are taken over a declared finite cube family, so every reported
//! constant is a family-relative lower bound for its continuum counterpart.

pub mod commutators;
pub mod error;
pub mod grid;
pub mod io;
pub mod numeric;
pub mod operators;
pub mod oscillation;
pub mod verify;
pub mod weights;

pub use error::{LabError, Result};

/// Crate version embedded in every report.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
