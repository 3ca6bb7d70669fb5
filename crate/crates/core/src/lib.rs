//! Exact PPT entanglement cost, catalytic dilution certificates and explicit
//! PPT dilution maps.
//!
//! The crate is organized bottom-up:
//!
//! - [`operator`]: dense complex operators with an A:B factor structure.
//! - [`states`]: named states (maximally entangled, isotropic, broadcasts, Gibbs).
//! - [`measures`]: logarithmic negativity, binegativity, max-relative entropy,
//!   Schmidt rank and work cost.
//! - [`broadcast`]: n-copy broadcast checks and projection onto the two-copy
//!   broadcast set.
//! - [`catalysis`]: the swap-based catalytic protocol and advantage certificates.
//! - [`synthesis`]: Choi-operator feasibility for PPT dilution maps.
//! - [`interchange`]: the JSON document format for operators and Choi operators.

pub mod broadcast;
pub mod catalysis;
pub mod error;
pub mod interchange;
pub mod measures;
pub mod operator;
pub mod random;
pub mod states;
pub mod synthesis;

pub use error::{Error, Result};
pub use operator::{DensityOperator, FactorShape, LabeledOperator, Spectrum};
