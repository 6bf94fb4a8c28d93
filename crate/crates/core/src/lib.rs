//! Second-order theory of random marked closed sets.
//!
//! The crate is organised around the Gaussian threshold model, in which the
//! random set is the excursion set `{x : Z(x) >= t}` of a stationary, isotropic,
//! centred, unit-variance Gaussian random field `Z` and the marks are the field
//! values themselves.
//!
//! * [`gauss`] holds the scalar special functions and every closed-form or
//!   quadrature formula for the threshold model.
//! * [`series`] is truncated power-series arithmetic at configurable precision,
//!   used to check absolute monotonicity of the `t = 0` covariance transforms.
//! * [`definiteness`] contains numerical (counter)tests for positive
//!   definiteness and conditional negative definiteness.
//! * [`simulate`] generates discretised marked-set realisations.
//! * [`estimate`] turns realisations into empirical characteristics.

pub mod definiteness;
pub mod error;
pub mod estimate;
pub mod gauss;
pub mod quadrature;
pub mod series;
pub mod simulate;

pub use error::{Error, Result};
