//! Cointegration and error-correction analysis for quarterly macroeconomic panels.
//!
//! The crate covers the full workflow from raw data to structural inference:
//!
//! - [`dataset`]: loading, validating, and transforming aligned quarterly panels
//! - [`unitroot`]: augmented Dickey-Fuller tests with response-surface p-values
//! - [`varbase`]: unrestricted VAR estimation and lag-order selection
//! - [`johansen`]: trace cointegration test and reduced-rank VECM estimation
//! - [`diagnostics`]: stability, residual autocorrelation, weak exogeneity,
//!   and short-run Granger causality
//! - [`structural`]: Cholesky-orthogonalized impulse responses, forecast-error
//!   variance decompositions, and residual-bootstrap confidence bands
//! - [`synthetic`]: seeded simulation of VAR/VECM processes, used as the
//!   brute-force oracle for the estimators and tests above
//!
//! All estimation routines are pure value-in/value-out functions over immutable
//! inputs; anything stochastic takes an explicit seed.

pub mod dataset;
pub mod diagnostics;
mod dist;
mod error;
pub mod johansen;
mod linalg;
pub mod rng;
pub mod structural;
pub mod synthetic;
pub mod unitroot;
pub mod varbase;

pub use error::Error;

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;
