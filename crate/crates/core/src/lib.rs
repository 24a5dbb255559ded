//! Exact asymptotic risk characterizations for ridge, minimum-norm and
//! least-squares regression under correlated Gaussian designs, together with
//! a Monte Carlo harness that verifies them on finite instances.
//!
//! The typical flow is:
//!
//! 1. describe covariance square roots ([`covariance::CovSpec`]) and reduce
//!    them to spectral profiles ([`covariance::spectral_profile`],
//!    [`covariance::NoiseProfile`]);
//! 2. evaluate the closed forms ([`theory`]), which internally solve a
//!    scalar fixed-point equation ([`fixed_point`]);
//! 3. optionally cross-check by simulation ([`simulate`]) or run a whole
//!    parameter sweep with CSV/SVG output ([`sweep`], [`plot`]).
//!
//! See the `examples/` directory for one runnable program per capability.

pub mod covariance;
pub mod error;
pub mod fixed_point;
pub mod plot;
pub mod simulate;
pub mod sweep;
pub mod theory;

pub use error::{Error, Result};
