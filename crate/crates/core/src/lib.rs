//! Distribution of the almost-sure growth limit `W = lim Z_n / m^n` of a
//! supercritical Galton-Watson process.
//!
//! The pipeline:
//!
//! 1. [`poincare`] solves the functional equation `phi(mz) = P(phi(z))`
//!    with `phi(0) = 1`, `phi'(0) = -1` for the Taylor coefficients of the
//!    Laplace-Stieltjes transform of `W`, by forward substitution,
//!    fixed-point iteration, or Newton's method.
//! 2. [`reconstruct`] converts coefficients to moments and fits the
//!    density of `W` as an atom at zero plus a moment-matched expansion in
//!    generalized Laguerre polynomials with exponential damping.
//! 3. [`simulate`] runs a seeded, reproducible Monte-Carlo simulation of
//!    the process, used to estimate the exponential tail rate `beta` and
//!    to validate the fit.
//! 4. [`applications`] derives establishment-time densities, prediction
//!    intervals, and exceedance probabilities from the fitted model.
//!
//! Offspring laws are polynomial or linear-fractional probability
//! generating functions ([`gwmodel::Pgf`]); [`series`] provides the
//! truncated power-series arithmetic the solvers are built on and
//! [`numerics`] the special functions and least-squares kernels used by
//! the reconstruction.

pub mod applications;
pub mod error;
pub mod gwmodel;
pub mod numerics;
pub mod poincare;
pub mod reconstruct;
pub mod series;
pub mod simulate;

pub use error::{Error, Result};
pub use gwmodel::{GwInvariants, Pgf};
pub use poincare::{Method, SolveReport, SolverConfig};
pub use reconstruct::{DensityModel, MomentVector};
pub use series::TruncatedSeries;
pub use simulate::{SimConfig, SimOutput};
