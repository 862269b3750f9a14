//! Simulation toolkit for the Cox–Ingersoll–Ross model driven by fractional
//! Brownian motion with Hurst index `H > 1/2`.
//!
//! The rate equation `dr = κ(θ − r)dt + σ√r dB` is solved through its
//! square-root transform `X = √r`, which has additive noise and the drift
//! `f(x) = κθ/(2x) − κx/2`. A drift-implicit Euler step on `X` has a closed
//! form positive root, so every simulated rate is strictly positive.
//!
//! Modules:
//!
//! * [`fbm`]: exact fBm samplers (Cholesky and circulant embedding), the fBm
//!   covariance and the singular kernel `φ(τ, u)`.
//! * [`model`]: model parameters, drift and its derivatives, and the
//!   inverse-moment condition checkers.
//! * [`scheme`]: the backward Euler step, path simulation and interpolation.
//! * [`malliavin`]: Malliavin derivatives of the numerical and exact solutions.
//! * [`experiments`]: matched-path Monte Carlo convergence studies and
//!   inverse-moment estimation.
//! * [`cli`]: the `fcir` command-line front end.
//!
//! The runnable programs under `examples/` walk through each capability.

pub mod cli;
pub mod error;
pub mod experiments;
pub mod fbm;
pub mod malliavin;
pub mod model;
mod quadrature;
pub mod scheme;
pub mod stats;

pub use error::{Error, Result};
pub use fbm::{FbmPath, GridSpec, HurstParameter};
pub use model::CirParams;
pub use scheme::SolutionPath;

/// Formats a float with 17 significant digits, which round-trips exactly.
pub(crate) fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}
