//! Pricing toolkit for derivatives under fractional stochastic volatility.
//!
//! * [`frac_processes`]: fBm / fOU covariance formulas, kernel, exact samplers.
//! * [`mc_engine`]: correlated asset/volatility Monte Carlo and closed-form references.
//! * [`pde_kit`]: the operator `𝓛_v̄`, backward Crank–Nicolson and heat-kernel solvers.
//! * [`approx_pricer`]: corrector surfaces and the first-order approximate price.

pub mod approx_pricer;
pub mod error;
pub mod frac_processes;
pub mod mc_engine;
pub mod pde_kit;
pub mod quad;
pub mod rng;

pub use error::{Error, Result};
