//! Joint simulation of the asset and its fractional volatility, Monte Carlo
//! pricing of terminal payoffs, the time-changed Black–Scholes reference and
//! the experiment presets.

mod black_scholes;
mod model;
mod payoff;
mod simulate;

pub use black_scholes::{bs_reference, d1_d2, norm_cdf, norm_pdf};
pub use model::{
    build_stein_stein_vbar, model_presets, BaselineVol, MarketModel, Perturbation, Preset,
    PRESET_ALPHA, PRESET_BETA, PRESET_HORIZON, PRESET_NAMES, PRESET_X0,
};
pub use payoff::PayoffSpec;
pub use simulate::{price_mc, price_mc_control, price_mc_many, simulate_joint_paths, JointSimulation, SimDiagnostics};

use serde::{Deserialize, Serialize};

use crate::error::{ensure_domain, Result};
use crate::frac_processes::FouHistory;

/// Time-stepping scheme for the asset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// `ln X_{k+1} = ln X_k + (μ - v_k²/2)Δ + v_k ΔB_k` with left-point `v_k`.
    #[default]
    LogEuler,
}

#[derive(Debug, Clone, PartialEq)]
pub struct McConfig {
    pub n_paths: usize,
    pub n_steps: usize,
    pub seed: u64,
    pub scheme: Scheme,
    /// Pairs every path with the one driven by the negated normals.
    pub antithetic: bool,
    /// Uses `|v_k|` in the asset step.
    pub reflect_vol: bool,
    pub history: FouHistory,
}

impl Default for McConfig {
    fn default() -> Self {
        Self {
            n_paths: 100_000,
            n_steps: 256,
            seed: 0,
            scheme: Scheme::LogEuler,
            antithetic: true,
            reflect_vol: false,
            history: FouHistory::Stationary,
        }
    }
}

impl McConfig {
    pub fn validate(&self) -> Result<()> {
        ensure_domain(self.n_paths >= 2, "n_paths", self.n_paths as f64, "n_paths >= 2")?;
        ensure_domain(self.n_steps >= 1, "n_steps", self.n_steps as f64, "n_steps >= 1")?;
        if self.antithetic {
            ensure_domain(
                self.n_paths.is_multiple_of(2),
                "n_paths",
                self.n_paths as f64,
                "an even path count with antithetic pairing",
            )?;
        }
        Ok(())
    }
}

/// Monte Carlo price with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PricingEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub ci95: (f64, f64),
    /// Number of independent samples behind the estimate.
    pub n_effective: usize,
}

impl PricingEstimate {
    pub fn new(mean: f64, stderr: f64, n_effective: usize) -> Self {
        Self {
            mean,
            stderr,
            ci95: (mean - 1.96 * stderr, mean + 1.96 * stderr),
            n_effective,
        }
    }

    /// Pools two estimates built from independent samples.
    pub fn combine(&self, other: &Self) -> Self {
        let (n1, n2) = (self.n_effective as f64, other.n_effective as f64);
        let n = n1 + n2;
        let mean = (n1 * self.mean + n2 * other.mean) / n;
        let ss1 = self.stderr.powi(2) * n1 * (n1 - 1.0);
        let ss2 = other.stderr.powi(2) * n2 * (n2 - 1.0);
        let d = other.mean - self.mean;
        let var = (ss1 + ss2 + d * d * n1 * n2 / n) / (n - 1.0);
        Self::new(mean, (var / n).sqrt(), self.n_effective + other.n_effective)
    }

    /// Whether `value` lies within `k` standard errors of the mean.
    pub fn within(&self, value: f64, k: f64) -> bool {
        (self.mean - value).abs() <= k * self.stderr
    }
}
