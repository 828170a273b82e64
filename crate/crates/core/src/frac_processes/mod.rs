//! Fractional Brownian motion and the fractional Ornstein–Uhlenbeck process:
//! analytic covariance formulas, the moving-average kernel, its running
//! integral, and exact samplers on uniform grids.

mod analytic;
mod fbm;
mod fou;

pub use analytic::{
    fbm_cov, fou_cov, fou_kernel, fou_stationary_var, phi_forecast, sigma_h_sq, theta,
    theta_of_remaining, KernelTable, PastIncrement,
};
pub use fbm::{fbm_cov_matrix, psd_cholesky, sample_fbm, FbmMethod, FbmSampler};
pub use fou::{sample_fou, FouHistory, FouSampler};

use ndarray::Array2;

use crate::error::{ensure_domain, Error, Result};

/// Hurst exponent of a fractional Brownian motion, strictly inside (0, 1).
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct HurstExponent(f64);

impl HurstExponent {
    pub fn new(value: f64) -> Result<Self> {
        ensure_domain(value > 0.0 && value < 1.0, "hurst", value, "0 < H < 1")?;
        Ok(Self(value))
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// Fails with [`Error::LongMemoryRequired`] unless `H > 1/2`.
    pub fn require_long_memory(self) -> Result<()> {
        if self.0 > 0.5 {
            Ok(())
        } else {
            Err(Error::LongMemoryRequired(self.0))
        }
    }
}

/// Mean-reversion rate and Hurst exponent of the volatility driver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FouParams {
    rate: f64,
    hurst: HurstExponent,
}

impl FouParams {
    pub fn new(rate: f64, hurst: f64) -> Result<Self> {
        ensure_domain(rate > 0.0 && rate.is_finite(), "rate", rate, "rate > 0")?;
        Ok(Self {
            rate,
            hurst: HurstExponent::new(hurst)?,
        })
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn hurst(&self) -> HurstExponent {
        self.hurst
    }

    /// `H - 1/2`, the exponent of the kernel's power-law part.
    pub(crate) fn kernel_power(&self) -> f64 {
        self.hurst.value() - 0.5
    }
}

/// Uniform time grid `start + k * step`, `k = 0..count`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    start: f64,
    step: f64,
    count: usize,
}

impl TimeGrid {
    pub fn new(start: f64, step: f64, count: usize) -> Result<Self> {
        ensure_domain(step > 0.0 && step.is_finite(), "step", step, "step > 0")?;
        ensure_domain(count >= 1, "count", count as f64, "count >= 1")?;
        ensure_domain(start.is_finite(), "start", start, "finite")?;
        Ok(Self { start, step, count })
    }

    /// `count` points spanning `[start, end]` inclusive.
    pub fn spanning(start: f64, end: f64, count: usize) -> Result<Self> {
        ensure_domain(count >= 2, "count", count as f64, "count >= 2")?;
        ensure_domain(end > start, "end", end, "end > start")?;
        Self::new(start, (end - start) / (count - 1) as f64, count)
    }

    pub fn start(&self) -> f64 {
        self.start
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn point(&self, k: usize) -> f64 {
        self.start + k as f64 * self.step
    }

    pub fn end(&self) -> f64 {
        self.point(self.count - 1)
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.count).map(|k| self.point(k)).collect()
    }
}

/// Sampled Gaussian paths on a time grid.
///
/// `values` is `paths × grid points`. `driver_increments` holds the
/// standard Brownian increments (`paths × (grid points - 1)`) that produced
/// the paths when the sampler is driven by a Brownian motion, and is `None`
/// for spectral samplers that have no such driver.
#[derive(Debug, Clone)]
pub struct GaussianPathBatch {
    pub grid: TimeGrid,
    pub values: Array2<f64>,
    pub driver_increments: Option<Array2<f64>>,
}

impl GaussianPathBatch {
    pub fn n_paths(&self) -> usize {
        self.values.nrows()
    }
}
