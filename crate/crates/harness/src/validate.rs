//! Checks of the fractional-process layer: closed-form identities and
//! sample moments against the analytic covariances.

use std::time::Instant;

use fracvol::frac_processes::{
    fbm_cov, fou_cov, fou_kernel, fou_stationary_var, sample_fbm, sample_fou, sigma_h_sq, theta, FouHistory,
    FouParams, GaussianPathBatch, HurstExponent, TimeGrid,
};
use fracvol::rng::derive_seed;
use fracvol::Error;
use serde::Serialize;

use crate::config::{Experiment, ExperimentConfig};
use crate::error::Result;
use crate::tables::{experiment_id, Check, RunMeta};

/// Paths per sampled process.
pub const VALIDATION_PATHS: usize = 200_000;
pub const FBM_HURSTS: [f64; 3] = [0.6, 0.7, 0.9];
/// Rate and Hurst exponent of the sampled fOU process.
pub const FOU_RATE: f64 = 0.5;
pub const FOU_HURST: f64 = 0.7;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub checks: Vec<Check>,
    /// Diagnostics without a pass criterion.
    pub info: Vec<String>,
    pub meta: RunMeta,
}

impl ValidationReport {
    pub fn checks_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

fn check(name: impl Into<String>, passed: bool, detail: String) -> Check {
    Check {
        name: name.into(),
        passed,
        detail,
    }
}

/// Mean and standard error of one number per path.
fn mean_se(samples: impl Iterator<Item = f64>) -> (f64, f64) {
    let (mut n, mut mean, mut m2) = (0.0, 0.0, 0.0);
    for x in samples {
        n += 1.0;
        let d = x - mean;
        mean += d / n;
        m2 += d * (x - mean);
    }
    (mean, (m2 / (n - 1.0) / n).sqrt())
}

fn identity_checks() -> Result<Vec<Check>> {
    let half = HurstExponent::new(0.5)?;
    let sigma = sigma_h_sq(half);
    let p = FouParams::new(FOU_RATE, 0.5)?;
    let mut kernel_err: f64 = 0.0;
    for k in 1..=50 {
        let t = 0.1 * k as f64;
        kernel_err = kernel_err.max((fou_kernel(t, &p)? - (-FOU_RATE * t).exp()).abs());
    }
    let th = theta(0.0, 1.0, &p)?;
    let th_exact = (1.0 - (-FOU_RATE).exp()) / FOU_RATE;
    Ok(vec![
        check("sigma_h_at_half_is_one", sigma == 1.0, format!("σ²_H(1/2) = {sigma}")),
        check(
            "kernel_at_half_is_exponential",
            kernel_err <= 1e-12,
            format!("max error {kernel_err:.2e} for t = 0.1..5 (limit 1e-12)"),
        ),
        check(
            "theta_at_half",
            (th - th_exact).abs() <= 1e-10,
            format!("θ = {th:.12}, expected {th_exact:.12} (limit 1e-10)"),
        ),
    ])
}

/// Largest z-score over the covariance entries of `batch` against `cov`.
fn worst_cov_z(batch: &GaussianPathBatch, cov: impl Fn(f64, f64) -> f64) -> f64 {
    let v = &batch.values;
    let times = batch.grid.points();
    let mut worst: f64 = 0.0;
    for i in 1..times.len() {
        for j in i..times.len() {
            let (m, se) = mean_se(v.rows().into_iter().map(|r| r[i] * r[j]));
            worst = worst.max((m - cov(times[i], times[j])).abs() / se);
        }
    }
    worst
}

fn fbm_checks(master: u64) -> Result<Vec<Check>> {
    let grid = TimeGrid::spanning(0.0, 1.0, 16)?;
    FBM_HURSTS
        .iter()
        .enumerate()
        .map(|(idx, &h)| {
            let hurst = HurstExponent::new(h)?;
            let seed = derive_seed(master, &[experiment_id(Experiment::ValidateProcesses), 1, idx as u64]);
            let batch = sample_fbm(hurst, grid, VALIDATION_PATHS, seed)?;
            let z = worst_cov_z(&batch, |s, t| fbm_cov(s, t, hurst));
            Ok(check(
                format!("fbm_covariance_h{h}"),
                z <= 4.0,
                format!("largest entry deviation {z:.2} stderr (limit 4)"),
            ))
        })
        .collect()
}

fn fou_checks(master: u64, info: &mut Vec<String>) -> Result<Vec<Check>> {
    let p = FouParams::new(FOU_RATE, FOU_HURST)?;
    let grid = TimeGrid::new(0.0, 1.0, 11)?;
    let target_var = fou_stationary_var(&p);
    let target_lag = fou_cov(1.0, &p)?;
    let seed = |k: u64| derive_seed(master, &[experiment_id(Experiment::ValidateProcesses), 2, k]);
    let moments = |b: &GaussianPathBatch| {
        let n = b.values.ncols();
        let var = mean_se(b.values.rows().into_iter().map(|r| r.iter().map(|x| x * x).sum::<f64>() / n as f64));
        let lag = mean_se(
            b.values
                .rows()
                .into_iter()
                .map(|r| (1..n).map(|i| r[i] * r[i - 1]).sum::<f64>() / (n - 1) as f64),
        );
        (var, lag)
    };
    let stationary = sample_fou(p, grid, FouHistory::Stationary, VALIDATION_PATHS, seed(0))?;
    let ((var, _), (lag, lag_se)) = moments(&stationary);
    let truncated = sample_fou(
        p,
        grid,
        FouHistory::Truncated { past_horizon: 40.0 },
        VALIDATION_PATHS,
        seed(1),
    )?;
    let ((tvar, _), _) = moments(&truncated);
    info.push(format!(
        "fOU with 40 units of history: variance {tvar:.5} vs stationary {target_var:.5} ({:+.2}%)",
        100.0 * (tvar / target_var - 1.0)
    ));
    let rel = var / target_var - 1.0;
    Ok(vec![
        check(
            "fou_stationary_variance",
            rel.abs() <= 0.02,
            format!("{var:.5} vs {target_var:.5}, relative error {:.3}% (limit 2%)", 100.0 * rel),
        ),
        check(
            "fou_lag_one_covariance",
            (lag - target_lag).abs() <= 4.0 * lag_se,
            format!(
                "{lag:.5} vs {target_lag:.5}, {:.2} stderr (limit 4)",
                (lag - target_lag).abs() / lag_se
            ),
        ),
    ])
}

fn short_memory_check() -> Check {
    let r = HurstExponent::new(0.25).and_then(|h| h.require_long_memory());
    check(
        "short_memory_rejected",
        matches!(r, Err(Error::LongMemoryRequired(_))),
        format!("H = 0.25 gives {r:?}"),
    )
}

pub fn run_validation(cfg: &ExperimentConfig) -> Result<ValidationReport> {
    let start = Instant::now();
    let master = cfg.mc.seed;
    let mut info = Vec::new();
    let mut checks = identity_checks()?;
    checks.extend(fbm_checks(master)?);
    checks.extend(fou_checks(master, &mut info)?);
    checks.push(short_memory_check());
    Ok(ValidationReport {
        checks,
        info,
        meta: RunMeta {
            experiment: Experiment::ValidateProcesses,
            master_seed: master,
            n_paths: VALIDATION_PATHS,
            n_steps: 0,
            threads: rayon::current_num_threads(),
            wall_time_s: start.elapsed().as_secs_f64(),
        },
    })
}
