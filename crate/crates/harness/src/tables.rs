//! Table reproduction: every row prices all strikes on one set of paths.

use std::time::Instant;

use fracvol::mc_engine::{bs_reference, price_mc_many, PayoffSpec, PricingEstimate};
use fracvol::rng::derive_seed;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{Experiment, ExperimentConfig};
use crate::error::{HarnessError, Result};
use crate::reference;

/// Seed coordinate of each experiment.
pub(crate) fn experiment_id(e: Experiment) -> u64 {
    match e {
        Experiment::Table2 => 2,
        Experiment::Table3 => 3,
        Experiment::Table5 => 5,
        Experiment::GammaSweep => 10,
        Experiment::ValidateProcesses => 11,
        Experiment::PriceSingle => 12,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Cell {
    pub model: String,
    pub label: String,
    pub alpha: f64,
    #[serde(rename = "T")]
    pub horizon: f64,
    #[serde(rename = "K")]
    pub strike: f64,
    /// NaN when the row's simulation failed.
    pub price: f64,
    pub stderr: f64,
    pub n_paths: usize,
    pub n_steps: usize,
    pub seed: u64,
    pub paper_ref: Option<f64>,
    /// Black–Scholes value where the model has one.
    pub closed_form: Option<f64>,
    /// The published value disagrees with the closed form.
    pub discrepancy: bool,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunMeta {
    pub experiment: Experiment,
    pub master_seed: u64,
    pub n_paths: usize,
    pub n_steps: usize,
    pub threads: usize,
    pub wall_time_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TableResult {
    pub cells: Vec<Cell>,
    pub checks: Vec<Check>,
    pub meta: RunMeta,
}

impl TableResult {
    pub fn failed_cells(&self) -> usize {
        self.cells.iter().filter(|c| c.error.is_some()).count()
    }

    pub fn checks_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    /// Cells of one model, grouped by row in table order.
    pub fn rows(&self, model: &str) -> Vec<Vec<&Cell>> {
        let mut out: Vec<Vec<&Cell>> = Vec::new();
        for c in self.cells.iter().filter(|c| c.model == model) {
            match out.last_mut() {
                Some(row) if row[0].alpha == c.alpha && row[0].horizon == c.horizon => row.push(c),
                _ => out.push(vec![c]),
            }
        }
        out
    }
}

/// Published values agree with the closed form up to their two-decimal
/// rounding plus a 0.1% allowance.
fn is_discrepant(published: f64, closed: f64) -> bool {
    (published - closed).abs() > 0.005 + 1e-3 * closed.abs()
}

struct RowJob {
    model: &'static str,
    model_index: usize,
    row_index: usize,
    /// `α` for tables 2 and 5, `T` for table 3.
    axis: f64,
}

fn layout(e: Experiment) -> Result<(&'static [&'static str], &'static [f64])> {
    Ok(match e {
        Experiment::Table2 => (&reference::TABLE2_MODELS, &reference::ALPHAS),
        Experiment::Table3 => (&reference::TABLE3_MODELS, &reference::HORIZONS),
        Experiment::Table5 => (&reference::TABLE5_MODELS, &reference::ALPHAS),
        other => return Err(HarnessError::Config(format!("{other:?} is not a table experiment"))),
    })
}

fn reference(e: Experiment, model: usize, row: usize, col: usize) -> f64 {
    match e {
        Experiment::Table2 => reference::TABLE2[model][row][col],
        Experiment::Table3 => reference::TABLE3[model][row][col],
        _ => reference::TABLE5[model][row][col],
    }
}

fn run_row(cfg: &ExperimentConfig, job: &RowJob) -> Vec<Cell> {
    let e = cfg.experiment;
    // Rows with the same axis value share their random numbers across models.
    let seed = derive_seed(cfg.mc.seed, &[experiment_id(e), job.row_index as u64]);
    let mc = cfg.mc.to_config(seed);
    let priced = (|| -> Result<_> {
        let mut p = fracvol::mc_engine::model_presets(job.model)?;
        if e == Experiment::Table3 {
            p = p.with_gamma(reference::TABLE3_GAMMA)?;
        }
        p = cfg.overrides.apply(p)?;
        p = match e {
            Experiment::Table3 => p.with_horizon(job.axis)?,
            _ => p.with_alpha(job.axis)?,
        };
        let payoffs: Vec<PayoffSpec> = reference::STRIKES
            .iter()
            .map(|&k| PayoffSpec::call(k))
            .collect::<fracvol::Result<_>>()?;
        let est = price_mc_many(&p.model, &payoffs, p.horizon, &mc)?;
        Ok((p, est))
    })();
    let (preset, estimates, error) = match priced {
        Ok((p, est)) => (Some(p), est, None),
        Err(err) => {
            log::error!("{} row {}: {err}", job.model, job.axis);
            let nan = PricingEstimate::new(f64::NAN, f64::NAN, 0);
            (None, vec![nan; reference::STRIKES.len()], Some(err.to_string()))
        }
    };
    let (alpha, horizon, label) = match &preset {
        Some(p) => (p.model.baseline.value(p.horizon), p.horizon, p.label.to_string()),
        None if e == Experiment::Table3 => (f64::NAN, job.axis, job.model.to_string()),
        None => (job.axis, f64::NAN, job.model.to_string()),
    };
    reference::STRIKES
        .iter()
        .enumerate()
        .map(|(col, &k)| {
            let closed_form = preset.as_ref().and_then(|p| {
                let m = &p.model;
                (m.gamma == 0.0)
                    .then(|| bs_reference(m.x0, k, 0.0, p.horizon, m.mu, &m.baseline, false).ok())
                    .flatten()
            });
            let paper_ref = reference(e, job.model_index, job.row_index, col);
            Cell {
                model: job.model.to_string(),
                label: label.clone(),
                alpha,
                horizon,
                strike: k,
                price: estimates[col].mean,
                stderr: estimates[col].stderr,
                n_paths: mc.n_paths,
                n_steps: mc.n_steps,
                seed,
                paper_ref: Some(paper_ref),
                closed_form,
                discrepancy: closed_form.is_some_and(|c| is_discrepant(paper_ref, c)),
                error: error.clone(),
            }
        })
        .collect()
}

fn combined(a: &Cell, b: &Cell) -> f64 {
    (a.stderr.powi(2) + b.stderr.powi(2)).sqrt()
}

fn monotone_check(result: &TableResult, models: &[&str]) -> Check {
    let mut worst = f64::NEG_INFINITY;
    let mut failures = Vec::new();
    for m in models {
        for row in result.rows(m) {
            for w in row.windows(2) {
                let z = (w[1].price - w[0].price) / combined(w[0], w[1]).max(f64::MIN_POSITIVE);
                worst = worst.max(z);
                if !(w[1].price - w[0].price <= 3.0 * combined(w[0], w[1])) {
                    failures.push(format!("{} α={} T={} K={}", m, w[1].alpha, w[1].horizon, w[1].strike));
                }
            }
        }
    }
    Check {
        name: "nonincreasing_in_strike".into(),
        passed: failures.is_empty(),
        detail: if failures.is_empty() {
            format!("largest increase {worst:.3} combined stderr (limit 3)")
        } else {
            format!("increase beyond 3 combined stderr at {}", failures.join(", "))
        },
    }
}

fn near_identical_check(result: &TableResult, a: &str, b: &str) -> Check {
    let (ra, rb) = (result.rows(a), result.rows(b));
    let mut worst: f64 = 0.0;
    let mut failures = Vec::new();
    for (row_a, row_b) in ra.iter().zip(&rb) {
        for (x, y) in row_a.iter().zip(row_b) {
            let ratio = (x.price - y.price).abs() / (1.96 * combined(x, y));
            worst = worst.max(ratio);
            if !(ratio <= 1.0) {
                failures.push(format!("α={} K={}", x.alpha, x.strike));
            }
        }
    }
    Check {
        name: format!("{a}_matches_{b}"),
        passed: failures.is_empty() && !ra.is_empty() && ra.len() == rb.len(),
        detail: if failures.is_empty() {
            format!("largest |difference| is {worst:.3} of the combined 95% half-width")
        } else {
            format!("outside the combined 95% interval at {}", failures.join(", "))
        },
    }
}

fn spread_check(result: &TableResult, model: &str) -> Check {
    let spreads: Vec<(f64, f64)> = result
        .rows(model)
        .iter()
        .map(|row| (row[0].horizon, row[0].price - row[row.len() - 1].price))
        .collect();
    let passed = spreads.len() >= 2 && spreads.windows(2).all(|w| w[1].1 < w[0].1);
    Check {
        name: format!("{model}_strike_spread_shrinks_with_T"),
        passed,
        detail: spreads
            .iter()
            .map(|(t, s)| format!("T={t}: {s:.4}"))
            .collect::<Vec<_>>()
            .join(", "),
    }
}

/// Prices every cell of the configured table and runs its qualitative checks.
pub fn run_table(cfg: &ExperimentConfig) -> Result<TableResult> {
    let start = Instant::now();
    let e = cfg.experiment;
    let (models, axis) = layout(e)?;
    let jobs: Vec<RowJob> = models
        .iter()
        .enumerate()
        .flat_map(|(mi, &model)| {
            axis.iter().enumerate().map(move |(ri, &a)| RowJob {
                model,
                model_index: mi,
                row_index: ri,
                axis: a,
            })
        })
        .collect();
    let cells: Vec<Cell> = jobs.par_iter().flat_map_iter(|j| run_row(cfg, j)).collect();
    let mut result = TableResult {
        cells,
        checks: Vec::new(),
        meta: RunMeta {
            experiment: e,
            master_seed: cfg.mc.seed,
            n_paths: cfg.mc.n_paths,
            n_steps: cfg.mc.n_steps,
            threads: rayon::current_num_threads(),
            wall_time_s: 0.0,
        },
    };
    let mut checks = vec![monotone_check(&result, models)];
    match e {
        Experiment::Table5 => checks.push(near_identical_check(&result, "FOU_II", "FOU_III")),
        Experiment::Table3 => checks.push(spread_check(&result, "OU")),
        _ => {}
    }
    result.checks = checks;
    result.meta.wall_time_s = start.elapsed().as_secs_f64();
    Ok(result)
}
