//! One option priced by Monte Carlo and by the approximation.

use std::time::Instant;

use fracvol::approx_pricer::{assemble_price, build_correctors, residual_report, ResidualReport, ResidualWindow};
use fracvol::frac_processes::TimeGrid;
use fracvol::mc_engine::{bs_reference, price_mc, PricingEstimate};
use fracvol::pde_kit::{duhamel_heat_solve, paper_literal_step2, SpaceTimeGrid, Surface};
use fracvol::rng::derive_seed;
use serde::Serialize;

use crate::config::{preset_with, Experiment, ExperimentConfig, PayoffKind};
use crate::error::Result;
use crate::tables::{experiment_id, RunMeta};

/// Heat-step outputs for a unit source at `z = 0`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HeatStepRow {
    pub zeta: f64,
    pub duhamel: f64,
    pub triangular: f64,
}

/// Result of the triangular-integral heat step, for comparison only.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LiteralComparison {
    /// Price assembled from correctors built with the triangular integral.
    pub price: Option<f64>,
    pub error: Option<String>,
    pub comparison_only: bool,
    /// With a unit source the heat equation gives `ζ`; the triangular
    /// integral gives `ζ²/2`.
    pub unit_source: Vec<HeatStepRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SingleReport {
    pub preset: String,
    pub payoff: PayoffKind,
    pub strike: f64,
    pub horizon: f64,
    pub gamma: f64,
    pub mc: PricingEstimate,
    pub approx: f64,
    /// Monte Carlo minus approximation.
    pub gap: f64,
    /// Black–Scholes value when `γ = 0`.
    pub closed_form: Option<f64>,
    pub residuals: ResidualReport,
    pub literal: Option<LiteralComparison>,
    pub meta: RunMeta,
}

/// Both heat-step formulas applied to a unit source on `ζ ∈ [0, 2]`.
pub fn unit_source_comparison() -> Result<Vec<HeatStepRow>> {
    let grid = SpaceTimeGrid::new(-3.0, 3.0, 61, TimeGrid::spanning(0.0, 2.0, 9)?)?;
    let source = Surface::from_fn(grid, |_, _| 1.0);
    let duhamel = duhamel_heat_solve(&source, 2.0)?;
    let literal = paper_literal_step2(&source, 2.0)?;
    (0..grid.n_t())
        .map(|k| {
            let zeta = grid.t(k);
            Ok(HeatStepRow {
                zeta,
                duhamel: duhamel.evaluate(zeta, 0.0)?,
                triangular: literal.evaluate(zeta, 0.0)?,
            })
        })
        .collect()
}

pub fn price_single(cfg: &ExperimentConfig) -> Result<SingleReport> {
    let start = Instant::now();
    let p = preset_with(&cfg.price.preset, &cfg.overrides)?;
    let (m, horizon) = (&p.model, p.horizon);
    let payoff = cfg.price.payoff()?;
    let seed = derive_seed(cfg.mc.seed, &[experiment_id(Experiment::PriceSingle)]);
    let mc = price_mc(m, &payoff, horizon, &cfg.mc.to_config(seed))?;

    let mut approx_section = cfg.approx.clone();
    approx_section.literal_step2 = false;
    let approx_cfg = approx_section.to_config(m.x0, horizon)?;
    let correctors = build_correctors(m, &payoff, horizon, &approx_cfg)?;
    let approx = assemble_price(&correctors, m, 0.0, m.x0, approx_cfg.phi_value)?;
    let residuals = residual_report(&correctors, ResidualWindow::default());

    let literal = if cfg.approx.literal_step2 {
        let literal_cfg = fracvol::approx_pricer::ApproxConfig {
            literal_step2: true,
            ..approx_cfg.clone()
        };
        let built = build_correctors(m, &payoff, horizon, &literal_cfg)
            .and_then(|c| Ok((assemble_price(&c, m, 0.0, m.x0, literal_cfg.phi_value)?, c.comparison_only)));
        let (price, error, comparison_only) = match built {
            Ok((v, flag)) => (Some(v), None, flag),
            Err(e) => (None, Some(e.to_string()), true),
        };
        Some(LiteralComparison {
            price,
            error,
            comparison_only,
            unit_source: unit_source_comparison()?,
        })
    } else {
        None
    };

    let closed_form = match (m.gamma == 0.0, cfg.price.payoff) {
        (true, kind) => {
            let call = bs_reference(m.x0, cfg.price.strike, 0.0, horizon, m.mu, &m.baseline, false)?;
            Some(match kind {
                PayoffKind::Call => call,
                PayoffKind::Put => call - m.x0 * (m.mu * horizon).exp() + cfg.price.strike,
            })
        }
        (false, _) => None,
    };

    Ok(SingleReport {
        preset: p.name.to_string(),
        payoff: cfg.price.payoff,
        strike: cfg.price.strike,
        horizon,
        gamma: m.gamma,
        mc,
        approx,
        gap: mc.mean - approx,
        closed_form,
        residuals,
        literal,
        meta: RunMeta {
            experiment: Experiment::PriceSingle,
            master_seed: cfg.mc.seed,
            n_paths: cfg.mc.n_paths,
            n_steps: cfg.mc.n_steps,
            threads: rayon::current_num_threads(),
            wall_time_s: start.elapsed().as_secs_f64(),
        },
    })
}
