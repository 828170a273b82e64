//! JSON experiment configuration. Every field is optional and unknown keys
//! are rejected.

use std::path::{Path, PathBuf};

use fracvol::approx_pricer::{ApproxConfig, SolverPath, StepThreeRoute};
use fracvol::frac_processes::{FouHistory, FouParams};
use fracvol::mc_engine::{build_stein_stein_vbar, model_presets, BaselineVol, McConfig, PayoffSpec, Preset};
use fracvol::pde_kit::{SpaceTimeGrid, DEFAULT_N_T, DEFAULT_N_Z, DEFAULT_Z_HALF_WIDTH};
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    #[default]
    Table2,
    Table3,
    Table5,
    GammaSweep,
    ValidateProcesses,
    PriceSingle,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

/// Model parameters that replace preset values when present.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelOverrides {
    pub mu: Option<f64>,
    pub rho: Option<f64>,
    pub gamma: Option<f64>,
    /// Long-run level; also resets `v0` to the same value.
    pub alpha: Option<f64>,
    /// Initial volatility of the Stein–Stein baseline.
    pub v0: Option<f64>,
    /// Mean-reversion rate, shared by the baseline and the fOU process.
    pub beta: Option<f64>,
    pub hurst: Option<f64>,
    pub x0: Option<f64>,
    pub horizon: Option<f64>,
}

impl ModelOverrides {
    /// Applies the set fields to `preset`, `other` taking precedence.
    pub fn merged(&self, other: &ModelOverrides) -> ModelOverrides {
        ModelOverrides {
            mu: other.mu.or(self.mu),
            rho: other.rho.or(self.rho),
            gamma: other.gamma.or(self.gamma),
            alpha: other.alpha.or(self.alpha),
            v0: other.v0.or(self.v0),
            beta: other.beta.or(self.beta),
            hurst: other.hurst.or(self.hurst),
            x0: other.x0.or(self.x0),
            horizon: other.horizon.or(self.horizon),
        }
    }

    pub fn apply(&self, mut p: Preset) -> Result<Preset> {
        let m = &mut p.model;
        if let Some(beta) = self.beta {
            p.beta = beta;
            m.fou = FouParams::new(beta, m.fou.hurst().value())?;
        }
        if let Some(h) = self.hurst {
            m.fou = FouParams::new(m.fou.rate(), h)?;
        }
        let (alpha, v0) = match &m.baseline {
            BaselineVol::Constant { level } => (*level, *level),
            BaselineVol::SteinStein { alpha, v0, .. } => (*alpha, *v0),
            BaselineVol::Tabulated { .. } => {
                return Err(HarnessError::Config("presets never use a tabulated baseline".into()))
            }
        };
        let alpha = self.alpha.unwrap_or(alpha);
        let v0 = self.v0.or(self.alpha).unwrap_or(v0);
        m.baseline = match m.baseline {
            BaselineVol::Constant { .. } => {
                if v0 != alpha {
                    return Err(HarnessError::Config(format!(
                        "preset {} has a constant baseline; v0 cannot differ from alpha",
                        p.name
                    )));
                }
                BaselineVol::Constant { level: alpha }
            }
            _ => build_stein_stein_vbar(p.beta, alpha, v0)?,
        };
        if let Some(mu) = self.mu {
            m.mu = mu;
        }
        if let Some(rho) = self.rho {
            m.rho = rho;
        }
        if let Some(gamma) = self.gamma {
            m.gamma = gamma;
        }
        if let Some(x0) = self.x0 {
            m.x0 = x0;
        }
        if let Some(h) = self.horizon {
            p = p.with_horizon(h)?;
        }
        p.model.validate(p.horizon)?;
        Ok(p)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum HistorySection {
    Stationary,
    Truncated { past_horizon: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct McSection {
    pub n_paths: usize,
    pub n_steps: usize,
    pub seed: u64,
    pub antithetic: bool,
    pub reflect_vol: bool,
    pub history: HistorySection,
}

impl Default for McSection {
    fn default() -> Self {
        let d = McConfig::default();
        Self {
            n_paths: d.n_paths,
            n_steps: d.n_steps,
            seed: d.seed,
            antithetic: d.antithetic,
            reflect_vol: d.reflect_vol,
            history: HistorySection::Stationary,
        }
    }
}

impl McSection {
    /// Engine settings with the given per-cell seed.
    pub fn to_config(&self, seed: u64) -> McConfig {
        McConfig {
            n_paths: self.n_paths,
            n_steps: self.n_steps,
            seed,
            antithetic: self.antithetic,
            reflect_vol: self.reflect_vol,
            history: match self.history {
                HistorySection::Stationary => FouHistory::Stationary,
                HistorySection::Truncated { past_horizon } => FouHistory::Truncated { past_horizon },
            },
            ..McConfig::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ApproxSection {
    pub n_z: usize,
    pub n_t: usize,
    pub half_width: f64,
    pub solver_path: SolverPath,
    pub step_three: StepThreeRoute,
    pub literal_step2: bool,
    pub phi_value: f64,
    pub singular_tol: f64,
}

impl Default for ApproxSection {
    fn default() -> Self {
        let d = ApproxConfig::default();
        Self {
            n_z: DEFAULT_N_Z,
            n_t: DEFAULT_N_T,
            half_width: DEFAULT_Z_HALF_WIDTH,
            solver_path: d.solver_path,
            step_three: d.step_three,
            literal_step2: d.literal_step2,
            phi_value: d.phi_value,
            singular_tol: d.singular_tol,
        }
    }
}

impl ApproxSection {
    pub fn to_config(&self, x0: f64, horizon: f64) -> Result<ApproxConfig> {
        Ok(ApproxConfig {
            grid: Some(SpaceTimeGrid::centered(x0, self.half_width, self.n_z, horizon, self.n_t)?),
            solver_path: self.solver_path,
            step_three: self.step_three,
            literal_step2: self.literal_step2,
            phi_value: self.phi_value,
            singular_tol: self.singular_tol,
        })
    }
}

/// Settings of the `γ`-scaling study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    pub preset: String,
    /// Model settings of the study; the global overrides apply on top.
    pub model: ModelOverrides,
    /// Strictly decreasing, non-negative.
    pub gammas: Vec<f64>,
    pub strike: f64,
    /// First path count tried at each `γ`.
    pub initial_paths: usize,
    /// Path count beyond which a `γ` is declared inconclusive.
    pub max_paths: usize,
    /// Required ratio `|gap| / stderr`.
    pub gap_to_stderr: f64,
    pub min_slope: f64,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            preset: "FOU_H07".into(),
            model: ModelOverrides {
                mu: Some(0.05),
                rho: Some(-0.5),
                alpha: Some(1.0),
                v0: Some(1.0),
                beta: Some(0.5),
                hurst: Some(0.7),
                x0: Some(50.0),
                horizon: Some(1.0),
                ..ModelOverrides::default()
            },
            gammas: vec![0.2, 0.1, 0.05],
            strike: 50.0,
            initial_paths: 1 << 18,
            max_paths: 1 << 24,
            gap_to_stderr: 5.0,
            min_slope: 1.6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PayoffKind {
    #[default]
    Call,
    Put,
}

/// Single-point pricing settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PriceSection {
    pub preset: String,
    pub strike: f64,
    pub payoff: PayoffKind,
}

impl Default for PriceSection {
    fn default() -> Self {
        Self {
            preset: "BS".into(),
            strike: 50.0,
            payoff: PayoffKind::Call,
        }
    }
}

impl PriceSection {
    pub fn payoff(&self) -> Result<PayoffSpec> {
        Ok(match self.payoff {
            PayoffKind::Call => PayoffSpec::call(self.strike)?,
            PayoffKind::Put => PayoffSpec::put(self.strike)?,
        })
    }
}

/// One JSON document describing a run.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub overrides: ModelOverrides,
    pub mc: McSection,
    pub approx: ApproxSection,
    pub sweep: SweepSection,
    pub price: PriceSection,
    /// CSV/JSON destination; standard output when absent.
    pub output_path: Option<PathBuf>,
    pub format: Format,
    /// Worker threads; all cores when absent.
    pub jobs: Option<usize>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| HarnessError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        self.mc.to_config(self.mc.seed).validate()?;
        if self.jobs == Some(0) {
            return Err(HarnessError::Config("jobs must be at least 1".into()));
        }
        let g = &self.sweep.gammas;
        if g.is_empty() || g.windows(2).any(|w| w[1] >= w[0]) || g.iter().any(|&x| !(x >= 0.0)) {
            return Err(HarnessError::Config(format!(
                "sweep.gammas must be non-negative and strictly decreasing, got {g:?}"
            )));
        }
        if self.sweep.initial_paths < 2 || self.sweep.max_paths < self.sweep.initial_paths {
            return Err(HarnessError::Config(
                "sweep.max_paths must be at least sweep.initial_paths >= 2".into(),
            ));
        }
        model_presets(&self.price.preset)?;
        model_presets(&self.sweep.preset)?;
        Ok(())
    }
}

/// A named preset with the global overrides applied.
pub fn preset_with(name: &str, overrides: &ModelOverrides) -> Result<Preset> {
    overrides.apply(model_presets(name)?)
}
