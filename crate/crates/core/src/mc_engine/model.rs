use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{ensure_domain, Error, Result};
use crate::frac_processes::FouParams;

/// Deterministic part `v̄(t)` of the volatility.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BaselineVol {
    Constant { level: f64 },
    /// `v̄(t) = e^{-βt} v₀ + α(1 - e^{-βt})`.
    SteinStein { beta: f64, alpha: f64, v0: f64 },
    /// Piecewise linear through `(times[k], values[k])`, flat outside.
    Tabulated { times: Vec<f64>, values: Vec<f64> },
}

impl BaselineVol {
    pub fn value(&self, t: f64) -> f64 {
        match self {
            Self::Constant { level } => *level,
            Self::SteinStein { beta, alpha, v0 } => {
                let e = (-beta * t).exp();
                e * v0 + alpha * (1.0 - e)
            }
            Self::Tabulated { times, values } => {
                let k = segment(times, t);
                match k {
                    None if t <= times[0] => values[0],
                    None => *values.last().expect("nonempty"),
                    Some(k) => {
                        let w = (t - times[k]) / (times[k + 1] - times[k]);
                        values[k] + w * (values[k + 1] - values[k])
                    }
                }
            }
        }
    }

    /// `v̄'(t)`; one-sided slopes at table knots come from the segment to the right.
    pub fn derivative(&self, t: f64) -> f64 {
        match self {
            Self::Constant { .. } => 0.0,
            Self::SteinStein { beta, alpha, v0 } => -beta * (v0 - alpha) * (-beta * t).exp(),
            Self::Tabulated { times, values } => match segment(times, t) {
                None => 0.0,
                Some(k) => (values[k + 1] - values[k]) / (times[k + 1] - times[k]),
            },
        }
    }

    /// `∫_t^T v̄(s)² ds`, in closed form for every variant.
    pub fn integrated_variance(&self, t: f64, horizon: f64) -> f64 {
        if horizon <= t {
            return 0.0;
        }
        match self {
            Self::Constant { level } => level * level * (horizon - t),
            Self::SteinStein { beta, alpha, v0 } => {
                let c = v0 - alpha;
                // ∫ (α + c e^{-βs})² ds
                let e1 = ((-beta * t).exp() - (-beta * horizon).exp()) / beta;
                let e2 = ((-2.0 * beta * t).exp() - (-2.0 * beta * horizon).exp()) / (2.0 * beta);
                alpha * alpha * (horizon - t) + 2.0 * alpha * c * e1 + c * c * e2
            }
            Self::Tabulated { times, .. } => {
                let mut knots = vec![t];
                knots.extend(times.iter().copied().filter(|&s| s > t && s < horizon));
                knots.push(horizon);
                knots
                    .windows(2)
                    .map(|w| {
                        let (a, b) = (self.value(w[0]), self.value(w[1]));
                        (w[1] - w[0]) * (a * a + a * b + b * b) / 3.0
                    })
                    .sum()
            }
        }
    }

    pub fn is_constant(&self) -> bool {
        match self {
            Self::Constant { .. } => true,
            Self::SteinStein { alpha, v0, .. } => alpha == v0,
            Self::Tabulated { values, .. } => values.windows(2).all(|w| w[0] == w[1]),
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            Self::Constant { level } => ensure_domain(level.is_finite(), "vbar", *level, "finite"),
            Self::SteinStein { beta, alpha, v0 } => {
                ensure_domain(*beta > 0.0, "beta", *beta, "beta > 0")?;
                ensure_domain(alpha.is_finite(), "alpha", *alpha, "finite")?;
                ensure_domain(v0.is_finite(), "v0", *v0, "finite")
            }
            Self::Tabulated { times, values } => {
                ensure_domain(
                    times.len() >= 2 && times.len() == values.len(),
                    "vbar table length",
                    times.len() as f64,
                    "at least 2 knots, one value per knot",
                )?;
                ensure_domain(
                    times.windows(2).all(|w| w[1] > w[0]),
                    "vbar table times",
                    times[0],
                    "strictly increasing",
                )?;
                ensure_domain(
                    values.iter().all(|v| v.is_finite()),
                    "vbar table values",
                    f64::NAN,
                    "finite",
                )
            }
        }
    }
}

fn segment(times: &[f64], t: f64) -> Option<usize> {
    if t < times[0] || t >= *times.last().expect("nonempty") {
        return None;
    }
    Some(times.partition_point(|&s| s <= t) - 1)
}

/// Baseline volatility of the Stein–Stein model started at `v0`.
pub fn build_stein_stein_vbar(beta: f64, alpha: f64, v0: f64) -> Result<BaselineVol> {
    let v = BaselineVol::SteinStein { beta, alpha, v0 };
    v.validate()?;
    Ok(v)
}

/// Map `F` applied to `γZ` in `v = v̄ + F(γZ)`.
#[derive(Clone, Default)]
pub enum Perturbation {
    #[default]
    Identity,
    Custom(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl Perturbation {
    #[inline]
    pub fn apply(&self, y: f64) -> f64 {
        match self {
            Self::Identity => y,
            Self::Custom(f) => f(y),
        }
    }

    pub fn is_identity(&self) -> bool {
        matches!(self, Self::Identity)
    }
}

impl fmt::Debug for Perturbation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Identity => f.write_str("Identity"),
            Self::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

/// Asset `dX = μX dt + vX dB` with `v = v̄(t) + F(γZ)`, `Z` a stationary fOU
/// process whose driver `B′` has correlation `ρ` with `B`.
#[derive(Debug, Clone)]
pub struct MarketModel {
    pub mu: f64,
    pub baseline: BaselineVol,
    pub perturbation: Perturbation,
    pub gamma: f64,
    pub rho: f64,
    pub fou: FouParams,
    pub x0: f64,
}

/// Knots used to check that `v̄` stays away from zero.
const VBAR_CHECK_POINTS: usize = 257;

impl MarketModel {
    /// Stein–Stein model `dv = β(α - v)dt + γ dB^H`: `F` is the identity and
    /// the fOU rate equals `β`.
    #[allow(clippy::too_many_arguments)]
    pub fn stein_stein(
        mu: f64,
        beta: f64,
        alpha: f64,
        v0: f64,
        gamma: f64,
        rho: f64,
        hurst: f64,
        x0: f64,
    ) -> Result<Self> {
        let m = Self {
            mu,
            baseline: build_stein_stein_vbar(beta, alpha, v0)?,
            perturbation: Perturbation::Identity,
            gamma,
            rho,
            fou: FouParams::new(beta, hurst)?,
            x0,
        };
        m.validate_params()?;
        Ok(m)
    }

    fn validate_params(&self) -> Result<()> {
        ensure_domain(self.mu.is_finite(), "mu", self.mu, "finite")?;
        ensure_domain(self.gamma >= 0.0 && self.gamma.is_finite(), "gamma", self.gamma, "gamma >= 0")?;
        ensure_domain(self.rho.abs() <= 1.0, "rho", self.rho, "|rho| <= 1")?;
        ensure_domain(self.x0 > 0.0 && self.x0.is_finite(), "x0", self.x0, "x0 > 0")?;
        // H = 1/2 is the Markovian OU case of the tables.
        let h = self.fou.hurst().value();
        if h < 0.5 {
            return Err(Error::LongMemoryRequired(h));
        }
        self.baseline.validate()
    }

    /// Checks parameter domains and that `v̄` stays away from zero on `[0, horizon]`.
    pub fn validate(&self, horizon: f64) -> Result<()> {
        ensure_domain(horizon > 0.0 && horizon.is_finite(), "horizon", horizon, "horizon > 0")?;
        self.validate_params()?;
        for k in 0..VBAR_CHECK_POINTS {
            let t = horizon * k as f64 / (VBAR_CHECK_POINTS - 1) as f64;
            let v = self.baseline.value(t);
            if !(v.abs() > 1e-12) {
                return Err(Error::Domain {
                    name: "vbar",
                    value: v,
                    expected: "bounded away from zero on [0, T]",
                });
            }
        }
        Ok(())
    }

    /// `v̄(t) + F(γ z)`.
    #[inline]
    pub fn vol(&self, t: f64, z: f64) -> f64 {
        self.baseline.value(t) + self.perturbation.apply(self.gamma * z)
    }
}

/// Names accepted by [`model_presets`].
pub const PRESET_NAMES: [&str; 7] = ["BS", "OU", "FOU_H07", "FOU_H09", "FOU_I", "FOU_II", "FOU_III"];

/// A tabulated experiment model together with its horizon and label.
#[derive(Debug, Clone)]
pub struct Preset {
    pub name: &'static str,
    pub label: &'static str,
    pub model: MarketModel,
    pub horizon: f64,
    /// Mean-reversion rate `β` shared by the volatility dynamics.
    pub beta: f64,
}

impl Preset {
    /// Sets the long-run level `α`; the start `v₀` follows it, so `v̄ ≡ α`.
    pub fn with_alpha(mut self, alpha: f64) -> Result<Self> {
        self.model.baseline = match self.model.baseline {
            BaselineVol::Constant { .. } => BaselineVol::Constant { level: alpha },
            BaselineVol::SteinStein { beta, .. } => build_stein_stein_vbar(beta, alpha, alpha)?,
            b @ BaselineVol::Tabulated { .. } => b,
        };
        Ok(self)
    }

    pub fn with_gamma(mut self, gamma: f64) -> Result<Self> {
        ensure_domain(gamma >= 0.0 && gamma.is_finite(), "gamma", gamma, "gamma >= 0")?;
        self.model.gamma = gamma;
        Ok(self)
    }

    pub fn with_horizon(mut self, horizon: f64) -> Result<Self> {
        ensure_domain(horizon > 0.0 && horizon.is_finite(), "horizon", horizon, "horizon > 0")?;
        self.horizon = horizon;
        Ok(self)
    }
}

pub const PRESET_HORIZON: f64 = 1.0;
pub const PRESET_X0: f64 = 50.0;
pub const PRESET_BETA: f64 = 0.5;
/// Long-run level used when a caller does not override `α`.
pub const PRESET_ALPHA: f64 = 1.0;

/// Experiment models by name: `T = 1`, `X₀ = 50`, `β = 0.5`, `μ = 0`,
/// `ρ = 0`, `v₀ = α = 1` unless overridden.
pub fn model_presets(name: &str) -> Result<Preset> {
    let (label, hurst, gamma, stochastic) = match name {
        "BS" => ("B-S", 0.5, 0.0, false),
        "OU" => ("OU", 0.5, 10.0, true),
        "FOU_H07" => ("FOU H=0.7", 0.7, 10.0, true),
        "FOU_H09" => ("FOU H=0.9", 0.9, 10.0, true),
        "FOU_I" => ("FOU-I", 0.9, 10.0, true),
        "FOU_II" => ("FOU-II", 0.9, 0.1, true),
        "FOU_III" => ("FOU-III", 0.9, 0.001, true),
        _ => {
            return Err(Error::UnknownPreset {
                name: name.to_string(),
                valid: PRESET_NAMES.join(", "),
            })
        }
    };
    let name = PRESET_NAMES.iter().find(|n| **n == name).expect("matched above");
    let baseline = if stochastic {
        build_stein_stein_vbar(PRESET_BETA, PRESET_ALPHA, PRESET_ALPHA)?
    } else {
        BaselineVol::Constant { level: PRESET_ALPHA }
    };
    Ok(Preset {
        name,
        label,
        model: MarketModel {
            mu: 0.0,
            baseline,
            perturbation: Perturbation::Identity,
            gamma,
            rho: 0.0,
            fou: FouParams::new(PRESET_BETA, hurst)?,
            x0: PRESET_X0,
        },
        horizon: PRESET_HORIZON,
        beta: PRESET_BETA,
    })
}
