use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use super::{bs_reference, norm_cdf, BaselineVol, MarketModel, McConfig, PayoffSpec, PricingEstimate};
use crate::error::{ensure_domain, Error, Result};
use crate::frac_processes::{FouSampler, TimeGrid};
use crate::rng::{block_rng, blocks};

/// Terminal values and summary statistics from [`simulate_joint_paths`].
#[derive(Debug, Clone)]
pub struct JointSimulation {
    /// `X_T` per path, in path order (antithetic partners adjacent).
    pub terminal: Vec<f64>,
    pub diagnostics: SimDiagnostics,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimDiagnostics {
    pub n_paths: usize,
    pub mean_log_terminal: f64,
    pub var_log_terminal: f64,
    /// Share of `(path, step)` pairs where the volatility was negative
    /// before any reflection.
    pub negative_vol_fraction: f64,
    pub warnings: Vec<String>,
}

struct PathEngine<'a> {
    model: &'a MarketModel,
    sampler: FouSampler,
    base_vol: Vec<f64>,
    n_steps: usize,
    dt: f64,
    perp: f64,
    reflect: bool,
}

/// Driver paths for one block, one column per independent draw (antithetic
/// partners share a column and differ by sign).
struct Draw {
    /// fOU values (`count × m`); empty when `γ = 0`.
    z: DMatrix<f64>,
    /// Volatility-driver increments (`n × m`).
    db: DMatrix<f64>,
    /// Standard normals of the independent asset noise (`n × m`).
    perp: DMatrix<f64>,
}

impl<'a> PathEngine<'a> {
    fn new(model: &'a MarketModel, horizon: f64, cfg: &McConfig) -> Result<Self> {
        model.validate(horizon)?;
        cfg.validate()?;
        let grid = TimeGrid::spanning(0.0, horizon, cfg.n_steps + 1)?;
        let sampler = FouSampler::new(model.fou, grid, cfg.history)?;
        let base_vol = (0..cfg.n_steps).map(|k| model.baseline.value(grid.point(k))).collect();
        Ok(Self {
            model,
            sampler,
            base_vol,
            n_steps: cfg.n_steps,
            dt: grid.step(),
            perp: (1.0 - model.rho * model.rho).max(0.0).sqrt(),
            reflect: cfg.reflect_vol,
        })
    }

    /// Standard normals consumed per draw.
    fn dim(&self) -> usize {
        self.sampler.normals_per_path() + self.n_steps
    }

    /// Maps a `dim × m` matrix of normals to driver paths.
    fn paths_from(&self, normals: &DMatrix<f64>) -> Draw {
        let n = self.n_steps;
        let split = self.sampler.normals_per_path();
        let (z, db) = if self.model.gamma != 0.0 {
            self.sampler.fill_columns(normals.rows(0, split))
        } else {
            // Same driver increments as the sampler would produce; Z is not needed.
            (DMatrix::zeros(0, normals.ncols()), normals.rows(split - n, n) * self.dt.sqrt())
        };
        Draw {
            z,
            db,
            perp: normals.rows(split, n).into_owned(),
        }
    }

    /// `m` draws from the block stream, each consuming `dim` normals in order.
    fn draw(&self, rng: &mut impl Rng, m: usize) -> Draw {
        let mut normals = DMatrix::zeros(self.dim(), m);
        for x in normals.iter_mut() {
            *x = rng.sample(StandardNormal);
        }
        self.paths_from(&normals)
    }

    /// Volatility at step `k` of column `p`, before any reflection.
    #[inline]
    fn raw_vol(&self, d: &Draw, p: usize, k: usize, sign: f64) -> f64 {
        let m = self.model;
        let mut v = self.base_vol[k];
        if m.gamma != 0.0 {
            v += m.perturbation.apply(sign * m.gamma * d.z[(k, p)]);
        }
        v
    }

    /// Advances column `p` (negated when `sign < 0`). Returns `ln X_T` and the
    /// number of negative-volatility steps, or the step index at which the
    /// log-price stopped being finite.
    fn run(&self, d: &Draw, p: usize, sign: f64) -> std::result::Result<(f64, usize), usize> {
        let m = self.model;
        let sqrt_dt = self.dt.sqrt();
        let degenerate = m.rho.abs() == 1.0;
        let mut log_x = m.x0.ln();
        let mut negative = 0;
        for k in 0..self.n_steps {
            let mut v = self.raw_vol(d, p, k, sign);
            if v < 0.0 {
                negative += 1;
                if self.reflect {
                    v = -v;
                }
            }
            let db = if degenerate {
                m.rho * d.db[(k, p)]
            } else {
                m.rho * d.db[(k, p)] + self.perp * sqrt_dt * d.perp[(k, p)]
            };
            log_x += (m.mu - 0.5 * v * v) * self.dt + v * sign * db;
            if !log_x.is_finite() {
                return Err(k + 1);
            }
        }
        Ok((log_x, negative))
    }

    /// Conditional on the volatility driver the scheme's `ln X_T` is Gaussian
    /// with mean `ln x₀ + μT - ½I + ρJ` and variance `(1 - ρ²)I`, where
    /// `I = Σ v_k²Δ` and `J = Σ v_k ΔB′_k`. Returns `(I, J)` for column `p`.
    fn driver_moments(&self, d: &Draw, p: usize, sign: f64) -> (f64, f64) {
        let (mut var, mut drive) = (0.0, 0.0);
        for k in 0..self.n_steps {
            let mut v = self.raw_vol(d, p, k, sign);
            if self.reflect && v < 0.0 {
                v = -v;
            }
            var += v * v * self.dt;
            drive += v * sign * d.db[(k, p)];
        }
        (var, drive)
    }

    /// Conditional expectation of a call or put payoff given the driver.
    fn conditional_value(&self, payoff: &PayoffSpec, horizon: f64, var: f64, drive: f64) -> f64 {
        let m = self.model;
        let rho = m.rho;
        let cond_var = (1.0 - rho * rho).max(0.0) * var;
        let mean_log = m.x0.ln() + m.mu * horizon - 0.5 * var + rho * drive;
        let forward = (mean_log + 0.5 * cond_var).exp();
        let call = |k: f64| {
            if k == 0.0 {
                forward
            } else if cond_var > 0.0 {
                let sd = cond_var.sqrt();
                let d1 = ((forward / k).ln() + 0.5 * cond_var) / sd;
                forward * norm_cdf(d1) - k * norm_cdf(d1 - sd)
            } else {
                (mean_log.exp() - k).max(0.0)
            }
        };
        match payoff {
            PayoffSpec::Call { strike } => call(*strike),
            PayoffSpec::Put { strike } => call(*strike) - forward + strike,
            PayoffSpec::Custom { .. } => unreachable!("checked by the caller"),
        }
    }

    fn signs(antithetic: bool) -> &'static [f64] {
        if antithetic {
            &[1.0, -1.0]
        } else {
            &[1.0]
        }
    }

    /// Conditional payoff values for one block, averaged over antithetic pairs.
    fn conditional_block(
        &self,
        payoff: &PayoffSpec,
        horizon: f64,
        seed: u64,
        block: u64,
        len: usize,
        antithetic: bool,
    ) -> Vec<f64> {
        let signs = Self::signs(antithetic);
        let cols = len / signs.len();
        let d = self.draw(&mut block_rng(seed, block), cols);
        (0..cols)
            .map(|p| {
                let y: f64 = signs
                    .iter()
                    .map(|&sign| {
                        let (var, drive) = self.driver_moments(&d, p, sign);
                        self.conditional_value(payoff, horizon, var, drive)
                    })
                    .sum();
                y / signs.len() as f64
            })
            .collect()
    }

    /// `ln X_T` for one block of paths, in order, plus the negative-vol count.
    fn block(
        &self,
        seed: u64,
        block: u64,
        first_path: usize,
        len: usize,
        antithetic: bool,
    ) -> Result<(Vec<f64>, usize)> {
        let signs = Self::signs(antithetic);
        let cols = len / signs.len();
        let d = self.draw(&mut block_rng(seed, block), cols);
        let mut out = Vec::with_capacity(len);
        let mut negative = 0;
        for p in 0..cols {
            for &sign in signs {
                let (lx, neg) = self.run(&d, p, sign).map_err(|step| Error::NonFinite {
                    step,
                    path: first_path + out.len(),
                })?;
                out.push(lx);
                negative += neg;
            }
        }
        Ok((out, negative))
    }

    fn block_list(&self, cfg: &McConfig) -> Vec<(u64, usize, usize)> {
        let mut first = 0;
        blocks(cfg.n_paths)
            .into_iter()
            .map(|(b, len)| {
                let item = (b, first, len);
                first += len;
                item
            })
            .collect()
    }
}

/// Simulates `(v, X)` jointly with the log-Euler scheme and returns `X_T`
/// for every path.
pub fn simulate_joint_paths(model: &MarketModel, horizon: f64, cfg: &McConfig) -> Result<JointSimulation> {
    let engine = PathEngine::new(model, horizon, cfg)?;
    let parts: Vec<(Vec<f64>, usize)> = engine
        .block_list(cfg)
        .into_par_iter()
        .map(|(b, first, len)| engine.block(cfg.seed, b, first, len, cfg.antithetic))
        .collect::<Result<_>>()?;
    let mut logs = Vec::with_capacity(cfg.n_paths);
    let mut negative = 0;
    for (l, neg) in parts {
        logs.extend(l);
        negative += neg;
    }
    let n = logs.len() as f64;
    let mean = logs.iter().sum::<f64>() / n;
    let var = logs.iter().map(|l| (l - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Ok(JointSimulation {
        terminal: logs.iter().map(|l| l.exp()).collect(),
        diagnostics: SimDiagnostics {
            n_paths: cfg.n_paths,
            mean_log_terminal: mean,
            var_log_terminal: var,
            negative_vol_fraction: negative as f64 / (n * cfg.n_steps as f64),
            warnings: engine.sampler.warnings().to_vec(),
        },
    })
}

/// Running mean and centered sum of squares (Welford / Chan).
#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    n: usize,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, y: f64) {
        self.n += 1;
        let d = y - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (y - self.mean);
    }

    fn merge(&mut self, o: &Moments) {
        if o.n == 0 {
            return;
        }
        let n = self.n + o.n;
        let d = o.mean - self.mean;
        self.mean += d * o.n as f64 / n as f64;
        self.m2 += o.m2 + d * d * (self.n as f64 * o.n as f64) / n as f64;
        self.n = n;
    }

    fn estimate(&self) -> PricingEstimate {
        let var = if self.n > 1 { self.m2 / (self.n - 1) as f64 } else { 0.0 };
        PricingEstimate::new(self.mean, (var / self.n as f64).sqrt(), self.n)
    }
}

/// Prices several payoffs on one set of paths.
///
/// With antithetic pairing each sample is the average of a pair, so
/// `n_effective` is half the path count.
pub fn price_mc_many(
    model: &MarketModel,
    payoffs: &[PayoffSpec],
    horizon: f64,
    cfg: &McConfig,
) -> Result<Vec<PricingEstimate>> {
    ensure_domain(!payoffs.is_empty(), "payoffs", 0.0, "at least one payoff")?;
    for p in payoffs {
        p.validate()?;
    }
    let engine = PathEngine::new(model, horizon, cfg)?;
    let per_block: Vec<Vec<Moments>> = engine
        .block_list(cfg)
        .into_par_iter()
        .map(|(b, first, len)| {
            let (logs, _) = engine.block(cfg.seed, b, first, len, cfg.antithetic)?;
            let mut acc = vec![Moments::default(); payoffs.len()];
            let group = if cfg.antithetic { 2 } else { 1 };
            for chunk in logs.chunks(group) {
                for (m, g) in acc.iter_mut().zip(payoffs) {
                    let y = chunk.iter().map(|l| g.evaluate(l.exp())).sum::<f64>() / group as f64;
                    m.push(y);
                }
            }
            Ok(acc)
        })
        .collect::<Result<_>>()?;
    let mut total = vec![Moments::default(); payoffs.len()];
    for block in &per_block {
        for (t, m) in total.iter_mut().zip(block) {
            t.merge(m);
        }
    }
    Ok(total.iter().map(Moments::estimate).collect())
}

/// Monte Carlo estimate of `E[g(X_T)]`.
pub fn price_mc(model: &MarketModel, payoff: &PayoffSpec, horizon: f64, cfg: &McConfig) -> Result<PricingEstimate> {
    Ok(price_mc_many(model, std::slice::from_ref(payoff), horizon, cfg)?.remove(0))
}

/// Mean of `g(X_T)` when `γ = 0`, exact for the log-Euler scheme: with a
/// deterministic volatility the scheme's log-price is Gaussian with total
/// variance `Σ v̄(t_k)²Δ`.
fn discrete_gamma_zero_mean(engine: &PathEngine<'_>, payoff: &PayoffSpec, horizon: f64) -> Result<f64> {
    let m = engine.model;
    let variance: f64 = engine.base_vol.iter().map(|v| v * v * engine.dt).sum();
    let level = BaselineVol::Constant {
        level: (variance / horizon).sqrt(),
    };
    let call = |k: f64| bs_reference(m.x0, k, 0.0, horizon, m.mu, &level, true);
    match payoff {
        PayoffSpec::Call { strike } => call(*strike),
        PayoffSpec::Put { strike } => Ok(call(*strike)? - m.x0 * (m.mu * horizon).exp() + strike),
        PayoffSpec::Custom { .. } => Err(Error::Config(
            "the gamma-zero control needs a call or put payoff".into(),
        )),
    }
}

/// Monte Carlo estimate of `E[g(X_T)]` for a call or put under the same
/// log-Euler scheme as [`price_mc`], with two variance reductions: each path
/// contributes its conditional expectation given the volatility driver (the
/// remaining Brownian part is integrated in closed form), and the same
/// quantity at `γ = 0` on the same normals serves as a control of known mean.
/// The stderr shrinks roughly in proportion to `γ`.
pub fn price_mc_control(
    model: &MarketModel,
    payoff: &PayoffSpec,
    horizon: f64,
    cfg: &McConfig,
) -> Result<PricingEstimate> {
    payoff.validate()?;
    let engine = PathEngine::new(model, horizon, cfg)?;
    let flat_model = MarketModel {
        gamma: 0.0,
        ..model.clone()
    };
    let flat = PathEngine::new(&flat_model, horizon, cfg)?;
    let known = discrete_gamma_zero_mean(&flat, payoff, horizon)?;
    let per_block: Vec<Moments> = engine
        .block_list(cfg)
        .into_par_iter()
        .map(|(b, _, len)| {
            let y = engine.conditional_block(payoff, horizon, cfg.seed, b, len, cfg.antithetic);
            let y0 = flat.conditional_block(payoff, horizon, cfg.seed, b, len, cfg.antithetic);
            let mut acc = Moments::default();
            for (a, c) in y.iter().zip(&y0) {
                acc.push(a - c);
            }
            acc
        })
        .collect();
    let mut total = Moments::default();
    for m in &per_block {
        total.merge(m);
    }
    let e = total.estimate();
    for v in [known, e.mean] {
        if !v.is_finite() {
            return Err(Error::NonFinite { step: cfg.n_steps, path: 0 });
        }
    }
    Ok(PricingEstimate::new(known + e.mean, e.stderr, e.n_effective))
}
