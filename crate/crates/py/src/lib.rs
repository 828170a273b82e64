//! Python module `fracvol`.

use fracvol::approx_pricer::{self as ap, ApproxConfig, ResidualWindow};
use fracvol::frac_processes::{self as fp, FouHistory, FouParams, HurstExponent, TimeGrid};
use fracvol::mc_engine::{self as mc, McConfig, PayoffSpec};
use fracvol::pde_kit::SpaceTimeGrid;
use fracvol::Error;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Domain { .. }
        | Error::LongMemoryRequired(_)
        | Error::UnknownPreset { .. }
        | Error::OutOfGrid { .. }
        | Error::Config(_) => PyValueError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn hurst(h: f64) -> PyResult<HurstExponent> {
    HurstExponent::new(h).map_err(to_py)
}

fn fou_params(rate: f64, h: f64) -> PyResult<FouParams> {
    FouParams::new(rate, h).map_err(to_py)
}

fn payoff(kind: &str, strike: f64) -> PyResult<PayoffSpec> {
    match kind {
        "call" => PayoffSpec::call(strike),
        "put" => PayoffSpec::put(strike),
        other => return Err(PyValueError::new_err(format!("payoff must be 'call' or 'put', got '{other}'"))),
    }
    .map_err(to_py)
}

fn history(past_horizon: Option<f64>) -> FouHistory {
    match past_horizon {
        None => FouHistory::Stationary,
        Some(past_horizon) => FouHistory::Truncated { past_horizon },
    }
}

/// Market model: `dX = μX dt + vX dB`, `v = v̄(t) + γZ` with `Z` a
/// stationary fOU process whose driver has correlation `ρ` with `B`.
#[pyclass(name = "MarketModel", module = "fracvol", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyMarketModel {
    inner: mc::MarketModel,
    #[pyo3(get)]
    horizon: f64,
}

#[pymethods]
impl PyMarketModel {
    /// Stein–Stein model with baseline `v̄' = β(α - v̄)`, `v̄(0) = v0`.
    #[staticmethod]
    #[pyo3(signature = (mu, beta, alpha, v0, gamma, rho, hurst, x0, horizon = 1.0))]
    #[allow(clippy::too_many_arguments)]
    fn stein_stein(
        mu: f64,
        beta: f64,
        alpha: f64,
        v0: f64,
        gamma: f64,
        rho: f64,
        hurst: f64,
        x0: f64,
        horizon: f64,
    ) -> PyResult<Self> {
        let inner = mc::MarketModel::stein_stein(mu, beta, alpha, v0, gamma, rho, hurst, x0).map_err(to_py)?;
        inner.validate(horizon).map_err(to_py)?;
        Ok(Self { inner, horizon })
    }

    /// One of `preset_names()`, optionally with `alpha` and `gamma` replaced.
    #[staticmethod]
    #[pyo3(signature = (name, alpha = None, gamma = None))]
    fn preset(name: &str, alpha: Option<f64>, gamma: Option<f64>) -> PyResult<Self> {
        let mut p = mc::model_presets(name).map_err(to_py)?;
        if let Some(a) = alpha {
            p = p.with_alpha(a).map_err(to_py)?;
        }
        if let Some(g) = gamma {
            p = p.with_gamma(g).map_err(to_py)?;
        }
        Ok(Self {
            inner: p.model,
            horizon: p.horizon,
        })
    }

    #[getter]
    fn mu(&self) -> f64 {
        self.inner.mu
    }

    #[getter]
    fn gamma(&self) -> f64 {
        self.inner.gamma
    }

    #[getter]
    fn rho(&self) -> f64 {
        self.inner.rho
    }

    #[getter]
    fn x0(&self) -> f64 {
        self.inner.x0
    }

    #[getter]
    fn hurst(&self) -> f64 {
        self.inner.fou.hurst().value()
    }

    /// `v̄(t)`.
    fn baseline(&self, t: f64) -> f64 {
        self.inner.baseline.value(t)
    }

    fn __repr__(&self) -> String {
        format!(
            "MarketModel(mu={}, gamma={}, rho={}, hurst={}, x0={}, horizon={})",
            self.inner.mu,
            self.inner.gamma,
            self.inner.rho,
            self.inner.fou.hurst().value(),
            self.inner.x0,
            self.horizon
        )
    }
}

#[pyclass(name = "PricingEstimate", module = "fracvol", frozen)]
struct PyEstimate {
    #[pyo3(get)]
    mean: f64,
    #[pyo3(get)]
    stderr: f64,
    #[pyo3(get)]
    ci95: (f64, f64),
    #[pyo3(get)]
    n_effective: usize,
}

impl From<mc::PricingEstimate> for PyEstimate {
    fn from(e: mc::PricingEstimate) -> Self {
        Self {
            mean: e.mean,
            stderr: e.stderr,
            ci95: e.ci95,
            n_effective: e.n_effective,
        }
    }
}

#[pymethods]
impl PyEstimate {
    fn __repr__(&self) -> String {
        format!("PricingEstimate(mean={}, stderr={}, n_effective={})", self.mean, self.stderr, self.n_effective)
    }
}

#[pyfunction]
fn sigma_h_sq(h: f64) -> PyResult<f64> {
    Ok(fp::sigma_h_sq(hurst(h)?))
}

#[pyfunction]
fn fbm_cov(s: f64, t: f64, h: f64) -> PyResult<f64> {
    Ok(fp::fbm_cov(s, t, hurst(h)?))
}

#[pyfunction]
fn fou_kernel(t: f64, rate: f64, h: f64) -> PyResult<f64> {
    fp::fou_kernel(t, &fou_params(rate, h)?).map_err(to_py)
}

#[pyfunction]
fn theta(t: f64, horizon: f64, rate: f64, h: f64) -> PyResult<f64> {
    fp::theta(t, horizon, &fou_params(rate, h)?).map_err(to_py)
}

#[pyfunction]
fn fou_stationary_var(rate: f64, h: f64) -> PyResult<f64> {
    Ok(fp::fou_stationary_var(&fou_params(rate, h)?))
}

#[pyfunction]
fn fou_cov(lag: f64, rate: f64, h: f64) -> PyResult<f64> {
    fp::fou_cov(lag, &fou_params(rate, h)?).map_err(to_py)
}

/// fBm paths on `count` equally spaced points of `[0, end]`, one list per path.
#[pyfunction]
#[pyo3(signature = (h, end, count, n_paths, seed = 0))]
fn sample_fbm(py: Python<'_>, h: f64, end: f64, count: usize, n_paths: usize, seed: u64) -> PyResult<Vec<Vec<f64>>> {
    let h = hurst(h)?;
    let grid = TimeGrid::spanning(0.0, end, count).map_err(to_py)?;
    let batch = py.detach(|| fp::sample_fbm(h, grid, n_paths, seed)).map_err(to_py)?;
    Ok(batch.values.rows().into_iter().map(|r| r.to_vec()).collect())
}

/// fOU paths on `count` points spaced `step` apart. `past_horizon = None`
/// samples the exact stationary law.
#[pyfunction]
#[pyo3(signature = (rate, h, step, count, n_paths, seed = 0, past_horizon = None))]
#[allow(clippy::too_many_arguments)]
fn sample_fou(
    py: Python<'_>,
    rate: f64,
    h: f64,
    step: f64,
    count: usize,
    n_paths: usize,
    seed: u64,
    past_horizon: Option<f64>,
) -> PyResult<Vec<Vec<f64>>> {
    let p = fou_params(rate, h)?;
    let grid = TimeGrid::new(0.0, step, count).map_err(to_py)?;
    let batch = py
        .detach(|| fp::sample_fou(p, grid, history(past_horizon), n_paths, seed))
        .map_err(to_py)?;
    Ok(batch.values.rows().into_iter().map(|r| r.to_vec()).collect())
}

/// Black–Scholes call value with constant volatility `vol`.
#[pyfunction]
#[pyo3(signature = (x, strike, t, horizon, mu, vol))]
fn bs_reference(x: f64, strike: f64, t: f64, horizon: f64, mu: f64, vol: f64) -> PyResult<f64> {
    mc::bs_reference(x, strike, t, horizon, mu, &mc::BaselineVol::Constant { level: vol }, false).map_err(to_py)
}

#[pyfunction]
fn preset_names() -> Vec<&'static str> {
    mc::PRESET_NAMES.to_vec()
}

#[allow(clippy::too_many_arguments)]
fn mc_config(
    n_paths: usize,
    n_steps: usize,
    seed: u64,
    antithetic: bool,
    reflect_vol: bool,
    past_horizon: Option<f64>,
) -> McConfig {
    McConfig {
        n_paths,
        n_steps,
        seed,
        antithetic,
        reflect_vol,
        history: history(past_horizon),
        ..McConfig::default()
    }
}

/// Monte Carlo price of a call or put at the model horizon.
#[pyfunction]
#[pyo3(signature = (model, strike, kind = "call", n_paths = 100_000, n_steps = 256, seed = 0,
                    antithetic = true, reflect_vol = false, past_horizon = None, control = false))]
#[allow(clippy::too_many_arguments)]
fn price_mc(
    py: Python<'_>,
    model: &PyMarketModel,
    strike: f64,
    kind: &str,
    n_paths: usize,
    n_steps: usize,
    seed: u64,
    antithetic: bool,
    reflect_vol: bool,
    past_horizon: Option<f64>,
    control: bool,
) -> PyResult<PyEstimate> {
    let g = payoff(kind, strike)?;
    let cfg = mc_config(n_paths, n_steps, seed, antithetic, reflect_vol, past_horizon);
    let est = py.detach(|| {
        if control {
            mc::price_mc_control(&model.inner, &g, model.horizon, &cfg)
        } else {
            mc::price_mc(&model.inner, &g, model.horizon, &cfg)
        }
    });
    Ok(est.map_err(to_py)?.into())
}

fn approx_config(model: &PyMarketModel, n_z: usize, n_t: usize, half_width: f64, literal: bool) -> PyResult<ApproxConfig> {
    Ok(ApproxConfig {
        grid: Some(SpaceTimeGrid::centered(model.inner.x0, half_width, n_z, model.horizon, n_t).map_err(to_py)?),
        literal_step2: literal,
        ..ApproxConfig::default()
    })
}

/// Corrector-expansion price at `(0, x0)` with `φ = 0`.
#[pyfunction]
#[pyo3(signature = (model, strike, kind = "call", n_z = 513, n_t = 257, half_width = 6.0))]
fn approx_price(
    py: Python<'_>,
    model: &PyMarketModel,
    strike: f64,
    kind: &str,
    n_z: usize,
    n_t: usize,
    half_width: f64,
) -> PyResult<f64> {
    let g = payoff(kind, strike)?;
    let cfg = approx_config(model, n_z, n_t, half_width, false)?;
    py.detach(|| ap::approx_price(&model.inner, &g, model.horizon, &cfg)).map_err(to_py)
}

/// Max-norm residual of every line of the corrector system, by name.
#[pyfunction]
#[pyo3(signature = (model, strike, kind = "call", n_z = 257, n_t = 129, half_width = 6.0, literal_step2 = false))]
#[allow(clippy::too_many_arguments)]
fn residuals(
    py: Python<'_>,
    model: &PyMarketModel,
    strike: f64,
    kind: &str,
    n_z: usize,
    n_t: usize,
    half_width: f64,
    literal_step2: bool,
) -> PyResult<(Vec<(String, f64)>, bool)> {
    let g = payoff(kind, strike)?;
    let cfg = approx_config(model, n_z, n_t, half_width, literal_step2)?;
    let c = py
        .detach(|| ap::build_correctors(&model.inner, &g, model.horizon, &cfg))
        .map_err(to_py)?;
    let r = ap::residual_report(&c, ResidualWindow::default());
    Ok((r.lines.iter().map(|l| (l.name.to_string(), l.linf)).collect(), r.comparison_only))
}

#[pyfunction]
fn derive_seed(master: u64, coords: Vec<u64>) -> u64 {
    fracvol::rng::derive_seed(master, &coords)
}

#[pymodule]
#[pyo3(name = "fracvol")]
fn fracvol_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyMarketModel>()?;
    m.add_class::<PyEstimate>()?;
    m.add_function(wrap_pyfunction!(sigma_h_sq, m)?)?;
    m.add_function(wrap_pyfunction!(fbm_cov, m)?)?;
    m.add_function(wrap_pyfunction!(fou_kernel, m)?)?;
    m.add_function(wrap_pyfunction!(theta, m)?)?;
    m.add_function(wrap_pyfunction!(fou_stationary_var, m)?)?;
    m.add_function(wrap_pyfunction!(fou_cov, m)?)?;
    m.add_function(wrap_pyfunction!(sample_fbm, m)?)?;
    m.add_function(wrap_pyfunction!(sample_fou, m)?)?;
    m.add_function(wrap_pyfunction!(bs_reference, m)?)?;
    m.add_function(wrap_pyfunction!(preset_names, m)?)?;
    m.add_function(wrap_pyfunction!(price_mc, m)?)?;
    m.add_function(wrap_pyfunction!(approx_price, m)?)?;
    m.add_function(wrap_pyfunction!(residuals, m)?)?;
    m.add_function(wrap_pyfunction!(derive_seed, m)?)?;
    Ok(())
}
