use std::f64::consts::PI;

use crate::error::{ensure_domain, Result};
use crate::mc_engine::{bs_reference, d1_d2, norm_pdf, MarketModel};

/// Leading-order price `M₁(t, x)`: the Black–Scholes call price with total
/// variance `∫_t^T v̄(s)² ds`. At `t = T` this is the payoff.
pub fn m1_price(t: f64, x: f64, strike: f64, model: &MarketModel, horizon: f64) -> Result<f64> {
    bs_reference(x, strike, t, horizon, model.mu, &model.baseline, true)
}

/// `(∂_x M₁, ∂²_xx M₁)` for the call, evaluated term by term from the
/// closed-form delta and gamma displays (including the density terms that
/// cancel analytically).
pub fn m1_derivs(t: f64, x: f64, strike: f64, model: &MarketModel, horizon: f64) -> Result<(f64, f64)> {
    ensure_domain(x > 0.0, "x", x, "x > 0")?;
    ensure_domain(strike > 0.0, "strike", strike, "strike > 0")?;
    let var = model.baseline.integrated_variance(t, horizon);
    ensure_domain(var > 0.0, "integrated variance", var, "positive")?;
    let tau = horizon - t;
    let growth = (model.mu * tau).exp();
    let (d1, d2) = d1_d2(x, strike, tau, model.mu, var);
    let (e1, e2) = ((-0.5 * d1 * d1).exp(), (-0.5 * d2 * d2).exp());
    let root = (2.0 * PI * var).sqrt();
    let sqrt_2pi = (2.0 * PI).sqrt();
    let n1 = crate::mc_engine::norm_cdf(d1);
    let delta = growth * n1 + growth * e1 / root - strike * e2 / (x * root);
    let gamma = growth * e1 / (x * root) - growth * e1 * d1 / (x * sqrt_2pi * var)
        + strike * e2 * d2 / (x * x * sqrt_2pi * var)
        + strike * e2 / (x * x * root);
    Ok((delta, gamma))
}

/// `f = x²∂²_xx M₁` and `∂_z f` in closed form at `(t, z)`, `t < T`.
/// Calls and puts share `f`. With zero total variance the values are the
/// limits away from the strike, 0.
pub(crate) fn gamma_field(t: f64, z: f64, strike: f64, mu: f64, var: f64, horizon: f64) -> (f64, f64) {
    if !(var > 0.0) || strike == 0.0 {
        return (0.0, 0.0);
    }
    let x = z.exp();
    let s = var.sqrt();
    let (d1, _) = d1_d2(x, strike, horizon - t, mu, var);
    let f = x * (mu * (horizon - t)).exp() * norm_pdf(d1) / s;
    (f, f * (1.0 - d1 / s))
}
