use std::f64::consts::PI;

use statrs::function::gamma::gamma;

use super::{FouParams, HurstExponent, TimeGrid};
use crate::error::{ensure_domain, Result};
use crate::quad::{integrate, wynn_epsilon, QuadOptions};

/// Normalizing constant `σ_H² = 1 / (Γ(2H+1) sin(πH))` of the moving-average
/// fBm, so that `Var(B_1^H) = σ_H²`.
pub fn sigma_h_sq(h: HurstExponent) -> f64 {
    let h = h.value();
    if h == 0.5 {
        return 1.0;
    }
    1.0 / (gamma(2.0 * h + 1.0) * (PI * h).sin())
}

/// Covariance `E[B_s^H B_t^H]`.
pub fn fbm_cov(s: f64, t: f64, h: HurstExponent) -> f64 {
    let two_h = 2.0 * h.value();
    0.5 * sigma_h_sq(h) * (t.abs().powf(two_h) + s.abs().powf(two_h) - (t - s).abs().powf(two_h))
}

/// `∫_0^t (t-s)^{H-1/2} e^{-as} ds`, computed after the substitution
/// `u = (t-s)^{H+1/2}`, which turns the power factor into a constant.
fn kernel_inner_integral(t: f64, p: &FouParams) -> Result<f64> {
    let q = p.kernel_power() + 1.0;
    let a = p.rate();
    let inv_q = 1.0 / q;
    let upper = t.powf(q);
    let opts = QuadOptions {
        abs_tol: 1e-13,
        rel_tol: 1e-13,
        max_intervals: 4000,
    };
    let r = integrate(|u| (-a * (t - u.powf(inv_q))).exp(), 0.0, upper, opts)?;
    Ok(r.value * inv_q)
}

/// Moving-average kernel of the stationary fOU process,
/// `Z_t = ∫_{-∞}^t K(t-s) dB_s`.
pub fn fou_kernel(t: f64, p: &FouParams) -> Result<f64> {
    ensure_domain(t > 0.0 && t.is_finite(), "t", t, "t > 0")?;
    let power = p.kernel_power();
    let inner = kernel_inner_integral(t, p)?;
    Ok((t.powf(power) - p.rate() * inner) / gamma(power + 1.0))
}

/// `Θ(τ) = ∫_0^τ K(v) dv`.
///
/// Swapping the order of integration gives the single integral
/// `Θ(τ) = [τ^q - a ∫_0^τ (τ-s)^q e^{-as} ds] / (q Γ(q))` with `q = H + 1/2`.
pub fn theta_of_remaining(tau: f64, p: &FouParams) -> Result<f64> {
    ensure_domain(tau >= 0.0 && tau.is_finite(), "tau", tau, "tau >= 0")?;
    if tau == 0.0 {
        return Ok(0.0);
    }
    let q = p.kernel_power() + 1.0;
    let a = p.rate();
    let opts = QuadOptions {
        abs_tol: 1e-13,
        rel_tol: 1e-13,
        max_intervals: 4000,
    };
    let inner = integrate(|s| (tau - s).powf(q) * (-a * s).exp(), 0.0, tau, opts)?.value;
    Ok((tau.powf(q) - a * inner) / (q * gamma(q)))
}

/// `θ_{t,T} = ∫_0^{T-t} K(v) dv`.
pub fn theta(t: f64, horizon: f64, p: &FouParams) -> Result<f64> {
    ensure_domain(t <= horizon, "t", t, "t <= horizon")?;
    theta_of_remaining(horizon - t, p)
}

/// Stationary variance `σ_ou² = a^{-2H} Γ(2H+1) σ_H² / 2`.
pub fn fou_stationary_var(p: &FouParams) -> f64 {
    let h = p.hurst();
    0.5 * p.rate().powf(-2.0 * h.value()) * gamma(2.0 * h.value() + 1.0) * sigma_h_sq(h)
}

const COV_TOL: f64 = 1e-11;

/// Stationary covariance `E[Z_t Z_{t+lag}]` from the cosine-integral
/// representation `σ_ou² (2 sin(πH)/π) ∫_0^∞ cos(a·lag·x) x^{1-2H}/(1+x²) dx`.
pub fn fou_cov(lag: f64, p: &FouParams) -> Result<f64> {
    ensure_domain(lag >= 0.0 && lag.is_finite(), "lag", lag, "lag >= 0")?;
    let var = fou_stationary_var(p);
    if lag == 0.0 {
        return Ok(var);
    }
    let h = p.hurst().value();
    let b = p.rate() * lag;
    let s = 2.0 - 2.0 * h;
    let g = |x: f64| x.powf(s - 1.0) / (1.0 + x * x);
    let opts = QuadOptions {
        abs_tol: COV_TOL,
        rel_tol: 1e-13,
        max_intervals: 4000,
    };

    // [0, 1]: y = x^s removes the x^{s-1} endpoint singularity.
    let inv_s = 1.0 / s;
    let head = integrate(
        |y| {
            let x = y.powf(inv_s);
            (b * x).cos() / (1.0 + x * x)
        },
        0.0,
        1.0,
        opts,
    )?
    .value
        * inv_s;

    // [1, x0] up to the first zero of cos(bx) beyond 1, on a log scale.
    let half_period = PI / b;
    let mut k0 = ((b - 0.5 * PI) / PI).ceil().max(0.0);
    let mut x0 = (0.5 * PI + k0 * PI) / b;
    if x0 < 1.0 {
        k0 += 1.0;
        x0 = (0.5 * PI + k0 * PI) / b;
    }
    let mid = integrate(
        |y| {
            let x = y.exp();
            (b * x).cos() * g(x) * x
        },
        0.0,
        x0.ln(),
        opts,
    )?
    .value;

    // Alternating half-period panels beyond x0, accelerated with Wynn's epsilon.
    let mut partial = Vec::with_capacity(64);
    let mut acc = 0.0;
    let mut lo = x0;
    let mut achieved = f64::INFINITY;
    let mut tail = 0.0;
    for k in 0..200 {
        let hi = lo + half_period;
        acc += integrate(|x| (b * x).cos() * g(x), lo, hi, opts)?.value;
        partial.push(acc);
        lo = hi;
        if k >= 6 {
            let (est, err) = wynn_epsilon(&partial);
            tail = est;
            achieved = err;
            if err < COV_TOL {
                break;
            }
        }
    }
    if achieved > 1e3 * COV_TOL {
        return Err(crate::error::Error::Quadrature {
            achieved,
            requested: COV_TOL,
        });
    }
    Ok(var * 2.0 * (PI * h).sin() / PI * (head + mid + tail))
}

/// Kernel values and `θ_{t,T}` tabulated on a grid whose last point is the
/// horizon `T`.
#[derive(Debug, Clone)]
pub struct KernelTable {
    pub params: FouParams,
    pub grid: TimeGrid,
    /// `K(t_k)`; the value at `t = 0` is the limit (0 for H > 1/2, 1 at H = 1/2).
    pub kernel_values: Vec<f64>,
    /// `θ_{t_k, T}` with `T = grid.end()`.
    pub theta_values: Vec<f64>,
}

impl KernelTable {
    pub fn new(params: FouParams, grid: TimeGrid) -> Result<Self> {
        let horizon = grid.end();
        let power = params.kernel_power();
        let mut kernel_values = Vec::with_capacity(grid.count());
        let mut theta_values = Vec::with_capacity(grid.count());
        for t in grid.points() {
            let k = if t > 0.0 {
                fou_kernel(t, &params)?
            } else if power > 0.0 {
                0.0
            } else if power == 0.0 {
                1.0
            } else {
                f64::INFINITY
            };
            kernel_values.push(k);
            theta_values.push(theta_of_remaining((horizon - t).max(0.0), &params)?);
        }
        Ok(Self {
            params,
            grid,
            kernel_values,
            theta_values,
        })
    }

    pub fn horizon(&self) -> f64 {
        self.grid.end()
    }

    /// `θ_{t,T}` by linear interpolation in `t`, clamped to the grid.
    pub fn theta_at(&self, t: f64) -> f64 {
        let g = &self.grid;
        let x = ((t - g.start()) / g.step()).clamp(0.0, (g.count() - 1) as f64);
        let k = (x.floor() as usize).min(g.count().saturating_sub(2));
        if g.count() == 1 {
            return self.theta_values[0];
        }
        let w = x - k as f64;
        (1.0 - w) * self.theta_values[k] + w * self.theta_values[k + 1]
    }
}

/// A Brownian increment `value` observed at time `time`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PastIncrement {
    pub time: f64,
    pub value: f64,
}

/// `φ_t = E[∫_t^T Z_s ds | F_t]` given the driver increments observed up to `t`.
///
/// Each increment `ΔB_u` contributes `ΔB_u ∫_t^T K(s-u) ds = ΔB_u [Θ(T-u) - Θ(t-u)]`.
/// An empty history yields the unconditional mean, 0.
pub fn phi_forecast(p: &FouParams, t: f64, horizon: f64, past: &[PastIncrement]) -> Result<f64> {
    ensure_domain(t <= horizon, "t", t, "t <= horizon")?;
    if t == horizon {
        return Ok(0.0);
    }
    let mut phi = 0.0;
    for inc in past {
        ensure_domain(inc.time <= t, "increment time", inc.time, "time <= t")?;
        let w = theta_of_remaining(horizon - inc.time, p)? - theta_of_remaining(t - inc.time, p)?;
        phi += w * inc.value;
    }
    Ok(phi)
}
