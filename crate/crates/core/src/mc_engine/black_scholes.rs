use statrs::function::erf::erfc;

use super::BaselineVol;
use crate::error::{ensure_domain, Error, Result};

/// Standard normal CDF.
#[inline]
pub fn norm_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// Standard normal density.
#[inline]
pub fn norm_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Time-changed Black–Scholes call price `x e^{μ(T-t)} N(d₁) - K N(d₂)`
/// with total variance `∫_t^T v̄²`.
///
/// A zero total variance is a domain error unless `allow_intrinsic` is set,
/// in which case the forward intrinsic value `(x e^{μ(T-t)} - K)⁺` is returned.
pub fn bs_reference(
    x: f64,
    strike: f64,
    t: f64,
    horizon: f64,
    mu: f64,
    vbar: &BaselineVol,
    allow_intrinsic: bool,
) -> Result<f64> {
    ensure_domain(x > 0.0, "x", x, "x > 0")?;
    ensure_domain(strike >= 0.0, "strike", strike, "strike >= 0")?;
    ensure_domain(t <= horizon, "t", t, "t <= T")?;
    let variance = vbar.integrated_variance(t, horizon);
    let forward = x * (mu * (horizon - t)).exp();
    if !(variance > 0.0) {
        if allow_intrinsic {
            return Ok((forward - strike).max(0.0));
        }
        return Err(Error::Domain {
            name: "integrated variance",
            value: variance,
            expected: "positive (or allow the intrinsic value)",
        });
    }
    if strike == 0.0 {
        return Ok(forward);
    }
    let (d1, d2) = d1_d2(x, strike, horizon - t, mu, variance);
    Ok(forward * norm_cdf(d1) - strike * norm_cdf(d2))
}

/// `(d̂₁, d̂₂)` for total variance `variance` over `tau = T - t`.
pub fn d1_d2(x: f64, strike: f64, tau: f64, mu: f64, variance: f64) -> (f64, f64) {
    let s = variance.sqrt();
    let d1 = ((x / strike).ln() + mu * tau + 0.5 * variance) / s;
    (d1, d1 - s)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn constant(level: f64) -> BaselineVol {
        BaselineVol::Constant { level }
    }

    #[test]
    fn at_the_money_value() {
        let p = bs_reference(50.0, 50.0, 0.0, 1.0, 0.0, &constant(0.5), false).unwrap();
        assert!((p - 9.8706).abs() < 1e-4, "{p}");
    }

    #[test]
    fn zero_strike_is_forward() {
        let p = bs_reference(50.0, 0.0, 0.0, 2.0, 0.05, &constant(0.3), false).unwrap();
        assert!((p - 50.0 * 0.1f64.exp()).abs() < 1e-12);
        let tiny = bs_reference(50.0, 1e-12, 0.0, 2.0, 0.05, &constant(0.3), false).unwrap();
        assert!((tiny - p).abs() < 1e-9);
    }

    #[test]
    fn zero_variance_needs_flag() {
        assert!(bs_reference(50.0, 40.0, 1.0, 1.0, 0.0, &constant(0.5), false).is_err());
        let p = bs_reference(50.0, 40.0, 1.0, 1.0, 0.0, &constant(0.5), true).unwrap();
        assert_eq!(p, 10.0);
    }
}
