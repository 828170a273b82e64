use ndarray::Array2;

use super::{duhamel_heat_solve, paper_literal_step2, ParabolicProblem, SpaceTimeGrid, Surface};
use crate::error::{ensure_domain, Result};
use crate::frac_processes::TimeGrid;

/// Exponents of the substitution `M = u·e^{α τ + β z}`, `τ = T - t`,
/// `ζ = v̄² τ`, which maps `𝓛_v̄ M = S` to `∂_ζ u - ½∂_zz u = -S e^{-(ατ+βz)}/v̄²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransformConstants {
    pub alpha_exp: f64,
    pub beta_exp: f64,
}

impl TransformConstants {
    /// Coefficients `(c₁, c₀)` left in front of `∂_z u` and `u` in the
    /// `ζ`-equation after substituting with these exponents:
    /// `c₁ = β + μ/v̄² - ½`, `c₀ = ½β² + (μ/v̄² - ½)β - α/v̄²`.
    pub fn leftover_coefficients(&self, mu: f64, vbar: f64) -> (f64, f64) {
        let drift = mu / (vbar * vbar) - 0.5;
        let b = self.beta_exp;
        (
            b + drift,
            0.5 * b * b + drift * b - self.alpha_exp / (vbar * vbar),
        )
    }
}

/// Exponents that remove the first- and zeroth-order terms:
/// `β = ½ - μ/v̄²`, `α = β(μ/2 - v̄²/4) = -β²v̄²/2`.
pub fn transform_constants(mu: f64, vbar: f64) -> Result<TransformConstants> {
    ensure_domain(vbar > 0.0, "vbar", vbar, "vbar > 0")?;
    let beta = 0.5 - mu / (vbar * vbar);
    Ok(TransformConstants {
        alpha_exp: beta * (0.5 * mu - 0.25 * vbar * vbar),
        beta_exp: beta,
    })
}

/// The exponents as printed in the source derivation:
/// `β = ½ + μ/v̄²`, `α = (½ + μ/v̄²)(3μ/2 - v̄²/4)`. They coincide with
/// [`transform_constants`] only at `μ = 0`.
pub fn paper_transform_constants(mu: f64, vbar: f64) -> Result<TransformConstants> {
    ensure_domain(vbar > 0.0, "vbar", vbar, "vbar > 0")?;
    let beta = 0.5 + mu / (vbar * vbar);
    Ok(TransformConstants {
        alpha_exp: beta * (1.5 * mu - 0.25 * vbar * vbar),
        beta_exp: beta,
    })
}

/// Heat-equation solver used after the substitution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum HeatRoute {
    #[default]
    Duhamel,
    /// The triangular-integral formula; comparison output only.
    Triangular,
}

/// Solves a zero-terminal problem with constant `v̄` through the heat
/// equation: transform the source, solve in `(ζ, z)`, transform back.
pub fn solve_by_transform(
    problem: &ParabolicProblem,
    grid: &SpaceTimeGrid,
    constants: TransformConstants,
    route: HeatRoute,
) -> Result<Surface> {
    problem.validate(grid)?;
    ensure_domain(
        problem.vbar.is_constant(),
        "vbar",
        problem.vbar.value(0.0),
        "constant over time for the heat-equation route",
    )?;
    ensure_domain(
        problem.terminal.iter().all(|&v| v == 0.0),
        "terminal",
        f64::NAN,
        "zero for the heat-equation route",
    )?;
    let v = problem.vbar.value(0.0);
    let v2 = v * v;
    let (nt, nz) = (grid.n_t(), grid.n_z());
    let dt = grid.dt();
    let TransformConstants { alpha_exp: a, beta_exp: b } = constants;
    let zeta_grid = SpaceTimeGrid::new(grid.z_min(), grid.z_max(), nz, TimeGrid::new(0.0, v2 * dt, nt)?)?;
    let heat_source = Array2::from_shape_fn((nt, nz), |(k, i)| {
        let tau = k as f64 * dt;
        -problem.source.values[(nt - 1 - k, i)] * (-(a * tau + b * grid.z(i))).exp() / v2
    });
    let heat_source = Surface::new(zeta_grid, heat_source)?;
    let zeta_end = zeta_grid.horizon();
    let u = match route {
        HeatRoute::Duhamel => duhamel_heat_solve(&heat_source, zeta_end)?,
        HeatRoute::Triangular => paper_literal_step2(&heat_source, zeta_end)?,
    };
    let values = Array2::from_shape_fn((nt, nz), |(k, i)| {
        let kk = nt - 1 - k;
        let tau = kk as f64 * dt;
        u.values[(kk, i)] * (a * tau + b * grid.z(i)).exp()
    });
    Surface::new(*grid, values)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constants_at_zero_drift() {
        let c = transform_constants(0.0, 1.0).unwrap();
        assert_eq!(c.beta_exp, 0.5);
        assert_eq!(c.alpha_exp, -0.125);
        assert_eq!(paper_transform_constants(0.0, 1.0).unwrap(), c);
    }

    #[test]
    fn log_drift_cancellation_point() {
        // μ = v̄²/2 removes the log drift, so no exponential tilt is needed.
        let c = transform_constants(0.125, 0.5).unwrap();
        assert_eq!(c.beta_exp, 0.0);
        assert_eq!(c.alpha_exp, 0.0);
        let p = paper_transform_constants(0.125, 0.5).unwrap();
        assert_eq!(p.beta_exp, 1.0);
    }

    #[test]
    fn leftover_terms_vanish_only_for_corrected_constants() {
        for (mu, v) in [(0.05, 0.5), (-0.1, 1.3), (0.0, 0.2), (0.3, 2.0)] {
            let (c1, c0) = transform_constants(mu, v).unwrap().leftover_coefficients(mu, v);
            assert!(c1.abs() < 1e-15 && c0.abs() < 1e-14, "{mu} {v}: {c1} {c0}");
            if mu != 0.0 {
                let (p1, _) = paper_transform_constants(mu, v).unwrap().leftover_coefficients(mu, v);
                assert!(p1.abs() > 1e-3);
            }
        }
    }
}
