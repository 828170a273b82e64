use ndarray::Array2;

use super::{ParabolicProblem, SpaceTimeGrid, Surface};
use crate::error::{Error, Result};
use crate::mc_engine::PayoffSpec;

/// Tridiagonal rows of the spatial operator `(μ - ½v²)∂_z + ½v²∂_zz` at one
/// time, with boundary rows from `∂_xx M = 0` (i.e. `∂_zz M = ∂_z M`)
/// imposed through a ghost node.
struct SpatialOperator {
    lower: Vec<f64>,
    diag: Vec<f64>,
    upper: Vec<f64>,
}

impl SpatialOperator {
    fn new(n: usize, h: f64, mu: f64, v: f64) -> Self {
        let half_v2 = 0.5 * v * v;
        let drift = mu - half_v2;
        let lo = half_v2 / (h * h) - drift / (2.0 * h);
        let up = half_v2 / (h * h) + drift / (2.0 * h);
        let mut lower = vec![lo; n];
        let mut diag = vec![-2.0 * half_v2 / (h * h); n];
        let mut upper = vec![up; n];
        // With ∂_zz = ∂_z the operator reduces to μ∂_z; the ghost node turns
        // the central ∂_z into a one-sided quotient.
        let r = 0.5 * h;
        lower[0] = 0.0;
        diag[0] = -mu / ((1.0 + r) * h);
        upper[0] = mu / ((1.0 + r) * h);
        lower[n - 1] = -mu / ((1.0 - r) * h);
        diag[n - 1] = mu / ((1.0 - r) * h);
        upper[n - 1] = 0.0;
        Self { lower, diag, upper }
    }

    /// `out = (I + c L) m`.
    fn apply_shifted(&self, c: f64, m: &[f64], out: &mut [f64]) {
        let n = m.len();
        for i in 0..n {
            let mut v = m[i] + c * self.diag[i] * m[i];
            if i > 0 {
                v += c * self.lower[i] * m[i - 1];
            }
            if i + 1 < n {
                v += c * self.upper[i] * m[i + 1];
            }
            out[i] = v;
        }
    }

    /// Solves `(I - c L) x = rhs` in place by the Thomas algorithm.
    fn solve_shifted(&self, c: f64, rhs: &mut [f64], scratch: &mut [f64], level: usize) -> Result<()> {
        let n = rhs.len();
        let mut b = 1.0 - c * self.diag[0];
        if !(b.abs() > 1e-300) {
            return Err(Error::SolverBreakdown { level });
        }
        scratch[0] = -c * self.upper[0] / b;
        rhs[0] /= b;
        for i in 1..n {
            let a = -c * self.lower[i];
            b = 1.0 - c * self.diag[i] - a * scratch[i - 1];
            if !(b.abs() > 1e-300) || !b.is_finite() {
                return Err(Error::SolverBreakdown { level });
            }
            scratch[i] = -c * self.upper[i] / b;
            rhs[i] = (rhs[i] - a * rhs[i - 1]) / b;
        }
        for i in (0..n - 1).rev() {
            rhs[i] -= scratch[i] * rhs[i + 1];
        }
        Ok(())
    }
}

/// Solves `𝓛_v̄ M = source`, `M(T) = terminal` backward in time.
///
/// Crank–Nicolson in time, central differences in `z`; the first interval
/// below `T` is covered by two fully implicit half-steps to damp the
/// non-smooth terminal data.
pub fn solve_backward(problem: &ParabolicProblem, grid: &SpaceTimeGrid) -> Result<Surface> {
    problem.validate(grid)?;
    let (nt, nz) = (grid.n_t(), grid.n_z());
    let h = grid.dz();
    let dt = grid.dt();
    let src = &problem.source.values;
    let op_at = |t: f64| SpatialOperator::new(nz, h, problem.mu, problem.vbar.value(t));

    let mut values = Array2::zeros((nt, nz));
    values.row_mut(nt - 1).assign(&ndarray::ArrayView1::from(&problem.terminal[..]));
    let mut cur = problem.terminal.clone();
    let mut rhs = vec![0.0; nz];
    let mut scratch = vec![0.0; nz];

    for k in (0..nt - 1).rev() {
        let t_hi = grid.t(k + 1);
        let t_lo = grid.t(k);
        if k == nt - 2 {
            // Two implicit half-steps; source at the midpoint by interpolation.
            let t_mid = 0.5 * (t_hi + t_lo);
            let op = op_at(t_mid);
            for i in 0..nz {
                rhs[i] = cur[i] - 0.5 * dt * 0.5 * (src[(k, i)] + src[(k + 1, i)]);
            }
            op.solve_shifted(0.5 * dt, &mut rhs, &mut scratch, k)?;
            cur.copy_from_slice(&rhs);
            let op = op_at(t_lo);
            for i in 0..nz {
                rhs[i] = cur[i] - 0.5 * dt * src[(k, i)];
            }
            op.solve_shifted(0.5 * dt, &mut rhs, &mut scratch, k)?;
        } else {
            op_at(t_hi).apply_shifted(0.5 * dt, &cur, &mut rhs);
            for i in 0..nz {
                rhs[i] -= 0.5 * dt * (src[(k, i)] + src[(k + 1, i)]);
            }
            op_at(t_lo).solve_shifted(0.5 * dt, &mut rhs, &mut scratch, k)?;
        }
        if rhs.iter().any(|v| !v.is_finite()) {
            return Err(Error::SolverBreakdown { level: k });
        }
        cur.copy_from_slice(&rhs);
        values.row_mut(k).assign(&ndarray::ArrayView1::from(&cur[..]));
    }
    Surface::new(*grid, values)
}

/// Terminal data on the `z` nodes.
///
/// With `cell_average` each node carries the mean of `g(e^z)` over its cell
/// `[z - Δz/2, z + Δz/2]` (exact for calls and puts), which removes the
/// grid-alignment noise a payoff kink otherwise adds to convergence studies.
pub fn terminal_from_payoff(grid: &SpaceTimeGrid, payoff: &PayoffSpec, cell_average: bool) -> Vec<f64> {
    let h = grid.dz();
    (0..grid.n_z())
        .map(|i| {
            let z = grid.z(i);
            if !cell_average {
                return payoff.evaluate(z.exp());
            }
            let (a, b) = (z - 0.5 * h, z + 0.5 * h);
            match payoff {
                PayoffSpec::Call { strike } => call_cell_integral(a, b, *strike) / h,
                PayoffSpec::Put { strike } => {
                    // put = call - (e^z - K)
                    let forward = (b.exp() - a.exp()) - strike * h;
                    (call_cell_integral(a, b, *strike) - forward) / h
                }
                PayoffSpec::Custom { .. } => {
                    let m = 64;
                    let mut acc = 0.0;
                    for j in 0..m {
                        let zz = a + (j as f64 + 0.5) * h / m as f64;
                        acc += payoff.evaluate(zz.exp());
                    }
                    acc / m as f64
                }
            }
        })
        .collect()
}

/// `∫_a^b (e^z - K)⁺ dz`.
fn call_cell_integral(a: f64, b: f64, strike: f64) -> f64 {
    let lo = if strike > 0.0 { a.max(strike.ln()) } else { a };
    if lo >= b {
        return 0.0;
    }
    (b.exp() - lo.exp()) - strike * (b - lo)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mc_engine::BaselineVol;

    #[test]
    fn zero_data_gives_zero() {
        let g = SpaceTimeGrid::centered(50.0, 3.0, 33, 1.0, 9).unwrap();
        let p = ParabolicProblem::homogeneous(0.03, BaselineVol::Constant { level: 0.4 }, g, vec![0.0; 33]);
        let s = solve_backward(&p, &g).unwrap();
        assert!(s.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn linear_terminal_is_preserved() {
        // With μ = 0, x - K solves 𝓛M = 0 and is linear in price; only O(h²) interior drift remains.
        let g = SpaceTimeGrid::centered(50.0, 3.0, 65, 1.0, 17).unwrap();
        let mu = 0.0;
        let terminal: Vec<f64> = g.z_points().iter().map(|z| z.exp() - 20.0).collect();
        let p = ParabolicProblem::homogeneous(mu, BaselineVol::Constant { level: 0.7 }, g, terminal.clone());
        let s = solve_backward(&p, &g).unwrap();
        for i in 0..g.n_z() {
            let rel = (s.values[(0, i)] - terminal[i]) / g.z(i).exp();
            assert!(rel.abs() < 1e-3, "node {i}: {}", s.values[(0, i)]);
        }
    }

    #[test]
    fn cell_average_of_call_matches_quadrature() {
        let g = SpaceTimeGrid::centered(50.0, 3.0, 33, 1.0, 9).unwrap();
        let call = PayoffSpec::Call { strike: 50.0 };
        let avg = terminal_from_payoff(&g, &call, true);
        let put = terminal_from_payoff(&g, &PayoffSpec::Put { strike: 50.0 }, true);
        let h = g.dz();
        for i in 0..g.n_z() {
            let m = 2000;
            let q: f64 = (0..m)
                .map(|j| call.evaluate((g.z(i) - 0.5 * h + (j as f64 + 0.5) * h / m as f64).exp()))
                .sum::<f64>()
                / m as f64;
            assert!((avg[i] - q).abs() < 1e-5 * (1.0 + q));
            // parity on cell averages: call - put = mean of e^z - K
            let fwd = ((g.z(i) + 0.5 * h).exp() - (g.z(i) - 0.5 * h).exp()) / h - 50.0;
            assert!((avg[i] - put[i] - fwd).abs() < 1e-9);
        }
    }
}
