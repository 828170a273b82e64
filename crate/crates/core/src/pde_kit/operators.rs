use ndarray::{Array2, ArrayView1, ArrayViewMut1, Axis, Zip};

use super::Surface;
use crate::mc_engine::BaselineVol;

/// Second-order first derivative along a line: central inside, one-sided
/// three-point stencils at the ends.
fn first_derivative(f: ArrayView1<f64>, mut out: ArrayViewMut1<f64>, h: f64) {
    let n = f.len();
    out[0] = (-3.0 * f[0] + 4.0 * f[1] - f[2]) / (2.0 * h);
    out[n - 1] = (3.0 * f[n - 1] - 4.0 * f[n - 2] + f[n - 3]) / (2.0 * h);
    for i in 1..n - 1 {
        out[i] = (f[i + 1] - f[i - 1]) / (2.0 * h);
    }
}

/// Second-order second derivative: central inside, one-sided four-point
/// stencils at the ends.
fn second_derivative(f: ArrayView1<f64>, mut out: ArrayViewMut1<f64>, h: f64) {
    let n = f.len();
    let h2 = h * h;
    out[0] = (2.0 * f[0] - 5.0 * f[1] + 4.0 * f[2] - f[3]) / h2;
    out[n - 1] = (2.0 * f[n - 1] - 5.0 * f[n - 2] + 4.0 * f[n - 3] - f[n - 4]) / h2;
    for i in 1..n - 1 {
        out[i] = (f[i + 1] - 2.0 * f[i] + f[i - 1]) / h2;
    }
}

fn along(s: &Surface, axis: Axis, h: f64, op: fn(ArrayView1<f64>, ArrayViewMut1<f64>, f64)) -> Surface {
    let mut out = Array2::zeros(s.values.dim());
    Zip::from(s.values.lanes(axis))
        .and(out.lanes_mut(axis))
        .for_each(|f, o| op(f, o, h));
    Surface {
        grid: s.grid,
        values: out,
    }
}

/// `∂_z` of a surface.
pub fn d_z(s: &Surface) -> Surface {
    along(s, Axis(1), s.grid.dz(), first_derivative)
}

/// `∂_zz` of a surface.
pub fn d_zz(s: &Surface) -> Surface {
    along(s, Axis(1), s.grid.dz(), second_derivative)
}

/// `∂_t` of a surface (needs at least 3 time levels).
pub fn d_t(s: &Surface) -> Surface {
    along(s, Axis(0), s.grid.dt(), first_derivative)
}

/// `𝓛_v̄ M = ∂_t M + μ∂_z M + ½v̄(t)²(∂_zz M - ∂_z M)` by finite differences.
pub fn apply_l(surface: &Surface, mu: f64, vbar: &BaselineVol) -> Surface {
    let mz = d_z(surface);
    let mzz = d_zz(surface);
    let mut out = d_t(surface);
    let g = surface.grid;
    for (k, mut row) in out.values.axis_iter_mut(Axis(0)).enumerate() {
        let half_v2 = 0.5 * vbar.value(g.t(k)).powi(2);
        Zip::from(&mut row)
            .and(mz.values.row(k))
            .and(mzz.values.row(k))
            .for_each(|o, &dz, &dzz| *o += mu * dz + half_v2 * (dzz - dz));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pde_kit::SpaceTimeGrid;

    #[test]
    fn constant_and_linear_price_fields() {
        let g = SpaceTimeGrid::centered(50.0, 2.0, 41, 1.0, 11).unwrap();
        let v = BaselineVol::SteinStein { beta: 0.5, alpha: 1.0, v0: 0.4 };
        let c = apply_l(&Surface::from_fn(g, |_, _| 3.0), 0.05, &v);
        assert!(c.values.iter().all(|r| r.abs() < 1e-12));
        // M = x: 𝓛 x = μ x up to O(h²) from the exponential in z.
        let x = apply_l(&Surface::from_fn(g, |_, z| z.exp()), 0.05, &v);
        for i in 1..g.n_z() - 1 {
            let rel = (x.values[(4, i)] - 0.05 * g.z(i).exp()) / g.z(i).exp();
            assert!(rel.abs() < 1e-2 * g.dz().powi(2) * 50.0, "{rel}");
        }
    }

    #[test]
    fn derivatives_exact_on_quadratics() {
        let g = SpaceTimeGrid::centered(1.0, 1.0, 21, 2.0, 6).unwrap();
        let s = Surface::from_fn(g, |t, z| t * t + 3.0 * z * z - z * t);
        let (sz, szz, st) = (d_z(&s), d_zz(&s), d_t(&s));
        for k in 0..g.n_t() {
            for i in 0..g.n_z() {
                let (t, z) = (g.t(k), g.z(i));
                assert!((sz.values[(k, i)] - (6.0 * z - t)).abs() < 1e-10);
                assert!((szz.values[(k, i)] - 6.0).abs() < 1e-8);
                assert!((st.values[(k, i)] - (2.0 * t - z)).abs() < 1e-10);
            }
        }
    }
}
