use ndarray::{Array2, ArrayView1};

use super::Surface;
use crate::error::{ensure_domain, Result};
use crate::mc_engine::{norm_cdf, norm_pdf};

/// Piecewise-linear interpolant of one source level on a uniform grid,
/// extended linearly beyond the end nodes.
struct PiecewiseLinear<'a> {
    z0: f64,
    h: f64,
    values: ArrayView1<'a, f64>,
    /// `∫_{z0}^{z_i}` of the interpolant.
    cumulative: Vec<f64>,
}

impl<'a> PiecewiseLinear<'a> {
    fn new(z0: f64, h: f64, values: ArrayView1<'a, f64>) -> Self {
        let mut cumulative = Vec::with_capacity(values.len());
        let mut acc = 0.0;
        cumulative.push(0.0);
        for i in 1..values.len() {
            acc += 0.5 * h * (values[i - 1] + values[i]);
            cumulative.push(acc);
        }
        Self {
            z0,
            h,
            values,
            cumulative,
        }
    }

    fn slope(&self, i: usize) -> f64 {
        (self.values[i + 1] - self.values[i]) / self.h
    }

    /// `∫_{z0}^{x}` of the extended interpolant.
    fn antiderivative(&self, x: f64) -> f64 {
        let n = self.values.len();
        let i = (((x - self.z0) / self.h).floor().max(0.0) as usize).min(n - 2);
        let d = x - (self.z0 + i as f64 * self.h);
        self.cumulative[i] + d * self.values[i] + 0.5 * self.slope(i) * d * d
    }

    /// Slope jumps `κ_l` at interior nodes: the interpolant equals
    /// `S_0 + slope_0 (z - z_0) + Σ κ_l (z - z_l)⁺`.
    fn kinks(&self) -> Vec<f64> {
        let n = self.values.len();
        let mut k = vec![0.0; n];
        for l in 1..n - 1 {
            k[l] = self.slope(l) - self.slope(l - 1);
        }
        k
    }
}

/// `E[(c + σY)⁺] - c⁺` for standard normal `Y`, as a table over `c = e·h`,
/// truncated once negligible.
fn smoothing_table(variance: f64, h: f64, max_len: usize) -> Vec<f64> {
    let sigma = variance.sqrt();
    let mut table = Vec::new();
    for e in 0..max_len {
        let c = e as f64 * h;
        let x = c / sigma;
        // σφ(x) - c(1 - Φ(x)), which is even in c.
        let v = sigma * norm_pdf(x) - c * norm_cdf(-x);
        if e > 0 && v < 1e-18 * sigma {
            break;
        }
        table.push(v);
    }
    table
}

fn trapezoid_weight(k: usize, j: usize, step: f64) -> f64 {
    if k == 0 || k == j {
        0.5 * step
    } else {
        step
    }
}

/// `u(ζ, z) = ∫_0^ζ ∫ G(ζ - m, z - n) source(m, n) dn dm` with `G` the
/// Gaussian kernel of `∂_ζ - ½∂_zz`.
///
/// `source` is indexed by `ζ` along its time axis (level `k` is
/// `ζ = k·Δζ`) and must span `[0, zeta_end]`. Each level is taken as
/// piecewise linear in `z` (extended linearly past the ends), so the kernel
/// integrals are exact; the `m`-integral uses the trapezoid rule.
pub fn duhamel_heat_solve(source: &Surface, zeta_end: f64) -> Result<Surface> {
    let g = source.grid;
    ensure_domain(
        (g.horizon() - zeta_end).abs() <= 1e-9 * zeta_end.abs().max(1.0) && g.t(0) == 0.0,
        "zeta_end",
        zeta_end,
        "equal to the source grid's time span starting at 0",
    )?;
    ensure_domain(source.is_finite(), "source", f64::NAN, "finite")?;
    let (nt, nz) = (g.n_t(), g.n_z());
    let h = g.dz();
    let dzeta = g.dt();
    let kinks: Vec<Vec<f64>> = (0..nt)
        .map(|k| PiecewiseLinear::new(g.z_min(), h, source.level(k)).kinks())
        .collect();
    let tables: Vec<Vec<f64>> = (0..nt)
        .map(|lag| if lag == 0 { vec![0.0] } else { smoothing_table(lag as f64 * dzeta, h, nz) })
        .collect();

    let mut out = Array2::zeros((nt, nz));
    for j in 1..nt {
        for k in 0..=j {
            let w = trapezoid_weight(k, j, dzeta);
            let level = source.level(k);
            let table = &tables[j - k];
            let reach = table.len() - 1;
            let kink = &kinks[k];
            for i in 0..nz {
                let mut v = level[i];
                if reach > 0 {
                    let lo = i.saturating_sub(reach).max(1);
                    let hi = (i + reach).min(nz - 2);
                    for (l, &kl) in kink.iter().enumerate().take(hi + 1).skip(lo) {
                        v += kl * table[i.abs_diff(l)];
                    }
                }
                out[(j, i)] += w * v;
            }
        }
    }
    Surface::new(g, out)
}

/// The triangular double integral
/// `u(ζ, z) = ∫_0^ζ ∫_{z-(ζ-m)/2}^{z+(ζ-m)/2} source(m, n) dn dm`,
/// kept for comparison with [`duhamel_heat_solve`]; it does not solve the
/// heat equation for general sources.
pub fn paper_literal_step2(source: &Surface, zeta_end: f64) -> Result<Surface> {
    let g = source.grid;
    ensure_domain(
        (g.horizon() - zeta_end).abs() <= 1e-9 * zeta_end.abs().max(1.0) && g.t(0) == 0.0,
        "zeta_end",
        zeta_end,
        "equal to the source grid's time span starting at 0",
    )?;
    let (nt, nz) = (g.n_t(), g.n_z());
    let dzeta = g.dt();
    let levels: Vec<PiecewiseLinear> = (0..nt)
        .map(|k| PiecewiseLinear::new(g.z_min(), g.dz(), source.level(k)))
        .collect();
    let mut out = Array2::zeros((nt, nz));
    for j in 1..nt {
        for (k, pl) in levels.iter().enumerate().take(j + 1) {
            let w = trapezoid_weight(k, j, dzeta);
            let half = 0.5 * (j - k) as f64 * dzeta;
            for i in 0..nz {
                let z = g.z(i);
                out[(j, i)] += w * (pl.antiderivative(z + half) - pl.antiderivative(z - half));
            }
        }
    }
    Surface::new(g, out)
}
