use ndarray::Array2;

use crate::frac_processes::TimeGrid;
use crate::mc_engine::BaselineVol;
use crate::pde_kit::{d_t, d_z, d_zz, SpaceTimeGrid, Surface};

/// `ã = a - 1` with its count of masked nodes.
pub(crate) struct Tilde {
    pub values: Array2<f64>,
    pub masked: usize,
}

/// Nodes where `|∂_z f|` is below `rel_tol` times its grid maximum.
fn singular_mask(fz: &Surface, rel_tol: f64) -> (Vec<bool>, usize) {
    let max = fz.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let cut = rel_tol * max;
    let mask: Vec<bool> = fz.values.iter().map(|v| !(v.abs() > cut)).collect();
    let count = mask.iter().filter(|&&m| m).count();
    (mask, count)
}

/// Replaces masked entries of each row by the nearest unmasked value to the
/// left (or right when none lies to the left).
fn fill_masked(values: &mut Array2<f64>, mask: &[bool]) {
    let nz = values.ncols();
    for (k, mut row) in values.rows_mut().into_iter().enumerate() {
        let m = &mask[k * nz..(k + 1) * nz];
        let Some(first) = m.iter().position(|&b| !b) else {
            row.fill(0.0);
            continue;
        };
        let mut last = row[first];
        for i in 0..nz {
            if m[i] {
                row[i] = if i < first { row[first] } else { last };
            } else {
                last = row[i];
            }
        }
    }
}

/// `∫_0^z g(s) ds` along each row by the trapezoid rule, anchored at `z = 0`
/// (or at the nearest window edge when 0 lies outside).
fn integrate_from_origin(values: &Array2<f64>, grid: &SpaceTimeGrid) -> Array2<f64> {
    let h = grid.dz();
    let mut out = Array2::zeros(values.dim());
    let pos = ((0.0 - grid.z_min()) / h).clamp(0.0, (grid.n_z() - 1) as f64);
    let i0 = (pos.floor() as usize).min(grid.n_z() - 2);
    let w = pos - i0 as f64;
    for (row, mut o) in values.rows().into_iter().zip(out.rows_mut()) {
        let mut acc = 0.0;
        o[0] = 0.0;
        for i in 1..row.len() {
            acc += 0.5 * h * (row[i - 1] + row[i]);
            o[i] = acc;
        }
        let anchor = (1.0 - w) * o[i0] + w * o[i0 + 1];
        o.mapv_inplace(|v| v - anchor);
    }
    out
}

/// `∂_t f` from the levels below `T` only: the terminal level holds the
/// limit of `f` away from the strike, not a sample of a smooth field, so the
/// last interior level uses a one-sided stencil. The terminal level is 0.
fn d_t_interior(f: &Surface) -> Surface {
    let g = f.grid;
    let nt = g.n_t();
    if nt < 4 {
        return d_t(f);
    }
    let inner_grid = SpaceTimeGrid::new(
        g.z_min(),
        g.z_max(),
        g.n_z(),
        TimeGrid::new(g.t(0), g.dt(), nt - 1).expect("sub-grid of a valid grid"),
    )
    .expect("sub-grid of a valid grid");
    let inner = Surface {
        grid: inner_grid,
        values: f.values.slice(ndarray::s![..nt - 1, ..]).to_owned(),
    };
    let mut values = Array2::zeros(f.values.dim());
    values.slice_mut(ndarray::s![..nt - 1, ..]).assign(&d_t(&inner).values);
    Surface { grid: g, values }
}

/// `q = v̄′f / (v̄³ ∂_z f)` with the terminal level set to its limit 0.
fn q_field(f: &Surface, fz: &Surface, vbar: &BaselineVol, mask: &[bool]) -> Array2<f64> {
    let g = f.grid;
    let nz = g.n_z();
    let mut q = Array2::from_shape_fn(f.values.dim(), |(k, i)| {
        if k + 1 == g.n_t() || mask[k * nz + i] {
            return 0.0;
        }
        let t = g.t(k);
        let v = vbar.value(t);
        vbar.derivative(t) * f.values[(k, i)] / (v * v * v * fz.values[(k, i)])
    });
    fill_masked(&mut q, mask);
    q.row_mut(g.n_t() - 1).fill(0.0);
    q
}

/// `m = ∂_t f/(v̄²∂_z f) + μ/v̄² + ∂_zz f/(2∂_z f) - ½`, i.e. `𝓛f/(v̄²∂_z f)`,
/// which vanishes identically for exact `f`; masked nodes are filled.
pub(crate) fn m_field(f: &Surface, mu: f64, vbar: &BaselineVol, rel_tol: f64) -> (Array2<f64>, Vec<bool>, usize) {
    let g = f.grid;
    let (nt, nz) = (g.n_t(), g.n_z());
    let fz = d_z(f);
    let fzz = d_zz(f);
    let ft = d_t_interior(f);
    let (mask, masked) = singular_mask(&fz, rel_tol);
    let mut m = Array2::from_shape_fn((nt, nz), |(k, i)| {
        if mask[k * nz + i] {
            return 0.0;
        }
        let v2 = vbar.value(g.t(k)).powi(2);
        let d = fz.values[(k, i)];
        ft.values[(k, i)] / (v2 * d) + mu / v2 + fzz.values[(k, i)] / (2.0 * d) - 0.5
    });
    fill_masked(&mut m, &mask);
    (m, mask, masked)
}

/// The explicit construction: `n = -∂_t(q e^{∫_0^z m})`,
/// `ã = e^{-∫_0^z m} ∫_t^T ∫_0^z n ds dτ`, every derivative by finite
/// differences except `q`, which takes the closed-form `fz`. Near `T` the
/// quotients in `m` lose all accuracy and the exponentials can overflow; the
/// caller checks finiteness.
pub(crate) fn closed_form(f: &Surface, fz: &Surface, mu: f64, vbar: &BaselineVol, rel_tol: f64) -> Tilde {
    let g = f.grid;
    let (nt, nz) = (g.n_t(), g.n_z());
    let (m, mask, masked) = m_field(f, mu, vbar, rel_tol);
    let int_m = integrate_from_origin(&m, &g);
    let q = q_field(f, fz, vbar, &mask);
    if q.iter().all(|&v| v == 0.0) {
        return Tilde {
            values: Array2::zeros((nt, nz)),
            masked,
        };
    }
    let weighted = Surface {
        grid: g,
        values: &q * &int_m.mapv(f64::exp),
    };
    let n = d_t(&weighted).values.mapv(|v| -v);
    let inner = integrate_from_origin(&n, &g);
    // ∫_t^T by the trapezoid rule, accumulated backward from T.
    let dt = g.dt();
    let mut values = Array2::zeros((nt, nz));
    for k in (0..nt - 1).rev() {
        for i in 0..nz {
            values[(k, i)] = values[(k + 1, i)] + 0.5 * dt * (inner[(k, i)] + inner[(k + 1, i)]);
        }
    }
    values *= &int_m.mapv(|v| (-v).exp());
    Tilde { values, masked }
}

/// Direct integration of the reduced equation `∂_z ã = q`: once `𝓛f = 0`
/// is used (so `m ≡ 0`), substituting `a = 1 - M₃/(v̄ f)` into the `M₃`
/// line leaves no time derivative, only `v̄³ ∂_z f ∂_z ã = v̄′ f`. With
/// `q(T, ·) = 0` this is the explicit construction evaluated exactly.
pub(crate) fn reduced(f: &Surface, fz: &Surface, vbar: &BaselineVol, rel_tol: f64) -> Tilde {
    let (mask, masked) = singular_mask(fz, rel_tol);
    let q = q_field(f, fz, vbar, &mask);
    Tilde {
        values: integrate_from_origin(&q, &f.grid),
        masked,
    }
}
