//! Finite-difference machinery for the corrector system in log-price
//! `z = ln x`: the operator `𝓛_v̄`, a backward Crank–Nicolson solver, and a
//! Duhamel heat-kernel solver for the constant-coefficient reduction.

mod heat;
mod operators;
mod solver;
mod transform;

pub use heat::{duhamel_heat_solve, paper_literal_step2};
pub use operators::{apply_l, d_t, d_z, d_zz};
pub use solver::{solve_backward, terminal_from_payoff};
pub use transform::{
    paper_transform_constants, solve_by_transform, transform_constants, HeatRoute,
    TransformConstants,
};

use ndarray::{Array2, ArrayView1};

use crate::error::{ensure_domain, Error, Result};
use crate::frac_processes::TimeGrid;
use crate::mc_engine::BaselineVol;

/// Uniform grid in `z = ln x` crossed with a time grid on `[0, T]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpaceTimeGrid {
    z_min: f64,
    z_max: f64,
    n_z: usize,
    t_grid: TimeGrid,
}

/// Half-width of the default log-price window.
pub const DEFAULT_Z_HALF_WIDTH: f64 = 6.0;
/// 512 space intervals.
pub const DEFAULT_N_Z: usize = 513;
/// 256 time steps.
pub const DEFAULT_N_T: usize = 257;

impl SpaceTimeGrid {
    pub fn new(z_min: f64, z_max: f64, n_z: usize, t_grid: TimeGrid) -> Result<Self> {
        ensure_domain(z_min < z_max, "z_min", z_min, "z_min < z_max")?;
        ensure_domain(n_z >= 16, "n_z", n_z as f64, "n_z >= 16")?;
        ensure_domain(t_grid.count() >= 2, "n_t", t_grid.count() as f64, "at least 2 time levels")?;
        Ok(Self {
            z_min,
            z_max,
            n_z,
            t_grid,
        })
    }

    /// `[ln x0 - half_width, ln x0 + half_width] × [0, horizon]`.
    pub fn centered(x0: f64, half_width: f64, n_z: usize, horizon: f64, n_t: usize) -> Result<Self> {
        ensure_domain(x0 > 0.0, "x0", x0, "x0 > 0")?;
        let c = x0.ln();
        Self::new(c - half_width, c + half_width, n_z, TimeGrid::spanning(0.0, horizon, n_t)?)
    }

    /// The documented default: `ln x0 ± 6`, 512 intervals, 256 time steps.
    pub fn default_for(x0: f64, horizon: f64) -> Result<Self> {
        Self::centered(x0, DEFAULT_Z_HALF_WIDTH, DEFAULT_N_Z, horizon, DEFAULT_N_T)
    }

    /// Nested grid with `Δz` and `Δt` halved; every old node is a new node.
    pub fn refined(&self) -> Result<Self> {
        let t = self.t_grid;
        Self::new(
            self.z_min,
            self.z_max,
            2 * (self.n_z - 1) + 1,
            TimeGrid::new(t.start(), t.step() / 2.0, 2 * (t.count() - 1) + 1)?,
        )
    }

    /// Fails unless `ln x0` lies strictly inside the window.
    pub fn check_contains(&self, x0: f64) -> Result<()> {
        let z = x0.ln();
        ensure_domain(z > self.z_min && z < self.z_max, "ln x0", z, "z_min < ln x0 < z_max")
    }

    pub fn z_min(&self) -> f64 {
        self.z_min
    }

    pub fn z_max(&self) -> f64 {
        self.z_max
    }

    pub fn n_z(&self) -> usize {
        self.n_z
    }

    pub fn n_t(&self) -> usize {
        self.t_grid.count()
    }

    pub fn t_grid(&self) -> TimeGrid {
        self.t_grid
    }

    pub fn dz(&self) -> f64 {
        (self.z_max - self.z_min) / (self.n_z - 1) as f64
    }

    pub fn dt(&self) -> f64 {
        self.t_grid.step()
    }

    pub fn z(&self, i: usize) -> f64 {
        self.z_min + i as f64 * self.dz()
    }

    pub fn t(&self, k: usize) -> f64 {
        self.t_grid.point(k)
    }

    pub fn horizon(&self) -> f64 {
        self.t_grid.end()
    }

    pub fn z_points(&self) -> Vec<f64> {
        (0..self.n_z).map(|i| self.z(i)).collect()
    }
}

/// Field sampled on a [`SpaceTimeGrid`]; `values` is `time levels × z nodes`.
#[derive(Debug, Clone, PartialEq)]
pub struct Surface {
    pub grid: SpaceTimeGrid,
    pub values: Array2<f64>,
}

impl Surface {
    pub fn zeros(grid: SpaceTimeGrid) -> Self {
        Self {
            grid,
            values: Array2::zeros((grid.n_t(), grid.n_z())),
        }
    }

    /// Samples `f(t, z)` at every node.
    pub fn from_fn(grid: SpaceTimeGrid, f: impl Fn(f64, f64) -> f64) -> Self {
        let values = Array2::from_shape_fn((grid.n_t(), grid.n_z()), |(k, i)| f(grid.t(k), grid.z(i)));
        Self { grid, values }
    }

    pub fn new(grid: SpaceTimeGrid, values: Array2<f64>) -> Result<Self> {
        ensure_domain(
            values.dim() == (grid.n_t(), grid.n_z()),
            "surface shape",
            values.len() as f64,
            "time levels × z nodes",
        )?;
        Ok(Self { grid, values })
    }

    pub fn level(&self, k: usize) -> ArrayView1<'_, f64> {
        self.values.row(k)
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// Cubic Lagrange interpolation in `z`, linear in `t`.
    pub fn evaluate(&self, t: f64, z: f64) -> Result<f64> {
        let g = &self.grid;
        let tol = 1e-12 * (1.0 + g.horizon().abs());
        if !(t >= g.t(0) - tol && t <= g.horizon() + tol && z >= g.z_min && z <= g.z_max) {
            return Err(Error::OutOfGrid { t, z });
        }
        let ft = ((t - g.t(0)) / g.dt()).clamp(0.0, (g.n_t() - 1) as f64);
        let k = (ft.floor() as usize).min(g.n_t() - 2);
        let wt = ft - k as f64;
        let a = self.interp_z(k, z);
        if wt == 0.0 {
            return Ok(a);
        }
        Ok((1.0 - wt) * a + wt * self.interp_z(k + 1, z))
    }

    /// `evaluate(t, ln x)`.
    pub fn evaluate_x(&self, t: f64, x: f64) -> Result<f64> {
        self.evaluate(t, x.ln())
    }

    fn interp_z(&self, k: usize, z: f64) -> f64 {
        let g = &self.grid;
        let n = g.n_z();
        let s = (z - g.z_min) / g.dz();
        let i = (s.floor() as isize - 1).clamp(0, n as isize - 4) as usize;
        let row = self.values.row(k);
        let mut acc = 0.0;
        for a in 0..4 {
            let mut w = 1.0;
            for b in 0..4 {
                if a != b {
                    w *= (s - (i + b) as f64) / (a as f64 - b as f64);
                }
            }
            acc += w * row[i + a];
        }
        acc
    }
}

/// Backward problem `𝓛_v̄ M = source` on `[0, T)` with `M(T, ·) = terminal`,
/// where `𝓛_v̄ = ∂_t + μ∂_z + ½v̄(t)²(∂_zz - ∂_z)` in `z = ln x`.
#[derive(Debug, Clone)]
pub struct ParabolicProblem {
    pub mu: f64,
    pub vbar: BaselineVol,
    pub source: Surface,
    pub terminal: Vec<f64>,
}

impl ParabolicProblem {
    pub fn homogeneous(mu: f64, vbar: BaselineVol, grid: SpaceTimeGrid, terminal: Vec<f64>) -> Self {
        Self {
            mu,
            vbar,
            source: Surface::zeros(grid),
            terminal,
        }
    }

    pub fn validate(&self, grid: &SpaceTimeGrid) -> Result<()> {
        ensure_domain(self.source.grid == *grid, "source grid", 0.0, "same grid as the solve")?;
        ensure_domain(
            self.terminal.len() == grid.n_z(),
            "terminal length",
            self.terminal.len() as f64,
            "one value per z node",
        )?;
        ensure_domain(self.source.is_finite(), "source", f64::NAN, "finite")?;
        ensure_domain(
            self.terminal.iter().all(|v| v.is_finite()),
            "terminal",
            f64::NAN,
            "finite",
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> SpaceTimeGrid {
        SpaceTimeGrid::centered(50.0, 2.0, 41, 1.0, 11).unwrap()
    }

    #[test]
    fn cubic_interpolation_is_exact_for_cubics() {
        let g = grid();
        let s = Surface::from_fn(g, |t, z| (1.0 + t) * (z * z * z - 2.0 * z + 1.0));
        for (t, z) in [(0.35, 3.9), (0.0, g.z_min() + 0.01), (1.0, g.z_max() - 0.013)] {
            let exact = (1.0 + t) * (z * z * z - 2.0 * z + 1.0);
            assert!((s.evaluate(t, z).unwrap() - exact).abs() < 1e-10);
        }
        assert!(matches!(s.evaluate(1.5, 3.9), Err(Error::OutOfGrid { .. })));
        assert!(s.evaluate(0.5, g.z_max() + 0.1).is_err());
    }

    #[test]
    fn refined_grid_nests() {
        let g = grid();
        let r = g.refined().unwrap();
        assert_eq!(r.n_z(), 81);
        assert_eq!(r.n_t(), 21);
        assert!((r.z(2 * 7) - g.z(7)).abs() < 1e-14);
        assert!((r.t(2 * 3) - g.t(3)).abs() < 1e-14);
    }

    #[test]
    fn grid_validation() {
        assert!(SpaceTimeGrid::centered(50.0, 2.0, 8, 1.0, 11).is_err());
        let g = grid();
        assert!(g.check_contains(50.0).is_ok());
        assert!(g.check_contains(5000.0).is_err());
    }
}
