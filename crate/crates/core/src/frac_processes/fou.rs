use nalgebra::{DMatrix, DMatrixView, SymmetricEigen};
use ndarray::Array2;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use super::{fou_cov, theta_of_remaining, FouParams, GaussianPathBatch, TimeGrid};
use crate::error::{ensure_domain, Error, Result};
use crate::rng::{block_rng, blocks};

/// How the contribution of driver increments before time 0 is sampled.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum FouHistory {
    /// Infinite past: the history term is drawn with covariance
    /// `fou_cov(|t_i - t_j|) - (covariance of the in-grid convolution)`, so the
    /// grid values have exactly the stationary law.
    #[default]
    Stationary,
    /// Moving-average convolution truncated `past_horizon` before time 0.
    Truncated { past_horizon: f64 },
}

/// Eigenvalues below this fraction of the largest are discarded.
const RANK_CUTOFF: f64 = 1e-14;
/// History covariances with an eigenvalue below `-NEG_TOLERANCE · λ_max` are rejected.
const NEG_TOLERANCE: f64 = 1e-8;

/// Exact sampler of the fOU process on a uniform grid starting at 0.
///
/// `Z(t_i) = H_i + Σ_{c<i} w_{i-1-c} ΔB_c`, where `ΔB_c` are the standard
/// Brownian increments of the grid cells, `w_m` is the average of the kernel
/// over `[m·dt, (m+1)·dt]` (so that `w_m dt = ∫ K` over the cell, making
/// `Cov(Z(t_i), ΔB_c)` exact), and `H` is an independent Gaussian vector
/// carrying everything that happened before time 0.
#[derive(Debug, Clone)]
pub struct FouSampler {
    params: FouParams,
    grid: TimeGrid,
    history: FouHistory,
    weights: Vec<f64>,
    /// Row-major `(count × rank)` factor of the history covariance.
    history_factor: Vec<f64>,
    rank: usize,
    /// The same factor as a matrix, for batched fills.
    history_matrix: DMatrix<f64>,
    /// `(count × n)` lower-triangular Toeplitz map from increments to the
    /// in-grid convolution.
    convolution: DMatrix<f64>,
    warnings: Vec<String>,
}

impl FouSampler {
    pub fn new(params: FouParams, grid: TimeGrid, history: FouHistory) -> Result<Self> {
        ensure_domain(grid.start() == 0.0, "grid.start", grid.start(), "start = 0")?;
        let count = grid.count();
        let n = count - 1;
        let dt = grid.step();
        let mut warnings = Vec::new();

        let past_cells = match history {
            FouHistory::Stationary => 0,
            FouHistory::Truncated { past_horizon } => {
                ensure_domain(
                    past_horizon >= 0.0 && past_horizon.is_finite(),
                    "past_horizon",
                    past_horizon,
                    "past_horizon >= 0",
                )?;
                if past_horizon < 10.0 / params.rate() {
                    let msg = format!(
                        "past_horizon {past_horizon} is below 10/a = {}; truncation bias is not negligible",
                        10.0 / params.rate()
                    );
                    log::warn!("{msg}");
                    warnings.push(msg);
                }
                (past_horizon / dt).round() as usize
            }
        };

        let n_weights = n + past_cells;
        let mut cumulative = Vec::with_capacity(n_weights + 1);
        for m in 0..=n_weights {
            cumulative.push(theta_of_remaining(m as f64 * dt, &params)?);
        }
        let all_weights: Vec<f64> = cumulative.windows(2).map(|w| (w[1] - w[0]) / dt).collect();

        let mut cov = DMatrix::<f64>::zeros(count, count);
        match history {
            FouHistory::Stationary => {
                let lags: Vec<f64> = (0..count)
                    .map(|k| fou_cov(k as f64 * dt, &params))
                    .collect::<Result<_>>()?;
                for i in 0..count {
                    for j in 0..=i {
                        // In-grid convolution covariance over the shared cells c < j.
                        let mut shared = 0.0;
                        for c in 0..j {
                            shared += all_weights[i - 1 - c] * all_weights[j - 1 - c];
                        }
                        let v = lags[i - j] - dt * shared;
                        cov[(i, j)] = v;
                        cov[(j, i)] = v;
                    }
                }
            }
            FouHistory::Truncated { .. } => {
                for i in 0..count {
                    for j in 0..=i {
                        let mut s = 0.0;
                        for c in 1..=past_cells {
                            s += all_weights[i + c - 1] * all_weights[j + c - 1];
                        }
                        cov[(i, j)] = dt * s;
                        cov[(j, i)] = dt * s;
                    }
                }
            }
        }

        let (history_factor, rank) = low_rank_factor(cov)?;
        let mut weights = all_weights;
        weights.truncate(n);
        let history_matrix = DMatrix::from_row_slice(count, rank, &history_factor);
        let convolution = DMatrix::from_fn(count, n, |i, c| if c < i { weights[i - 1 - c] } else { 0.0 });
        Ok(Self {
            params,
            grid,
            history,
            weights,
            history_factor,
            rank,
            history_matrix,
            convolution,
            warnings,
        })
    }

    pub fn params(&self) -> FouParams {
        self.params
    }

    pub fn grid(&self) -> TimeGrid {
        self.grid
    }

    pub fn history(&self) -> FouHistory {
        self.history
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    /// Cell-averaged kernel weights `w_0..w_{n-1}`.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Standard normals consumed per path.
    pub fn normals_per_path(&self) -> usize {
        self.rank + self.grid.count() - 1
    }

    /// Maps standard normals to one path: `z` receives the process values at
    /// every grid point and `increments` the driver's Brownian increments.
    /// The map is linear, so negating `normals` negates both outputs.
    pub fn fill_path(&self, normals: &[f64], z: &mut [f64], increments: &mut [f64]) {
        let count = self.grid.count();
        let r = self.rank;
        let sqrt_dt = self.grid.step().sqrt();
        debug_assert_eq!(normals.len(), self.normals_per_path());
        let (hist, drive) = normals.split_at(r);
        for (db, xi) in increments.iter_mut().zip(drive) {
            *db = sqrt_dt * xi;
        }
        for i in 0..count {
            let row = &self.history_factor[i * r..(i + 1) * r];
            let mut v: f64 = row.iter().zip(hist).map(|(a, b)| a * b).sum();
            for c in 0..i {
                v += self.weights[i - 1 - c] * increments[c];
            }
            z[i] = v;
        }
    }

    /// Batched [`fill_path`](Self::fill_path): column `p` of `normals`
    /// (`normals_per_path × m`) gives column `p` of the returned process
    /// values (`count × m`) and driver increments (`n × m`).
    pub fn fill_columns(&self, normals: DMatrixView<'_, f64>) -> (DMatrix<f64>, DMatrix<f64>) {
        let n = self.grid.count() - 1;
        let r = self.rank;
        debug_assert_eq!(normals.nrows(), self.normals_per_path());
        let increments = normals.rows(r, n) * self.grid.step().sqrt();
        let mut z = &self.convolution * &increments;
        if r > 0 {
            z.gemm(1.0, &self.history_matrix, &normals.rows(0, r), 1.0);
        }
        (z, increments)
    }

    pub fn sample(&self, n_paths: usize, seed: u64) -> Result<GaussianPathBatch> {
        ensure_domain(n_paths >= 1, "n_paths", n_paths as f64, "n_paths >= 1")?;
        let count = self.grid.count();
        let n = count - 1;
        let dim = self.normals_per_path();
        let chunks: Vec<(Vec<f64>, Vec<f64>)> = blocks(n_paths)
            .into_par_iter()
            .map(|(b, len)| {
                let mut rng = block_rng(seed, b);
                let mut normals = vec![0.0; dim];
                let mut values = vec![0.0; len * count];
                let mut incs = vec![0.0; len * n];
                for p in 0..len {
                    for x in normals.iter_mut() {
                        *x = rng.sample(StandardNormal);
                    }
                    self.fill_path(
                        &normals,
                        &mut values[p * count..(p + 1) * count],
                        &mut incs[p * n..(p + 1) * n],
                    );
                }
                (values, incs)
            })
            .collect();
        let mut values = Vec::with_capacity(n_paths * count);
        let mut incs = Vec::with_capacity(n_paths * n);
        for (v, i) in chunks {
            values.extend(v);
            incs.extend(i);
        }
        Ok(GaussianPathBatch {
            grid: self.grid,
            values: Array2::from_shape_vec((n_paths, count), values).expect("shape"),
            driver_increments: Some(Array2::from_shape_vec((n_paths, n), incs).expect("shape")),
        })
    }
}

fn low_rank_factor(cov: DMatrix<f64>) -> Result<(Vec<f64>, usize)> {
    let count = cov.nrows();
    let eig = SymmetricEigen::new(cov);
    let max = eig.eigenvalues.iter().cloned().fold(0.0, f64::max);
    let min = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    if max <= 0.0 {
        return Ok((Vec::new(), 0));
    }
    if min < -NEG_TOLERANCE * max {
        return Err(Error::Factorization {
            stage: "history covariance",
            detail: format!("eigenvalue {min:.3e} against largest {max:.3e}"),
        });
    }
    let keep: Vec<usize> = (0..count)
        .filter(|&k| eig.eigenvalues[k] > RANK_CUTOFF * max)
        .collect();
    let rank = keep.len();
    let mut factor = vec![0.0; count * rank];
    for i in 0..count {
        for (col, &k) in keep.iter().enumerate() {
            factor[i * rank + col] = eig.eigenvectors[(i, k)] * eig.eigenvalues[k].sqrt();
        }
    }
    Ok((factor, rank))
}

/// Samples the fOU process on `grid` (starting at 0) together with the
/// Brownian increments of its driver on the grid cells.
pub fn sample_fou(
    params: FouParams,
    grid: TimeGrid,
    history: FouHistory,
    n_paths: usize,
    seed: u64,
) -> Result<GaussianPathBatch> {
    FouSampler::new(params, grid, history)?.sample(n_paths, seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frac_processes::fou_stationary_var;

    #[test]
    fn warns_on_short_history() {
        let p = FouParams::new(0.5, 0.7).unwrap();
        let grid = TimeGrid::spanning(0.0, 1.0, 5).unwrap();
        let s = FouSampler::new(p, grid, FouHistory::Truncated { past_horizon: 5.0 }).unwrap();
        assert_eq!(s.warnings().len(), 1);
        let s = FouSampler::new(p, grid, FouHistory::Truncated { past_horizon: 40.0 }).unwrap();
        assert!(s.warnings().is_empty());
    }

    #[test]
    fn antithetic_symmetry() {
        let p = FouParams::new(0.5, 0.7).unwrap();
        let grid = TimeGrid::spanning(0.0, 1.0, 9).unwrap();
        let s = FouSampler::new(p, grid, FouHistory::Stationary).unwrap();
        let normals: Vec<f64> = (0..s.normals_per_path()).map(|k| (k as f64 * 0.37).sin()).collect();
        let neg: Vec<f64> = normals.iter().map(|x| -x).collect();
        let (mut z1, mut d1) = (vec![0.0; 9], vec![0.0; 8]);
        let (mut z2, mut d2) = (vec![0.0; 9], vec![0.0; 8]);
        s.fill_path(&normals, &mut z1, &mut d1);
        s.fill_path(&neg, &mut z2, &mut d2);
        for (a, b) in z1.iter().zip(&z2) {
            assert_eq!(*a, -*b);
        }
    }

    #[test]
    fn implied_variance_matches_stationary_law() {
        // Variance of Z(t_i) implied by the factor and weights equals σ_ou².
        let p = FouParams::new(0.5, 0.7).unwrap();
        let grid = TimeGrid::spanning(0.0, 1.0, 17).unwrap();
        let s = FouSampler::new(p, grid, FouHistory::Stationary).unwrap();
        let r = s.rank;
        let dt = grid.step();
        for i in 0..grid.count() {
            let hist: f64 = s.history_factor[i * r..(i + 1) * r].iter().map(|x| x * x).sum();
            let recent: f64 = (0..i).map(|c| s.weights[i - 1 - c].powi(2) * dt).sum();
            assert!((hist + recent - fou_stationary_var(&p)).abs() < 1e-9);
        }
    }
}
