use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use ndarray::Array2;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use super::{fbm_cov, sigma_h_sq, GaussianPathBatch, HurstExponent, TimeGrid};
use crate::error::{ensure_domain, Error, Result};
use crate::rng::{block_rng, blocks};

/// Covariance matrix of `B^H` at the given times.
pub fn fbm_cov_matrix(times: &[f64], h: HurstExponent) -> DMatrix<f64> {
    let n = times.len();
    DMatrix::from_fn(n, n, |i, j| fbm_cov(times[i], times[j], h))
}

/// Lower-triangular factor `L` with `L Lᵀ = A` for a symmetric positive
/// semidefinite `A`.
///
/// Pivots below `1e-13 · max diag` are treated as zero (their column is
/// dropped), which lets rank-deficient covariance matrices factor.
pub fn psd_cholesky(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    if n != a.ncols() {
        return Err(Error::Factorization {
            stage: "cholesky",
            detail: format!("matrix is {}x{}", n, a.ncols()),
        });
    }
    let scale = (0..n).map(|i| a[(i, i)].abs()).fold(0.0, f64::max);
    let tiny = 1e-13 * scale.max(f64::MIN_POSITIVE);
    let mut l = DMatrix::<f64>::zeros(n, n);
    for j in 0..n {
        let mut d = a[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if d < -1e-9 * scale {
            return Err(Error::Factorization {
                stage: "cholesky",
                detail: format!("negative pivot {d:.3e} at column {j}"),
            });
        }
        if d <= tiny {
            continue;
        }
        let pivot = d.sqrt();
        l[(j, j)] = pivot;
        for i in j + 1..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / pivot;
        }
    }
    Ok(l)
}

/// Which exact method an [`FbmSampler`] ended up using.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FbmMethod {
    CirculantEmbedding,
    Cholesky,
}

enum Engine {
    Circulant {
        /// `sqrt(λ_k / m)` for the circulant eigenvalues `λ_k`.
        scales: Vec<f64>,
        fft: Arc<dyn Fft<f64>>,
    },
    Cholesky {
        factor: DMatrix<f64>,
    },
}

/// Exact sampler of fBm on a uniform grid starting at 0.
///
/// Fractional Gaussian noise is generated by circulant embedding of its
/// Toeplitz covariance; if the embedding has materially negative eigenvalues
/// the sampler falls back to a Cholesky factor of the path covariance.
pub struct FbmSampler {
    hurst: HurstExponent,
    grid: TimeGrid,
    engine: Engine,
}

impl std::fmt::Debug for FbmSampler {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FbmSampler")
            .field("hurst", &self.hurst)
            .field("grid", &self.grid)
            .field("method", &self.method())
            .finish()
    }
}

fn fgn_autocov(k: usize, h: HurstExponent, step: f64) -> f64 {
    let two_h = 2.0 * h.value();
    let k = k as f64;
    0.5 * sigma_h_sq(h)
        * step.powf(two_h)
        * ((k + 1.0).powf(two_h) - 2.0 * k.powf(two_h) + (k - 1.0).abs().powf(two_h))
}

impl FbmSampler {
    pub fn new(hurst: HurstExponent, grid: TimeGrid) -> Result<Self> {
        ensure_domain(grid.start() == 0.0, "grid.start", grid.start(), "start = 0")?;
        let n = grid.count() - 1;
        let engine = match Self::circulant(hurst, grid.step(), n) {
            Some(engine) => engine,
            None => {
                let times: Vec<f64> = grid.points()[1..].to_vec();
                let factor = psd_cholesky(&fbm_cov_matrix(&times, hurst)).map_err(|e| {
                    Error::Factorization {
                        stage: "cholesky fallback after circulant embedding",
                        detail: e.to_string(),
                    }
                })?;
                Engine::Cholesky { factor }
            }
        };
        Ok(Self {
            hurst,
            grid,
            engine,
        })
    }

    /// Forces the Cholesky route (used to cross-check the embedding).
    pub fn with_cholesky(hurst: HurstExponent, grid: TimeGrid) -> Result<Self> {
        ensure_domain(grid.start() == 0.0, "grid.start", grid.start(), "start = 0")?;
        let times: Vec<f64> = grid.points()[1..].to_vec();
        let factor = psd_cholesky(&fbm_cov_matrix(&times, hurst))?;
        Ok(Self {
            hurst,
            grid,
            engine: Engine::Cholesky { factor },
        })
    }

    fn circulant(h: HurstExponent, step: f64, n: usize) -> Option<Engine> {
        if n == 0 {
            return None;
        }
        let m = 2 * n;
        let mut row: Vec<Complex<f64>> = (0..m)
            .map(|j| {
                let k = if j <= n { j } else { m - j };
                Complex::new(fgn_autocov(k, h, step), 0.0)
            })
            .collect();
        let mut planner = FftPlanner::new();
        let fft = planner.plan_fft_forward(m);
        fft.process(&mut row);
        let max = row.iter().map(|c| c.re).fold(0.0, f64::max);
        let min = row.iter().map(|c| c.re).fold(f64::INFINITY, f64::min);
        if min < -1e-10 * max {
            return None;
        }
        let scales = row
            .iter()
            .map(|c| (c.re.max(0.0) / m as f64).sqrt())
            .collect();
        Some(Engine::Circulant { scales, fft })
    }

    pub fn method(&self) -> FbmMethod {
        match self.engine {
            Engine::Circulant { .. } => FbmMethod::CirculantEmbedding,
            Engine::Cholesky { .. } => FbmMethod::Cholesky,
        }
    }

    pub fn grid(&self) -> TimeGrid {
        self.grid
    }

    /// Fills `out` (`paths × grid points`) with independent paths.
    fn fill_block<R: Rng>(&self, rng: &mut R, out: &mut [f64], n_paths: usize) {
        let count = self.grid.count();
        let n = count - 1;
        match &self.engine {
            Engine::Circulant { scales, fft } => {
                let m = scales.len();
                let mut buf = vec![Complex::new(0.0, 0.0); m];
                let mut scratch = vec![Complex::new(0.0, 0.0); fft.get_inplace_scratch_len()];
                let mut p = 0;
                while p < n_paths {
                    for (b, s) in buf.iter_mut().zip(scales) {
                        let re: f64 = rng.sample(StandardNormal);
                        let im: f64 = rng.sample(StandardNormal);
                        *b = Complex::new(re * s, im * s);
                    }
                    fft.process_with_scratch(&mut buf, &mut scratch);
                    // Real and imaginary parts are independent exact fGn samples.
                    for part in 0..2 {
                        if p >= n_paths {
                            break;
                        }
                        let row = &mut out[p * count..(p + 1) * count];
                        row[0] = 0.0;
                        let mut acc = 0.0;
                        for k in 0..n {
                            acc += if part == 0 { buf[k].re } else { buf[k].im };
                            row[k + 1] = acc;
                        }
                        p += 1;
                    }
                }
            }
            Engine::Cholesky { factor } => {
                for p in 0..n_paths {
                    let xi = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
                    let vals = factor * xi;
                    let row = &mut out[p * count..(p + 1) * count];
                    row[0] = 0.0;
                    row[1..].copy_from_slice(vals.as_slice());
                }
            }
        }
    }

    pub fn sample(&self, n_paths: usize, seed: u64) -> Result<GaussianPathBatch> {
        ensure_domain(n_paths >= 1, "n_paths", n_paths as f64, "n_paths >= 1")?;
        let count = self.grid.count();
        let chunks: Vec<Vec<f64>> = blocks(n_paths)
            .into_par_iter()
            .map(|(b, len)| {
                let mut rng = block_rng(seed, b);
                let mut out = vec![0.0; len * count];
                self.fill_block(&mut rng, &mut out, len);
                out
            })
            .collect();
        let flat: Vec<f64> = chunks.into_iter().flatten().collect();
        let values = Array2::from_shape_vec((n_paths, count), flat)
            .expect("block sizes add up to n_paths");
        Ok(GaussianPathBatch {
            grid: self.grid,
            values,
            driver_increments: None,
        })
    }
}

/// Exact fBm paths on `grid` (which must start at 0), reproducible for a
/// fixed `(seed, n_paths, grid)` regardless of thread count.
pub fn sample_fbm(
    h: HurstExponent,
    grid: TimeGrid,
    n_paths: usize,
    seed: u64,
) -> Result<GaussianPathBatch> {
    FbmSampler::new(h, grid)?.sample(n_paths, seed)
}
