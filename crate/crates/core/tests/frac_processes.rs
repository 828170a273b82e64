use fracvol::frac_processes::{
    fbm_cov, fbm_cov_matrix, fou_cov, fou_kernel, fou_stationary_var, psd_cholesky, sample_fbm,
    sample_fou, sigma_h_sq, theta, FbmSampler, FouHistory, FouParams, FouSampler,
    GaussianPathBatch, HurstExponent, TimeGrid,
};
use proptest::prelude::*;
use statrs::function::gamma::gamma;

fn hurst(h: f64) -> HurstExponent {
    HurstExponent::new(h).unwrap()
}

// ---- independent oracles -------------------------------------------------

/// Composite trapezoid of `f` on `[a, b]` with `n` panels.
fn trapezoid(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut s = 0.5 * (f(a) + f(b));
    for k in 1..n {
        s += f(a + k as f64 * h);
    }
    s * h
}

/// Composite Simpson with `n` (even) panels.
fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for k in 1..n {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + k as f64 * h);
    }
    s * h / 3.0
}

/// `K(t)` by brute-force trapezoid on a graded mesh `t - s = t w^5`.
fn kernel_oracle(t: f64, a: f64, h: f64, n: usize) -> f64 {
    let p = h - 0.5;
    let m = 5.0;
    let inner = trapezoid(
        |w| {
            let r = t * w.powf(m);
            r.powf(p) * (-a * (t - r)).exp() * t * m * w.powf(m - 1.0)
        },
        0.0,
        1.0,
        n,
    );
    (t.powf(p) - a * inner) / gamma(h + 0.5)
}

/// `∫_0^τ K(v) dv` by nested quadrature of the kernel definition.
fn theta_oracle(tau: f64, a: f64, h: f64) -> f64 {
    // v = τ y^4 grades the outer mesh toward the origin.
    simpson(
        |y| {
            if y == 0.0 {
                return 0.0;
            }
            let v = tau * y.powi(4);
            kernel_oracle(v, a, h, 4000) * tau * 4.0 * y.powi(3)
        },
        0.0,
        1.0,
        400,
    )
}

/// Stationary covariance from the exponential-integral representation
/// `σ_ou²/Γ(2H+1) [½ ∫ e^{-|v|} |b+v|^{2H} dv - |b|^{2H}]`, `b = a·lag`.
fn fou_cov_exp_form(lag: f64, a: f64, h: f64) -> f64 {
    let b = a * lag;
    let two_h = 2.0 * h;
    let cut = 60.0;
    let right = simpson(|v| (-v).exp() * (b + v).powf(two_h), 0.0, cut, 200_000);
    // |b - v|^{2H} has a kink at v = b; split there.
    let left = simpson(|v| (-v).exp() * (b - v).abs().powf(two_h), 0.0, b, 20_000)
        + simpson(|v| (-v).exp() * (v - b).powf(two_h), b, b + cut, 200_000);
    let var = 0.5 * a.powf(-two_h) * gamma(two_h + 1.0) * sigma_h_sq(hurst(h));
    var / gamma(two_h + 1.0) * (0.5 * (right + left) - b.powf(two_h))
}

// ---- analytic formulas -----------------------------------------------------

#[test]
fn kernel_matches_brute_force_trapezoid() {
    let p = FouParams::new(0.5, 0.7).unwrap();
    let k = fou_kernel(1.0, &p).unwrap();
    let oracle = kernel_oracle(1.0, 0.5, 0.7, 200_000);
    assert!((k - oracle).abs() < 1e-8, "{k} vs {oracle}");
}

#[test]
fn kernel_is_exponential_at_half_on_a_range() {
    for a in [0.5, 2.0] {
        let p = FouParams::new(a, 0.5).unwrap();
        for k in 1..=50 {
            let t = 0.1 * k as f64;
            let v = fou_kernel(t, &p).unwrap();
            assert!((v - (-a * t).exp()).abs() < 1e-12, "t={t}: {v}");
        }
    }
}

#[test]
fn theta_matches_nested_quadrature() {
    let p = FouParams::new(0.5, 0.9).unwrap();
    let th = theta(0.0, 1.0, &p).unwrap();
    let oracle = theta_oracle(1.0, 0.5, 0.9);
    assert!((th - oracle).abs() < 1e-6, "{th} vs {oracle}");
}

#[test]
fn cosine_and_exponential_covariance_forms_agree() {
    let p = FouParams::new(0.5, 0.9).unwrap();
    let c = fou_cov(1.0, &p).unwrap();
    let oracle = fou_cov_exp_form(1.0, 0.5, 0.9);
    assert!((c - oracle).abs() < 1e-6, "{c} vs {oracle}");

    let p7 = FouParams::new(0.5, 0.7).unwrap();
    for lag in [0.01, 0.3, 2.0, 7.5] {
        let c = fou_cov(lag, &p7).unwrap();
        let oracle = fou_cov_exp_form(lag, 0.5, 0.7);
        assert!((c - oracle).abs() < 1e-6, "lag {lag}: {c} vs {oracle}");
    }
}

#[test]
fn markov_covariance_is_exponential() {
    let p = FouParams::new(1.0, 0.5).unwrap();
    let c = fou_cov(2.0, &p).unwrap();
    let expected = (-2.0f64).exp() * fou_stationary_var(&p);
    assert!((c - expected).abs() < 1e-9);
    assert!((expected - 0.06767).abs() < 1e-5);
}

#[test]
fn theta_nonincreasing_in_t() {
    for h in [0.5, 0.7, 0.9] {
        let p = FouParams::new(0.5, h).unwrap();
        let vals: Vec<f64> = (0..=20)
            .map(|k| theta(k as f64 * 0.05, 1.0, &p).unwrap())
            .collect();
        assert!(vals.windows(2).all(|w| w[0] >= w[1]), "H={h}: {vals:?}");
        assert_eq!(*vals.last().unwrap(), 0.0);
    }
}

proptest! {
    #[test]
    fn fbm_cov_symmetric_and_self_similar(
        s in 0.0f64..5.0, t in 0.0f64..5.0, h in 0.05f64..0.95, scale in 0.1f64..10.0
    ) {
        let h = hurst(h);
        prop_assert_eq!(fbm_cov(s, t, h), fbm_cov(t, s, h));
        let lhs = fbm_cov(scale * s, scale * t, h);
        let rhs = scale.powf(2.0 * h.value()) * fbm_cov(s, t, h);
        prop_assert!((lhs - rhs).abs() <= 1e-10 * (1.0 + rhs.abs()));
    }

    #[test]
    fn fbm_covariance_matrices_factor(
        h in 0.05f64..0.95, n in 1usize..=64, step in 0.01f64..2.0
    ) {
        let times: Vec<f64> = (1..=n).map(|k| k as f64 * step).collect();
        let c = fbm_cov_matrix(&times, hurst(h));
        prop_assert!((&c - c.transpose()).abs().max() == 0.0);
        let l = psd_cholesky(&c).unwrap();
        let err = (&l * l.transpose() - &c).abs().max();
        prop_assert!(err <= 1e-9 * c.abs().max());
    }

    #[test]
    fn sigma_h_sq_is_continuous(h in 0.01f64..0.99) {
        let a = sigma_h_sq(hurst(h));
        let b = sigma_h_sq(hurst(h + 1e-7));
        prop_assert!((a - b).abs() < 1e-4 * a);
    }
}

// ---- sampler statistics ----------------------------------------------------

/// Checks every empirical covariance entry of zero-mean paths against
/// `analytic(i, j)` within 4 standard errors.
fn covariance_within_4_se(batch: &GaussianPathBatch, analytic: impl Fn(usize, usize) -> f64) {
    let n = batch.n_paths() as f64;
    let cols = batch.grid.count();
    for i in 0..cols {
        for j in 0..=i {
            let xi = batch.values.column(i);
            let xj = batch.values.column(j);
            let prods: Vec<f64> = xi.iter().zip(xj.iter()).map(|(a, b)| a * b).collect();
            let mean = prods.iter().sum::<f64>() / n;
            let var = prods.iter().map(|p| (p - mean).powi(2)).sum::<f64>() / (n - 1.0);
            let se = (var / n).sqrt();
            let target = analytic(i, j);
            if se == 0.0 {
                assert!((mean - target).abs() < 1e-12);
                continue;
            }
            assert!(
                (mean - target).abs() <= 4.0 * se,
                "entry ({i},{j}): empirical {mean} vs {target} (se {se})"
            );
        }
    }
}

#[test]
fn fbm_brownian_case_covariance() {
    let grid = TimeGrid::spanning(0.0, 1.0, 16).unwrap();
    let batch = sample_fbm(hurst(0.5), grid, 200_000, 11).unwrap();
    let t = grid.points();
    covariance_within_4_se(&batch, |i, j| t[i].min(t[j]));
}

#[test]
fn fbm_fractional_covariance() {
    let grid = TimeGrid::spanning(0.0, 1.0, 16).unwrap();
    let t = grid.points();
    let h = hurst(0.7);
    let batch = sample_fbm(h, grid, 200_000, 12).unwrap();
    covariance_within_4_se(&batch, |i, j| fbm_cov(t[i], t[j], h));
}

#[test]
fn fbm_cholesky_route_has_same_law() {
    let grid = TimeGrid::spanning(0.0, 1.0, 8).unwrap();
    let t = grid.points();
    let h = hurst(0.8);
    let batch = FbmSampler::with_cholesky(h, grid).unwrap().sample(100_000, 5).unwrap();
    covariance_within_4_se(&batch, |i, j| fbm_cov(t[i], t[j], h));
}

#[test]
fn fou_zero_mean_at_every_grid_point() {
    let p = FouParams::new(0.5, 0.7).unwrap();
    let grid = TimeGrid::spanning(0.0, 1.0, 9).unwrap();
    let batch = sample_fou(p, grid, FouHistory::Stationary, 100_000, 3).unwrap();
    let n = batch.n_paths() as f64;
    for col in batch.values.columns() {
        let mean = col.sum() / n;
        let var = col.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        assert!(mean.abs() <= 4.0 * (var / n).sqrt(), "mean {mean}");
    }
}

#[test]
fn fou_markov_truncated_variance() {
    let p = FouParams::new(0.5, 0.5).unwrap();
    let grid = TimeGrid::spanning(0.0, 1.0, 5).unwrap();
    let batch = sample_fou(p, grid, FouHistory::Truncated { past_horizon: 40.0 }, 100_000, 4).unwrap();
    let target = fou_stationary_var(&p);
    let last = batch.values.column(grid.count() - 1);
    let var = last.iter().map(|x| x * x).sum::<f64>() / batch.n_paths() as f64;
    assert!((var / target - 1.0).abs() < 0.02, "{var} vs {target}");
}

#[test]
fn fou_stationary_lag_one_covariance() {
    let p = FouParams::new(0.5, 0.7).unwrap();
    let grid = TimeGrid::new(0.0, 0.25, 5).unwrap();
    let batch = sample_fou(p, grid, FouHistory::Stationary, 100_000, 5).unwrap();
    let c1 = fou_cov(1.0, &p).unwrap();
    let var = fou_stationary_var(&p);
    covariance_within_4_se(&batch, |i, j| {
        if i == j {
            var
        } else {
            fou_cov((i as f64 - j as f64).abs() * 0.25, &p).unwrap()
        }
    });
    assert!(c1 > 0.0 && c1 < var);
}

#[test]
fn fou_driver_increments_have_step_variance() {
    let p = FouParams::new(0.5, 0.7).unwrap();
    let grid = TimeGrid::spanning(0.0, 1.0, 9).unwrap();
    let batch = sample_fou(p, grid, FouHistory::Stationary, 50_000, 6).unwrap();
    let inc = batch.driver_increments.as_ref().unwrap();
    let n = inc.nrows() as f64;
    for col in inc.columns() {
        let var = col.iter().map(|x| x * x).sum::<f64>() / n;
        // Var of the sample variance of N(0, s) is 2 s² / n.
        let se = (2.0 / n).sqrt() * grid.step();
        assert!((var - grid.step()).abs() < 4.0 * se);
    }
}

#[test]
fn truncation_bias_is_what_the_truncated_law_predicts() {
    // With H = 0.7 the kernel decays like a power law, so cutting the past
    // at 40 removes a visible share of the variance.
    let p = FouParams::new(0.5, 0.7).unwrap();
    let grid = TimeGrid::new(0.0, 0.25, 3).unwrap();
    let sampler = FouSampler::new(p, grid, FouHistory::Truncated { past_horizon: 40.0 }).unwrap();
    let batch = sampler.sample(100_000, 8).unwrap();
    let var = batch.values.column(0).iter().map(|x| x * x).sum::<f64>() / 100_000.0;
    let full = fou_stationary_var(&p);
    let deficit = 1.0 - var / full;
    assert!(deficit > 0.005, "truncated variance {var} vs stationary {full}");
}

#[test]
fn samplers_independent_of_thread_count() {
    let p = FouParams::new(0.5, 0.7).unwrap();
    let grid = TimeGrid::spanning(0.0, 1.0, 9).unwrap();
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| {
                let a = sample_fou(p, grid, FouHistory::Stationary, 5000, 9).unwrap();
                let b = sample_fbm(hurst(0.7), grid, 5000, 9).unwrap();
                (a.values, b.values)
            })
    };
    assert_eq!(run(1), run(4));
}
