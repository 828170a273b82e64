use fracvol::frac_processes::FouParams;
use fracvol::mc_engine::{
    bs_reference, model_presets, price_mc, price_mc_control, price_mc_many, simulate_joint_paths, BaselineVol,
    MarketModel, McConfig, PayoffSpec, Perturbation, PRESET_NAMES,
};

/// `E[(S_T - K)⁺]` for lognormal `S_T` by Simpson quadrature over the
/// standard normal, split at the exercise boundary.
fn lognormal_call_oracle(x: f64, k: f64, tau: f64, mu: f64, sigma: f64) -> f64 {
    let s = sigma * tau.sqrt();
    let terminal = |z: f64| x * ((mu - 0.5 * sigma * sigma) * tau + s * z).exp();
    let density = |z: f64| (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let z_star = ((k / x).ln() - (mu - 0.5 * sigma * sigma) * tau) / s;
    let (a, b) = (z_star.max(-40.0), 40.0);
    let n = 400_000;
    let h = (b - a) / n as f64;
    let f = |z: f64| (terminal(z) - k).max(0.0) * density(z);
    let mut acc = f(a) + f(b);
    for i in 1..n {
        acc += if i % 2 == 1 { 4.0 } else { 2.0 } * f(a + i as f64 * h);
    }
    acc * h / 3.0
}

fn gbm(sigma: f64, mu: f64) -> MarketModel {
    MarketModel {
        mu,
        baseline: BaselineVol::Constant { level: sigma },
        perturbation: Perturbation::Identity,
        gamma: 0.0,
        rho: 0.3,
        fou: FouParams::new(0.5, 0.7).unwrap(),
        x0: 50.0,
    }
}

fn cfg(n_paths: usize, n_steps: usize, seed: u64) -> McConfig {
    McConfig {
        n_paths,
        n_steps,
        seed,
        ..McConfig::default()
    }
}

#[test]
fn closed_form_matches_quadrature_oracle() {
    let v = |s| BaselineVol::Constant { level: s };
    let cases = [(50.0, 50.0, 0.5, 0.0), (50.0, 5.0, 2.5, 0.0), (30.0, 50.0, 0.5, 0.05), (70.0, 40.0, 1.0, -0.02)];
    for (x, k, s, mu) in cases {
        let bs = bs_reference(x, k, 0.0, 1.0, mu, &v(s), false).unwrap();
        let oracle = lognormal_call_oracle(x, k, 1.0, mu, s);
        assert!((bs - oracle).abs() < 1e-6, "{x} {k} {s}: {bs} vs {oracle}");
    }
    let atm = bs_reference(50.0, 50.0, 0.0, 1.0, 0.0, &v(0.5), false).unwrap();
    assert!((atm - 9.871).abs() < 5e-4);
    let high_vol = bs_reference(50.0, 5.0, 0.0, 1.0, 0.0, &v(2.5), false).unwrap();
    assert!((high_vol - 47.4).abs() < 0.05, "{high_vol}");
}

#[test]
fn constant_vol_log_price_is_exactly_gaussian() {
    let (sigma, mu) = (0.4, 0.03);
    let n = 100_000;
    let sim = simulate_joint_paths(&gbm(sigma, mu), 1.0, &cfg(n, 8, 21)).unwrap();
    let d = &sim.diagnostics;
    let mean = 50f64.ln() + mu - 0.5 * sigma * sigma;
    // Antithetic pairs make the sample mean exact up to rounding.
    assert!((d.mean_log_terminal - mean).abs() < 1e-10, "{}", d.mean_log_terminal);
    let var = sigma * sigma;
    let se = var * (2.0 / n as f64).sqrt();
    assert!((d.var_log_terminal - var).abs() < 4.0 * se);
    assert_eq!(d.negative_vol_fraction, 0.0);
}

#[test]
fn gbm_price_is_step_count_independent() {
    let model = gbm(0.5, 0.0);
    let call = PayoffSpec::call(50.0).unwrap();
    let oracle = bs_reference(50.0, 50.0, 0.0, 1.0, 0.0, &model.baseline, false).unwrap();
    for steps in [1, 7, 64] {
        let est = price_mc(&model, &call, 1.0, &cfg(100_000, steps, 5)).unwrap();
        assert!(est.within(oracle, 3.0), "steps {steps}: {est:?} vs {oracle}");
    }
}

#[test]
fn martingale_for_every_preset() {
    // At the tabulated γ = 10 the log-price variance is O(100) and the mean of
    // X_T sits in tails no feasible sample reaches, so γ is capped here.
    for name in PRESET_NAMES {
        let p = model_presets(name).unwrap();
        let gamma = p.model.gamma.min(0.5);
        let p = p.with_gamma(gamma).unwrap();
        let m = &p.model;
        let fwd = m.x0 * (m.mu * p.horizon).exp();
        let est = price_mc(m, &PayoffSpec::call(0.0).unwrap(), p.horizon, &cfg(100_000, 32, 8)).unwrap();
        assert!(est.within(fwd, 4.0), "{name}: {est:?}");
    }
}

#[test]
fn zero_strike_call_and_parity() {
    let mut m = model_presets("FOU_H07").unwrap().model;
    m.gamma = 0.5;
    m.mu = 0.04;
    m.rho = -0.4;
    let payoffs = [
        PayoffSpec::call(0.0).unwrap(),
        PayoffSpec::call(45.0).unwrap(),
        PayoffSpec::put(45.0).unwrap(),
    ];
    let est = price_mc_many(&m, &payoffs, 1.0, &cfg(100_000, 32, 9)).unwrap();
    let fwd = 50.0 * 0.04f64.exp();
    assert!(est[0].within(fwd, 3.0), "{:?}", est[0]);
    let parity = est[1].mean - est[2].mean;
    assert!((parity - (fwd - 45.0)).abs() <= 3.0 * (est[1].stderr + est[2].stderr));
}

#[test]
fn call_prices_monotone_and_convex_in_strike() {
    let m = model_presets("FOU_H09").unwrap().with_gamma(1.0).unwrap().model;
    let strikes: Vec<f64> = (1..=10).map(|k| 5.0 * k as f64).collect();
    let payoffs: Vec<PayoffSpec> = strikes.iter().map(|&k| PayoffSpec::call(k).unwrap()).collect();
    let est = price_mc_many(&m, &payoffs, 1.0, &cfg(50_000, 32, 10)).unwrap();
    for w in est.windows(2) {
        assert!(w[1].mean <= w[0].mean + 3.0 * (w[0].stderr + w[1].stderr));
    }
    for w in est.windows(3) {
        let second = w[0].mean - 2.0 * w[1].mean + w[2].mean;
        assert!(second >= -3.0 * (w[0].stderr + 2.0 * w[1].stderr + w[2].stderr));
    }
}

#[test]
fn estimates_independent_of_thread_count() {
    let m = model_presets("FOU_H07").unwrap().with_gamma(0.3).unwrap().model;
    let call = PayoffSpec::call(50.0).unwrap();
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| price_mc(&m, &call, 1.0, &cfg(20_000, 16, 3)).unwrap())
    };
    let (a, b) = (run(1), run(3));
    assert_eq!(a.mean.to_bits(), b.mean.to_bits());
    assert_eq!(a.stderr.to_bits(), b.stderr.to_bits());
}

#[test]
fn degenerate_presets_match_closed_form() {
    for name in PRESET_NAMES {
        let p = model_presets(name).unwrap().with_gamma(0.0).unwrap().with_alpha(0.5).unwrap();
        let m = &p.model;
        let oracle = bs_reference(m.x0, 50.0, 0.0, p.horizon, m.mu, &m.baseline, false).unwrap();
        let est = price_mc(m, &PayoffSpec::call(50.0).unwrap(), p.horizon, &cfg(100_000, 16, 12)).unwrap();
        assert!(est.within(oracle, 3.0), "{name}: {est:?} vs {oracle}");
    }
}

#[test]
fn antithetic_halves_effective_count() {
    let m = gbm(0.3, 0.0);
    let call = PayoffSpec::call(50.0).unwrap();
    let a = price_mc(&m, &call, 1.0, &cfg(4096, 4, 1)).unwrap();
    assert_eq!(a.n_effective, 2048);
    let plain = McConfig { antithetic: false, ..cfg(4096, 4, 1) };
    assert_eq!(price_mc(&m, &call, 1.0, &plain).unwrap().n_effective, 4096);
}

#[test]
fn reflection_only_changes_negative_vol_paths() {
    let mut m = model_presets("FOU_H07").unwrap().model;
    m.gamma = 0.01;
    let call = PayoffSpec::call(50.0).unwrap();
    let plain = price_mc(&m, &call, 1.0, &cfg(4096, 8, 2)).unwrap();
    let reflected = price_mc(&m, &call, 1.0, &McConfig { reflect_vol: true, ..cfg(4096, 8, 2) }).unwrap();
    assert_eq!(plain, reflected);
}

#[test]
fn control_variate_agrees_with_plain_estimate() {
    let mut m = MarketModel::stein_stein(0.05, 0.5, 1.0, 0.6, 0.1, -0.5, 0.7, 50.0).unwrap();
    for payoff in [PayoffSpec::call(50.0).unwrap(), PayoffSpec::put(45.0).unwrap()] {
        let plain = price_mc(&m, &payoff, 1.0, &cfg(200_000, 32, 3)).unwrap();
        let cv = price_mc_control(&m, &payoff, 1.0, &cfg(200_000, 32, 4)).unwrap();
        let tol = 4.0 * (plain.stderr.powi(2) + cv.stderr.powi(2)).sqrt();
        assert!((plain.mean - cv.mean).abs() < tol, "{plain:?} vs {cv:?}");
        assert!(cv.stderr < 0.5 * plain.stderr, "{plain:?} vs {cv:?}");
    }
    // With γ = 0 the control is the estimate itself.
    m.gamma = 0.0;
    let call = PayoffSpec::call(50.0).unwrap();
    let cv = price_mc_control(&m, &call, 1.0, &cfg(4096, 8, 5)).unwrap();
    assert_eq!(cv.stderr, 0.0);
    let plain = price_mc(&m, &call, 1.0, &cfg(400_000, 8, 5)).unwrap();
    assert!(plain.within(cv.mean, 4.0), "{plain:?} vs {cv:?}");
}

#[test]
fn control_variate_rejects_custom_payoff() {
    let m = gbm(0.3, 0.0);
    let g = PayoffSpec::custom(vec![0.0, 100.0], vec![0.0, 1.0]).unwrap();
    assert!(price_mc_control(&m, &g, 1.0, &cfg(1024, 4, 1)).is_err());
}

#[test]
fn short_memory_models_are_rejected() {
    let err = MarketModel::stein_stein(0.0, 0.5, 1.0, 1.0, 0.1, 0.0, 0.25, 50.0).unwrap_err();
    assert!(matches!(err, fracvol::Error::LongMemoryRequired(h) if h == 0.25));
    let mut m = gbm(0.3, 0.0);
    m.fou = FouParams::new(0.5, 0.3).unwrap();
    let call = PayoffSpec::call(50.0).unwrap();
    assert!(matches!(price_mc(&m, &call, 1.0, &cfg(1024, 4, 1)), Err(fracvol::Error::LongMemoryRequired(_))));
    assert!(MarketModel::stein_stein(0.0, 0.5, 1.0, 1.0, 0.1, 0.0, 0.5, 50.0).is_ok());
}
