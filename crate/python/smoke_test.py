"""Smoke test of the fracvol Python module.

Build first: pip install --no-build-isolation ./crates/py
"""

import math

import fracvol


def main():
    assert fracvol.sigma_h_sq(0.5) == 1.0
    assert abs(fracvol.fou_kernel(1.0, 0.5, 0.5) - math.exp(-0.5)) < 1e-12
    assert abs(fracvol.theta(0.0, 1.0, 0.5, 0.5) - 2 * (1 - math.exp(-0.5))) < 1e-10

    paths = fracvol.sample_fbm(0.7, 1.0, 9, 2000, seed=1)
    assert len(paths) == 2000 and all(p[0] == 0.0 for p in paths)
    var = sum(p[-1] ** 2 for p in paths) / len(paths)
    assert abs(var - fracvol.fbm_cov(1.0, 1.0, 0.7)) < 0.15, var

    bs = fracvol.MarketModel.preset("BS", alpha=0.5)
    exact = fracvol.bs_reference(50.0, 50.0, 0.0, 1.0, 0.0, 0.5)
    est = fracvol.price_mc(bs, 50.0, n_paths=20_000, n_steps=8, seed=3)
    assert abs(est.mean - exact) <= 4 * est.stderr, (est, exact)
    assert abs(fracvol.approx_price(bs, 50.0) - exact) < 1e-6

    model = fracvol.MarketModel.stein_stein(0.05, 0.5, 1.0, 1.0, 0.1, -0.5, 0.7, 50.0)
    cv = fracvol.price_mc(model, 50.0, n_paths=20_000, n_steps=32, control=True)
    approx = fracvol.approx_price(model, 50.0, n_z=257, n_t=129)
    print(f"MC {cv.mean:.4f} ± {cv.stderr:.4f}, approximation {approx:.4f}")
    assert abs(cv.mean - approx) < 0.1

    lines, comparison_only = fracvol.residuals(model, 50.0, literal_step2=True)
    assert comparison_only and {name for name, _ in lines} >= {"M1", "M2", "constraint"}

    try:
        fracvol.MarketModel.stein_stein(0.0, 0.5, 1.0, 1.0, 0.1, 0.0, 0.25, 50.0)
    except ValueError as e:
        assert "long-range" in str(e)
    else:
        raise AssertionError("H = 0.25 accepted")

    print("smoke test passed")


if __name__ == "__main__":
    main()
