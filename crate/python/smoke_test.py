"""Smoke test for the backaction_py extension module.

Build and install first, e.g.

    pip install maturin
    maturin build --release -m crates/python/Cargo.toml
    pip install target/wheels/backaction_py-*.whl
"""

import math

import backaction_py as ba


def close(a, b, rel):
    return abs(a - b) <= rel * abs(b)


def main():
    dev = ba.OptomechSystem.reference_device()
    assert close(dev.p_sql(), 91.4e-15, 0.05), dev.p_sql()
    assert close(dev.x_zp(), 3.3e-15, 0.02)
    assert abs(dev.n_thermal(0.040) - 90) <= 2

    p_opt = dev.optimum_power(0.02)
    b = ba.noise_budget(dev, p_opt)
    assert close(b["s_imp"], b["s_ba"], 1e-12)
    assert close(b["s_imp"] / dev.s_zp(), 3.6, 0.10)

    truth = ba.noise_budget(dev, 1e-12)
    clean = ba.synthesize(dev, 1e-12, noise_free=True)
    assert clean.seed is None and len(clean) == 4096
    fit = ba.fit_lorentzian(clean)
    assert fit["converged"] and fit["residual_norm"] < 1e-10
    assert close(fit["floor"], truth["s_imp"], 1e-8)

    spec = ba.synthesize(dev, 1e-12, seed=3)
    again = ba.Spectrum.from_csv(spec.to_csv())
    assert again.values == spec.values and again.seed == 3
    fit = ba.fit_lorentzian(spec)
    sigma = math.sqrt(fit["covariance"][3][3])
    assert abs(fit["linewidth"] - dev.mech_linewidth) < 3 * sigma

    phase = ba.synthesize(dev, 10e-15, seed=4, unit="phase")
    cal = ba.calibrate_g0(phase, dev, 0.040)
    assert abs(cal["g0"] - 230) < 3 * cal["g0_uncertainty"], cal

    try:
        ba.calibrate_g0(spec, dev, 0.040)
    except ValueError as e:
        assert "unit mismatch" in str(e)
    else:
        raise AssertionError("displacement spectrum accepted for calibration")

    points = ba.sweep(dev, ba.log_spaced(10e-15, 7.8e-9, 6))
    floors = [p["fit"]["floor"] for p in points]
    assert all(b < a for a, b in zip(floors, floors[1:]))
    assert all(p["guard_ok"] for p in points)

    try:
        ba.OptomechSystem(1, 1, 1, 2, 1, 1)
    except ValueError:
        pass
    else:
        raise AssertionError("linewidth above frequency accepted")

    print("backaction_py smoke test passed")


if __name__ == "__main__":
    main()
