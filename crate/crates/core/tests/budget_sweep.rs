//! Power sweeps: determinism, agreement with the closed-form budget, and the
//! crossover from imprecision-limited to backaction-limited operation.

use backaction::budget::{crossover_power, db_ratio, log_spaced, run_sweep, run_sweep_with, SweepOptions};
use backaction::{MeasurementConfig, OptomechSystem};

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

fn powers() -> Vec<f64> {
    log_spaced(10e-15, 7.8e-9, 12)
}

#[test]
fn sweep_is_deterministic() {
    let sys = OptomechSystem::reference_device();
    let cfg = MeasurementConfig::reference_default(&sys, 1e-12);
    let a = run_sweep(&sys, &cfg, &powers(), 17).unwrap();
    let b = run_sweep(&sys, &cfg, &powers(), 17).unwrap();
    assert_eq!(a.to_csv_string(), b.to_csv_string());
    assert_eq!(
        serde_json::to_string(&a.summary().unwrap()).unwrap(),
        serde_json::to_string(&b.summary().unwrap()).unwrap()
    );
    let c = run_sweep(&sys, &cfg, &powers(), 18).unwrap();
    assert_ne!(a.to_csv_string(), c.to_csv_string());
}

#[test]
fn heavily_averaged_points_match_budget() {
    let sys = OptomechSystem::reference_device();
    for (n_avg, tol) in [(1_000_000, 0.01), (100_000, 0.02)] {
        let mut cfg = MeasurementConfig::reference_default(&sys, 1e-12);
        cfg.n_avg = n_avg;
        let sweep = run_sweep(&sys, &cfg, &powers(), 5).unwrap();
        for p in &sweep.points {
            assert!(p.fit.converged && p.guard_ok, "{}", p.power);
            assert!(rel(p.fit.floor, p.budget.s_imp) < tol, "{n_avg} floor at {}", p.power);
            assert!(rel(p.fit.height, p.budget.motion()) < tol, "{n_avg} height at {}", p.power);
        }
    }
}

#[test]
fn top_power_is_deep_in_backaction_regime() {
    let sys = OptomechSystem::reference_device();
    let cfg = MeasurementConfig::reference_default(&sys, 1e-12);
    let sweep = run_sweep(&sys, &cfg, &powers(), 1).unwrap();
    let top = sweep.points.last().unwrap();
    assert!(sweep.flagged_points().is_empty());
    // Zero-point level over apparent imprecision, about 1.6e3.
    let ratio = 0.5 * top.budget.s_zp / top.fit.floor;
    assert!(rel(ratio, 1.6e3) < 0.15, "{ratio}");
    let s = sweep.summary().unwrap();
    assert!((s.top_backaction_over_thermal_db - 24.0).abs() < 1.0);
    assert!((s.top_imprecision_over_zp_db + 35.0).abs() < 1.0);
    assert_eq!(
        s.top_backaction_over_thermal_db,
        db_ratio(top.budget.s_ba, top.budget.s_th).unwrap()
    );
}

#[test]
fn fitted_components_are_monotonic_in_power() {
    let sys = OptomechSystem::reference_device();
    let cfg = MeasurementConfig::reference_default(&sys, 1e-12);
    let sweep = run_sweep(&sys, &cfg, &powers(), 2).unwrap();
    for w in sweep.points.windows(2) {
        assert!(w[1].fit.floor < w[0].fit.floor);
        assert!(w[1].apparent_motion < w[0].apparent_motion);
        assert!(w[1].budget.s_ba > w[0].budget.s_ba);
    }
    // Above the crossover the backaction growth dominates thermal scatter.
    let xo = crossover_power(&sys, &cfg);
    let above: Vec<_> = sweep.points.iter().filter(|p| p.power > xo).collect();
    assert!(above.len() >= 3);
    for w in above.windows(2) {
        assert!(w[1].actual_motion > w[0].actual_motion);
    }
}

#[test]
fn broadened_linewidth_trips_the_guard() {
    let sys = OptomechSystem::reference_device();
    let cfg = MeasurementConfig::reference_default(&sys, 1e-12);
    let ok = run_sweep_with(&sys, &cfg, &powers(), 3, &SweepOptions { linewidth_scale: 1.02 }).unwrap();
    assert!(ok.flagged_points().is_empty());
    let bad = run_sweep_with(&sys, &cfg, &powers(), 3, &SweepOptions { linewidth_scale: 1.2 }).unwrap();
    assert_eq!(bad.flagged_points().len(), powers().len());
    assert!(bad.points.iter().all(|p| p.fit.converged && !p.guard_ok));
}

#[test]
fn sweep_rejects_bad_inputs() {
    let sys = OptomechSystem::reference_device();
    let cfg = MeasurementConfig::reference_default(&sys, 1e-12);
    assert!(run_sweep(&sys, &cfg, &[], 1).is_err());
    assert!(run_sweep(&sys, &cfg, &[1e-12, -1.0], 1).is_err());
    let mut coarse = cfg;
    coarse.grid.n_bins = 10;
    assert!(run_sweep(&sys, &coarse, &[1e-12], 1).is_err());
    assert!(run_sweep_with(&sys, &cfg, &[1e-12], 1, &SweepOptions { linewidth_scale: 0.0 }).is_err());
}
