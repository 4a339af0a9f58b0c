//! Closed-form noise physics of a continuous linear position measurement.
//!
//! Public inputs and outputs are ordinary frequencies (Hz); each rate is
//! converted to angular units with the `OptomechSystem` accessors before it
//! enters a formula. Spectral densities are single-sided and symmetrized.
//!
//! Lineshape. The measured displacement PSD is the imprecision floor plus a
//! Lorentzian of FWHM `Γ_m/2π` whose peak is `S_zp·(2 n_tot + 1)`, with
//! `n_tot = n_th + n_ba` and `S_zp = 2ħ/(m Ω_m Γ_m)`. For `n_tot = 0` the
//! peak is the zero-point density itself. Its area over ordinary frequency is
//! `x_zp²·(2 n_tot + 1)`, the symmetrized variance of the mode.
//!
//! Backaction occupancy. The ideal added noise is
//! `S_imp + S_ba = (S_zp/2)(P_SQL/P + P/P_SQL)`. Writing the backaction term
//! as heating of the mode, `S_ba = 2 n_ba S_zp`, gives `n_ba = P/(4 P_SQL)`.
//!
//! Detection efficiency η divides the imprecision only; backaction acts on
//! the mode before any detection loss.

use serde::{Deserialize, Serialize};

use crate::constants::{BOLTZMANN, HBAR};
use crate::error::{invalid, Error, Result};
use crate::lineshape::LorentzianLine;
use crate::measurement::MeasurementConfig;
use crate::spectrum::{SpectralUnit, Spectrum};
use crate::system::OptomechSystem;

/// Zero-point displacement `√(ħ/(2 m Ω_m))`, m.
pub fn x_zp(sys: &OptomechSystem) -> f64 {
    (HBAR / (2.0 * sys.mass() * sys.omega_m())).sqrt()
}

/// Bose-Einstein occupancy of the mechanical mode at `temperature` K.
pub fn n_thermal(sys: &OptomechSystem, temperature: f64) -> f64 {
    bose_occupancy(sys.mech_freq(), temperature)
}

/// Bose-Einstein occupancy of a mode at `freq` Hz and `temperature` K.
pub fn bose_occupancy(freq: f64, temperature: f64) -> f64 {
    let x = HBAR * (2.0 * std::f64::consts::PI * freq) / (BOLTZMANN * temperature);
    1.0 / x.exp_m1()
}

/// Drive power at which an ideal measurement reaches the standard quantum
/// limit, `ħ ω_c Γ_m (κ² + 4Ω_m²) / (64 g₀²)`, W.
pub fn p_sql(sys: &OptomechSystem) -> f64 {
    let kappa = sys.kappa();
    let om = sys.omega_m();
    let g0 = sys.g0();
    HBAR * sys.omega_c() * sys.gamma_m() * (kappa * kappa + 4.0 * om * om) / (64.0 * g0 * g0)
}

/// Zero-point displacement PSD at resonance, `2ħ/(m Ω_m Γ_m)`, m²/Hz.
pub fn s_zp(sys: &OptomechSystem) -> f64 {
    2.0 * HBAR / (sys.mass() * sys.omega_m() * sys.gamma_m())
}

/// Imprecision and backaction PSDs at resonance, m²/Hz.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AddedNoise {
    pub s_imp: f64,
    pub s_ba: f64,
}

impl AddedNoise {
    pub fn total(&self) -> f64 {
        self.s_imp + self.s_ba
    }
}

fn check_efficiency(efficiency: f64) -> Result<()> {
    if efficiency > 0.0 && efficiency <= 1.0 {
        Ok(())
    } else {
        Err(invalid(
            "efficiency",
            format!("must lie in (0, 1], got {efficiency}"),
        ))
    }
}

/// Added noise of a phase-quadrature measurement at drive `power` W with
/// homodyne efficiency `efficiency`. With η = 1 this is the ideal trade-off
/// `(S_zp/2)(P_SQL/P + P/P_SQL)`.
pub fn added_noise(sys: &OptomechSystem, power: f64, efficiency: f64) -> Result<AddedNoise> {
    check_efficiency(efficiency)?;
    if !(power.is_finite() && power > 0.0) {
        return Err(invalid(
            "power",
            format!("imprecision diverges unless power > 0, got {power}"),
        ));
    }
    let half_zp = 0.5 * s_zp(sys);
    let psql = p_sql(sys);
    Ok(AddedNoise {
        s_imp: half_zp * (psql / power) / efficiency,
        s_ba: half_zp * (power / psql),
    })
}

/// Power minimizing `S_imp + S_ba` for efficiency η: `P_SQL/√η`, W.
pub fn optimum_power(sys: &OptomechSystem, efficiency: f64) -> Result<f64> {
    check_efficiency(efficiency)?;
    Ok(p_sql(sys) / efficiency.sqrt())
}

/// Backaction phonon occupancy `P/(4 P_SQL)`.
pub fn n_backaction(sys: &OptomechSystem, power: f64) -> f64 {
    power / (4.0 * p_sql(sys))
}

/// Decomposition of the displacement PSD at the mechanical resonance.
///
/// `s_imp` (and hence `s_total`) is `+∞` at zero drive power; it serializes
/// to JSON `null`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseBudget {
    pub s_zp: f64,
    pub s_th: f64,
    pub s_ba: f64,
    pub s_imp: f64,
    pub s_total: f64,
    pub n_th: f64,
    pub n_ba: f64,
}

impl NoiseBudget {
    pub fn evaluate(
        sys: &OptomechSystem,
        power: f64,
        efficiency: f64,
        temperature: f64,
    ) -> Result<Self> {
        check_efficiency(efficiency)?;
        if !(power.is_finite() && power >= 0.0) {
            return Err(invalid("power", format!("must be >= 0, got {power}")));
        }
        if !(temperature.is_finite() && temperature > 0.0) {
            return Err(invalid(
                "temperature",
                format!("must be > 0, got {temperature}"),
            ));
        }
        let zp = s_zp(sys);
        let n_th = n_thermal(sys, temperature);
        let n_ba = n_backaction(sys, power);
        let s_imp = if power > 0.0 {
            added_noise(sys, power, efficiency)?.s_imp
        } else {
            f64::INFINITY
        };
        let s_th = 2.0 * n_th * zp;
        let s_ba = 2.0 * n_ba * zp;
        let motion = zp + s_th + s_ba;
        Ok(Self {
            s_zp: zp,
            s_th,
            s_ba,
            s_imp,
            s_total: motion + s_imp,
            n_th,
            n_ba,
        })
    }

    pub fn for_config(sys: &OptomechSystem, config: &MeasurementConfig) -> Result<Self> {
        Self::evaluate(sys, config.power, config.efficiency, config.temperature)
    }

    /// Actual motion at resonance: zero-point, thermal and backaction.
    pub fn motion(&self) -> f64 {
        self.s_zp + self.s_th + self.s_ba
    }
}

/// Noise-free lineshape of the measured displacement PSD.
pub fn model_line(sys: &OptomechSystem, config: &MeasurementConfig) -> Result<LorentzianLine> {
    if config.power <= 0.0 {
        return Err(invalid(
            "power",
            "the imprecision floor diverges at zero power",
        ));
    }
    let budget = NoiseBudget::for_config(sys, config)?;
    Ok(LorentzianLine {
        floor: budget.s_imp,
        height: budget.motion(),
        center: sys.mech_freq(),
        linewidth: sys.mech_linewidth(),
    })
}

/// Noise-free displacement PSD over the configured grid, m²/Hz.
pub fn displacement_spectrum(sys: &OptomechSystem, config: &MeasurementConfig) -> Result<Spectrum> {
    config.validate()?;
    if !config.grid.contains_resonance(sys) {
        return Err(Error::InvalidGrid(format!(
            "grid [{}, {}] Hz does not contain the mechanical resonance at {} Hz",
            config.grid.freq_start,
            config.grid.freq_stop,
            sys.mech_freq()
        )));
    }
    let line = model_line(sys, config)?;
    let freqs = config.grid.frequencies(sys)?;
    let values = freqs.iter().map(|&f| line.evaluate(f)).collect();
    Spectrum::new(freqs, values, SpectralUnit::Displacement, config.n_avg, None)
}

/// Phase-to-displacement transduction `x_zp² (κ² + 4Ω_m²)/(64 g₀²)`,
/// (m²/Hz)/(rad²/Hz), for an on-resonance drive.
pub fn transduction(sys: &OptomechSystem) -> f64 {
    let kappa = sys.kappa();
    let om = sys.omega_m();
    let g0 = sys.g0();
    x_zp(sys).powi(2) * (kappa * kappa + 4.0 * om * om) / (64.0 * g0 * g0)
}

pub fn phase_to_displacement(sys: &OptomechSystem, s_phi: f64) -> f64 {
    s_phi * transduction(sys)
}

pub fn displacement_to_phase(sys: &OptomechSystem, s_x: f64) -> f64 {
    s_x / transduction(sys)
}

/// Converts a phase PSD to displacement units.
pub fn spectrum_to_displacement(sys: &OptomechSystem, spec: &Spectrum) -> Result<Spectrum> {
    if spec.unit() != SpectralUnit::Phase {
        return Err(Error::UnitMismatch {
            expected: "phase",
            found: spec.unit().as_str(),
        });
    }
    Ok(spec.rescaled(transduction(sys), SpectralUnit::Displacement))
}

/// Converts a displacement PSD to phase units.
pub fn spectrum_to_phase(sys: &OptomechSystem, spec: &Spectrum) -> Result<Spectrum> {
    if spec.unit() != SpectralUnit::Displacement {
        return Err(Error::UnitMismatch {
            expected: "displacement",
            found: spec.unit().as_str(),
        });
    }
    Ok(spec.rescaled(1.0 / transduction(sys), SpectralUnit::Phase))
}

/// Force noise referred through the on-resonance susceptibility,
/// `√S_total(Ω_m) · m Ω_m Γ_m`, N/√Hz. Includes the zero-point term.
pub fn force_sensitivity(sys: &OptomechSystem, config: &MeasurementConfig) -> Result<f64> {
    let budget = NoiseBudget::for_config(sys, config)?;
    Ok(budget.s_total.sqrt() * sys.mass() * sys.omega_m() * sys.gamma_m())
}

/// Group delay of the overcoupled single-port cavity at `probe_freq` Hz,
/// `(4/κ)/(1 + (2Δ/κ)²)` with `Δ` the angular detuning, s.
pub fn group_delay(sys: &OptomechSystem, probe_freq: f64) -> f64 {
    let kappa = sys.kappa();
    let detuning = 2.0 * std::f64::consts::PI * (probe_freq - sys.cavity_freq());
    let x = 2.0 * detuning / kappa;
    (4.0 / kappa) / (1.0 + x * x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measurement::{FrequencyGrid, GridSpacing};
    use crate::system::SystemParams;

    fn reference() -> OptomechSystem {
        OptomechSystem::reference_device()
    }

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn x_zp_scaling_and_unit_case() {
        let sys = reference();
        let heavy = sys.with(|p| p.mass *= 4.0).unwrap();
        assert!(rel(x_zp(&heavy), 0.5 * x_zp(&sys)) < 1e-15);
        let unit = OptomechSystem::new(SystemParams {
            cavity_freq: 1e9,
            cavity_linewidth: 1e6,
            mech_freq: 1.0 / (2.0 * std::f64::consts::PI),
            mech_linewidth: 0.01,
            coupling: 1.0,
            mass: 1.0,
        })
        .unwrap();
        assert!(rel(x_zp(&unit), (HBAR / 2.0).sqrt()) < 1e-14);
    }

    #[test]
    fn n_thermal_limits() {
        let sys = reference();
        assert_eq!(n_thermal(&sys, 1e-8), 0.0);
        let mut last = 0.0;
        for t in [0.001, 0.01, 0.04, 0.1, 1.0, 10.0] {
            let n = n_thermal(&sys, t);
            assert!(n > last);
            last = n;
        }
        // High-temperature expansion n ≈ kT/ħΩ − 1/2.
        let t = 20.0 * HBAR * sys.omega_m() / BOLTZMANN;
        let classical = BOLTZMANN * t / (HBAR * sys.omega_m()) - 0.5;
        assert!((n_thermal(&sys, t) - classical).abs() < 0.01);
    }

    #[test]
    fn p_sql_scalings() {
        let sys = reference();
        let strong = sys.with(|p| p.coupling *= 2.0).unwrap();
        assert!(rel(p_sql(&strong), p_sql(&sys) / 4.0) < 1e-15);
        // κ → 0 limit: ħ ω_c Γ_m Ω_m² / (16 g₀²).
        let narrow = sys.with(|p| p.cavity_linewidth = 1e-3).unwrap();
        let om = narrow.omega_m();
        let g0 = narrow.g0();
        let limit = HBAR * narrow.omega_c() * narrow.gamma_m() * om * om / (16.0 * g0 * g0);
        assert!(rel(p_sql(&narrow), limit) < 1e-12);
    }

    #[test]
    fn s_zp_identities() {
        let sys = reference();
        let identity = 4.0 * x_zp(&sys).powi(2) / sys.gamma_m();
        assert!(rel(s_zp(&sys), identity) < 1e-14);
        let narrow = sys.with(|p| p.mech_linewidth *= 0.5).unwrap();
        assert!(rel(s_zp(&narrow), 2.0 * s_zp(&sys)) < 1e-15);
    }

    #[test]
    fn added_noise_balance_and_errors() {
        let sys = reference();
        let n = added_noise(&sys, p_sql(&sys), 1.0).unwrap();
        assert!(rel(n.s_imp, 0.5 * s_zp(&sys)) < 1e-15);
        assert!(rel(n.s_ba, 0.5 * s_zp(&sys)) < 1e-15);
        assert!(added_noise(&sys, 0.0, 1.0).is_err());
        assert!(added_noise(&sys, 1e-12, 0.0).is_err());
        assert!(added_noise(&sys, 1e-12, 1.01).is_err());
    }

    #[test]
    fn optimum_power_matches_grid_search() {
        let sys = reference();
        for eta in [1.0, 0.3, 0.02] {
            let closed = optimum_power(&sys, eta).unwrap();
            // Log-spaced grid over six decades around P_SQL.
            let psql = p_sql(&sys);
            let n = 600_001;
            let best = (0..n)
                .map(|k| psql * 10f64.powf(-3.0 + 6.0 * k as f64 / (n - 1) as f64))
                .min_by(|a, b| {
                    let ta = added_noise(&sys, *a, eta).unwrap().total();
                    let tb = added_noise(&sys, *b, eta).unwrap().total();
                    ta.total_cmp(&tb)
                })
                .unwrap();
            assert!(rel(best, closed) < 1e-3, "eta={eta}: {best} vs {closed}");
        }
        assert!(rel(optimum_power(&sys, 1.0).unwrap(), p_sql(&sys)) < 1e-15);
    }

    #[test]
    fn n_backaction_zero_power() {
        assert_eq!(n_backaction(&reference(), 0.0), 0.0);
    }

    #[test]
    fn budget_sums_exactly_and_zero_power_sentinel() {
        let sys = reference();
        let b = NoiseBudget::evaluate(&sys, 7.8e-9, 0.02, 0.04).unwrap();
        assert_eq!(b.s_total, b.s_zp + b.s_th + b.s_ba + b.s_imp);
        assert!(rel(b.s_ba, added_noise(&sys, 7.8e-9, 0.02).unwrap().s_ba) < 1e-14);
        let z = NoiseBudget::evaluate(&sys, 0.0, 0.02, 0.04).unwrap();
        assert!(z.s_imp.is_infinite() && z.s_total.is_infinite());
        assert_eq!(z.s_ba, 0.0);
        let json = serde_json::to_value(z).unwrap();
        assert!(json["s_imp"].is_null());
    }

    fn weak_config(sys: &OptomechSystem, power: f64, eta: f64) -> MeasurementConfig {
        MeasurementConfig {
            power,
            efficiency: eta,
            temperature: 0.040,
            n_avg: 1,
            grid: FrequencyGrid::around(sys, 50.0, 2001, GridSpacing::Linear),
        }
    }

    #[test]
    fn spectrum_peak_and_tails() {
        let sys = reference();
        let cfg = weak_config(&sys, 1e-22, 1.0);
        let line = model_line(&sys, &cfg).unwrap();
        let budget = NoiseBudget::for_config(&sys, &cfg).unwrap();
        assert_eq!(line.evaluate(sys.mech_freq()), budget.s_total);
        let expected = 2.0 * n_thermal(&sys, 0.04) + 1.0;
        assert!(rel(line.height / s_zp(&sys), expected) < 1e-6);
        assert!((line.height / s_zp(&sys) - 181.0).abs() < 4.0);
        // Far tail reduces to the floor.
        let far = line.evaluate(sys.mech_freq() + 1e6 * sys.mech_linewidth());
        assert!(rel(far, line.floor) < 1e-6);
    }

    #[test]
    fn ground_state_lineshape() {
        let sys = reference();
        let line = LorentzianLine {
            floor: 0.0,
            height: s_zp(&sys) * (2.0 * 0.0 + 1.0),
            center: sys.mech_freq(),
            linewidth: sys.mech_linewidth(),
        };
        assert_eq!(line.evaluate(sys.mech_freq()), s_zp(&sys));
        // Area equals the zero-point variance.
        assert!(rel(line.area(), x_zp(&sys).powi(2)) < 1e-14);
    }

    #[test]
    fn spectrum_rejects_grid_without_resonance() {
        let sys = reference();
        let mut cfg = weak_config(&sys, 1e-14, 0.02);
        cfg.grid.freq_start = sys.mech_freq() + 10.0;
        cfg.grid.freq_stop = sys.mech_freq() + 1000.0;
        assert!(matches!(
            displacement_spectrum(&sys, &cfg),
            Err(Error::InvalidGrid(_))
        ));
    }

    #[test]
    fn lorentzian_area_identity_on_grid() {
        let sys = reference();
        let mut cfg = weak_config(&sys, 1e-14, 0.02);
        cfg.grid = FrequencyGrid::around(&sys, 100.0, 200_001, GridSpacing::Linear);
        let spec = displacement_spectrum(&sys, &cfg).unwrap();
        let line = model_line(&sys, &cfg).unwrap();
        let area = spec.integrate_above(line.floor);
        let expected = 0.5 * std::f64::consts::PI * sys.mech_linewidth() * line.height;
        assert!(rel(area, expected) < 5e-3, "{area} vs {expected}");
    }

    #[test]
    fn phase_displacement_round_trip() {
        let sys = reference();
        let kappa = sys.kappa();
        let om = sys.omega_m();
        let g0 = sys.g0();
        let s_phi = 64.0 * g0 * g0 / (kappa * kappa + 4.0 * om * om);
        assert!(rel(phase_to_displacement(&sys, s_phi), x_zp(&sys).powi(2)) < 1e-14);
        let cfg = weak_config(&sys, 1e-14, 0.02);
        let spec = displacement_spectrum(&sys, &cfg).unwrap();
        let phase = spectrum_to_phase(&sys, &spec).unwrap();
        assert_eq!(phase.unit(), SpectralUnit::Phase);
        let back = spectrum_to_displacement(&sys, &phase).unwrap();
        for (a, b) in back.values().iter().zip(spec.values()) {
            assert!(rel(*a, *b) < 1e-12);
        }
        assert!(spectrum_to_phase(&sys, &phase).is_err());
        assert!(spectrum_to_displacement(&sys, &spec).is_err());
    }

    #[test]
    fn force_sensitivity_limits() {
        let sys = reference();
        let cfg = weak_config(&sys, 1e-12, 0.02);
        let f1 = force_sensitivity(&sys, &cfg).unwrap();
        let f2 = force_sensitivity(&sys, &cfg.with_power(1e-16)).unwrap();
        assert!(f2 > f1);
        assert!(force_sensitivity(&sys, &cfg.with_power(0.0)).unwrap().is_infinite());
        // Thermal part alone approaches the classical √(4 k_B T m Γ_m).
        let b = NoiseBudget::for_config(&sys, &cfg).unwrap();
        let thermal = b.s_th.sqrt() * sys.mass() * sys.omega_m() * sys.gamma_m();
        let classical = (4.0 * BOLTZMANN * 0.04 * sys.mass() * sys.gamma_m()).sqrt();
        assert!(rel(thermal, classical) < 0.01);
    }

    #[test]
    fn group_delay_shape() {
        let sys = reference();
        let peak = group_delay(&sys, sys.cavity_freq());
        assert!(rel(peak, 4.0 / sys.kappa()) < 1e-15);
        assert!((peak - 60.3e-9).abs() < 0.1e-9);
        let half = group_delay(&sys, sys.cavity_freq() + 0.5 * sys.cavity_linewidth());
        assert!(rel(half, 0.5 * peak) < 1e-12);
        assert!(group_delay(&sys, sys.cavity_freq() + 1e15) < 1e-15 * peak);
    }

    #[test]
    fn operations_are_pure() {
        let sys = reference();
        let cfg = weak_config(&sys, 3e-13, 0.02);
        let a = displacement_spectrum(&sys, &cfg).unwrap();
        let b = displacement_spectrum(&sys, &cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(p_sql(&sys).to_bits(), p_sql(&sys).to_bits());
    }
}
