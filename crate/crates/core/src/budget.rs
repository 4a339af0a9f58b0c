//! Power sweeps: model budgets, synthetic spectra, fits and their
//! decomposition into apparent motion (fitted floor) and actual motion
//! (fitted Lorentzian height).

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::fitting::{fit_lorentzian, linewidth_guard, LorentzianFit, MIN_BINS};
use crate::measurement::{FrequencyGrid, MeasurementConfig};
use crate::physics::{force_sensitivity, n_thermal, optimum_power, p_sql, s_zp, x_zp, NoiseBudget};
use crate::rng::derived_seed;
use crate::synth::{synthesize, SynthRequest};
use crate::system::OptomechSystem;

/// Model noise budget at resonance for the configured power.
pub fn noise_budget(sys: &OptomechSystem, config: &MeasurementConfig) -> Result<NoiseBudget> {
    NoiseBudget::for_config(sys, config)
}

/// Power at which backaction heating equals the thermal occupancy,
/// `4 n_th P_SQL`, W.
pub fn crossover_power(sys: &OptomechSystem, config: &MeasurementConfig) -> f64 {
    4.0 * n_thermal(sys, config.temperature) * p_sql(sys)
}

/// `10 log₁₀(a/b)`.
pub fn db_ratio(a: f64, b: f64) -> Result<f64> {
    if !(a > 0.0 && b > 0.0) || !a.is_finite() || !b.is_finite() {
        return Err(invalid(
            "db_ratio",
            format!("both arguments must be finite and > 0, got {a} and {b}"),
        ));
    }
    Ok(10.0 * (a / b).log10())
}

/// Acquisition settings shared by every point of a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepSettings {
    pub efficiency: f64,
    pub temperature: f64,
    pub n_avg: u64,
    pub grid: FrequencyGrid,
}

impl From<&MeasurementConfig> for SweepSettings {
    fn from(c: &MeasurementConfig) -> Self {
        Self {
            efficiency: c.efficiency,
            temperature: c.temperature,
            n_avg: c.n_avg,
            grid: c.grid,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepOptions {
    /// Multiplier on the mechanical linewidth of the synthesized spectra,
    /// emulating residual dynamical broadening. `1.0` for none.
    pub linewidth_scale: f64,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self { linewidth_scale: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub power: f64,
    pub seed: u64,
    pub budget: NoiseBudget,
    pub fit: LorentzianFit,
    /// Fitted floor, m²/Hz.
    pub apparent_motion: f64,
    /// Fitted peak height above the floor (zero-point, thermal and
    /// backaction motion), m²/Hz.
    pub actual_motion: f64,
    pub guard_ok: bool,
}

impl SweepPoint {
    pub fn flagged(&self) -> bool {
        !(self.fit.converged && self.guard_ok)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub system: OptomechSystem,
    pub settings: SweepSettings,
    pub seed: u64,
    pub points: Vec<SweepPoint>,
}

pub fn run_sweep(
    sys: &OptomechSystem,
    base_config: &MeasurementConfig,
    powers: &[f64],
    seed: u64,
) -> Result<SweepResult> {
    run_sweep_with(sys, base_config, powers, seed, &SweepOptions::default())
}

/// Synthesizes, fits and decomposes one spectrum per power. Point `i` uses
/// seed `seed ^ i`; points come back in input order and failed fits are
/// kept with `converged = false`.
pub fn run_sweep_with(
    sys: &OptomechSystem,
    base_config: &MeasurementConfig,
    powers: &[f64],
    seed: u64,
    options: &SweepOptions,
) -> Result<SweepResult> {
    if powers.is_empty() {
        return Err(invalid("powers", "sweep needs at least one power"));
    }
    if let Some(p) = powers.iter().find(|p| !(p.is_finite() && **p > 0.0)) {
        return Err(invalid("powers", format!("every power must be > 0, got {p}")));
    }
    base_config.with_power(powers[0]).validate()?;
    if base_config.grid.n_bins < MIN_BINS {
        return Err(Error::InvalidGrid(format!(
            "sweep fits need at least {MIN_BINS} bins, got {}",
            base_config.grid.n_bins
        )));
    }
    if !(options.linewidth_scale.is_finite() && options.linewidth_scale > 0.0) {
        return Err(invalid("linewidth_scale", "must be finite and > 0"));
    }
    let synth_sys = if options.linewidth_scale == 1.0 {
        *sys
    } else {
        sys.with(|p| p.mech_linewidth *= options.linewidth_scale)?
    };

    let points = powers
        .iter()
        .enumerate()
        .map(|(i, &power)| {
            let config = base_config.with_power(power);
            let point_seed = derived_seed(seed, i as u64);
            let spectrum = synthesize(&SynthRequest::displacement(synth_sys, config, point_seed))?;
            let fit = fit_lorentzian(&spectrum, None)?;
            let guard_ok = linewidth_guard(&fit, sys).unwrap_or(false);
            Ok(SweepPoint {
                power,
                seed: point_seed,
                budget: noise_budget(sys, &config)?,
                apparent_motion: fit.floor.max(0.0),
                actual_motion: fit.height.max(0.0),
                guard_ok,
                fit,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(SweepResult {
        system: *sys,
        settings: SweepSettings::from(base_config),
        seed,
        points,
    })
}

pub const SWEEP_CSV_HEADER: &str = "power_w,s_imp_model,s_ba_model,s_th_model,s_zp,floor_fit,height_fit,linewidth_fit,guard_ok,converged";

impl SweepResult {
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "{SWEEP_CSV_HEADER}")?;
        for p in &self.points {
            writeln!(
                out,
                "{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{},{}",
                p.power,
                p.budget.s_imp,
                p.budget.s_ba,
                p.budget.s_th,
                p.budget.s_zp,
                p.fit.floor,
                p.fit.height,
                p.fit.linewidth,
                p.guard_ok,
                p.fit.converged
            )?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("csv output is ASCII")
    }

    pub fn flagged_points(&self) -> Vec<usize> {
        self.points
            .iter()
            .enumerate()
            .filter(|(_, p)| p.flagged())
            .map(|(i, _)| i)
            .collect()
    }

    pub fn summary(&self) -> Result<SweepSummary> {
        let sys = &self.system;
        let config = MeasurementConfig {
            power: self.points[0].power,
            efficiency: self.settings.efficiency,
            temperature: self.settings.temperature,
            n_avg: self.settings.n_avg,
            grid: self.settings.grid,
        };
        let top = self
            .points
            .iter()
            .max_by(|a, b| a.power.total_cmp(&b.power))
            .expect("sweep has points");
        let max_db = |f: &dyn Fn(&NoiseBudget) -> Result<f64>| -> Result<f64> {
            self.points
                .iter()
                .map(|p| f(&p.budget))
                .try_fold(f64::NEG_INFINITY, |acc, v| Ok(acc.max(v?)))
        };
        Ok(SweepSummary {
            p_sql: p_sql(sys),
            optimum_power: optimum_power(sys, self.settings.efficiency)?,
            crossover_power: crossover_power(sys, &config),
            top_power: top.power,
            top_backaction_over_thermal_db: db_ratio(top.budget.s_ba, top.budget.s_th)?,
            top_imprecision_over_zp_db: db_ratio(top.budget.s_imp, top.budget.s_zp)?,
            max_backaction_over_thermal_db: max_db(&|b| db_ratio(b.s_ba, b.s_th))?,
            max_zp_over_imprecision_db: max_db(&|b| db_ratio(b.s_zp, b.s_imp))?,
            n_points: self.points.len(),
            flagged_points: self.flagged_points(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub p_sql: f64,
    pub optimum_power: f64,
    pub crossover_power: f64,
    pub top_power: f64,
    pub top_backaction_over_thermal_db: f64,
    pub top_imprecision_over_zp_db: f64,
    pub max_backaction_over_thermal_db: f64,
    pub max_zp_over_imprecision_db: f64,
    pub n_points: usize,
    pub flagged_points: Vec<usize>,
}

/// Scalar figures of merit at one drive power.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerReport {
    pub power: f64,
    pub budget: NoiseBudget,
    pub backaction_over_thermal_db: f64,
    pub imprecision_over_zp_db: f64,
    /// `(S_zp/2)/S_imp`: how far the imprecision sits below its value at
    /// the ideal standard quantum limit.
    pub sql_imprecision_over_imprecision: f64,
    /// N/√Hz
    pub force_sensitivity: f64,
}

impl PowerReport {
    pub fn evaluate(sys: &OptomechSystem, config: &MeasurementConfig) -> Result<Self> {
        let budget = noise_budget(sys, config)?;
        Ok(Self {
            power: config.power,
            budget,
            backaction_over_thermal_db: db_ratio(budget.s_ba, budget.s_th)?,
            imprecision_over_zp_db: db_ratio(budget.s_imp, budget.s_zp)?,
            sql_imprecision_over_imprecision: 0.5 * budget.s_zp / budget.s_imp,
            force_sensitivity: force_sensitivity(sys, config)?,
        })
    }
}

/// Device-level scalars plus a [`PowerReport`] at the optimum power and at
/// each requested power.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BudgetReport {
    pub system: OptomechSystem,
    pub efficiency: f64,
    pub temperature: f64,
    pub x_zp: f64,
    pub s_zp: f64,
    pub p_sql: f64,
    pub n_th: f64,
    pub optimum_power: f64,
    pub crossover_power: f64,
    pub at_optimum: PowerReport,
    pub powers: Vec<PowerReport>,
}

impl BudgetReport {
    pub fn build(sys: &OptomechSystem, config: &MeasurementConfig, powers: &[f64]) -> Result<Self> {
        let optimum = optimum_power(sys, config.efficiency)?;
        Ok(Self {
            system: *sys,
            efficiency: config.efficiency,
            temperature: config.temperature,
            x_zp: x_zp(sys),
            s_zp: s_zp(sys),
            p_sql: p_sql(sys),
            n_th: n_thermal(sys, config.temperature),
            optimum_power: optimum,
            crossover_power: crossover_power(sys, config),
            at_optimum: PowerReport::evaluate(sys, &config.with_power(optimum))?,
            powers: powers
                .iter()
                .map(|&p| PowerReport::evaluate(sys, &config.with_power(p)))
                .collect::<Result<_>>()?,
        })
    }
}

/// `n` powers spaced evenly in log between `start` and `stop` inclusive.
pub fn log_spaced(start: f64, stop: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![start],
        _ => {
            let (a, b) = (start.ln(), stop.ln());
            (0..n)
                .map(|k| match k {
                    0 => start,
                    k if k == n - 1 => stop,
                    k => (a + (b - a) * k as f64 / (n - 1) as f64).exp(),
                })
                .collect()
        }
    }
}
