//! Run configuration files.
//!
//! ```json
//! {
//!   "system": {
//!     "cavity_freq": "6.707GHz", "cavity_linewidth": "10.56MHz",
//!     "mech_freq": "9.357MHz", "mech_linewidth": 24.4,
//!     "coupling": "230Hz", "mass": "85pg"
//!   },
//!   "measurement": {
//!     "powers": ["10fW", "7.8nW"], "efficiency": 0.02,
//!     "temperature_K": "40mK", "n_avg": 500,
//!     "grid": { "freq_start": 8.357e6, "freq_stop": 10.357e6,
//!               "n_bins": 4096, "spacing": "clustered" }
//!   },
//!   "sweep": { "linewidth_scale": 1.0 },
//!   "seed": 1,
//!   "out_dir": "out"
//! }
//! ```
//!
//! Unknown keys are errors. `coupling` may be omitted only for `calibrate`.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use super::quantity::{Hertz, Kelvin, Kilogram, Quantity, Watt};
use crate::budget::{log_spaced, SweepOptions};
use crate::error::{Error, Result};
use crate::measurement::{FrequencyGrid, GridSpacing, MeasurementConfig};
use crate::system::{OptomechSystem, UncalibratedSystem};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSystem {
    cavity_freq: Quantity<Hertz>,
    cavity_linewidth: Quantity<Hertz>,
    mech_freq: Quantity<Hertz>,
    mech_linewidth: Quantity<Hertz>,
    #[serde(default)]
    coupling: Option<Quantity<Hertz>>,
    mass: Quantity<Kilogram>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGrid {
    freq_start: Quantity<Hertz>,
    freq_stop: Quantity<Hertz>,
    n_bins: usize,
    #[serde(default)]
    spacing: GridSpacing,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMeasurement {
    #[serde(default)]
    power: Option<Quantity<Watt>>,
    #[serde(default)]
    powers: Option<Vec<Quantity<Watt>>>,
    efficiency: f64,
    #[serde(rename = "temperature_K")]
    temperature: Quantity<Kelvin>,
    #[serde(default)]
    n_avg: Option<u64>,
    #[serde(default)]
    grid: Option<RawGrid>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSweep {
    #[serde(default)]
    linewidth_scale: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    system: RawSystem,
    measurement: RawMeasurement,
    #[serde(default)]
    sweep: Option<RawSweep>,
    #[serde(default)]
    seed: Option<u64>,
    #[serde(default)]
    out_dir: Option<PathBuf>,
}

/// A fully parsed run configuration, SI units throughout.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub device: UncalibratedSystem,
    /// g₀/2π in Hz; absent before calibration.
    pub coupling: Option<f64>,
    pub powers: Vec<f64>,
    pub efficiency: f64,
    pub temperature: f64,
    pub n_avg: u64,
    /// `None` selects [`FrequencyGrid::default_for`] the device.
    pub grid: Option<FrequencyGrid>,
    pub sweep: SweepOptions,
    pub seed: u64,
    pub out_dir: PathBuf,
}

pub const DEFAULT_SEED: u64 = 1;
pub const DEFAULT_N_AVG: u64 = 500;

impl RunConfig {
    /// The reference device at 40 mK with η = 0.02, swept over 12 powers
    /// log-spaced from 10 fW to 7.8 nW.
    pub fn reference_default() -> Self {
        let sys = OptomechSystem::reference_device();
        Self {
            device: sys.uncalibrated(),
            coupling: Some(sys.coupling()),
            powers: log_spaced(10e-15, 7.8e-9, 12),
            efficiency: 0.02,
            temperature: 0.040,
            n_avg: DEFAULT_N_AVG,
            grid: None,
            sweep: SweepOptions::default(),
            seed: DEFAULT_SEED,
            out_dir: PathBuf::from("out"),
        }
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let raw: RawConfig = serde_json::from_str(text).map_err(|e| Error::Parse {
            line: e.line(),
            message: e.to_string(),
        })?;
        Self::from_raw(raw)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json_str(&text)
    }

    fn from_raw(raw: RawConfig) -> Result<Self> {
        let s = raw.system;
        let device = UncalibratedSystem {
            cavity_freq: s.cavity_freq.get(),
            cavity_linewidth: s.cavity_linewidth.get(),
            mech_freq: s.mech_freq.get(),
            mech_linewidth: s.mech_linewidth.get(),
            mass: s.mass.get(),
        };
        let coupling = s.coupling.map(Quantity::get);
        // Validates every field except the coupling.
        device.with_coupling(coupling.unwrap_or(1.0))?;

        let m = raw.measurement;
        let powers = match (m.power, m.powers) {
            (Some(_), Some(_)) => {
                return Err(Error::Config(
                    "give either measurement.power or measurement.powers, not both".into(),
                ))
            }
            (Some(p), None) => vec![p.get()],
            (None, Some(ps)) => ps.into_iter().map(Quantity::get).collect(),
            (None, None) => Vec::new(),
        };
        let grid = m.grid.map(|g| FrequencyGrid {
            freq_start: g.freq_start.get(),
            freq_stop: g.freq_stop.get(),
            n_bins: g.n_bins,
            spacing: g.spacing,
        });
        let cfg = Self {
            device,
            coupling,
            powers,
            efficiency: m.efficiency,
            temperature: m.temperature.get(),
            n_avg: m.n_avg.unwrap_or(DEFAULT_N_AVG),
            grid,
            sweep: SweepOptions {
                linewidth_scale: raw
                    .sweep
                    .and_then(|s| s.linewidth_scale)
                    .unwrap_or(1.0),
            },
            seed: raw.seed.unwrap_or(DEFAULT_SEED),
            out_dir: raw.out_dir.unwrap_or_else(|| PathBuf::from("out")),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<()> {
        if let Some(p) = self.powers.iter().find(|p| !(p.is_finite() && **p > 0.0)) {
            return Err(Error::Config(format!("every power must be > 0 W, got {p}")));
        }
        let probe = MeasurementConfig {
            power: self.powers.first().copied().unwrap_or(0.0),
            efficiency: self.efficiency,
            temperature: self.temperature,
            n_avg: self.n_avg,
            grid: self.grid.unwrap_or(FrequencyGrid {
                freq_start: 0.0,
                freq_stop: 1.0,
                n_bins: 2,
                spacing: GridSpacing::Linear,
            }),
        };
        probe.validate()
    }

    /// Fully specified device; fails when the coupling is not configured.
    pub fn system(&self) -> Result<OptomechSystem> {
        let g0 = self.coupling.ok_or_else(|| {
            Error::Config("system.coupling is required for this command".into())
        })?;
        self.device.with_coupling(g0)
    }

    pub fn require_powers(&self) -> Result<&[f64]> {
        if self.powers.is_empty() {
            Err(Error::Config(
                "measurement.power or measurement.powers is required for this command".into(),
            ))
        } else {
            Ok(&self.powers)
        }
    }

    /// Measurement settings at `power` for the given device.
    pub fn measurement(&self, sys: &OptomechSystem, power: f64) -> MeasurementConfig {
        MeasurementConfig {
            power,
            efficiency: self.efficiency,
            temperature: self.temperature,
            n_avg: self.n_avg,
            grid: self.grid.unwrap_or_else(|| FrequencyGrid::default_for(sys)),
        }
    }
}
