//! Drive, detection and acquisition settings.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::system::OptomechSystem;

/// How bins are distributed between `start` and `stop`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum GridSpacing {
    /// Uniform resolution bandwidth.
    #[default]
    Linear,
    /// `f = f_m + Γ_m/2π · sinh(u)` with `u` uniform: dense across the
    /// mechanical line, exponentially sparse in the far wings. Needed when
    /// the floor sits many decades below the peak.
    Clustered,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrequencyGrid {
    pub freq_start: f64,
    pub freq_stop: f64,
    pub n_bins: usize,
    #[serde(default)]
    pub spacing: GridSpacing,
}

impl FrequencyGrid {
    /// Grid centered on the mechanical resonance spanning
    /// `±half_span_linewidths` mechanical linewidths.
    pub fn around(
        sys: &OptomechSystem,
        half_span_linewidths: f64,
        n_bins: usize,
        spacing: GridSpacing,
    ) -> Self {
        let half = half_span_linewidths * sys.mech_linewidth();
        Self {
            freq_start: sys.mech_freq() - half,
            freq_stop: sys.mech_freq() + half,
            n_bins,
            spacing,
        }
    }

    /// Default acquisition grid: 4096 clustered bins over ±1 MHz around
    /// the mechanical line (about ±4·10⁴ linewidths for the reference
    /// device), wide enough to see the imprecision floor at the largest
    /// drive powers.
    pub fn default_for(sys: &OptomechSystem) -> Self {
        let half = 1e6_f64.min(0.5 * sys.mech_freq());
        Self {
            freq_start: sys.mech_freq() - half,
            freq_stop: sys.mech_freq() + half,
            n_bins: 4096,
            spacing: GridSpacing::Clustered,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_bins < 2 {
            return Err(Error::InvalidGrid(format!(
                "need at least 2 bins, got {}",
                self.n_bins
            )));
        }
        if !(self.freq_start.is_finite() && self.freq_stop.is_finite()) {
            return Err(Error::InvalidGrid("grid bounds must be finite".into()));
        }
        if self.freq_start < 0.0 || self.freq_start >= self.freq_stop {
            return Err(Error::InvalidGrid(format!(
                "need 0 <= freq_start < freq_stop, got [{}, {}]",
                self.freq_start, self.freq_stop
            )));
        }
        Ok(())
    }

    /// True when the open interval (start, stop) contains the mechanical
    /// resonance.
    pub fn contains_resonance(&self, sys: &OptomechSystem) -> bool {
        self.freq_start < sys.mech_freq() && sys.mech_freq() < self.freq_stop
    }

    /// Bin center frequencies, strictly increasing.
    pub fn frequencies(&self, sys: &OptomechSystem) -> Result<Vec<f64>> {
        self.validate()?;
        let n = self.n_bins;
        let last = (n - 1) as f64;
        let freqs: Vec<f64> = match self.spacing {
            GridSpacing::Linear => {
                let step = (self.freq_stop - self.freq_start) / last;
                (0..n)
                    .map(|k| {
                        if k == n - 1 {
                            self.freq_stop
                        } else {
                            self.freq_start + step * k as f64
                        }
                    })
                    .collect()
            }
            GridSpacing::Clustered => {
                let center = sys.mech_freq();
                let width = sys.mech_linewidth();
                let u0 = ((self.freq_start - center) / width).asinh();
                let u1 = ((self.freq_stop - center) / width).asinh();
                let du = (u1 - u0) / last;
                (0..n)
                    .map(|k| match k {
                        0 => self.freq_start,
                        k if k == n - 1 => self.freq_stop,
                        k => center + width * (u0 + du * k as f64).sinh(),
                    })
                    .collect()
            }
        };
        if freqs.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidGrid(
                "bins are not strictly increasing at f64 resolution".into(),
            ));
        }
        Ok(freqs)
    }
}

/// Settings of one measurement: drive power, detection efficiency, bath
/// temperature and spectrum-analyzer acquisition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasurementConfig {
    /// Drive power at the device, W.
    pub power: f64,
    /// Homodyne efficiency η in (0, 1].
    pub efficiency: f64,
    /// Bath temperature, K.
    pub temperature: f64,
    /// Number of periodogram averages per bin.
    pub n_avg: u64,
    pub grid: FrequencyGrid,
}

impl MeasurementConfig {
    /// Reference conditions: 40 mK, η = 0.02, 500 averages, the default grid,
    /// and the given drive power.
    pub fn reference_default(sys: &OptomechSystem, power: f64) -> Self {
        Self {
            power,
            efficiency: 0.02,
            temperature: 0.040,
            n_avg: 500,
            grid: FrequencyGrid::default_for(sys),
        }
    }

    pub fn with_power(&self, power: f64) -> Self {
        Self { power, ..*self }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.power.is_finite() && self.power >= 0.0) {
            return Err(invalid("power", format!("must be >= 0, got {}", self.power)));
        }
        if !(self.efficiency > 0.0 && self.efficiency <= 1.0) {
            return Err(invalid(
                "efficiency",
                format!("must lie in (0, 1], got {}", self.efficiency),
            ));
        }
        if !(self.temperature.is_finite() && self.temperature > 0.0) {
            return Err(invalid(
                "temperature",
                format!("must be > 0, got {}", self.temperature),
            ));
        }
        if self.n_avg == 0 {
            return Err(invalid("n_avg", "must be a positive integer"));
        }
        self.grid.validate()
    }
}
