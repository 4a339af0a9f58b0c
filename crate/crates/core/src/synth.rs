//! Seeded synthesis of averaged-periodogram spectra.
//!
//! Every bin of an `n_avg`-fold averaged periodogram of Gaussian noise is
//! Gamma distributed with shape `n_avg` and mean equal to the underlying
//! PSD. Bins are drawn independently (no window leakage).

use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::measurement::MeasurementConfig;
use crate::physics::{displacement_spectrum, spectrum_to_phase};
use crate::rng::bin_stream;
use crate::spectrum::{SpectralUnit, Spectrum};
use crate::system::OptomechSystem;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthRequest {
    pub system: OptomechSystem,
    pub config: MeasurementConfig,
    pub seed: u64,
    /// Unit of the produced spectrum; phase spectra are the raw output of
    /// the homodyne chain.
    pub unit: SpectralUnit,
}

impl SynthRequest {
    pub fn displacement(system: OptomechSystem, config: MeasurementConfig, seed: u64) -> Self {
        Self { system, config, seed, unit: SpectralUnit::Displacement }
    }

    pub fn phase(system: OptomechSystem, config: MeasurementConfig, seed: u64) -> Self {
        Self { system, config, seed, unit: SpectralUnit::Phase }
    }
}

/// Noise-free model spectrum in the requested unit.
pub fn model_spectrum(req: &SynthRequest) -> Result<Spectrum> {
    let spec = displacement_spectrum(&req.system, &req.config)?;
    match req.unit {
        SpectralUnit::Displacement => Ok(spec),
        SpectralUnit::Phase => spectrum_to_phase(&req.system, &spec),
    }
}

/// Draws a noisy spectrum around the model: bin `k` is
/// `model_k · G_k` with `G_k ~ Gamma(n_avg, 1/n_avg)` from stream `(seed, k)`.
pub fn synthesize(req: &SynthRequest) -> Result<Spectrum> {
    if req.config.n_avg == 0 {
        return Err(invalid("n_avg", "must be a positive integer"));
    }
    let model = model_spectrum(req)?;
    let values = apply_averaging_noise(model.values(), req.config.n_avg, req.seed)?;
    Spectrum::new(
        model.freqs().to_vec(),
        values,
        req.unit,
        req.config.n_avg,
        Some(req.seed),
    )
}

/// Multiplies each model bin by an independent unit-mean Gamma variate.
pub fn apply_averaging_noise(model: &[f64], n_avg: u64, seed: u64) -> Result<Vec<f64>> {
    if n_avg == 0 {
        return Err(invalid("n_avg", "must be a positive integer"));
    }
    let shape = n_avg as f64;
    let gamma = Gamma::new(shape, 1.0 / shape)
        .map_err(|e| invalid("n_avg", format!("gamma distribution: {e}")))?;
    Ok(model
        .iter()
        .enumerate()
        .map(|(k, &m)| {
            let mut rng = bin_stream(seed, k as u64);
            m * gamma.sample(&mut rng)
        })
        .collect())
}

/// Relative standard deviation of one averaged bin, `1/√n_avg`.
pub fn relative_bin_sd(n_avg: u64) -> f64 {
    1.0 / (n_avg as f64).sqrt()
}
