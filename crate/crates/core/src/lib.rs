//! Noise-budget simulation and analysis for continuous linear position
//! measurements in cavity optomechanics.
//!
//! * [`physics`]: closed-form imprecision, backaction, thermal and
//!   zero-point noise, transduction and force sensitivity.
//! * [`synth`]: seeded averaged-periodogram spectra.
//! * [`fitting`]: Lorentzian fits, noise-thermometry calibration of g₀ and
//!   the linewidth guard.
//! * [`budget`]: power sweeps and their apparent/actual motion decomposition.
//! * [`cli`]: the `backaction` command-line front end.

// `!(a > b)` is used on purpose so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod budget;
pub mod cli;
pub mod constants;
pub mod error;
pub mod fitting;
pub mod lineshape;
pub mod measurement;
pub mod physics;
pub mod rng;
pub mod spectrum;
pub mod synth;
pub mod system;

pub use error::{Error, Result};
pub use fitting::{CalibrationResult, LorentzianFit};
pub use lineshape::LorentzianLine;
pub use measurement::{FrequencyGrid, GridSpacing, MeasurementConfig};
pub use physics::NoiseBudget;
pub use spectrum::{SpectralUnit, Spectrum};
pub use synth::SynthRequest;
pub use system::{OptomechSystem, SystemParams, UncalibratedSystem};
