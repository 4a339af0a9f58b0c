//! `backaction` command-line front end.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 analysis-quality
//! failure (unconverged fit, refused calibration, linewidth guard).

pub mod config;
pub mod quantity;

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::budget::{run_sweep_with, BudgetReport};
use crate::error::{Error, Result};
use crate::fitting::{calibrate_g0, fit_lorentzian};
use crate::rng::derived_seed;
use crate::spectrum::{SpectralUnit, Spectrum};
use crate::synth::{model_spectrum, synthesize, SynthRequest};

pub use config::RunConfig;
use quantity::{parse_quantity, Watt};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_ANALYSIS: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "backaction", version, about = "Optomechanical noise budgets, synthetic spectra and Lorentzian calibration")]
pub struct Cli {
    /// JSON run configuration; defaults to the reference device.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Override the configured seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Override the configured output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Replace the configured power list with a single power (e.g. 7.8nW).
    #[arg(long, global = true)]
    pub power: Option<String>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum UnitArg {
    Displacement,
    Phase,
}

impl From<UnitArg> for SpectralUnit {
    fn from(u: UnitArg) -> Self {
        match u {
            UnitArg::Displacement => SpectralUnit::Displacement,
            UnitArg::Phase => SpectralUnit::Phase,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print the scalar noise budget report as JSON.
    Budget,
    /// Write one spectrum CSV per configured power.
    Simulate {
        #[arg(long, value_enum, default_value = "displacement")]
        unit: UnitArg,
        /// Write the noise-free model instead of a synthetic measurement.
        #[arg(long)]
        noise_free: bool,
    },
    /// Fit a Lorentzian to a spectrum CSV and print the fit as JSON.
    Fit { spectrum: PathBuf },
    /// Calibrate g0 from a weak-drive phase spectrum CSV.
    Calibrate { spectrum: PathBuf },
    /// Run a power sweep and write the sweep table and summary.
    Sweep,
}

/// Resolves the configuration and applies command-line overrides.
pub fn resolve_config(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::from_path(path)?,
        None => RunConfig::reference_default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &cli.out {
        cfg.out_dir = out.clone();
    }
    if let Some(p) = &cli.power {
        let power = parse_quantity::<Watt>(p).map_err(Error::Config)?;
        if !(power.is_finite() && power > 0.0) {
            return Err(Error::Config(format!("--power must be > 0, got {p}")));
        }
        cfg.powers = vec![power];
    }
    Ok(cfg)
}

fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

fn create_out_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)
        .map_err(|e| Error::Config(format!("cannot create output directory {}: {e}", dir.display())))
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents)
        .map_err(|e| Error::Config(format!("cannot write {}: {e}", path.display())))
}

fn read_spectrum(path: &Path) -> Result<Spectrum> {
    let file = fs::File::open(path)
        .map_err(|e| Error::Config(format!("cannot open {}: {e}", path.display())))?;
    Spectrum::read_csv(std::io::BufReader::new(file))
}

/// Text written to stdout plus the exit code of a successful dispatch.
pub struct Outcome {
    pub stdout: String,
    pub stderr: String,
    pub code: i32,
}

impl Outcome {
    fn ok(stdout: String) -> Self {
        Self { stdout, stderr: String::new(), code: EXIT_OK }
    }
}

pub fn cmd_budget(cfg: &RunConfig) -> Result<BudgetReport> {
    let sys = cfg.system()?;
    let powers = cfg.require_powers()?;
    BudgetReport::build(&sys, &cfg.measurement(&sys, powers[0]), powers)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ManifestEntry {
    pub index: usize,
    pub power: f64,
    pub seed: Option<u64>,
    pub path: PathBuf,
}

/// Spectra for every configured power; point `i` uses seed `seed ^ i`.
pub fn simulate_spectra(cfg: &RunConfig, unit: SpectralUnit, noise_free: bool) -> Result<Vec<Spectrum>> {
    let sys = cfg.system()?;
    cfg.require_powers()?
        .iter()
        .enumerate()
        .map(|(i, &power)| {
            let req = SynthRequest {
                system: sys,
                config: cfg.measurement(&sys, power),
                seed: derived_seed(cfg.seed, i as u64),
                unit,
            };
            if noise_free {
                model_spectrum(&req)
            } else {
                synthesize(&req)
            }
        })
        .collect()
}

pub fn spectrum_file_name(index: usize) -> String {
    format!("spectrum_{index:03}.csv")
}

pub fn cmd_simulate(cfg: &RunConfig, unit: SpectralUnit, noise_free: bool) -> Result<Vec<ManifestEntry>> {
    let spectra = simulate_spectra(cfg, unit, noise_free)?;
    create_out_dir(&cfg.out_dir)?;
    spectra
        .iter()
        .zip(&cfg.powers)
        .enumerate()
        .map(|(i, (spec, &power))| {
            let path = cfg.out_dir.join(spectrum_file_name(i));
            write_file(&path, &spec.to_csv_string())?;
            Ok(ManifestEntry { index: i, power, seed: spec.seed(), path })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepOutput {
    pub csv: PathBuf,
    pub summary_json: PathBuf,
    pub summary: crate::budget::SweepSummary,
}

pub fn cmd_sweep(cfg: &RunConfig) -> Result<(crate::budget::SweepResult, SweepOutput)> {
    let sys = cfg.system()?;
    let powers = cfg.require_powers()?;
    let result = run_sweep_with(&sys, &cfg.measurement(&sys, powers[0]), powers, cfg.seed, &cfg.sweep)?;
    let summary = result.summary()?;
    create_out_dir(&cfg.out_dir)?;
    let csv = cfg.out_dir.join("sweep.csv");
    let summary_json = cfg.out_dir.join("sweep_summary.json");
    write_file(&csv, &result.to_csv_string())?;
    write_file(&summary_json, &to_json(&summary)?)?;
    Ok((result, SweepOutput { csv, summary_json, summary }))
}

fn dispatch(cli: &Cli) -> Result<Outcome> {
    match &cli.command {
        Command::Fit { spectrum } => {
            let spec = read_spectrum(spectrum)?;
            let fit = fit_lorentzian(&spec, None)?;
            let mut out = Outcome::ok(to_json(&fit)?);
            if !fit.converged {
                out.stderr = "fit did not converge\n".into();
                out.code = EXIT_ANALYSIS;
            }
            Ok(out)
        }
        command => {
            let cfg = resolve_config(cli)?;
            match command {
                Command::Budget => Ok(Outcome::ok(to_json(&cmd_budget(&cfg)?)?)),
                Command::Simulate { unit, noise_free } => {
                    let manifest = cmd_simulate(&cfg, (*unit).into(), *noise_free)?;
                    Ok(Outcome::ok(to_json(&manifest)?))
                }
                Command::Calibrate { spectrum } => {
                    let spec = read_spectrum(spectrum)?;
                    let result = calibrate_g0(&spec, &cfg.device, cfg.temperature)?;
                    Ok(Outcome::ok(to_json(&result)?))
                }
                Command::Sweep => {
                    let (result, output) = cmd_sweep(&cfg)?;
                    let mut out = Outcome::ok(to_json(&output)?);
                    let flagged = result.flagged_points();
                    if !flagged.is_empty() {
                        let mut msg = String::new();
                        for i in flagged {
                            let p = &result.points[i];
                            msg.push_str(&format!(
                                "flagged point {i}: power {:e} W, converged {}, guard_ok {}, linewidth {:.4} Hz\n",
                                p.power, p.fit.converged, p.guard_ok, p.fit.linewidth
                            ));
                        }
                        out.stderr = msg;
                        out.code = EXIT_ANALYSIS;
                    }
                    Ok(out)
                }
                Command::Fit { .. } => unreachable!("handled above"),
            }
        }
    }
}

fn error_code(e: &Error) -> i32 {
    match e {
        Error::CalibrationRefused(_) => EXIT_ANALYSIS,
        _ => EXIT_USAGE,
    }
}

/// Parses `args` (including the program name), runs the command, and
/// writes to the given streams. Returns the process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { stderr.write_all(text.as_bytes()) } else { stdout.write_all(text.as_bytes()) };
            return code;
        }
    };
    match dispatch(&cli) {
        Ok(out) => {
            let _ = stdout.write_all(out.stdout.as_bytes());
            let _ = stderr.write_all(out.stderr.as_bytes());
            out.code
        }
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            error_code(&e)
        }
    }
}

/// Entry point used by the `backaction` binary.
pub fn main() -> i32 {
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run(std::env::args_os(), &mut stdout.lock(), &mut stderr.lock())
}
