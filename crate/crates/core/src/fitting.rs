//! Lorentzian-plus-floor fits and noise-thermometry calibration.
//!
//! The fitter is a damped Gauss-Newton (Levenberg-Marquardt) solver over
//! `[floor, ln height, center, ln linewidth]` with an analytic Jacobian.
//! Height and linewidth live in log space so they stay positive.
//!
//! Two weightings are available. [`Weighting::Model`] (the default) weights
//! each squared residual by `1/μ_k²`, refreshing the weights from the current
//! model at every accepted step. Its fixed point is the Gamma-likelihood
//! estimate for averaged periodogram bins, which keeps the floor resolvable
//! when it lies many decades below the peak. [`Weighting::Uniform`] is plain
//! unweighted least squares.

use std::f64::consts::PI;

use nalgebra::{Matrix4, Vector4};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lineshape::LorentzianLine;
use crate::physics::{bose_occupancy, transduction};
use crate::spectrum::{SpectralUnit, Spectrum};
use crate::system::{OptomechSystem, UncalibratedSystem};

/// Minimum number of bins accepted by the fitter.
pub const MIN_BINS: usize = 50;

/// Fractional linewidth deviation tolerated by [`linewidth_guard`].
pub const LINEWIDTH_GUARD_TOLERANCE: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Weighting {
    #[default]
    Model,
    Uniform,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    pub weighting: Weighting,
    pub max_iter: u32,
    /// Relative parameter step below which the fit is converged.
    pub step_tol: f64,
    /// Relative cost decrease below which the fit is converged.
    pub cost_tol: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            weighting: Weighting::Model,
            max_iter: 200,
            step_tol: 1e-10,
            cost_tol: 1e-12,
        }
    }
}

/// Result of a Lorentzian fit. `covariance` is ordered
/// `[floor, height, center, linewidth]` in linear units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LorentzianFit {
    pub floor: f64,
    pub height: f64,
    pub center: f64,
    pub linewidth: f64,
    pub covariance: [[f64; 4]; 4],
    pub n_iter: u32,
    pub converged: bool,
    pub residual_norm: f64,
}

impl LorentzianFit {
    pub fn line(&self) -> LorentzianLine {
        LorentzianLine {
            floor: self.floor,
            height: self.height,
            center: self.center,
            linewidth: self.linewidth,
        }
    }

    /// Standard errors `[floor, height, center, linewidth]`.
    pub fn sigmas(&self) -> [f64; 4] {
        std::array::from_fn(|i| self.covariance[i][i].max(0.0).sqrt())
    }

    pub fn sigma_floor(&self) -> f64 {
        self.sigmas()[0]
    }
    pub fn sigma_height(&self) -> f64 {
        self.sigmas()[1]
    }
    pub fn sigma_center(&self) -> f64 {
        self.sigmas()[2]
    }
    pub fn sigma_linewidth(&self) -> f64 {
        self.sigmas()[3]
    }

    fn unfitted(line: LorentzianLine) -> Self {
        Self {
            floor: line.floor,
            height: line.height,
            center: line.center,
            linewidth: line.linewidth,
            covariance: [[0.0; 4]; 4],
            n_iter: 0,
            converged: false,
            residual_norm: f64::NAN,
        }
    }
}

fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Crossing of `threshold` between bins `a` (above) and `b` (at or below).
fn interpolate_crossing(f: &[f64], v: &[f64], a: usize, b: usize, threshold: f64) -> f64 {
    let t = (v[a] - threshold) / (v[a] - v[b]);
    f[a] + t * (f[b] - f[a])
}

fn guess_points(freqs: &[f64], values: &[f64]) -> LorentzianLine {
    let span = freqs[freqs.len() - 1] - freqs[0];
    let floor = median(values);
    // First maximum wins ties, i.e. the lowest frequency.
    let (peak_idx, peak) = values
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (k, v)| if v > best.1 { (k, v) } else { best });
    let mut height = peak - floor;
    if !(height > 0.0) {
        height = floor.abs().max(f64::MIN_POSITIVE) * 1e-3;
    }
    let threshold = floor + 0.5 * height;

    let left = (0..peak_idx)
        .rev()
        .find(|&k| values[k] <= threshold)
        .map(|k| interpolate_crossing(freqs, values, k + 1, k, threshold));
    let right = (peak_idx + 1..values.len())
        .find(|&k| values[k] <= threshold)
        .map(|k| interpolate_crossing(freqs, values, k - 1, k, threshold));
    let linewidth = match (left, right) {
        (Some(l), Some(r)) if r > l => r - l,
        _ => span / 100.0,
    };
    LorentzianLine {
        floor,
        height,
        center: freqs[peak_idx],
        linewidth,
    }
}

/// Starting point from the data alone: median floor, tallest bin as the
/// center, and the interpolated full width at half maximum.
pub fn initial_guess(spec: &Spectrum) -> Result<LorentzianFit> {
    check_bins(spec.len())?;
    Ok(LorentzianFit::unfitted(guess_points(spec.freqs(), spec.values())))
}

fn check_bins(n: usize) -> Result<()> {
    if n < MIN_BINS {
        return Err(Error::FitRejected(format!(
            "need at least {MIN_BINS} bins, got {n}"
        )));
    }
    Ok(())
}

/// Fits `floor + height/(1 + 4(f-center)²/linewidth²)` to a spectrum with
/// default options.
pub fn fit_lorentzian(spec: &Spectrum, init: Option<&LorentzianFit>) -> Result<LorentzianFit> {
    fit_lorentzian_with(spec, init, &FitOptions::default())
}

pub fn fit_lorentzian_with(
    spec: &Spectrum,
    init: Option<&LorentzianFit>,
    options: &FitOptions,
) -> Result<LorentzianFit> {
    fit_points(spec.freqs(), spec.values(), init.map(LorentzianFit::line), options)
}

/// Fits raw `(freqs, values)` samples, e.g. a measured group-delay trace.
pub fn fit_points(
    freqs: &[f64],
    values: &[f64],
    init: Option<LorentzianLine>,
    options: &FitOptions,
) -> Result<LorentzianFit> {
    if freqs.len() != values.len() {
        return Err(Error::FitRejected("frequency and value lengths differ".into()));
    }
    check_bins(freqs.len())?;
    if freqs.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::FitRejected("frequencies not strictly increasing".into()));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::FitRejected("non-finite spectrum value".into()));
    }
    let start = match init {
        Some(line) if line.height > 0.0 && line.linewidth > 0.0 => line,
        Some(_) => {
            return Err(Error::FitRejected(
                "initial height and linewidth must be positive".into(),
            ))
        }
        None => refine_amplitudes(freqs, values, guess_points(freqs, values), options.weighting),
    };
    Ok(Solver { freqs, values, options }.run(start))
}

/// Re-estimates floor and height by linear (optionally reweighted) least
/// squares with center and linewidth held at the guess.
fn refine_amplitudes(
    freqs: &[f64],
    values: &[f64],
    guess: LorentzianLine,
    weighting: Weighting,
) -> LorentzianLine {
    let mut line = guess;
    let passes = match weighting {
        Weighting::Model => 5,
        Weighting::Uniform => 1,
    };
    for _ in 0..passes {
        let (mut s00, mut s01, mut s11, mut b0, mut b1) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for (&f, &y) in freqs.iter().zip(values) {
            let shape = LorentzianLine { floor: 0.0, height: 1.0, ..line }.evaluate(f);
            let w = match weighting {
                Weighting::Model => line.evaluate(f).powi(-2),
                Weighting::Uniform => 1.0,
            };
            s00 += w;
            s01 += w * shape;
            s11 += w * shape * shape;
            b0 += w * y;
            b1 += w * y * shape;
        }
        let det = s00 * s11 - s01 * s01;
        let floor = (s11 * b0 - s01 * b1) / det;
        let height = (s00 * b1 - s01 * b0) / det;
        if !(det.is_finite() && det > 0.0 && height > 0.0 && floor.is_finite()) {
            break;
        }
        line = LorentzianLine { floor: floor.max(0.0), height, ..line };
    }
    line
}

struct Solver<'a> {
    freqs: &'a [f64],
    values: &'a [f64],
    options: &'a FitOptions,
}

type Params = Vector4<f64>;

fn to_line(p: &Params) -> LorentzianLine {
    LorentzianLine {
        floor: p[0],
        height: p[1].exp(),
        center: p[2],
        linewidth: p[3].exp(),
    }
}

fn from_line(l: &LorentzianLine) -> Params {
    Vector4::new(l.floor, l.height.ln(), l.center, l.linewidth.ln())
}

/// Normal equations at one parameter point.
struct Linearization {
    normal: Matrix4<f64>,
    gradient: Vector4<f64>,
    weights: Vec<f64>,
    cost: f64,
}

impl Solver<'_> {
    fn model(&self, p: &Params) -> Option<Vec<f64>> {
        let line = to_line(p);
        let mu: Vec<f64> = self.freqs.iter().map(|&f| line.evaluate(f)).collect();
        let ok = mu.iter().all(|m| m.is_finite())
            && (self.options.weighting == Weighting::Uniform || mu.iter().all(|&m| m > 0.0));
        ok.then_some(mu)
    }

    fn weighted_cost(&self, mu: &[f64], weights: &[f64]) -> f64 {
        mu.iter()
            .zip(self.values)
            .zip(weights)
            .map(|((m, y), w)| w * (y - m) * (y - m))
            .sum()
    }

    fn linearize(&self, p: &Params, mu: &[f64]) -> Linearization {
        let line = to_line(p);
        let mut normal = Matrix4::zeros();
        let mut gradient = Vector4::zeros();
        let mut weights = Vec::with_capacity(mu.len());
        let mut cost = 0.0;
        for ((&f, &y), &m) in self.freqs.iter().zip(self.values).zip(mu) {
            let w = match self.options.weighting {
                Weighting::Model => 1.0 / (m * m),
                Weighting::Uniform => 1.0,
            };
            let x = 2.0 * (f - line.center) / line.linewidth;
            let l = 1.0 / (1.0 + x * x);
            let hl2 = line.height * l * l;
            let j = Vector4::new(
                1.0,
                line.height * l,
                4.0 * hl2 * x / line.linewidth,
                2.0 * hl2 * x * x,
            );
            let r = y - m;
            normal += (w * j) * j.transpose();
            gradient += (w * r) * j;
            cost += w * r * r;
            weights.push(w);
        }
        Linearization { normal, gradient, weights, cost }
    }

    fn step_is_small(&self, p: &Params, step: &Params) -> bool {
        let tol = self.options.step_tol;
        let height = p[1].exp();
        let linewidth = p[3].exp();
        step[0].abs() <= tol * (p[0].abs() + tol * height)
            && step[1].abs() <= tol
            && step[2].abs() <= tol * (p[2].abs() + linewidth)
            && step[3].abs() <= tol
    }

    fn run(&self, start: LorentzianLine) -> LorentzianFit {
        let opts = self.options;
        let mut p = from_line(&start);
        let Some(mut mu) = self.model(&p) else {
            return LorentzianFit::unfitted(start);
        };
        let mut damping = 1e-3;
        let mut n_iter = 0;
        let mut converged = false;

        'outer: while n_iter < opts.max_iter {
            let lin = self.linearize(&p, &mu);
            if lin.cost == 0.0 {
                converged = true;
                break;
            }
            loop {
                n_iter += 1;
                let step = match solve_damped(&lin.normal, &lin.gradient, damping) {
                    Some(s) => s,
                    None => {
                        damping *= 10.0;
                        if damping > 1e20 || n_iter >= opts.max_iter {
                            break 'outer;
                        }
                        continue;
                    }
                };
                let small = self.step_is_small(&p, &step);
                let trial = p + step;
                let accepted = self.model(&trial).and_then(|trial_mu| {
                    let cost = self.weighted_cost(&trial_mu, &lin.weights);
                    (cost < lin.cost).then_some((trial_mu, cost))
                });
                match accepted {
                    Some((trial_mu, cost)) => {
                        p = trial;
                        mu = trial_mu;
                        damping = (damping / 10.0).max(1e-15);
                        if small || lin.cost - cost <= opts.cost_tol * lin.cost {
                            converged = true;
                            break 'outer;
                        }
                        continue 'outer;
                    }
                    None => {
                        if small {
                            // No representable improvement left.
                            converged = true;
                            break 'outer;
                        }
                        damping *= 10.0;
                        if damping > 1e20 || n_iter >= opts.max_iter {
                            break 'outer;
                        }
                    }
                }
            }
        }
        self.finish(&p, &mu, n_iter, converged)
    }

    fn finish(&self, p: &Params, mu: &[f64], n_iter: u32, converged: bool) -> LorentzianFit {
        let lin = self.linearize(p, mu);
        let n = self.freqs.len();
        let dof = (n - 4) as f64;
        let dispersion = lin.cost / dof;
        let line = to_line(p);
        let internal = invert_scaled(&lin.normal).map(|inv| inv * dispersion);
        // d(linear)/d(internal) is diagonal: [1, height, 1, linewidth].
        let jac = Vector4::new(1.0, line.height, 1.0, line.linewidth);
        let covariance = internal.map(|c| {
            std::array::from_fn(|i| std::array::from_fn(|j| c[(i, j)] * jac[i] * jac[j]))
        });
        let rss: f64 = mu.iter().zip(self.values).map(|(m, y)| (y - m) * (y - m)).sum();
        let residual_norm = (rss / n as f64).sqrt() / line.height;

        let mut fit = LorentzianFit {
            floor: line.floor,
            height: line.height,
            center: line.center,
            linewidth: line.linewidth,
            covariance: covariance.unwrap_or([[f64::NAN; 4]; 4]),
            n_iter,
            converged: converged && covariance.is_some(),
            residual_norm,
        };
        let sigmas = fit.sigmas();
        if fit.floor < 0.0 {
            // A floor within 3σ of zero is reported as zero; a significantly
            // negative floor is inconsistent with a PSD.
            if -fit.floor <= 3.0 * sigmas[0] {
                fit.floor = 0.0;
            } else {
                fit.converged = false;
            }
        }
        let inside = fit.center >= self.freqs[0] && fit.center <= self.freqs[n - 1];
        if !inside || sigmas.iter().any(|s| !s.is_finite()) {
            fit.converged = false;
        }
        fit
    }
}

/// Solves `(A + λ·diag(A)) δ = g` in Jacobi-scaled coordinates.
fn solve_damped(normal: &Matrix4<f64>, gradient: &Vector4<f64>, damping: f64) -> Option<Params> {
    let d = normal.diagonal().map(|v| if v > 0.0 { 1.0 / v.sqrt() } else { 0.0 });
    if d.iter().any(|v| *v == 0.0 || !v.is_finite()) {
        return None;
    }
    let scale = Matrix4::from_diagonal(&d);
    let mut scaled = scale * normal * scale;
    for i in 0..4 {
        scaled[(i, i)] *= 1.0 + damping;
    }
    let rhs = scale * gradient;
    let chol = scaled.cholesky()?;
    let step = scale * chol.solve(&rhs);
    step.iter().all(|v| v.is_finite()).then_some(step)
}

fn invert_scaled(normal: &Matrix4<f64>) -> Option<Matrix4<f64>> {
    let d = normal.diagonal().map(|v| if v > 0.0 { 1.0 / v.sqrt() } else { 0.0 });
    if d.iter().any(|v| *v == 0.0 || !v.is_finite()) {
        return None;
    }
    let scale = Matrix4::from_diagonal(&d);
    let inv = (scale * normal * scale).cholesky()?.inverse();
    let out = scale * inv * scale;
    out.iter().all(|v| v.is_finite()).then_some(out)
}

/// Outcome of noise thermometry on a weak-drive phase spectrum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationResult {
    /// Vacuum coupling rate g₀/2π, Hz.
    pub g0: f64,
    /// One-sigma uncertainty of `g0` propagated from the fit covariance, Hz.
    pub g0_uncertainty: f64,
    /// Phase-to-displacement transduction implied by `g0`, (m²/Hz)/(rad²/Hz).
    pub implied_transduction: f64,
}

/// Calibrates the vacuum coupling rate from the thermal Lorentzian of a
/// weak-drive phase spectrum.
///
/// The floor-subtracted area `(π/2)·height·linewidth` of the phase peak,
/// converted to displacement, must equal the mode variance
/// `x_zp²(2 n_th + 1)`. Solving for g₀ gives
/// `g₀² = (κ² + 4Ω_m²)·A_φ / (64 (2 n_th + 1))` in angular units. Backaction
/// is assumed negligible at the drive power used.
pub fn calibrate_g0(
    spec: &Spectrum,
    sys: &UncalibratedSystem,
    temperature: f64,
) -> Result<CalibrationResult> {
    if spec.unit() != SpectralUnit::Phase {
        return Err(Error::UnitMismatch {
            expected: "phase",
            found: spec.unit().as_str(),
        });
    }
    if !(temperature.is_finite() && temperature > 0.0) {
        return Err(Error::CalibrationRefused(format!(
            "temperature must be > 0, got {temperature}"
        )));
    }
    let fit = fit_lorentzian(spec, None)?;
    calibrate_from_fit(&fit, sys, temperature)
}

/// Calibration step on an existing converged phase-spectrum fit.
pub fn calibrate_from_fit(
    fit: &LorentzianFit,
    sys: &UncalibratedSystem,
    temperature: f64,
) -> Result<CalibrationResult> {
    if !fit.converged {
        return Err(Error::CalibrationRefused("phase spectrum fit did not converge".into()));
    }
    let area = fit.line().area();
    let n_th = bose_occupancy(sys.mech_freq, temperature);
    let kappa = 2.0 * PI * sys.cavity_linewidth;
    let omega_m = 2.0 * PI * sys.mech_freq;
    let g0_sq = (kappa * kappa + 4.0 * omega_m * omega_m) * area / (64.0 * (2.0 * n_th + 1.0));
    if !(g0_sq.is_finite() && g0_sq > 0.0) {
        return Err(Error::CalibrationRefused(format!(
            "implied g0² = {g0_sq} is not positive"
        )));
    }
    let g0 = g0_sq.sqrt() / (2.0 * PI);

    let (h, w) = (fit.height, fit.linewidth);
    let c = &fit.covariance;
    let var_ln_area = c[1][1] / (h * h) + c[3][3] / (w * w) + 2.0 * c[1][3] / (h * w);
    let g0_uncertainty = 0.5 * var_ln_area.max(0.0).sqrt() * g0;

    let calibrated: OptomechSystem = sys.with_coupling(g0)?;
    Ok(CalibrationResult {
        g0,
        g0_uncertainty,
        implied_transduction: transduction(&calibrated),
    })
}

/// True when the fitted linewidth is within 5% of the intrinsic mechanical
/// linewidth, i.e. dynamical backaction is negligible.
pub fn linewidth_guard(fit: &LorentzianFit, sys: &OptomechSystem) -> Result<bool> {
    if !fit.converged {
        return Err(Error::FitRejected(
            "linewidth guard needs a converged fit".into(),
        ));
    }
    let intrinsic = sys.mech_linewidth();
    Ok(((fit.linewidth - intrinsic) / intrinsic).abs() <= LINEWIDTH_GUARD_TOLERANCE)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measurement::{FrequencyGrid, GridSpacing, MeasurementConfig};
    use crate::physics::{displacement_spectrum, model_line};
    use crate::synth::{synthesize, SynthRequest};

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    fn weak_config(sys: &OptomechSystem) -> MeasurementConfig {
        let mut cfg = MeasurementConfig::reference_default(sys, 1e-14);
        cfg.grid = FrequencyGrid::around(sys, 50.0, 4096, GridSpacing::Linear);
        cfg
    }

    fn fake_fit(linewidth: f64, converged: bool) -> LorentzianFit {
        LorentzianFit {
            floor: 1.0,
            height: 1.0,
            center: 9.357e6,
            linewidth,
            covariance: [[0.0; 4]; 4],
            n_iter: 1,
            converged,
            residual_norm: 0.0,
        }
    }

    #[test]
    fn guard_thresholds() {
        let sys = OptomechSystem::reference_device();
        assert!(linewidth_guard(&fake_fit(24.4, true), &sys).unwrap());
        assert!(!linewidth_guard(&fake_fit(25.7, true), &sys).unwrap());
        assert!(linewidth_guard(&fake_fit(23.2, true), &sys).unwrap());
        assert!(linewidth_guard(&fake_fit(24.4, false), &sys).is_err());
    }

    #[test]
    fn guess_on_noise_free_model() {
        let sys = OptomechSystem::reference_device();
        let cfg = weak_config(&sys);
        let spec = displacement_spectrum(&sys, &cfg).unwrap();
        let truth = model_line(&sys, &cfg).unwrap();
        let g = initial_guess(&spec).unwrap();
        assert!(rel(g.floor, truth.floor) < 0.2);
        assert!(rel(g.height, truth.height) < 0.2);
        assert!((g.center - truth.center).abs() < 0.2 * truth.linewidth);
        assert!(rel(g.linewidth, truth.linewidth) < 0.2);
        assert!(!g.converged);
    }

    #[test]
    fn guess_tie_break_and_monotone_fallback() {
        let freqs: Vec<f64> = (0..60).map(|k| k as f64).collect();
        let mut values = vec![1.0; 60];
        values[30] = 5.0;
        values[31] = 5.0;
        let s = Spectrum::new(freqs.clone(), values, SpectralUnit::Phase, 1, None).unwrap();
        assert_eq!(initial_guess(&s).unwrap().center, 30.0);

        let mono: Vec<f64> = (0..60).map(|k| 1.0 + k as f64).collect();
        let s = Spectrum::new(freqs, mono, SpectralUnit::Phase, 1, None).unwrap();
        let g = initial_guess(&s).unwrap();
        assert_eq!(g.linewidth, 59.0 / 100.0);
        assert_eq!(g.center, 59.0);
    }

    #[test]
    fn too_few_bins_rejected() {
        let freqs: Vec<f64> = (0..49).map(|k| k as f64).collect();
        let s = Spectrum::new(freqs, vec![1.0; 49], SpectralUnit::Phase, 1, None).unwrap();
        assert!(matches!(fit_lorentzian(&s, None), Err(Error::FitRejected(_))));
        assert!(initial_guess(&s).is_err());
    }

    #[test]
    fn noise_free_fixed_point() {
        let sys = OptomechSystem::reference_device();
        let cfg = weak_config(&sys);
        let spec = displacement_spectrum(&sys, &cfg).unwrap();
        let truth = model_line(&sys, &cfg).unwrap();
        for weighting in [Weighting::Model, Weighting::Uniform] {
            let opts = FitOptions { weighting, ..FitOptions::default() };
            let fit = fit_lorentzian_with(&spec, None, &opts).unwrap();
            assert!(fit.converged, "{weighting:?}: {fit:?}");
            assert!(rel(fit.floor, truth.floor) < 1e-8);
            assert!(rel(fit.height, truth.height) < 1e-8);
            assert!(rel(fit.center, truth.center) < 1e-8);
            assert!(rel(fit.linewidth, truth.linewidth) < 1e-8);
            assert!(fit.residual_norm < 1e-10);
        }
    }

    #[test]
    fn weak_power_synthetic_linewidth() {
        let sys = OptomechSystem::reference_device();
        let req = SynthRequest::displacement(sys, weak_config(&sys), 1);
        let fit = fit_lorentzian(&synthesize(&req).unwrap(), None).unwrap();
        assert!(fit.converged);
        assert!((fit.linewidth - 24.4).abs() < 3.0 * fit.sigma_linewidth(), "{fit:?}");
    }

    #[test]
    fn flat_spectrum_has_no_significant_peak() {
        let freqs: Vec<f64> = (0..512).map(|k| 1e6 + k as f64).collect();
        let values = crate::synth::apply_averaging_noise(&vec![1e-30; 512], 500, 3).unwrap();
        let s = Spectrum::new(freqs, values, SpectralUnit::Displacement, 500, Some(3)).unwrap();
        let fit = fit_lorentzian(&s, None).unwrap();
        assert!(!fit.converged || fit.height <= 2.0 * fit.sigma_height(), "{fit:?}");
    }

    #[test]
    fn explicit_init_is_used() {
        let sys = OptomechSystem::reference_device();
        let cfg = weak_config(&sys);
        let spec = displacement_spectrum(&sys, &cfg).unwrap();
        let mut init = initial_guess(&spec).unwrap();
        init.linewidth *= 1.5;
        init.center += 3.0;
        let fit = fit_lorentzian(&spec, Some(&init)).unwrap();
        assert!(fit.converged);
        assert!(rel(fit.linewidth, sys.mech_linewidth()) < 1e-8);
        init.height = -1.0;
        assert!(fit_lorentzian(&spec, Some(&init)).is_err());
    }

    #[test]
    fn calibration_refuses_displacement_spectra() {
        let sys = OptomechSystem::reference_device();
        let spec = displacement_spectrum(&sys, &weak_config(&sys)).unwrap();
        assert!(matches!(
            calibrate_g0(&spec, &sys.uncalibrated(), 0.04),
            Err(Error::UnitMismatch { .. })
        ));
    }

    #[test]
    fn calibration_refuses_unconverged_fit() {
        let sys = OptomechSystem::reference_device();
        assert!(matches!(
            calibrate_from_fit(&fake_fit(24.4, false), &sys.uncalibrated(), 0.04),
            Err(Error::CalibrationRefused(_))
        ));
    }

    #[test]
    fn fit_serializes_flat() {
        let v = serde_json::to_value(fake_fit(24.4, true)).unwrap();
        let keys: Vec<&str> = v.as_object().unwrap().keys().map(String::as_str).collect();
        for k in ["floor", "height", "center", "linewidth", "covariance", "n_iter", "converged", "residual_norm"] {
            assert!(keys.contains(&k), "{k}");
        }
    }
}
