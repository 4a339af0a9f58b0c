//! Lorentzian-plus-floor lineshape shared by the model spectra and the fitter.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

/// `floor + height / (1 + 4 (f - center)² / linewidth²)`, with `linewidth`
/// the full width at half maximum in Hz.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LorentzianLine {
    pub floor: f64,
    pub height: f64,
    pub center: f64,
    pub linewidth: f64,
}

impl LorentzianLine {
    #[inline]
    pub fn evaluate(&self, freq: f64) -> f64 {
        let x = 2.0 * (freq - self.center) / self.linewidth;
        self.floor + self.height / (1.0 + x * x)
    }

    /// Floor-subtracted integral over all frequencies, `(π/2)·height·linewidth`.
    pub fn area(&self) -> f64 {
        0.5 * PI * self.height * self.linewidth
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn half_maximum_at_half_linewidth() {
        let l = LorentzianLine { floor: 1.0, height: 4.0, center: 10.0, linewidth: 2.0 };
        assert_eq!(l.evaluate(10.0), 5.0);
        assert_eq!(l.evaluate(11.0), 3.0);
        assert_eq!(l.evaluate(9.0), 3.0);
        assert!((l.evaluate(1e9) - 1.0).abs() < 1e-12);
    }
}
