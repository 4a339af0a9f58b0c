//! Device parameters of a single-mode cavity optomechanical system.
//!
//! All rates are stored and reported as ordinary frequencies in Hz. The
//! angular accessors multiply by 2π and are what the physics formulas use.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

const TWO_PI: f64 = 2.0 * PI;

/// The six parameters that fix all of the measurement physics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SystemParams", into = "SystemParams")]
pub struct OptomechSystem {
    cavity_freq: f64,
    cavity_linewidth: f64,
    mech_freq: f64,
    mech_linewidth: f64,
    coupling: f64,
    mass: f64,
}

/// Unvalidated field bag for [`OptomechSystem`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemParams {
    pub cavity_freq: f64,
    pub cavity_linewidth: f64,
    pub mech_freq: f64,
    pub mech_linewidth: f64,
    pub coupling: f64,
    pub mass: f64,
}

fn require_positive(name: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(invalid(name, format!("must be finite and > 0, got {value}")))
    }
}

impl OptomechSystem {
    pub fn new(p: SystemParams) -> Result<Self> {
        let sys = Self {
            cavity_freq: require_positive("cavity_freq", p.cavity_freq)?,
            cavity_linewidth: require_positive("cavity_linewidth", p.cavity_linewidth)?,
            mech_freq: require_positive("mech_freq", p.mech_freq)?,
            mech_linewidth: require_positive("mech_linewidth", p.mech_linewidth)?,
            coupling: require_positive("coupling", p.coupling)?,
            mass: require_positive("mass", p.mass)?,
        };
        if sys.mech_linewidth >= sys.mech_freq {
            return Err(invalid(
                "mech_linewidth",
                format!(
                    "mechanical resonance must be resolved: linewidth {} Hz >= frequency {} Hz",
                    sys.mech_linewidth, sys.mech_freq
                ),
            ));
        }
        let xzp = crate::physics::x_zp(&sys);
        if !(xzp.is_finite() && xzp > 0.0) {
            return Err(invalid("mass", "zero-point motion is not finite"));
        }
        Ok(sys)
    }

    /// The device measured in the reference experiment: a 6.707 GHz
    /// overcoupled LC circuit with a 9.357 MHz, 85 pg membrane.
    pub fn reference_device() -> Self {
        Self::new(SystemParams {
            cavity_freq: 6.707e9,
            cavity_linewidth: 10.56e6,
            mech_freq: 9.357e6,
            mech_linewidth: 24.4,
            coupling: 230.0,
            mass: 85e-15,
        })
        .expect("reference device parameters are valid")
    }

    pub fn params(&self) -> SystemParams {
        SystemParams {
            cavity_freq: self.cavity_freq,
            cavity_linewidth: self.cavity_linewidth,
            mech_freq: self.mech_freq,
            mech_linewidth: self.mech_linewidth,
            coupling: self.coupling,
            mass: self.mass,
        }
    }

    /// Copy of this system with one field replaced, revalidated.
    pub fn with(&self, edit: impl FnOnce(&mut SystemParams)) -> Result<Self> {
        let mut p = self.params();
        edit(&mut p);
        Self::new(p)
    }

    pub fn cavity_freq(&self) -> f64 {
        self.cavity_freq
    }
    pub fn cavity_linewidth(&self) -> f64 {
        self.cavity_linewidth
    }
    pub fn mech_freq(&self) -> f64 {
        self.mech_freq
    }
    pub fn mech_linewidth(&self) -> f64 {
        self.mech_linewidth
    }
    pub fn coupling(&self) -> f64 {
        self.coupling
    }
    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn omega_c(&self) -> f64 {
        TWO_PI * self.cavity_freq
    }
    pub fn kappa(&self) -> f64 {
        TWO_PI * self.cavity_linewidth
    }
    pub fn omega_m(&self) -> f64 {
        TWO_PI * self.mech_freq
    }
    pub fn gamma_m(&self) -> f64 {
        TWO_PI * self.mech_linewidth
    }
    pub fn g0(&self) -> f64 {
        TWO_PI * self.coupling
    }

    pub fn uncalibrated(&self) -> UncalibratedSystem {
        UncalibratedSystem {
            cavity_freq: self.cavity_freq,
            cavity_linewidth: self.cavity_linewidth,
            mech_freq: self.mech_freq,
            mech_linewidth: self.mech_linewidth,
            mass: self.mass,
        }
    }
}

impl TryFrom<SystemParams> for OptomechSystem {
    type Error = crate::Error;

    fn try_from(p: SystemParams) -> Result<Self> {
        Self::new(p)
    }
}

impl From<OptomechSystem> for SystemParams {
    fn from(s: OptomechSystem) -> Self {
        s.params()
    }
}

/// A device whose vacuum coupling rate is still unknown, as it is before
/// noise thermometry.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UncalibratedSystem {
    pub cavity_freq: f64,
    pub cavity_linewidth: f64,
    pub mech_freq: f64,
    pub mech_linewidth: f64,
    pub mass: f64,
}

impl UncalibratedSystem {
    pub fn with_coupling(&self, coupling: f64) -> Result<OptomechSystem> {
        OptomechSystem::new(SystemParams {
            cavity_freq: self.cavity_freq,
            cavity_linewidth: self.cavity_linewidth,
            mech_freq: self.mech_freq,
            mech_linewidth: self.mech_linewidth,
            coupling,
            mass: self.mass,
        })
    }
}
