//! Physical parameters of the dipole-force implementation.
//!
//! Angular frequencies are stored in rad/s, times in s and lengths in m.
//! Internally ħ = 1.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Reduced Planck constant (J s).
pub const HBAR: f64 = 1.054_571_817e-34;
/// Atomic mass unit (kg).
pub const AMU: f64 = 1.660_539_066_60e-27;
/// Mass of a ²⁵Mg⁺ ion (kg), electron mass neglected.
pub const MG25_MASS: f64 = 24.985_836_98 * AMU;

/// Converts a frequency in Hz to an angular frequency in rad/s.
pub fn angular(hz: f64) -> f64 {
    TAU * hz
}

/// Width `z0 = sqrt(ħ / (2 m ω))` of the motional ground state.
pub fn ground_state_width(mass: f64, omega_z: f64) -> f64 {
    (HBAR / (2.0 * mass * omega_z)).sqrt()
}

/// Which terms of the light-motion coupling are kept.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ApproxLevel {
    /// Lamb–Dicke: first sidebands with matrix elements `iη√(n+1)`.
    #[serde(rename = "LDA")]
    Lda,
    /// Rotating-wave: first sidebands with exact matrix elements.
    #[serde(rename = "RWA")]
    Rwa,
    /// All couplings with `|m - n| <= 3`, co- and counter-rotating.
    #[serde(rename = "3SB")]
    ThreeSideband,
}

impl ApproxLevel {
    pub fn name(self) -> &'static str {
        match self {
            ApproxLevel::Lda => "LDA",
            ApproxLevel::Rwa => "RWA",
            ApproxLevel::ThreeSideband => "3SB",
        }
    }
}

impl std::str::FromStr for ApproxLevel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "LDA" => Ok(ApproxLevel::Lda),
            "RWA" => Ok(ApproxLevel::Rwa),
            "3SB" => Ok(ApproxLevel::ThreeSideband),
            other => Err(Error::invalid(format!("unknown approximation level `{other}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimParams {
    /// Axial trap frequency ω_z.
    pub omega_z: f64,
    /// Detuning δ = ω_z − ω_L of the dipole-force beat note.
    pub delta: f64,
    /// Dipole-force coupling Ω_D acting on |T⟩.
    pub omega_d: f64,
    /// Lamb–Dicke parameter η.
    pub eta: f64,
    /// Initial phase φ₀ of the walking wave.
    pub phi0: f64,
    /// Ground-state width z₀.
    pub z0: f64,
    /// Fock-space truncation.
    pub dim: usize,
    pub level: ApproxLevel,
    /// F_H / F_T; the |H⟩ branch couples with `force_ratio * omega_d`.
    pub force_ratio: f64,
}

impl SimParams {
    pub const DEFAULT_FORCE_RATIO: f64 = -2.0 / 3.0;
    pub const DEFAULT_DIM: usize = 128;

    /// Parameters of the three-step experiment: ω_z = 2π·2.13 MHz,
    /// δ = 2π·100 kHz, η = 0.31, Ω_D = 2π·0.24 MHz, z₀ = 10 nm, 3SB.
    pub fn experimental() -> Self {
        SimParams {
            omega_z: angular(2.13e6),
            delta: angular(100e3),
            omega_d: angular(0.24e6),
            eta: 0.31,
            phi0: 0.0,
            z0: 10e-9,
            dim: Self::DEFAULT_DIM,
            level: ApproxLevel::ThreeSideband,
            force_ratio: Self::DEFAULT_FORCE_RATIO,
        }
    }

    pub fn with_level(mut self, level: ApproxLevel) -> Self {
        self.level = level;
        self
    }

    pub fn with_dim(mut self, dim: usize) -> Self {
        self.dim = dim;
        self
    }

    pub fn with_omega_d(mut self, omega_d: f64) -> Self {
        self.omega_d = omega_d;
        self
    }

    pub fn with_delta(mut self, delta: f64) -> Self {
        self.delta = delta;
        self
    }

    pub fn with_eta(mut self, eta: f64) -> Self {
        self.eta = eta;
        self
    }

    pub fn with_omega_z(mut self, omega_z: f64) -> Self {
        self.omega_z = omega_z;
        self
    }

    /// Frequency difference of the two dipole-force beams, ω_L = ω_z − δ.
    pub fn omega_l(&self) -> f64 {
        self.omega_z - self.delta
    }

    /// Duration π/δ of a half loop in the co-rotating frame.
    pub fn half_period(&self) -> f64 {
        std::f64::consts::PI / self.delta
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [
            self.omega_z,
            self.delta,
            self.omega_d,
            self.eta,
            self.phi0,
            self.z0,
            self.force_ratio,
        ]
        .iter()
        .all(|v| v.is_finite());
        if !finite {
            return Err(Error::invalid("parameters must be finite"));
        }
        if self.eta <= 0.0 {
            return Err(Error::invalid(format!("eta must be > 0, got {}", self.eta)));
        }
        if self.dim < 16 {
            return Err(Error::invalid(format!("dim must be >= 16, got {}", self.dim)));
        }
        if self.omega_z <= 0.0 {
            return Err(Error::invalid("omega_z must be > 0"));
        }
        if self.force_ratio.abs() > 1.0 {
            return Err(Error::invalid(format!(
                "|force_ratio| must be <= 1, got {}",
                self.force_ratio
            )));
        }
        if self.z0 <= 0.0 {
            return Err(Error::invalid("z0 must be > 0"));
        }
        Ok(())
    }
}

impl Default for SimParams {
    fn default() -> Self {
        Self::experimental()
    }
}
