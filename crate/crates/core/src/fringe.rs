//! Interference fringes and unit conversions.
//!
//! The two-photon coincidence probability carries the detuning fringe
//! `cos(Δω·τ)` under a Gaussian envelope set by the photon bandwidth, scaled
//! by the calibrated visibility. The classical comparison uses an ordinary
//! single-photon Mach-Zehnder-style fringe with two complementary ports.

use std::f64::consts::{FRAC_PI_2, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Relative tolerance between the wavelengths and the stated detuning.
const WAVELENGTH_CONSISTENCY: f64 = 1e-3;

/// Entangled-pair parameters that define the quantum fringe.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhotonPairSpec {
    /// Angular-frequency detuning Δω = ω₁ − ω₂, rad/s.
    pub delta_omega: f64,
    /// Angular-frequency half bandwidth, rad/s.
    pub sigma: f64,
    /// Calibrated fringe visibility in (0, 1].
    pub visibility_v0: f64,
    /// Photon wavelengths (λ₁, λ₂) in metres, informational only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wavelengths: Option<(f64, f64)>,
}

impl Default for PhotonPairSpec {
    /// 177 THz detuning, 0.5 THz half bandwidth, 90% visibility.
    fn default() -> Self {
        PhotonPairSpec { delta_omega: TAU * 177e12, sigma: TAU * 0.5e12, visibility_v0: 0.9, wavelengths: None }
    }
}

impl PhotonPairSpec {
    pub fn new(delta_omega: f64, sigma: f64, visibility_v0: f64) -> Result<Self> {
        let spec = PhotonPairSpec { delta_omega, sigma, visibility_v0, wavelengths: None };
        spec.validate()?;
        Ok(spec)
    }

    /// Attaches wavelengths, checking `2πc(1/λ₁ − 1/λ₂)` against Δω to 0.1%.
    pub fn with_wavelengths(mut self, lambda_1: f64, lambda_2: f64) -> Result<Self> {
        self.wavelengths = Some((lambda_1, lambda_2));
        self.validate()?;
        Ok(self)
    }

    pub fn with_visibility(mut self, visibility_v0: f64) -> Result<Self> {
        self.visibility_v0 = visibility_v0;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.delta_omega.is_finite() && self.delta_omega > 0.0) {
            return Err(Error::invalid("delta_omega", format!("must be > 0, got {}", self.delta_omega)));
        }
        if !(self.sigma.is_finite() && self.sigma >= 0.0) {
            return Err(Error::invalid("sigma", format!("must be >= 0, got {}", self.sigma)));
        }
        if !(self.visibility_v0 > 0.0 && self.visibility_v0 <= 1.0) {
            return Err(Error::invalid("visibility_v0", format!("must lie in (0, 1], got {}", self.visibility_v0)));
        }
        if let Some((l1, l2)) = self.wavelengths {
            if !(l1 > 0.0 && l2 > 0.0) {
                return Err(Error::invalid("wavelengths", "must be positive"));
            }
            let implied = TAU * SPEED_OF_LIGHT * (1.0 / l1 - 1.0 / l2);
            let rel = (implied - self.delta_omega).abs() / self.delta_omega;
            if rel > WAVELENGTH_CONSISTENCY {
                return Err(Error::invalid(
                    "wavelengths",
                    format!("imply a detuning of {:.6e} rad/s, {:.3}% away from delta_omega", implied, rel * 100.0),
                ));
            }
        }
        Ok(())
    }

    /// Coincidence probability `½{1 − V₀·cos(Δω·τ)·exp(−2σ²τ²)}`.
    pub fn coincidence_probability(&self, tau: f64) -> f64 {
        let envelope = (-2.0 * self.sigma * self.sigma * tau * tau).exp();
        0.5 * (1.0 - self.visibility_v0 * (self.delta_omega * tau).cos() * envelope)
    }

    /// Delay at which the coincidence probability is ½, `π/(2Δω)`.
    pub fn quadrature_delay(&self) -> f64 {
        FRAC_PI_2 / self.delta_omega
    }

    /// Full fringe period in delay, `2π/Δω`.
    pub fn fringe_period(&self) -> f64 {
        TAU / self.delta_omega
    }
}

/// Output port of the classical interferometer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Port {
    One,
    Two,
}

impl TryFrom<u8> for Port {
    type Error = Error;

    fn try_from(id: u8) -> Result<Self> {
        match id {
            1 => Ok(Port::One),
            2 => Ok(Port::Two),
            other => Err(Error::invalid("port", format!("expected 1 or 2, got {other}"))),
        }
    }
}

/// Single-photon interference fringe used for the classical comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassicalFringeSpec {
    /// Optical angular frequency 2πc/λ, rad/s.
    pub omega_optical: f64,
    /// Intensity of arm b relative to arm a, in [0, 1].
    pub arm_intensity_ratio: f64,
    /// Fringe phase offset, rad.
    pub phase_offset: f64,
}

impl ClassicalFringeSpec {
    pub fn new(omega_optical: f64, arm_intensity_ratio: f64, phase_offset: f64) -> Result<Self> {
        let spec = ClassicalFringeSpec { omega_optical, arm_intensity_ratio, phase_offset };
        spec.validate()?;
        Ok(spec)
    }

    pub fn from_wavelength(wavelength: f64, arm_intensity_ratio: f64, phase_offset: f64) -> Result<Self> {
        if !(wavelength > 0.0) {
            return Err(Error::invalid("wavelength", "must be positive"));
        }
        Self::new(TAU * SPEED_OF_LIGHT / wavelength, arm_intensity_ratio, phase_offset)
    }

    /// Fringe whose port-1 probability is ½ and rising at delay `tau_op`.
    pub fn at_quadrature(wavelength: f64, arm_intensity_ratio: f64, tau_op: f64) -> Result<Self> {
        let mut spec = Self::from_wavelength(wavelength, arm_intensity_ratio, 0.0)?;
        // ω·τ_op + φ₀ = −π/2 puts port 1 at ½ with positive slope.
        spec.phase_offset = (-FRAC_PI_2 - spec.omega_optical * tau_op).rem_euclid(TAU);
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.omega_optical.is_finite() && self.omega_optical > 0.0) {
            return Err(Error::invalid("omega_optical", "must be positive"));
        }
        if !(0.0..=1.0).contains(&self.arm_intensity_ratio) {
            return Err(Error::invalid(
                "arm_intensity_ratio",
                format!("must lie in [0, 1], got {}", self.arm_intensity_ratio),
            ));
        }
        if !self.phase_offset.is_finite() {
            return Err(Error::invalid("phase_offset", "must be finite"));
        }
        Ok(())
    }

    /// `2√r/(1+r)` for arm intensity ratio `r`.
    pub fn visibility(&self) -> f64 {
        let r = self.arm_intensity_ratio;
        2.0 * r.sqrt() / (1.0 + r)
    }

    pub fn port_probability(&self, tau: f64, port: Port) -> f64 {
        let p1 = 0.5 * (1.0 + self.visibility() * (self.omega_optical * tau + self.phase_offset).cos());
        match port {
            Port::One => p1,
            Port::Two => 1.0 - p1,
        }
    }

    /// Port-1 probability of the same fringe with its visibility replaced.
    pub(crate) fn port_one_with_visibility(&self, tau: f64, visibility: f64) -> f64 {
        0.5 * (1.0 + visibility * (self.omega_optical * tau + self.phase_offset).cos())
    }

    /// Optical period in delay.
    pub fn period(&self) -> f64 {
        TAU / self.omega_optical
    }
}

/// Path-fold multiplier between mirror displacement and delay change.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum GeometryFactor {
    /// Single pass: Δ(path) = x.
    Single,
    /// Retro-reflection doubles the path change.
    RetroReflected,
}

impl GeometryFactor {
    pub fn value(self) -> f64 {
        match self {
            GeometryFactor::Single => 1.0,
            GeometryFactor::RetroReflected => 2.0,
        }
    }
}

impl TryFrom<u8> for GeometryFactor {
    type Error = Error;

    fn try_from(g: u8) -> Result<Self> {
        match g {
            1 => Ok(GeometryFactor::Single),
            2 => Ok(GeometryFactor::RetroReflected),
            other => Err(Error::invalid("geometry", format!("must be 1 or 2, got {other}"))),
        }
    }
}

impl From<GeometryFactor> for u8 {
    fn from(g: GeometryFactor) -> u8 {
        match g {
            GeometryFactor::Single => 1,
            GeometryFactor::RetroReflected => 2,
        }
    }
}

/// Mirror displacement corresponding to delay `tau`: `c·τ/g`.
pub fn delay_to_displacement(tau: f64, g: GeometryFactor) -> f64 {
    SPEED_OF_LIGHT * tau / g.value()
}

/// Inverse of [`delay_to_displacement`].
pub fn displacement_to_delay(x: f64, g: GeometryFactor) -> f64 {
    g.value() * x / SPEED_OF_LIGHT
}

/// Angular frequency of light at `wavelength`.
pub fn optical_angular_frequency(wavelength: f64) -> f64 {
    TAU * SPEED_OF_LIGHT / wavelength
}
