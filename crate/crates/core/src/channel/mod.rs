//! Pre-pairing observables of the SNS and SCF key-generation channels.
//!
//! Geometry is symmetric: Alice and Bob sit at equal distance `L/2` from the
//! untrusted relay, so a single transmittance covers both arms.

mod bessel;
mod scf;
mod sns;

pub use bessel::{bessel_i0, bessel_i0e};
pub use scf::{scf_observables, scf_window_rates, x_rate_bounds, ScfObservation, ScfWindowRates, XRateBounds};
pub use sns::{sns_observables, sns_window_rates, two_source_rate, SnsObservation, SnsWindowRates};

use serde::{Deserialize, Serialize};

use crate::error::{check_prob, Error, Result};

/// Fixed experimental constants and security targets.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SystemParams {
    /// Fiber loss in dB/km.
    pub alpha: f64,
    pub eta_d: f64,
    /// Dark count probability per detection window.
    pub p_d: f64,
    /// Misalignment error.
    pub e_d: f64,
    /// Alice-Bob distance in km.
    pub distance_km: f64,
    /// Target security level.
    pub epsilon: f64,
    /// Forgery-bound parameter.
    pub g: f64,
    /// Smoothing parameter of the forger's min-entropy.
    pub eps_e: f64,
}

impl Default for SystemParams {
    fn default() -> Self {
        Self {
            alpha: 0.2,
            eta_d: 0.8,
            p_d: 1e-11,
            e_d: 0.0,
            distance_km: 0.0,
            epsilon: 1e-5,
            g: 1e-12,
            eps_e: 1e-18,
        }
    }
}

impl SystemParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha >= 0.0) {
            return Err(Error::InvalidParam(format!("alpha = {} must be >= 0", self.alpha)));
        }
        if !(self.distance_km >= 0.0) {
            return Err(Error::InvalidParam(format!(
                "distance_km = {} must be >= 0",
                self.distance_km
            )));
        }
        check_prob("eta_d", self.eta_d)?;
        check_prob("p_d", self.p_d)?;
        check_prob("e_d", self.e_d)?;
        check_prob("epsilon", self.epsilon)?;
        check_prob("g", self.g)?;
        check_prob("eps_e", self.eps_e)?;
        Ok(())
    }

    /// Total efficiency of one arm, `10^{-alpha L / 20} * eta_d`.
    pub fn eta(&self) -> f64 {
        10f64.powf(-self.alpha * (self.distance_km / 2.0) / 10.0) * self.eta_d
    }

    pub fn at_distance(mut self, distance_km: f64) -> Self {
        self.distance_km = distance_km;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SnsParams {
    /// Signal intensity.
    pub mu: f64,
    /// Sending probability in signal windows.
    pub q: f64,
    /// Signal-window probability.
    pub p_z: f64,
    pub n_pulses: f64,
}

impl Default for SnsParams {
    fn default() -> Self {
        Self {
            mu: 0.3,
            q: 0.04,
            p_z: 1.0,
            n_pulses: 1e13,
        }
    }
}

impl SnsParams {
    pub fn validate(&self) -> Result<()> {
        validate_intensity(self.mu)?;
        check_prob("q", self.q)?;
        check_prob("p_z", self.p_z)?;
        validate_pulses(self.n_pulses)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScfParams {
    pub mu: f64,
    pub q: f64,
    /// Fraction of windows in the test subset.
    pub gamma_v: f64,
    pub n_pulses: f64,
}

impl Default for ScfParams {
    fn default() -> Self {
        Self {
            mu: 1e-4,
            q: 0.1,
            gamma_v: Self::DEFAULT_GAMMA_V,
            n_pulses: 1e13,
        }
    }
}

impl ScfParams {
    pub const DEFAULT_GAMMA_V: f64 = 0.1;

    pub fn validate(&self) -> Result<()> {
        validate_intensity(self.mu)?;
        check_prob("q", self.q)?;
        if !(self.gamma_v > 0.0 && self.gamma_v < 1.0) {
            return Err(Error::InvalidParam(format!(
                "gamma_v = {} must lie in (0, 1)",
                self.gamma_v
            )));
        }
        validate_pulses(self.n_pulses)
    }
}

/// Counting rates of one window type at the left and right detectors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectorPair {
    pub left: f64,
    pub right: f64,
}

impl DetectorPair {
    pub fn symmetric(v: f64) -> Self {
        Self { left: v, right: v }
    }

    pub fn total(&self) -> f64 {
        self.left + self.right
    }

    /// Misalignment mixing `S'^d = (1 - e_d) S^d + e_d S^{d'}`.
    pub fn mixed(&self, e_d: f64) -> Self {
        Self {
            left: (1.0 - e_d) * self.left + e_d * self.right,
            right: (1.0 - e_d) * self.right + e_d * self.left,
        }
    }
}

fn validate_intensity(mu: f64) -> Result<()> {
    if !(mu > 0.0 && mu.is_finite()) {
        return Err(Error::InvalidParam(format!("intensity mu = {mu} must be > 0")));
    }
    Ok(())
}

fn validate_pulses(n: f64) -> Result<()> {
    if !(n > 0.0 && n.is_finite()) {
        return Err(Error::InvalidParam(format!("n_pulses = {n} must be > 0")));
    }
    Ok(())
}
