//! Unit conventions and physical parameters.
//!
//! Everything internal is in natural units (hbar = c = 1) with energies in
//! units of the electron mass; [`to_frequency`] converts to MHz through the
//! configurable constants.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Conversion constants, config-overridable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Constants {
    /// Electron rest energy in eV.
    pub electron_rest_ev: f64,
    /// eV -> MHz factor.
    pub ev_to_mhz: f64,
}

impl Default for Constants {
    fn default() -> Self {
        Constants {
            electron_rest_ev: 510_998.95,
            ev_to_mhz: 2.417989e8,
        }
    }
}

/// Physical inputs shared by all modules.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Params {
    /// Physical mass (natural units).
    pub m: f64,
    /// Bare mass; derived from `m` via mass renormalization when absent.
    pub m0: Option<f64>,
    /// Radiation coupling.
    pub alpha: f64,
    /// External-potential coupling (V = -beta Z / r).
    pub beta: f64,
    /// Nuclear charge.
    pub z: f64,
    /// UV cutoff, units of m.
    pub lambda: f64,
    #[serde(default)]
    pub constants: Constants,
}

impl Default for Params {
    fn default() -> Self {
        Params {
            m: 1.0,
            m0: None,
            alpha: 1.0 / 137.0,
            beta: 1.0 / 137.0,
            z: 1.0,
            lambda: 100.0,
            constants: Constants::default(),
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum ParamsError {
    #[error("{name} must be positive, got {value}")]
    NotPositive { name: &'static str, value: f64 },
    #[error("{name} must be non-negative, got {value}")]
    Negative { name: &'static str, value: f64 },
    #[error("beta*Z = {0} is outside the hydrogenic validity regime (need beta*Z < 1)")]
    BetaZTooLarge(f64),
    #[error("bare mass m0 is required here but not set (and no tolerance given to derive it)")]
    MissingBareMass,
}

impl Params {
    pub fn validate(&self) -> Result<(), ParamsError> {
        let pos = |name, value: f64| {
            if value > 0.0 && value.is_finite() {
                Ok(())
            } else {
                Err(ParamsError::NotPositive { name, value })
            }
        };
        let nonneg = |name, value: f64| {
            if value >= 0.0 && value.is_finite() {
                Ok(())
            } else {
                Err(ParamsError::Negative { name, value })
            }
        };
        pos("m", self.m)?;
        if let Some(m0) = self.m0 {
            pos("m0", m0)?;
        }
        nonneg("alpha", self.alpha)?;
        nonneg("beta", self.beta)?;
        pos("Z", self.z)?;
        nonneg("Lambda", self.lambda)?;
        if self.beta * self.z >= 1.0 {
            return Err(ParamsError::BetaZTooLarge(self.beta * self.z));
        }
        Ok(())
    }

    /// beta*Z, the single coupling the hydrogenic formulas depend on.
    pub fn beta_z(&self) -> f64 {
        self.beta * self.z
    }

    /// The bare mass: the explicit value if set, otherwise solved from the
    /// mass-renormalization relation at tolerance `tol`.
    pub fn bare_mass_or_derive(&self, tol: f64) -> Result<f64, ParamsError> {
        if let Some(m0) = self.m0 {
            return Ok(m0);
        }
        Ok(crate::renorm::bare_mass(self.m, self.alpha, self.lambda, tol).m0)
    }
}

/// Convert a natural-units energy to MHz.
pub fn to_frequency(energy: f64, params: &Params) -> f64 {
    energy * params.constants.electron_rest_ev * params.constants.ev_to_mhz
}

/// |e_0| for the hydrogenic ground state: m (beta Z)^2 / 2.
pub fn rydberg(params: &Params) -> f64 {
    0.5 * params.m * params.beta_z() * params.beta_z()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frequency_conversion() {
        let p = Params::default();
        assert_eq!(to_frequency(0.0, &p), 0.0);
        // product of the two configured constants
        let one = to_frequency(1.0, &p);
        assert!((one - 510_998.95 * 2.417989e8).abs() / one < 1e-15);
        let x = 0.123;
        assert!((to_frequency(2.0 * x, &p) - 2.0 * to_frequency(x, &p)).abs() < 1e-3);
    }

    #[test]
    fn rydberg_values() {
        let mut p = Params {
            beta: 1.0,
            z: 0.9,
            ..Params::default()
        };
        p.z = 0.9;
        assert!((rydberg(&p) - 0.5 * 0.81).abs() < 1e-15);
        p.beta = 1.0 / 137.0;
        p.z = 1.0;
        assert!((rydberg(&p) - 0.5 / (137.0 * 137.0)).abs() < 1e-18);
        // Z scaling
        let r1 = rydberg(&p);
        p.z = 2.0;
        // (beta Z < 1 still holds)
        assert!((rydberg(&p) - 4.0 * r1).abs() < 1e-15);
    }

    #[test]
    fn validation() {
        let p = Params::default();
        assert!(p.validate().is_ok());
        let bad = Params {
            beta: 1.0,
            z: 1.5,
            ..Params::default()
        };
        assert_eq!(bad.validate(), Err(ParamsError::BetaZTooLarge(1.5)));
        let bad = Params {
            m: -1.0,
            ..Params::default()
        };
        assert!(bad.validate().is_err());
    }
}
