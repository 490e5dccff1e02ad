use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interp::InterpolantSpec;

/// Equation constants shared by the reference and assimilated systems.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhysParams {
    /// Viscosity `ν > 0`.
    pub nu: f64,
    /// Diffusion exponent `α`.
    pub alpha: f64,
    /// Nudging gain `μ >= 0`.
    pub mu: f64,
    pub interp: InterpolantSpec,
}

impl PhysParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.nu > 0.0 && self.nu.is_finite()) {
            return Err(Error::InvalidParameter(format!("viscosity must be positive, got {}", self.nu)));
        }
        if !(self.mu >= 0.0 && self.mu.is_finite()) {
            return Err(Error::InvalidParameter(format!("nudging gain must be >= 0, got {}", self.mu)));
        }
        if !self.alpha.is_finite() {
            return Err(Error::InvalidParameter("diffusion exponent must be finite".into()));
        }
        Ok(())
    }

    /// `α >= d/4 + 1/2`.
    pub fn is_admissible(&self, dim: usize) -> bool {
        is_admissible(self.alpha, dim)
    }
}

pub fn is_admissible(alpha: f64, dim: usize) -> bool {
    alpha >= dim as f64 / 4.0 + 0.5
}

/// First eigenvalue of the Stokes operator on the unit torus, `(2π)^2`.
pub const LAMBDA1: f64 = 4.0 * std::f64::consts::PI * std::f64::consts::PI;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn admissibility_threshold() {
        assert!(is_admissible(1.0, 2));
        assert!(!is_admissible(1.0, 3));
        assert!(is_admissible(1.25, 3));
        assert!(!is_admissible(0.99, 2));
    }

    #[test]
    fn validation() {
        let p = PhysParams {
            nu: 0.0,
            alpha: 1.0,
            mu: 1.0,
            interp: InterpolantSpec::ModalProjection { cutoff: 2 },
        };
        assert!(p.validate().is_err());
        assert!(PhysParams { nu: 1.0, mu: -1.0, ..p }.validate().is_err());
        assert!(PhysParams { nu: 1.0, ..p }.validate().is_ok());
    }
}
