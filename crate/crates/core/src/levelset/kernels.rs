//! Regularized Heaviside and Dirac kernels with half-width ε.

use std::f64::consts::PI;

use crate::error::{Error, Result};

fn check(eps: f64) -> Result<()> {
    if eps > 0.0 && eps.is_finite() {
        Ok(())
    } else {
        Err(Error::param("eps", format!("must be positive, got {eps}")))
    }
}

/// `H_ε(φ)`: 0 below `-ε`, 1 above `ε`, C¹ sine blend in between.
pub fn heaviside_reg(phi: f64, eps: f64) -> Result<f64> {
    check(eps)?;
    Ok(heaviside(phi, eps))
}

/// `δ_ε(φ) = dH_ε/dφ`.
pub fn dirac_reg(phi: f64, eps: f64) -> Result<f64> {
    check(eps)?;
    Ok(dirac(phi, eps))
}

#[inline]
pub(crate) fn heaviside(phi: f64, eps: f64) -> f64 {
    if phi < -eps {
        0.0
    } else if phi > eps {
        1.0
    } else {
        let s = phi / eps;
        0.5 * (1.0 + s + (PI * s).sin() / PI)
    }
}

#[inline]
pub(crate) fn dirac(phi: f64, eps: f64) -> f64 {
    if phi.abs() > eps {
        0.0
    } else {
        (1.0 + (PI * phi / eps).cos()) / (2.0 * eps)
    }
}
