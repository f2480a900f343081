//! Power-law constitutive law and the two-fluid viscosity blend.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::levelset::kernels::heaviside;

pub const DEFAULT_GAMMA_MIN: f64 = 1e-6;
pub const DEFAULT_EPS_LAMBDA: f64 = 1e-8;

/// How `|D|²` is formed from the strain-rate tensor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StrainNorm {
    /// `D:D`
    #[default]
    Frobenius,
    /// `2 D:D`
    Invariant,
}

impl StrainNorm {
    pub fn squared(self, d: &[[f64; 2]; 2]) -> f64 {
        let dd = d[0][0] * d[0][0] + d[0][1] * d[0][1] + d[1][0] * d[1][0] + d[1][1] * d[1][1];
        match self {
            StrainNorm::Frobenius => dd,
            StrainNorm::Invariant => 2.0 * dd,
        }
    }
}

/// Dimensionless physical parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysParams {
    pub re: f64,
    pub ca: f64,
    /// Inner/outer consistency ratio.
    pub beta: f64,
    /// Power index.
    pub upsilon: f64,
    /// Kernel half-width.
    pub eps: f64,
    /// Inextensibility penalty parameter.
    pub eps_lambda: f64,
    pub gamma_min: f64,
    pub strain_norm: StrainNorm,
    /// Exactness degree of the quadrature for the inextensibility penalty.
    #[serde(default = "default_penalty_quadrature")]
    pub penalty_quadrature: usize,
}

/// Exact for `(div_s u)²` of P2 velocities with frozen weights. Richer rules
/// impose the constraint at more band points than there are velocity
/// unknowns and lock the tangential (tank-treading) motion.
pub const DEFAULT_PENALTY_QUADRATURE: usize = 2;

fn default_penalty_quadrature() -> usize {
    DEFAULT_PENALTY_QUADRATURE
}

impl Default for PhysParams {
    fn default() -> Self {
        PhysParams {
            re: 1.0,
            ca: 1.0,
            beta: 1.0,
            upsilon: 1.0,
            eps: 0.05,
            eps_lambda: DEFAULT_EPS_LAMBDA,
            gamma_min: DEFAULT_GAMMA_MIN,
            strain_norm: StrainNorm::Frobenius,
            penalty_quadrature: DEFAULT_PENALTY_QUADRATURE,
        }
    }
}

impl PhysParams {
    /// Every violated invariant, as `(field, reason)`.
    pub fn violations(&self) -> Vec<(&'static str, String)> {
        let mut out = Vec::new();
        let positive = [
            ("Re", self.re),
            ("Ca", self.ca),
            ("beta", self.beta),
            ("upsilon", self.upsilon),
            ("eps", self.eps),
            ("eps_lambda", self.eps_lambda),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                out.push((name, format!("must be positive and finite, got {v}")));
            }
        }
        if !(self.gamma_min >= 0.0 && self.gamma_min.is_finite()) {
            out.push(("gamma_min", format!("must be non-negative, got {}", self.gamma_min)));
        }
        if self.penalty_quadrature > 20 {
            out.push(("penalty_quadrature", format!("must be at most 20, got {}", self.penalty_quadrature)));
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        match self.violations().into_iter().next() {
            None => Ok(()),
            Some((name, reason)) => Err(Error::param(name, reason)),
        }
    }

    pub fn is_newtonian(&self) -> bool {
        self.upsilon == 1.0
    }
}

/// `K · max(γ, γ_min)^((υ−1)/2)` with the default floor.
pub fn power_law_viscosity(gamma: f64, k: f64, upsilon: f64) -> Result<f64> {
    if !(k > 0.0) {
        return Err(Error::param("K", format!("must be positive, got {k}")));
    }
    if !(upsilon > 0.0) {
        return Err(Error::param("upsilon", format!("must be positive, got {upsilon}")));
    }
    if !(gamma >= 0.0) {
        return Err(Error::param("gamma", format!("must be non-negative, got {gamma}")));
    }
    Ok(k * shear_factor(gamma, upsilon, DEFAULT_GAMMA_MIN))
}

#[inline]
fn shear_factor(gamma: f64, upsilon: f64, gamma_min: f64) -> f64 {
    if upsilon == 1.0 {
        1.0
    } else {
        gamma.max(gamma_min).powf(0.5 * (upsilon - 1.0))
    }
}

/// `μ_ε(φ) = H_ε(φ) + β (1 − H_ε(φ))`.
pub fn regularized_consistency(phi: f64, beta: f64, eps: f64) -> f64 {
    let h = heaviside(phi, eps);
    h + beta * (1.0 - h)
}

/// `μ_ε(φ) · max(|D|², γ_min)^((υ−1)/2)`; multiplies `2D` in the momentum form.
pub fn effective_viscosity(phi: f64, d: &[[f64; 2]; 2], params: &PhysParams) -> f64 {
    let mu = regularized_consistency(phi, params.beta, params.eps);
    if params.is_newtonian() {
        return mu;
    }
    mu * shear_factor(params.strain_norm.squared(d), params.upsilon, params.gamma_min)
}

/// Symmetric part of a velocity gradient `g[i][j] = ∂_j u_i`.
#[inline]
pub fn strain_rate(g: &[[f64; 2]; 2]) -> [[f64; 2]; 2] {
    let off = 0.5 * (g[0][1] + g[1][0]);
    [[g[0][0], off], [off, g[1][1]]]
}
