//! Bounded-domain quantities for `du = (Δu + G(u)) dt + κu dB_t` on an
//! interval with Dirichlet boundary: the first eigenpair, the deterministic
//! blowup time, and the inverse-gamma law governing the random one.

use serde::{Deserialize, Serialize};
use statrs::function::gamma::{gamma_lr, ln_gamma};
use std::f64::consts::PI;

use crate::error::{argument, domain, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundedDomainParams {
    pub kappa: f64,
    pub beta: f64,
    pub lambda1: f64,
    /// `u(φ, 0) = ∫ u₀ φ dx`.
    pub u_phi_0: f64,
    /// Constant in `G(u) ≥ C u^{1+β}`.
    pub c_drift: f64,
}

impl BoundedDomainParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("kappa", self.kappa), ("beta", self.beta), ("lambda1", self.lambda1), ("C", self.c_drift)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(domain(format!("{name} must be > 0, got {v}")));
            }
        }
        if !(self.u_phi_0 >= 0.0 && self.u_phi_0.is_finite()) {
            return Err(domain(format!("u(phi,0) must be >= 0, got {}", self.u_phi_0)));
        }
        Ok(())
    }
}

/// Which pairing-derived level the exponential functional must reach.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdChoice {
    /// `(1/β) · u(φ,0)`.
    #[default]
    Pairing,
    /// `(1/β) · u(φ,0)^{-β}`.
    PairingPowered,
}

impl ThresholdChoice {
    pub fn level(&self, params: &BoundedDomainParams) -> f64 {
        match self {
            ThresholdChoice::Pairing => params.u_phi_0 / params.beta,
            ThresholdChoice::PairingPowered => params.u_phi_0.powf(-params.beta) / params.beta,
        }
    }
}

/// First Dirichlet eigenpair of `-d²/dx²` on `(0, L)`, with `φ` normalised
/// to unit L¹ norm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EigenPair {
    pub length: f64,
    pub lambda1: f64,
}

impl EigenPair {
    /// `φ(x) = (π/(2L)) sin(πx/L)`.
    pub fn phi(&self, x: f64) -> f64 {
        PI / (2.0 * self.length) * (PI * x / self.length).sin()
    }

    pub fn phi_second_derivative(&self, x: f64) -> f64 {
        -self.lambda1 * self.phi(x)
    }
}

pub fn first_eigenpair(length: f64) -> Result<EigenPair> {
    if !(length > 0.0 && length.is_finite()) {
        return Err(argument(format!("interval length must be > 0, got {length}")));
    }
    Ok(EigenPair { length, lambda1: (PI / length).powi(2) })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum TstarOutcome {
    Finite(f64),
    /// `∫₀^∞ e^{-λ₁βs} ds = 1/(λ₁β)` does not reach the threshold.
    Global,
}

impl TstarOutcome {
    pub fn finite(&self) -> Option<f64> {
        match *self {
            TstarOutcome::Finite(t) => Some(t),
            TstarOutcome::Global => None,
        }
    }
}

/// Solves `∫₀^{T*} e^{-λ₁βs} ds = threshold`, i.e.
/// `T* = -ln(1 - λ₁β·threshold)/(λ₁β)` when `threshold < 1/(λ₁β)`.
pub fn deterministic_tstar(params: &BoundedDomainParams, threshold: f64) -> Result<TstarOutcome> {
    params.validate()?;
    if !(threshold > 0.0) || threshold.is_nan() {
        return Err(argument(format!("threshold must be > 0, got {threshold}")));
    }
    let rate = params.lambda1 * params.beta;
    let x = rate * threshold;
    if x >= 1.0 {
        return Ok(TstarOutcome::Global);
    }
    Ok(TstarOutcome::Finite(-(-x).ln_1p() / rate))
}

/// Shape `α = (2λ₁ + κ²)/(κ²β)` of the inverse-gamma law.
pub fn dlm_gamma_shape(params: &BoundedDomainParams) -> f64 {
    let k2 = params.kappa * params.kappa;
    (2.0 * params.lambda1 + k2) / (k2 * params.beta)
}

/// Scale `θ = 2/(κ²β²)` of the inverse-gamma law.
pub fn dlm_scale(params: &BoundedDomainParams) -> f64 {
    2.0 / (params.kappa * params.kappa * params.beta * params.beta)
}

/// Inverse-gamma density `h(y) = θ^α/Γ(α) · y^{-α-1} · e^{-θ/y}`.
pub fn dlm_density_h(y: f64, params: &BoundedDomainParams) -> Result<f64> {
    params.validate()?;
    if !(y > 0.0) || y.is_nan() {
        return Err(argument(format!("density argument must be > 0, got {y}")));
    }
    if y.is_infinite() {
        return Ok(0.0);
    }
    let alpha = dlm_gamma_shape(params);
    let theta = dlm_scale(params);
    let ln_h = alpha * theta.ln() - ln_gamma(alpha) - (alpha + 1.0) * y.ln() - theta / y;
    Ok(ln_h.exp())
}

/// `∫_{y₀}^∞ h(y) dy`, equal to the lower regularised gamma `P(α, θ/y₀)`.
pub fn dlm_tail_probability(y0: f64, params: &BoundedDomainParams) -> Result<f64> {
    params.validate()?;
    if y0.is_nan() || y0 < 0.0 {
        return Err(argument(format!("lower limit must be >= 0, got {y0}")));
    }
    if y0 == 0.0 {
        return Ok(1.0);
    }
    if y0.is_infinite() {
        return Ok(0.0);
    }
    Ok(gamma_lr(dlm_gamma_shape(params), dlm_scale(params) / y0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DlmBound {
    pub probability: f64,
    /// Lower integration limit `(1/β) u(φ,0)^{-β}`.
    pub y0: f64,
    /// Set when `u(φ,0) = 0`, which sends `y₀` to infinity.
    pub degenerate: bool,
}

/// Lower bound `∫_{(1/β)u(φ,0)^{-β}}^∞ h(y) dy` on the blowup probability.
pub fn dlm_blowup_lower_bound(params: &BoundedDomainParams) -> Result<DlmBound> {
    params.validate()?;
    if params.u_phi_0 == 0.0 {
        return Ok(DlmBound { probability: 0.0, y0: f64::INFINITY, degenerate: true });
    }
    let y0 = ThresholdChoice::PairingPowered.level(params);
    Ok(DlmBound { probability: dlm_tail_probability(y0, params)?, y0, degenerate: false })
}
