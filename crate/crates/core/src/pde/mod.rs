//! Method-of-lines solvers for the deterministic and path-wise random
//! parabolic equations, with sup-norm blowup detection.
//!
//! Multiplicative noise `σu dB_t` is removed by `u = e^{σB_t - σ²t/2} w`;
//! the solver then integrates
//! `∂_t w = Δw + e^{σ²t/2 - σB_t} f(e^{σB_t - σ²t/2} w)`
//! with the random coefficient frozen at each step's left endpoint.
//! Additive noise is stepped with semi-implicit Euler-Maruyama.

mod checks;
mod grid;
mod solver;
mod transform;

pub use checks::{
    sublinear_global_check, supersolution_check, CheckSetup, NodeComparison, SublinearReport, SupersolutionReport,
};
pub use grid::{Grid, ScalarField};
pub use solver::{
    solve_additive, solve_deterministic, solve_random_multiplicative, BlowupStatus, SolveOutcome, TracePoint,
};
pub use transform::{
    additive_exact_solution, additive_linear_solution, comparison_event, eigen_pairing_g, forward_transform, reconstruct_u, PairingWeight,
};

use serde::{Deserialize, Serialize};

use crate::error::{config, Result};
use crate::kernel::{kernel_halfwidth, InitialDatum};

/// Spatial domain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Domain {
    /// ℝ^d truncated to `[-radius, radius]^d` with zero far-field values.
    WholeSpace { dim: usize, radius: f64 },
    /// `(0, length)` with homogeneous Dirichlet boundary.
    Interval { length: f64 },
}

impl Domain {
    pub fn dim(&self) -> usize {
        match *self {
            Domain::WholeSpace { dim, .. } => dim,
            Domain::Interval { .. } => 1,
        }
    }

    /// Truncation radius for ℝ^d sized so a Gaussian-decaying datum spread by
    /// the heat flow over `horizon` stays far below 1e-8 at the boundary.
    pub fn whole_space_for(dim: usize, u0: &InitialDatum, horizon: f64) -> Domain {
        let support = u0.support_radius().unwrap_or(0.0);
        Domain::WholeSpace { dim, radius: support + kernel_halfwidth(horizon.max(1e-3)) }
    }
}

/// Reaction term `f(u)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Drift {
    /// `k u`.
    Linear { k: f64 },
    /// `k |u|^p`; equals `k u^p` for `u ≥ 0` and for even `p`.
    Power { k: f64, p: f64 },
    /// `C u^{1+β}` for `u > 0`, 0 otherwise.
    BoundedG { c: f64, beta: f64 },
}

impl Drift {
    #[inline]
    pub fn eval(&self, u: f64) -> f64 {
        match *self {
            Drift::Linear { k } => k * u,
            Drift::Power { k, p } => k * u.abs().powf(p),
            Drift::BoundedG { c, beta } => {
                if u > 0.0 {
                    c * u.powf(1.0 + beta)
                } else {
                    0.0
                }
            }
        }
    }

    /// Homogeneity degree `q` with `f(λu) = λ^q f(u)` for `λ > 0`; sets the
    /// exponent of the random coefficient after the exponential transform.
    pub fn degree(&self) -> f64 {
        match *self {
            Drift::Linear { .. } => 1.0,
            Drift::Power { p, .. } => p,
            Drift::BoundedG { beta, .. } => 1.0 + beta,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Noise {
    None,
    /// `σ dB_t`.
    Additive { sigma: f64 },
    /// `σ u dB_t`.
    Multiplicative { sigma: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PdeModel {
    pub domain: Domain,
    pub drift: Drift,
    pub noise: Noise,
}

impl PdeModel {
    pub fn validate(&self) -> Result<()> {
        match self.domain {
            Domain::WholeSpace { dim, radius } => {
                if dim != 1 && dim != 2 {
                    return Err(config(format!("simulation dimension must be 1 or 2, got {dim}")));
                }
                if !(radius > 0.0 && radius.is_finite()) {
                    return Err(config("domain radius must be > 0"));
                }
            }
            Domain::Interval { length } => {
                if !(length > 0.0 && length.is_finite()) {
                    return Err(config("interval length must be > 0"));
                }
            }
        }
        match self.drift {
            Drift::Power { p, k } if !(p > 0.0) || !k.is_finite() => {
                return Err(config(format!("power drift needs p > 0, got {p}")))
            }
            Drift::BoundedG { c, beta } if !(c > 0.0 && beta > 0.0) => {
                return Err(config("bounded drift needs C > 0 and beta > 0"))
            }
            _ => {}
        }
        match self.noise {
            Noise::Additive { sigma } | Noise::Multiplicative { sigma } if !(sigma >= 0.0 && sigma.is_finite()) => {
                Err(config(format!("noise amplitude must be >= 0, got {sigma}")))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// Forward Euler in time; needs `dt ≤ h²/(2d)`.
    Explicit,
    /// Backward Euler diffusion (dimension-split in 2-d), forward Euler reaction.
    #[default]
    SemiImplicit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverSpec {
    pub dt: f64,
    /// Target grid spacing; the actual spacing divides the domain evenly.
    pub h: f64,
    pub scheme: Scheme,
    pub horizon: f64,
    /// Blowup level `M`; defaults to `1e6 (1 + sup|u₀|)`.
    pub blowup_threshold: Option<f64>,
    /// Halve the step when the sup-norm grows by more than 20% in one step.
    pub adaptive: bool,
    /// Times at which the field is recorded (in addition to the horizon).
    pub snapshots: Vec<f64>,
    pub record_trace: bool,
}

impl SolverSpec {
    pub fn new(dt: f64, h: f64, horizon: f64) -> Self {
        SolverSpec {
            dt,
            h,
            scheme: Scheme::SemiImplicit,
            horizon,
            blowup_threshold: None,
            adaptive: true,
            snapshots: Vec::new(),
            record_trace: false,
        }
    }

    pub fn threshold_for(&self, u0: &InitialDatum) -> f64 {
        self.blowup_threshold.unwrap_or(1e6 * (1.0 + u0.sup_abs()))
    }

    pub fn validate(&self, grid: &Grid) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(config(format!("solver dt must be > 0, got {}", self.dt)));
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(config(format!("solver horizon must be > 0, got {}", self.horizon)));
        }
        if let Some(m) = self.blowup_threshold {
            if !(m > 0.0) {
                return Err(config("blowup threshold must be > 0"));
            }
        }
        if self.snapshots.iter().any(|&s| !(s > 0.0 && s <= self.horizon)) {
            return Err(config("snapshot times must lie in (0, horizon]"));
        }
        if self.scheme == Scheme::Explicit {
            let limit = grid.spacing * grid.spacing / (2.0 * grid.dim as f64);
            if self.dt > limit * (1.0 + 1e-12) {
                return Err(config(format!(
                    "explicit scheme is unstable: dt = {} exceeds h²/(2d) = {limit}",
                    self.dt
                )));
            }
        }
        Ok(())
    }
}
