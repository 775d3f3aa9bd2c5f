use serde::{Deserialize, Serialize};

use super::ScalarField;
use crate::analytic::EigenPair;
use crate::error::{argument, Result};
use crate::kernel::{convolve_initial, heat_kernel, InitialDatum, QuadSpec};
use crate::paths::BrownianPath;

fn transform_factor(path: &BrownianPath, sigma: f64, t: f64) -> Result<f64> {
    let b = path.value_at(t)?;
    Ok((sigma * b - 0.5 * sigma * sigma * t).exp())
}

/// `u = e^{σB_t - σ²t/2} w` at a path grid time `t`.
pub fn reconstruct_u(w: &ScalarField, path: &BrownianPath, sigma: f64, t: f64) -> Result<ScalarField> {
    let f = transform_factor(path, sigma, t)?;
    Ok(ScalarField { grid: w.grid, values: w.values.iter().map(|v| v * f).collect() })
}

/// Inverse of [`reconstruct_u`].
pub fn forward_transform(u: &ScalarField, path: &BrownianPath, sigma: f64, t: f64) -> Result<ScalarField> {
    let f = transform_factor(path, sigma, t)?;
    Ok(ScalarField { grid: u.grid, values: u.values.iter().map(|v| v / f).collect() })
}

/// Exact solution of `du = Δu dt + σ dB_t` on ℝ^d: `(K_t * u₀)(x) + σB_t`.
pub fn additive_exact_solution(
    u0: &InitialDatum,
    sigma: f64,
    t: f64,
    x: &[f64],
    path: &BrownianPath,
    quad: &QuadSpec,
) -> Result<f64> {
    let b = path.value_at(t)?;
    Ok(convolve_initial(u0, t, x, quad)? + sigma * b)
}

/// Solution of `du = (Δu + ku) dt + σ dB_t` on ℝ^d given the noise-free
/// solution `v_det = e^{kt}(K_t * u₀)(x)`: adds the stochastic convolution
/// `σ ∫₀^t e^{k(t-s)} dB_s`, evaluated as a left-point Itô sum on the path grid.
pub fn additive_linear_solution(v_det: f64, k: f64, sigma: f64, t: f64, path: &BrownianPath) -> Result<f64> {
    let n = path.index_of(t)?;
    let mut acc = 0.0;
    for i in 0..n {
        let db = path.values[i + 1] - path.values[i];
        acc += (k * (t - path.time(i))).exp() * db;
    }
    Ok(v_det + sigma * acc)
}

/// Indicator of `{u ≤ v}`.
pub fn comparison_event(u_sample: f64, v_det: f64) -> bool {
    u_sample <= v_det
}

/// Weight for [`eigen_pairing_g`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PairingWeight {
    /// Heat kernel `K(·, t)` centred at the origin.
    Kernel { t: f64 },
    /// First Dirichlet eigenfunction on `(0, L)`.
    Eigen(EigenPair),
}

type WeightFn = Box<dyn Fn(&[f64]) -> f64>;

/// Trapezoid quadrature of `∫ weight · w dx` over the field's grid.
pub fn eigen_pairing_g(field: &ScalarField, weight: PairingWeight) -> Result<f64> {
    let g = field.grid;
    let wfn: WeightFn = match weight {
        PairingWeight::Kernel { t } => {
            if !(t > 0.0) {
                return Err(argument(format!("kernel weight needs t > 0, got {t}")));
            }
            Box::new(move |x: &[f64]| heat_kernel(x, t))
        }
        PairingWeight::Eigen(pair) => {
            if g.dim != 1 {
                return Err(argument("eigenfunction weight is one-dimensional"));
            }
            Box::new(move |x: &[f64]| pair.phi(x[0]))
        }
    };
    let n = g.n;
    let edge = |i: usize| if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
    let mut terms = Vec::with_capacity(field.values.len());
    for (idx, v) in field.values.iter().enumerate() {
        let c = match g.dim {
            1 => edge(idx),
            _ => edge(idx / n) * edge(idx % n),
        };
        terms.push(c * wfn(&g.point(idx)) * v);
    }
    Ok(crate::quad::pairwise_sum(&terms) * g.spacing.powi(g.dim as i32))
}
