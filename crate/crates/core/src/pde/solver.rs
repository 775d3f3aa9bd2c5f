use serde::{Deserialize, Serialize};

use super::{Grid, Noise, PdeModel, ScalarField, Scheme, SolverSpec};
use crate::error::{config, Result};
use crate::kernel::InitialDatum;
use crate::paths::BrownianPath;

/// Relative growth of the sup-norm in one step that triggers step halving.
const GROWTH_LIMIT: f64 = 1.2;
/// Smallest step, as a power-of-two fraction of the nominal one.
const MAX_HALVINGS: i32 = 24;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub t: f64,
    pub sup: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BlowupStatus {
    Completed,
    /// The sup-norm first exceeded the blowup threshold at `t_b`.
    BlewUp { t_b: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveOutcome {
    pub status: BlowupStatus,
    /// Field at the horizon, or the last finite field before blowup.
    pub field: ScalarField,
    /// Fields at the requested snapshot times reached before blowup.
    pub snapshots: Vec<(f64, ScalarField)>,
    pub trace: Vec<TracePoint>,
    pub steps: usize,
    /// Minimum nodal value over all accepted steps.
    pub running_min: f64,
}

impl SolveOutcome {
    pub fn blew_up(&self) -> bool {
        matches!(self.status, BlowupStatus::BlewUp { .. })
    }

    pub fn blowup_time(&self) -> Option<f64> {
        match self.status {
            BlowupStatus::BlewUp { t_b } => Some(t_b),
            BlowupStatus::Completed => None,
        }
    }

    pub fn snapshot(&self, t: f64) -> Option<&ScalarField> {
        self.snapshots
            .iter()
            .find(|(s, _)| (s - t).abs() <= 1e-12 * t.abs().max(1.0))
            .map(|(_, f)| f)
    }
}

enum Forcing<'a> {
    None,
    Additive { sigma: f64, path: &'a BrownianPath },
    Multiplicative { sigma: f64, degree: f64, path: &'a BrownianPath },
}

impl Forcing<'_> {
    /// Coefficient multiplying the reaction on `[t, t + dt)`.
    #[inline]
    fn coefficient(&self, t: f64) -> f64 {
        match *self {
            Forcing::Multiplicative { sigma, degree, path } => {
                ((degree - 1.0) * (sigma * path.interpolate(t) - 0.5 * sigma * sigma * t)).exp()
            }
            _ => 1.0,
        }
    }

    #[inline]
    fn increment(&self, t: f64, dt: f64) -> f64 {
        match *self {
            Forcing::Additive { sigma, path } => sigma * (path.interpolate(t + dt) - path.interpolate(t)),
            _ => 0.0,
        }
    }

    fn path(&self) -> Option<&BrownianPath> {
        match *self {
            Forcing::None => None,
            Forcing::Additive { path, .. } | Forcing::Multiplicative { path, .. } => Some(path),
        }
    }
}

/// Solve `∂_t v = Δv + f(v)`; the model must carry no noise.
pub fn solve_deterministic(model: &PdeModel, u0: &InitialDatum, spec: &SolverSpec) -> Result<SolveOutcome> {
    if model.noise != Noise::None {
        return Err(config("solve_deterministic requires a noise-free model"));
    }
    march(model, u0, spec, Forcing::None)
}

/// Solve the transformed equation for `w` along one Brownian path. The
/// returned fields are in `w`-variables; see [`super::reconstruct_u`].
pub fn solve_random_multiplicative(
    model: &PdeModel,
    u0: &InitialDatum,
    path: &BrownianPath,
    spec: &SolverSpec,
) -> Result<SolveOutcome> {
    let Noise::Multiplicative { sigma } = model.noise else {
        return Err(config("solve_random_multiplicative requires multiplicative noise"));
    };
    march(model, u0, spec, Forcing::Multiplicative { sigma, degree: model.drift.degree(), path })
}

/// Semi-implicit Euler-Maruyama for `du = (Δu + f(u)) dt + σ dB_t`.
pub fn solve_additive(
    model: &PdeModel,
    u0: &InitialDatum,
    path: &BrownianPath,
    spec: &SolverSpec,
) -> Result<SolveOutcome> {
    let Noise::Additive { sigma } = model.noise else {
        return Err(config("solve_additive requires additive noise"));
    };
    march(model, u0, spec, Forcing::Additive { sigma, path })
}

fn check_path_alignment(path: &BrownianPath, spec: &SolverSpec) -> Result<()> {
    if path.horizon() < spec.horizon * (1.0 - 1e-12) {
        return Err(config(format!(
            "path horizon {} is shorter than solver horizon {}",
            path.horizon(),
            spec.horizon
        )));
    }
    let ratio = if path.dt >= spec.dt { path.dt / spec.dt } else { spec.dt / path.dt };
    if (ratio - ratio.round()).abs() > 1e-9 * ratio {
        return Err(config(format!(
            "path step {} and solver step {} are not integer multiples",
            path.dt, spec.dt
        )));
    }
    Ok(())
}

fn march(model: &PdeModel, u0: &InitialDatum, spec: &SolverSpec, forcing: Forcing<'_>) -> Result<SolveOutcome> {
    model.validate()?;
    u0.validate()?;
    if let InitialDatum::Tabulated { dim, .. } = u0 {
        if *dim != model.domain.dim() {
            return Err(config("tabulated initial datum dimension does not match the domain"));
        }
    }
    let grid = Grid::for_domain(&model.domain, spec.h)?;
    spec.validate(&grid)?;
    if let Some(path) = forcing.path() {
        check_path_alignment(path, spec)?;
    }

    let threshold = spec.threshold_for(u0);
    let growth_floor = u0.sup_abs().max(f64::MIN_POSITIVE);
    let min_dt = spec.dt * 2f64.powi(-MAX_HALVINGS);

    let mut targets: Vec<f64> = spec.snapshots.clone();
    targets.push(spec.horizon);
    targets.sort_by(f64::total_cmp);
    targets.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * b.abs().max(1.0));
    let is_snapshot = |t: f64| spec.snapshots.iter().any(|&s| (s - t).abs() <= 1e-12 * t.abs().max(1.0));

    let mut u = ScalarField::from_datum(grid, u0);
    let mut next = u.clone();
    let mut stepper = Stepper::new(grid);
    let mut snapshots = Vec::new();
    let mut trace = Vec::new();
    let mut running_min = u.min();
    let mut sup_old = u.sup_abs();
    if spec.record_trace {
        trace.push(TracePoint { t: 0.0, sup: sup_old });
    }

    let mut t = 0.0;
    let mut dt = spec.dt;
    let mut steps = 0usize;
    for &target in &targets {
        while t < target {
            let remaining = target - t;
            let lands = dt >= remaining * (1.0 - 1e-12);
            let step = if lands { remaining } else { dt };
            let coef = forcing.coefficient(t);
            let inc = forcing.increment(t, step);
            stepper.advance(spec.scheme, &model.drift, &u.values, &mut next.values, step, coef, inc);
            let sup_new = next.sup_abs();
            let exploded = !sup_new.is_finite() || sup_new > threshold;
            let too_fast = sup_new > GROWTH_LIMIT * sup_old && sup_old >= growth_floor;
            if spec.adaptive && (exploded || too_fast) && step > min_dt && sup_old >= growth_floor {
                dt = 0.5 * step;
                continue;
            }
            if exploded {
                return Ok(SolveOutcome {
                    status: BlowupStatus::BlewUp { t_b: t + step },
                    field: u,
                    snapshots,
                    trace,
                    steps,
                    running_min,
                });
            }
            std::mem::swap(&mut u, &mut next);
            t = if lands { target } else { t + step };
            steps += 1;
            sup_old = sup_new;
            running_min = running_min.min(u.min());
            if spec.record_trace {
                trace.push(TracePoint { t, sup: sup_new });
            }
        }
        if is_snapshot(target) {
            snapshots.push((target, u.clone()));
        }
    }
    Ok(SolveOutcome { status: BlowupStatus::Completed, field: u, snapshots, trace, steps, running_min })
}

/// Reusable buffers for one time step.
struct Stepper {
    grid: Grid,
    line: Vec<f64>,
    scratch: Vec<f64>,
}

impl Stepper {
    fn new(grid: Grid) -> Self {
        Stepper { grid, line: vec![0.0; grid.n], scratch: vec![0.0; grid.n] }
    }

    #[allow(clippy::too_many_arguments)]
    fn advance(
        &mut self,
        scheme: Scheme,
        drift: &super::Drift,
        u: &[f64],
        out: &mut [f64],
        dt: f64,
        coef: f64,
        inc: f64,
    ) {
        let g = self.grid;
        let n = g.n;
        let h2 = g.spacing * g.spacing;
        match scheme {
            Scheme::Explicit => {
                for idx in 0..u.len() {
                    if g.is_boundary(idx) {
                        out[idx] = 0.0;
                        continue;
                    }
                    let lap = if g.dim == 1 {
                        (u[idx - 1] - 2.0 * u[idx] + u[idx + 1]) / h2
                    } else {
                        (u[idx - 1] + u[idx + 1] + u[idx - n] + u[idx + n] - 4.0 * u[idx]) / h2
                    };
                    out[idx] = u[idx] + dt * (lap + coef * drift.eval(u[idx])) + inc;
                }
            }
            Scheme::SemiImplicit => {
                for idx in 0..u.len() {
                    out[idx] = if g.is_boundary(idx) { 0.0 } else { u[idx] + dt * coef * drift.eval(u[idx]) + inc };
                }
                let r = dt / h2;
                if g.dim == 1 {
                    implicit_line(out, r, &mut self.scratch);
                } else {
                    for i in 1..n - 1 {
                        implicit_line(&mut out[i * n..(i + 1) * n], r, &mut self.scratch);
                    }
                    for j in 1..n - 1 {
                        for i in 0..n {
                            self.line[i] = out[i * n + j];
                        }
                        implicit_line(&mut self.line, r, &mut self.scratch);
                        for i in 1..n - 1 {
                            out[i * n + j] = self.line[i];
                        }
                    }
                }
            }
        }
    }
}

/// Solve `(1 + 2r) x_i - r (x_{i-1} + x_{i+1}) = b_i` for the interior of
/// `line` in place, with `x_0 = x_{n-1} = 0` (Thomas algorithm).
fn implicit_line(line: &mut [f64], r: f64, scratch: &mut [f64]) {
    let n = line.len();
    if n < 3 {
        return;
    }
    let diag = 1.0 + 2.0 * r;
    // forward sweep over interior indices 1..n-1
    let mut c_prev = 0.0;
    let mut d_prev = 0.0;
    for i in 1..n - 1 {
        let m = diag + r * c_prev;
        let c = -r / m;
        let d = (line[i] + r * d_prev) / m;
        scratch[i] = c;
        line[i] = d;
        c_prev = c;
        d_prev = d;
    }
    line[0] = 0.0;
    line[n - 1] = 0.0;
    for i in (1..n - 2).rev() {
        line[i] -= scratch[i] * line[i + 1];
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pde::{Domain, Drift};

    #[test]
    fn thomas_solves_tridiagonal_system() {
        let r = 0.7;
        let x_true = [0.0, 1.0, -2.0, 0.5, 3.0, 0.0];
        let mut b = [0.0; 6];
        for i in 1..5 {
            b[i] = (1.0 + 2.0 * r) * x_true[i] - r * (x_true[i - 1] + x_true[i + 1]);
        }
        let mut scratch = [0.0; 6];
        implicit_line(&mut b, r, &mut scratch);
        for i in 0..6 {
            assert!((b[i] - x_true[i]).abs() < 1e-13);
        }
    }

    #[test]
    fn explicit_cfl_violation_is_rejected() {
        let model = PdeModel {
            domain: Domain::WholeSpace { dim: 1, radius: 5.0 },
            drift: Drift::Linear { k: 0.0 },
            noise: Noise::None,
        };
        let mut spec = SolverSpec::new(0.01, 0.1, 0.1);
        spec.scheme = Scheme::Explicit;
        let u0 = InitialDatum::gaussian_bump(1.0, 1.0).unwrap();
        assert!(matches!(solve_deterministic(&model, &u0, &spec), Err(crate::Error::Config(_))));
        spec.dt = 0.004;
        assert!(solve_deterministic(&model, &u0, &spec).is_ok());
    }

    #[test]
    fn noisy_model_rejected_by_deterministic_solver() {
        let model = PdeModel {
            domain: Domain::Interval { length: 1.0 },
            drift: Drift::Linear { k: 0.0 },
            noise: Noise::Additive { sigma: 1.0 },
        };
        let u0 = InitialDatum::Constant { c: 1.0 };
        assert!(solve_deterministic(&model, &u0, &SolverSpec::new(0.01, 0.1, 0.1)).is_err());
    }

    #[test]
    fn heat_flow_on_interval_decays_like_first_mode() {
        // sin(πx/L) decays as e^{-λ₁ t} under the heat flow.
        let l = std::f64::consts::PI;
        let model = PdeModel { domain: Domain::Interval { length: l }, drift: Drift::Linear { k: 0.0 }, noise: Noise::None };
        let n = 201;
        let h = l / (n - 1) as f64;
        let values: Vec<f64> = (0..n).map(|i| (i as f64 * h).sin()).collect();
        let u0 = InitialDatum::Tabulated { dim: 1, lower: 0.0, spacing: h, values };
        let spec = SolverSpec::new(1e-4, h, 0.5);
        let out = solve_deterministic(&model, &u0, &spec).unwrap();
        let mid = out.field.at(&[l / 2.0]).unwrap();
        assert!((mid - (-0.5f64).exp()).abs() < 1e-3);
    }

    #[test]
    fn snapshots_are_recorded_at_requested_times() {
        let model = PdeModel {
            domain: Domain::WholeSpace { dim: 1, radius: 6.0 },
            drift: Drift::Linear { k: 1.0 },
            noise: Noise::None,
        };
        let mut spec = SolverSpec::new(0.003, 0.1, 0.1);
        spec.snapshots = vec![0.05, 0.1];
        let out = solve_deterministic(&model, &InitialDatum::gaussian_bump(1.0, 1.0).unwrap(), &spec).unwrap();
        assert_eq!(out.snapshots.len(), 2);
        assert!(out.snapshot(0.05).is_some());
        assert_eq!(out.snapshot(0.1).unwrap(), &out.field);
    }
}
