//! Monte Carlo comparisons of random solutions against deterministic ones.

use serde::{Deserialize, Serialize};

use super::{
    reconstruct_u, solve_additive, solve_deterministic, solve_random_multiplicative, Drift, Noise, PdeModel,
    ScalarField, SolverSpec,
};
use crate::error::{argument, config, domain, Result};
use crate::kernel::InitialDatum;
use crate::mc::{bound_check, CheckKind, Execution, MCEstimate, Verdict};
use crate::paths::{sample_path, BrownianPath, SeedSpec};

/// Where and how a field comparison is evaluated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckSetup {
    pub points: Vec<Vec<f64>>,
    pub times: Vec<f64>,
    pub n_paths: u64,
    pub master_seed: u64,
    /// Discretization allowance added to `3 SE` in every node verdict.
    pub bias: f64,
}

impl CheckSetup {
    fn validate(&self, horizon: f64) -> Result<()> {
        if self.n_paths == 0 {
            return Err(config("n_paths must be at least 1"));
        }
        if self.points.is_empty() || self.times.is_empty() {
            return Err(config("comparison needs at least one point and one time"));
        }
        if self.times.iter().any(|&t| !(t > 0.0 && t <= horizon * (1.0 + 1e-12))) {
            return Err(config("comparison times must lie in (0, horizon]"));
        }
        if !(self.bias >= 0.0) {
            return Err(config("bias budget must be >= 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeComparison {
    pub x: Vec<f64>,
    pub t: f64,
    pub estimate: MCEstimate,
    pub reference: f64,
    pub bias: f64,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupersolutionReport {
    pub rows: Vec<NodeComparison>,
    /// Paths whose sup-norm crossed the blowup threshold before the last
    /// comparison time; they are excluded from the means.
    pub blown_paths: u64,
    /// Smallest transformed nodal value over all paths and steps.
    pub min_nodal: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SublinearReport {
    pub rows: Vec<NodeComparison>,
    pub blown_paths: u64,
    pub pass: bool,
}

fn path_for(spec: &SolverSpec, master_seed: u64, i: u64) -> Result<BrownianPath> {
    let n_steps = (spec.horizon / spec.dt).round().max(1.0) as usize;
    sample_path(spec.horizon, n_steps, SeedSpec::new(master_seed, i))
}

fn sample_points(field: &ScalarField, points: &[Vec<f64>]) -> Result<Vec<f64>> {
    points
        .iter()
        .map(|x| field.at(x).ok_or_else(|| argument(format!("point {x:?} is outside the grid"))))
        .collect()
}

/// Per-path samples laid out as `[time][point]`, or `None` for a blown path.
type PathSamples = Option<Vec<Vec<f64>>>;

fn reduce(
    samples: &[PathSamples],
    setup: &CheckSetup,
    reference: &[Vec<f64>],
    kind: CheckKind,
) -> Result<Vec<NodeComparison>> {
    let finite: Vec<&Vec<Vec<f64>>> = samples.iter().flatten().collect();
    if finite.is_empty() {
        return Err(domain("every sampled path blew up before the comparison time"));
    }
    let mut rows = Vec::new();
    for (ti, &t) in setup.times.iter().enumerate() {
        for (pi, x) in setup.points.iter().enumerate() {
            let column: Vec<f64> = finite.iter().map(|s| s[ti][pi]).collect();
            let estimate = MCEstimate::from_samples(&column, setup.master_seed)?;
            let r = reference[ti][pi];
            let verdict = bound_check(r, &estimate, setup.bias, kind)?;
            rows.push(NodeComparison { x: x.clone(), t, estimate, reference: r, bias: setup.bias, verdict });
        }
    }
    Ok(rows)
}

fn deterministic_reference(
    model: &PdeModel,
    u0: &InitialDatum,
    spec: &SolverSpec,
    setup: &CheckSetup,
) -> Result<Vec<Vec<f64>>> {
    let mut det_spec = spec.clone();
    det_spec.snapshots = setup.times.clone();
    let out = solve_deterministic(model, u0, &det_spec)?;
    let mut rows = Vec::new();
    for &t in &setup.times {
        let Some(field) = out.snapshot(t) else {
            return Err(domain(format!(
                "deterministic solution blows up at t = {} before comparison time {t}",
                out.blowup_time().unwrap_or(f64::NAN)
            )));
        };
        rows.push(sample_points(field, &setup.points)?);
    }
    Ok(rows)
}

/// Compares the Monte Carlo mean of `u` for `du = (Δu + f(u)) dt + σu dB_t`
/// with the noise-free solution; `Eu` should dominate it.
pub fn supersolution_check(
    model: &PdeModel,
    u0: &InitialDatum,
    spec: &SolverSpec,
    setup: &CheckSetup,
    exec: Execution,
) -> Result<SupersolutionReport> {
    let Noise::Multiplicative { sigma } = model.noise else {
        return Err(config("supersolution check needs multiplicative noise"));
    };
    if !(model.drift.degree() > 1.0) {
        return Err(config("supersolution check needs a superlinear drift (p > 1)"));
    }
    if !u0.is_nonnegative() {
        return Err(config("supersolution check needs a nonnegative initial datum"));
    }
    setup.validate(spec.horizon)?;
    let mut det_model = *model;
    det_model.noise = Noise::None;
    let reference = deterministic_reference(&det_model, u0, spec, setup)?;

    let mut path_spec = spec.clone();
    path_spec.snapshots = setup.times.clone();
    let per_path = exec.try_map(setup.n_paths, |i| -> Result<(PathSamples, f64)> {
        let path = path_for(spec, setup.master_seed, i)?;
        let out = solve_random_multiplicative(model, u0, &path, &path_spec)?;
        let mut by_time = Vec::with_capacity(setup.times.len());
        for &t in &setup.times {
            let Some(w) = out.snapshot(t) else { return Ok((None, out.running_min)) };
            by_time.push(sample_points(&reconstruct_u(w, &path, sigma, t)?, &setup.points)?);
        }
        Ok((Some(by_time), out.running_min))
    })?;
    let min_nodal = per_path.iter().map(|(_, m)| *m).fold(f64::INFINITY, f64::min);
    let samples: Vec<PathSamples> = per_path.into_iter().map(|(s, _)| s).collect();
    let blown_paths = samples.iter().filter(|s| s.is_none()).count() as u64;
    let rows = reduce(&samples, setup, &reference, CheckKind::LowerBound)?;
    let pass = rows.iter().all(|r| r.verdict.pass);
    Ok(SupersolutionReport { rows, blown_paths, min_nodal, pass })
}

/// For `du = (Δu + k|u|^p) dt + σ dB_t` with `0 < p ≤ 1`: counts blowups
/// and compares the Monte Carlo mean of `|u|` with the solution of
/// `v_t = Δv + |k| v^p`, `v(0) = |u₀|`.
#[allow(clippy::too_many_arguments)]
pub fn sublinear_global_check(
    k: f64,
    p: f64,
    sigma: f64,
    u0: &InitialDatum,
    domain_: super::Domain,
    spec: &SolverSpec,
    setup: &CheckSetup,
    exec: Execution,
) -> Result<SublinearReport> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(config(format!("sublinear check needs 0 < p <= 1, got {p}")));
    }
    if !u0.is_nonnegative() {
        return Err(config("sublinear check compares against v(0) = u0 and needs u0 >= 0"));
    }
    setup.validate(spec.horizon)?;
    let model = PdeModel { domain: domain_, drift: Drift::Power { k, p }, noise: Noise::Additive { sigma } };
    model.validate()?;
    let det_model = PdeModel { domain: domain_, drift: Drift::Power { k: k.abs(), p }, noise: Noise::None };
    let reference = deterministic_reference(&det_model, u0, spec, setup)?;

    let mut path_spec = spec.clone();
    path_spec.snapshots = setup.times.clone();
    let samples = exec.try_map(setup.n_paths, |i| -> Result<PathSamples> {
        let path = path_for(spec, setup.master_seed, i)?;
        let out = solve_additive(&model, u0, &path, &path_spec)?;
        if out.blew_up() {
            return Ok(None);
        }
        let mut by_time = Vec::with_capacity(setup.times.len());
        for &t in &setup.times {
            let field = out.snapshot(t).ok_or_else(|| domain("missing snapshot"))?;
            by_time.push(sample_points(field, &setup.points)?.into_iter().map(f64::abs).collect());
        }
        Ok(Some(by_time))
    })?;
    let blown_paths = samples.iter().filter(|s| s.is_none()).count() as u64;
    let rows = reduce(&samples, setup, &reference, CheckKind::UpperBound)?;
    let pass = blown_paths == 0 && rows.iter().all(|r| r.verdict.pass);
    Ok(SublinearReport { rows, blown_paths, pass })
}
