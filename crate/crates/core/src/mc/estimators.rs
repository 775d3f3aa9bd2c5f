use serde::{Deserialize, Serialize};

use super::{bound_check, CheckKind, Execution, MCEstimate, Verdict};
use crate::analytic::{
    deterministic_tstar, exp_event_probability, interval_probability, positivity_probability,
    AdditiveNoiseParams, BoundedDomainParams, ThresholdChoice,
};
use crate::error::{config, domain, Result};
use crate::kernel::{convolve_initial, InitialDatum, QuadSpec};
use crate::paths::{event_exp_exceeds, exp_functional, sample_path, tau_hitting, SeedSpec};
use crate::pde::{
    additive_linear_solution, comparison_event, sublinear_global_check, supersolution_check, CheckSetup, Domain,
    NodeComparison, PdeModel, SolverSpec,
};

/// Space-time evaluation point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalPoint {
    pub x: Vec<f64>,
    pub t: f64,
}

/// Named experiment with its model inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Estimand {
    /// `P(u(x,t) > 0)` for `du = Δu dt + σ dB_t`.
    Positivity { u0: InitialDatum, sigma: f64 },
    /// `P(a < u(x,t) < b)` for the same equation.
    Interval { u0: InitialDatum, sigma: f64, a: f64, b: f64 },
    /// `E u(x,t)` for the same equation; equals the heat solution.
    MeanField { u0: InitialDatum, sigma: f64 },
    /// `P(u ≤ v)` and `E(u - v)` for `du = (Δu + ku) dt + σ dB_t` against
    /// its noise-free solution `v`.
    Comparison { u0: InitialDatum, k: f64, sigma: f64, steps_per_unit: usize },
    /// `P(e^{-(p-1)σ²t/2 + (p-1)σB_t} > ε)`.
    ExpEvent { p: f64, sigma: f64, epsilon: f64 },
    /// `P(τ > T*)` on a bounded interval, estimated directly and through the
    /// exponential functional on the same paths.
    TauSurvival { params: BoundedDomainParams, threshold: ThresholdChoice, dt_fraction: f64 },
    Supersolution { model: PdeModel, u0: InitialDatum, solver: SolverSpec },
    SublinearGlobal { k: f64, p: f64, sigma: f64, u0: InitialDatum, domain: Domain, solver: SolverSpec },
}

impl Estimand {
    pub fn name(&self) -> &'static str {
        match self {
            Estimand::Positivity { .. } => "positivity",
            Estimand::Interval { .. } => "interval",
            Estimand::MeanField { .. } => "mean_field",
            Estimand::Comparison { .. } => "comparison",
            Estimand::ExpEvent { .. } => "exp_event",
            Estimand::TauSurvival { .. } => "tau_survival",
            Estimand::Supersolution { .. } => "supersolution",
            Estimand::SublinearGlobal { .. } => "sublinear_global",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorSpec {
    pub estimand: Estimand,
    pub n_paths: u64,
    pub points: Vec<EvalPoint>,
    /// Discretization allowance; defaults to 0 for exact samplers, `2·dt`
    /// for functional estimands and must be given for field estimands.
    pub bias: Option<f64>,
}

/// One row of an estimator run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointEstimate {
    pub label: String,
    pub x: Vec<f64>,
    pub t: f64,
    /// Analytic value, or the deterministic reference for field estimands.
    pub analytic: f64,
    pub estimate: MCEstimate,
    pub bias: f64,
    pub check: CheckKind,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TauReport {
    pub tstar: f64,
    /// `(1 - e^{-λ₁βT*})/(λ₁β)`, the level the functional must stay below.
    pub threshold: f64,
    pub dt: f64,
    pub direct: MCEstimate,
    pub functional: MCEstimate,
    /// Paths on which the two indicators disagree.
    pub mismatches: u64,
}

/// Stream selector for evaluation point `j`, so each point gets independent
/// draws while path `i` keeps stream `i`.
fn point_seed(master: u64, j: usize) -> u64 {
    let mut z = master ^ (j as u64).wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// `B_t` for path `i` of point `j`.
fn terminal_b(master: u64, j: usize, i: u64, t: f64) -> Result<f64> {
    Ok(sample_path(t, 1, SeedSpec::new(point_seed(master, j), i))?.terminal())
}

fn row(label: &str, p: &EvalPoint, analytic: f64, estimate: MCEstimate, bias: f64, check: CheckKind) -> Result<PointEstimate> {
    let verdict = bound_check(analytic, &estimate, bias, check)?;
    Ok(PointEstimate { label: label.to_string(), x: p.x.clone(), t: p.t, analytic, estimate, bias, check, verdict })
}

fn from_nodes(label: &str, rows: Vec<NodeComparison>, check: CheckKind) -> Vec<PointEstimate> {
    rows.into_iter()
        .map(|r| PointEstimate {
            label: label.to_string(),
            x: r.x,
            t: r.t,
            analytic: r.reference,
            estimate: r.estimate,
            bias: r.bias,
            check,
            verdict: r.verdict,
        })
        .collect()
}

fn heat_at(u0: &InitialDatum, p: &EvalPoint) -> Result<f64> {
    convolve_initial(u0, p.t, &p.x, &QuadSpec::for_dim(p.x.len()))
}

fn validate(spec: &EstimatorSpec) -> Result<()> {
    if spec.n_paths == 0 {
        return Err(config("n_paths must be at least 1"));
    }
    if let Some(b) = spec.bias {
        if !(b >= 0.0) {
            return Err(config("bias must be >= 0"));
        }
    }
    let needs_points = !matches!(spec.estimand, Estimand::TauSurvival { .. });
    if needs_points && spec.points.is_empty() {
        return Err(config("estimator needs at least one evaluation point"));
    }
    for p in &spec.points {
        if !(p.t > 0.0 && p.t.is_finite()) {
            return Err(config(format!("evaluation time must be > 0, got {}", p.t)));
        }
    }
    match &spec.estimand {
        Estimand::Positivity { u0, sigma } | Estimand::Interval { u0, sigma, .. } | Estimand::MeanField { u0, sigma } => {
            u0.validate()?;
            for p in &spec.points {
                AdditiveNoiseParams::new(*sigma, p.t, 0.0)?;
            }
        }
        Estimand::Comparison { u0, sigma, steps_per_unit, .. } => {
            u0.validate()?;
            if !(*sigma >= 0.0) || *steps_per_unit == 0 {
                return Err(config("comparison needs sigma >= 0 and steps_per_unit >= 1"));
            }
        }
        Estimand::ExpEvent { .. } => {}
        Estimand::TauSurvival { params, dt_fraction, .. } => {
            params.validate()?;
            if !(*dt_fraction > 0.0 && *dt_fraction <= 1.0) {
                return Err(config("dt_fraction must lie in (0, 1]"));
            }
        }
        Estimand::Supersolution { .. } | Estimand::SublinearGlobal { .. } => {
            if spec.bias.is_none() {
                return Err(config("field estimands need an explicit bias budget"));
            }
        }
    }
    Ok(())
}

/// Run one estimator. Output rows are deterministic in `(spec, master_seed)`
/// whatever the execution mode.
pub fn run_estimator(spec: &EstimatorSpec, master_seed: u64, exec: Execution) -> Result<Vec<PointEstimate>> {
    validate(spec)?;
    let n = spec.n_paths;
    let bias = spec.bias.unwrap_or(0.0);
    let mut out = Vec::new();
    match &spec.estimand {
        Estimand::Positivity { u0, sigma } => {
            for (j, p) in spec.points.iter().enumerate() {
                let heat = heat_at(u0, p)?;
                let analytic = positivity_probability(&AdditiveNoiseParams::new(*sigma, p.t, -heat)?)?;
                let hits = exec.try_map(n, |i| Ok(heat + sigma * terminal_b(master_seed, j, i, p.t)? > 0.0))?;
                let est = MCEstimate::from_indicators(&hits, master_seed)?;
                out.push(row("positivity", p, analytic, est, bias, CheckKind::TwoSided)?);
            }
        }
        Estimand::Interval { u0, sigma, a, b } => {
            for (j, p) in spec.points.iter().enumerate() {
                let heat = heat_at(u0, p)?;
                let analytic = interval_probability(*a, *b, &AdditiveNoiseParams::new(*sigma, p.t, -heat)?)?;
                let hits = exec.try_map(n, |i| {
                    let u = heat + sigma * terminal_b(master_seed, j, i, p.t)?;
                    Ok(*a < u && u < *b)
                })?;
                let est = MCEstimate::from_indicators(&hits, master_seed)?;
                out.push(row("interval", p, analytic, est, bias, CheckKind::TwoSided)?);
            }
        }
        Estimand::MeanField { u0, sigma } => {
            for (j, p) in spec.points.iter().enumerate() {
                let heat = heat_at(u0, p)?;
                let samples = exec.try_map(n, |i| Ok(heat + sigma * terminal_b(master_seed, j, i, p.t)?))?;
                let est = MCEstimate::from_samples(&samples, master_seed)?;
                out.push(row("mean_field", p, heat, est, bias, CheckKind::TwoSided)?);
            }
        }
        Estimand::Comparison { u0, k, sigma, steps_per_unit } => {
            for (j, p) in spec.points.iter().enumerate() {
                let v = (k * p.t).exp() * heat_at(u0, p)?;
                let steps = ((p.t * *steps_per_unit as f64).round() as usize).max(1);
                let pairs = exec.try_map(n, |i| {
                    let path = sample_path(p.t, steps, SeedSpec::new(point_seed(master_seed, j), i))?;
                    let u = additive_linear_solution(v, *k, *sigma, p.t, &path)?;
                    Ok((comparison_event(u, v), u - v))
                })?;
                let hits: Vec<bool> = pairs.iter().map(|q| q.0).collect();
                let diffs: Vec<f64> = pairs.iter().map(|q| q.1).collect();
                let freq = MCEstimate::from_indicators(&hits, master_seed)?;
                out.push(row("comparison_frequency", p, 0.5, freq, bias, CheckKind::TwoSided)?);
                let mean = MCEstimate::from_samples(&diffs, master_seed)?;
                out.push(row("comparison_mean_difference", p, 0.0, mean, bias, CheckKind::TwoSided)?);
            }
        }
        Estimand::ExpEvent { p: power, sigma, epsilon } => {
            for (j, p) in spec.points.iter().enumerate() {
                let analytic = exp_event_probability(*power, *sigma, *epsilon, p.t)?;
                let hits = exec.try_map(n, |i| {
                    let path = sample_path(p.t, 1, SeedSpec::new(point_seed(master_seed, j), i))?;
                    event_exp_exceeds(&path, *power, *sigma, *epsilon, p.t)
                })?;
                let est = MCEstimate::from_indicators(&hits, master_seed)?;
                out.push(row("exp_event", p, analytic, est, bias, CheckKind::TwoSided)?);
            }
        }
        Estimand::TauSurvival { params, threshold, dt_fraction } => {
            let tstar = match deterministic_tstar(params, threshold.level(params))?.finite() {
                Some(t) => t,
                None => return Err(domain("T* is infinite for these parameters; the experiment is not defined")),
            };
            let report = estimate_p_tau_gt_tstar(params, *threshold, n, dt_fraction * tstar, master_seed, exec)?;
            let bias = spec.bias.unwrap_or(2.0 * report.dt);
            let at = EvalPoint { x: Vec::new(), t: report.tstar };
            out.push(row("tau_survival_direct", &at, report.functional.mean, report.direct, bias, CheckKind::TwoSided)?);
            out.push(row(
                "tau_survival_functional",
                &at,
                report.direct.mean,
                report.functional,
                bias,
                CheckKind::TwoSided,
            )?);
        }
        Estimand::Supersolution { model, u0, solver } => {
            let setup = field_setup(spec, master_seed, bias)?;
            let report = supersolution_check(model, u0, solver, &setup, exec)?;
            out = from_nodes("supersolution", report.rows, CheckKind::LowerBound);
        }
        Estimand::SublinearGlobal { k, p, sigma, u0, domain: dom, solver } => {
            let setup = field_setup(spec, master_seed, bias)?;
            let report = sublinear_global_check(*k, *p, *sigma, u0, *dom, solver, &setup, exec)?;
            let blown = report.blown_paths;
            out = from_nodes("sublinear_abs_mean", report.rows, CheckKind::UpperBound);
            let at = EvalPoint { x: Vec::new(), t: solver.horizon };
            let est = MCEstimate::from_count(blown, n, master_seed);
            out.push(row("sublinear_blowup_fraction", &at, 0.0, est, 0.0, CheckKind::TwoSided)?);
        }
    }
    Ok(out)
}

/// Field estimands evaluate every listed point at every listed time.
fn field_setup(spec: &EstimatorSpec, master_seed: u64, bias: f64) -> Result<CheckSetup> {
    let mut points: Vec<Vec<f64>> = Vec::new();
    let mut times: Vec<f64> = Vec::new();
    for p in &spec.points {
        if !points.contains(&p.x) {
            points.push(p.x.clone());
        }
        if !times.contains(&p.t) {
            times.push(p.t);
        }
    }
    times.sort_by(f64::total_cmp);
    Ok(CheckSetup { points, times, n_paths: spec.n_paths, master_seed, bias })
}

/// Fraction of paths with `∫₀^{T*} e^{-(λ₁+κ²/2)βs + κβB_s} ds` below
/// `(1 - e^{-λ₁βT*})/(λ₁β)`, computed both from the hitting time and from
/// the terminal functional on identical paths.
pub fn estimate_p_tau_gt_tstar(
    params: &BoundedDomainParams,
    choice: ThresholdChoice,
    n_paths: u64,
    dt: f64,
    master_seed: u64,
    exec: Execution,
) -> Result<TauReport> {
    if n_paths == 0 {
        return Err(config("n_paths must be at least 1"));
    }
    let tstar = deterministic_tstar(params, choice.level(params))?
        .finite()
        .ok_or_else(|| domain("T* is infinite for these parameters; the experiment is not defined"))?;
    if !(dt > 0.0 && dt <= tstar) {
        return Err(config(format!("dt must lie in (0, T*], got {dt}")));
    }
    let rate = params.lambda1 * params.beta;
    let threshold = -(-rate * tstar).exp_m1() / rate;
    let steps = (tstar / dt).round().max(1.0) as usize;
    let a = -(params.lambda1 + 0.5 * params.kappa * params.kappa) * params.beta;
    let b = params.kappa * params.beta;
    let pairs = exec.try_map(n_paths, |i| {
        let path = sample_path(tstar, steps, SeedSpec::new(master_seed, i))?;
        let direct = tau_hitting(&path, params.lambda1, params.kappa, params.beta, threshold).is_beyond();
        let functional = exp_functional(&path, a, b) < threshold;
        Ok((direct, functional))
    })?;
    let direct: Vec<bool> = pairs.iter().map(|q| q.0).collect();
    let functional: Vec<bool> = pairs.iter().map(|q| q.1).collect();
    let mismatches = pairs.iter().filter(|q| q.0 != q.1).count() as u64;
    Ok(TauReport {
        tstar,
        threshold,
        dt: tstar / steps as f64,
        direct: MCEstimate::from_indicators(&direct, master_seed)?,
        functional: MCEstimate::from_indicators(&functional, master_seed)?,
        mismatches,
    })
}

/// `P(τ > T*)` on the sampled paths at step `dt` and on their Brownian-bridge
/// refinements at `dt/2`; common randomness keeps the shift free of Monte
/// Carlo noise beyond the discretization effect.
pub fn tau_refinement_check(
    params: &BoundedDomainParams,
    choice: ThresholdChoice,
    n_paths: u64,
    dt: f64,
    master_seed: u64,
    exec: Execution,
) -> Result<(MCEstimate, MCEstimate)> {
    let base = estimate_p_tau_gt_tstar(params, choice, 1, dt, master_seed, exec)?;
    let steps = (base.tstar / base.dt).round() as usize;
    let pairs = exec.try_map(n_paths, |i| {
        let coarse = sample_path(base.tstar, steps, SeedSpec::new(master_seed, i))?;
        let fine = coarse.refine();
        let survive = |p: &crate::paths::BrownianPath| {
            tau_hitting(p, params.lambda1, params.kappa, params.beta, base.threshold).is_beyond()
        };
        Ok((survive(&coarse), survive(&fine)))
    })?;
    let coarse: Vec<bool> = pairs.iter().map(|q| q.0).collect();
    let fine: Vec<bool> = pairs.iter().map(|q| q.1).collect();
    Ok((MCEstimate::from_indicators(&coarse, master_seed)?, MCEstimate::from_indicators(&fine, master_seed)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn positivity(u0: InitialDatum, n: u64) -> EstimatorSpec {
        EstimatorSpec {
            estimand: Estimand::Positivity { u0, sigma: 0.7 },
            n_paths: n,
            points: vec![EvalPoint { x: vec![0.0], t: 0.5 }],
            bias: None,
        }
    }

    #[test]
    fn zero_datum_gives_fair_coin() {
        let rows = run_estimator(&positivity(InitialDatum::Constant { c: 0.0 }, 20_000), 5, Execution::Auto).unwrap();
        assert_eq!(rows[0].analytic, 0.5);
        assert!(rows[0].verdict.pass, "{:?}", rows[0]);
    }

    #[test]
    fn worker_count_does_not_change_results() {
        let spec = positivity(InitialDatum::gaussian_bump(1.0, 1.0).unwrap(), 3000);
        let a = run_estimator(&spec, 42, Execution::Sequential).unwrap();
        let b = run_estimator(&spec, 42, Execution::Parallel { workers: 4 }).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn doubling_paths_shrinks_stderr_by_sqrt_two() {
        let u0 = InitialDatum::Constant { c: 0.0 };
        let a = run_estimator(&positivity(u0.clone(), 20_000), 1, Execution::Auto).unwrap();
        let b = run_estimator(&positivity(u0, 40_000), 1, Execution::Auto).unwrap();
        let ratio = a[0].estimate.stderr / b[0].estimate.stderr;
        assert!((ratio / 2f64.sqrt() - 1.0).abs() < 0.1, "{ratio}");
    }

    #[test]
    fn inconsistent_spec_rejected_before_sampling() {
        let mut spec = positivity(InitialDatum::Constant { c: 0.0 }, 0);
        assert!(matches!(run_estimator(&spec, 0, Execution::Auto), Err(crate::Error::Config(_))));
        spec.n_paths = 10;
        spec.points.clear();
        assert!(matches!(run_estimator(&spec, 0, Execution::Auto), Err(crate::Error::Config(_))));
    }

    fn tau_params() -> BoundedDomainParams {
        BoundedDomainParams { kappa: 0.5, beta: 1.0, lambda1: 1.0, u_phi_0: 0.5, c_drift: 1.0 }
    }

    #[test]
    fn tau_indicators_agree_path_by_path() {
        let r = estimate_p_tau_gt_tstar(&tau_params(), ThresholdChoice::Pairing, 2000, 1e-3, 3, Execution::Auto).unwrap();
        assert_eq!(r.mismatches, 0);
        assert_eq!(r.direct, r.functional);
        assert!(r.direct.mean > 0.0 && r.direct.mean < 1.0);
        let (coarse, fine) =
            tau_refinement_check(&tau_params(), ThresholdChoice::Pairing, 2000, 1e-3, 3, Execution::Auto).unwrap();
        assert_eq!(coarse, r.direct);
        assert!((coarse.mean - fine.mean).abs() < coarse.stderr);
    }

    #[test]
    fn global_tstar_is_reported() {
        let p = BoundedDomainParams { u_phi_0: 2.0, ..tau_params() };
        assert!(matches!(
            estimate_p_tau_gt_tstar(&p, ThresholdChoice::Pairing, 10, 1e-3, 0, Execution::Auto),
            Err(crate::Error::Domain(_))
        ));
    }
}
