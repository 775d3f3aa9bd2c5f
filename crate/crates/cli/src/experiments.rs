//! Typed experiments built from a configuration, and how each one runs.

use std::collections::BTreeMap;

use serde_json::{json, Value as Json};

use noiseblow::analytic::{
    blowup_lb_large_p, blowup_lb_small_p, classify_regime, deterministic_tstar, dlm_blowup_lower_bound,
    dlm_density_h, first_eigenpair, interval_probability, positivity_probability, tstar_inequality_sides,
    vanishing_noise_rate, AdditiveNoiseParams, BoundForm, BoundedDomainParams, ThresholdChoice, TstarInputs,
};
use noiseblow::kernel::{convolve_initial, InitialDatum, QuadSpec};
use noiseblow::mc::{
    bound_check, estimate_p_tau_gt_tstar, run_estimator, tau_refinement_check, CheckKind, Estimand, EstimatorSpec,
    EvalPoint, Execution, MCEstimate, Verdict,
};
use noiseblow::paths::{sample_path, SeedSpec};
use noiseblow::pde::{
    solve_deterministic, solve_random_multiplicative, sublinear_global_check, supersolution_check, CheckSetup,
    Domain, Drift, NodeComparison, Noise, PdeModel, Scheme, SolverSpec,
};
use noiseblow::quad::adaptive_simpson;

use crate::config::{nonnegative, positive, require, Resolver};
use crate::error::{config_err, CliError};
use crate::output::{point_cell, verdict_cell, Cell, Plot, Report};

type Result<T> = std::result::Result<T, CliError>;

pub const DEFAULT_SEED: u64 = 20261016;

/// Subcommand families; each experiment belongs to some of them.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Analytic,
    SimulateAdditive,
    SimulateMultiplicative,
    BlowupTime,
    Sweep,
}

impl Mode {
    pub fn name(&self) -> &'static str {
        match self {
            Mode::Analytic => "analytic",
            Mode::SimulateAdditive => "simulate-additive",
            Mode::SimulateMultiplicative => "simulate-multiplicative",
            Mode::BlowupTime => "blowup-time",
            Mode::Sweep => "sweep",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Expectation {
    Blowup,
    Bounded,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Experiment {
    Positivity { u0: InitialDatum, sigma: f64, points: Vec<EvalPoint>, n_paths: u64, bias: f64 },
    Interval { u0: InitialDatum, sigma: f64, a: f64, b: f64, points: Vec<EvalPoint>, n_paths: u64, bias: f64 },
    Rate { offset: f64, t: f64, sigmas: Vec<f64>, tolerance: f64 },
    Comparison { u0: InitialDatum, k: f64, sigma: f64, points: Vec<EvalPoint>, n_paths: u64, steps_per_unit: usize, bias: f64 },
    Sublinear { k: f64, p: f64, sigma: f64, u0: InitialDatum, domain: Domain, solver: SolverSpec, setup: CheckSetup },
    ExpEvent { p: f64, dim: u32, sigma: f64, epsilon: f64, times: Vec<f64>, n_paths: u64, bias: f64 },
    LargeP { p: f64, dim: u32, sigma: f64, epsilon: f64, c2: f64, c3: f64, form: BoundForm, n_paths: u64, bias: f64 },
    PositivityMultiplicative { model: PdeModel, u0: InitialDatum, solver: SolverSpec, n_paths: u64, floor: f64 },
    Supersolution { model: PdeModel, u0: InitialDatum, solver: SolverSpec, setup: CheckSetup },
    TauSurvival { params: BoundedDomainParams, choice: ThresholdChoice, dt_fraction: f64, n_paths: u64 },
    DlmBound { params: BoundedDomainParams, pairings: Vec<f64>, tolerance: f64 },
    Fujita { model: PdeModel, u0: InitialDatum, solver: SolverSpec, expect: Expectation, sigma: f64, n_paths: u64 },
}

pub const EXPERIMENTS: &[&str] = &[
    "positivity",
    "interval",
    "rate",
    "comparison",
    "sublinear",
    "exp_event",
    "large_p",
    "positivity_multiplicative",
    "supersolution",
    "tau_survival",
    "dlm_bound",
    "fujita",
];

/// A fully validated run configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub name: String,
    pub experiment: Experiment,
    pub master_seed: u64,
    pub out_dir: Option<std::path::PathBuf>,
    /// Echo of every used key with defaults applied, excluding the seed and
    /// output location.
    pub resolved: BTreeMap<String, Json>,
}

impl RunConfig {
    pub fn from_resolver(mut r: Resolver) -> Result<Self> {
        let name = r.string("experiment", None)?;
        if !EXPERIMENTS.contains(&name.as_str()) {
            return Err(config_err(format!(
                "`experiment` must be one of {}, got `{name}`",
                EXPERIMENTS.join(", ")
            )));
        }
        let master_seed = r.u64("seed", DEFAULT_SEED)?;
        let out_dir = if r.contains("output.dir") { Some(r.string("output.dir", None)?.into()) } else { None };
        let experiment = parse_experiment(&name, &mut r)?;
        let mut resolved = r.finish(&name)?;
        resolved.remove("seed");
        resolved.remove("output.dir");
        Ok(RunConfig { name, experiment, master_seed, out_dir, resolved })
    }
}

fn n_paths(r: &mut Resolver, default: u64) -> Result<u64> {
    let n = r.u64("estimator.n_paths", default)?;
    if n == 0 {
        return Err(config_err("`estimator.n_paths` must be >= 1"));
    }
    Ok(n)
}

fn dim(r: &mut Resolver) -> Result<usize> {
    match r.u64("model.dim", 1)? {
        d @ (1 | 2) => Ok(d as usize),
        d => Err(config_err(format!("`model.dim` must be 1 or 2, got {d}"))),
    }
}

fn initial_datum(r: &mut Resolver, dim: usize, c: f64, k: f64) -> Result<InitialDatum> {
    let kind = r.string("model.u0.kind", Some("gaussian_bump"))?;
    let u0 = match kind.as_str() {
        "gaussian_bump" => InitialDatum::GaussianBump { c: r.f64("model.u0.c", c)?, k: r.f64("model.u0.k", k)? },
        "constant" => InitialDatum::Constant { c: r.f64("model.u0.c", c)? },
        "indicator_ball" => {
            InitialDatum::IndicatorBall { c: r.f64("model.u0.c", c)?, radius: r.f64("model.u0.radius", 1.0)? }
        }
        "tabulated" => {
            let d = r.u64("model.u0.dim", dim as u64)? as usize;
            let lower = r.f64("model.u0.lower", 0.0)?;
            let spacing = r.f64("model.u0.spacing", 0.0)?;
            let values = r.f64_list("model.u0.values", &[])?;
            InitialDatum::Tabulated { dim: d, lower, spacing, values }
        }
        other => {
            return Err(config_err(format!(
                "`model.u0.kind` must be gaussian_bump, constant, indicator_ball or tabulated, got `{other}`"
            )))
        }
    };
    u0.validate().map_err(|e| config_err(format!("model.u0: {e}")))?;
    Ok(u0)
}

fn eval_points(r: &mut Resolver, dim: usize, xs: &[f64], ts: &[f64]) -> Result<Vec<EvalPoint>> {
    let default_x: Vec<Vec<f64>> = xs.iter().map(|&x| vec![x; dim]).collect();
    let xs = r.points("estimator.x", dim, &default_x)?;
    let ts = r.f64_list("estimator.t", ts)?;
    for &t in &ts {
        positive("estimator.t", t)?;
    }
    if xs.is_empty() || ts.is_empty() {
        return Err(config_err("`estimator.x` and `estimator.t` must be non-empty"));
    }
    Ok(ts.iter().flat_map(|&t| xs.iter().map(move |x| EvalPoint { x: x.clone(), t })).collect())
}

fn solver(r: &mut Resolver, dt: f64, h: f64, horizon: f64) -> Result<SolverSpec> {
    let mut s = SolverSpec::new(positive("solver.dt", r.f64("solver.dt", dt)?)?, 0.0, 0.0);
    s.h = positive("solver.h", r.f64("solver.h", h)?)?;
    s.horizon = positive("solver.horizon", r.f64("solver.horizon", horizon)?)?;
    s.scheme = match r.string("solver.scheme", Some("semi_implicit"))?.as_str() {
        "semi_implicit" => Scheme::SemiImplicit,
        "explicit" => Scheme::Explicit,
        other => return Err(config_err(format!("`solver.scheme` must be semi_implicit or explicit, got `{other}`"))),
    };
    if let Some(m) = r.opt_f64("solver.blowup_threshold")? {
        s.blowup_threshold = Some(positive("solver.blowup_threshold", m)?);
    }
    s.adaptive = r.bool("solver.adaptive", true)?;
    Ok(s)
}

fn whole_space(r: &mut Resolver, dim: usize, u0: &InitialDatum, horizon: f64) -> Result<Domain> {
    Ok(match r.opt_f64("solver.radius")? {
        Some(radius) => Domain::WholeSpace { dim, radius: positive("solver.radius", radius)? },
        None => Domain::whole_space_for(dim, u0, horizon),
    })
}

fn check_setup(r: &mut Resolver, dim: usize, xs: &[f64], ts: &[f64], n: u64, bias: f64, horizon: f64) -> Result<CheckSetup> {
    let default_x: Vec<Vec<f64>> = xs.iter().map(|&x| vec![x; dim]).collect();
    let points = r.points("estimator.x", dim, &default_x)?;
    let mut times = r.f64_list("estimator.t", ts)?;
    times.sort_by(f64::total_cmp);
    for &t in &times {
        require("estimator.t", t, t > 0.0 && t <= horizon, "in (0, solver.horizon]")?;
    }
    let n_paths = n_paths(r, n)?;
    let bias = nonnegative("estimator.bias", r.f64("estimator.bias", bias)?)?;
    Ok(CheckSetup { points, times, n_paths, master_seed: 0, bias })
}

fn bounded_params(r: &mut Resolver, u_phi_0: f64) -> Result<BoundedDomainParams> {
    let length = positive("model.length", r.f64("model.length", std::f64::consts::PI)?)?;
    let params = BoundedDomainParams {
        kappa: positive("model.kappa", r.f64("model.kappa", 0.5)?)?,
        beta: positive("model.beta", r.f64("model.beta", 1.0)?)?,
        lambda1: first_eigenpair(length)?.lambda1,
        u_phi_0,
        c_drift: positive("model.c_drift", r.f64("model.c_drift", 1.0)?)?,
    };
    Ok(params)
}

fn parse_experiment(name: &str, r: &mut Resolver) -> Result<Experiment> {
    Ok(match name {
        "positivity" | "interval" => {
            let d = dim(r)?;
            let sigma = nonnegative("model.sigma", r.f64("model.sigma", 1.0)?)?;
            let u0 = initial_datum(r, d, 1.0, 1.0)?;
            let points = eval_points(r, d, &[0.0], &[1.0])?;
            let n_paths = n_paths(r, 100_000)?;
            let bias = nonnegative("estimator.bias", r.f64("estimator.bias", 0.0)?)?;
            if name == "positivity" {
                Experiment::Positivity { u0, sigma, points, n_paths, bias }
            } else {
                let a = r.f64("estimator.a", -1.0)?;
                let b = r.f64("estimator.b", 1.0)?;
                require("estimator.b", b, a < b, "greater than estimator.a")?;
                Experiment::Interval { u0, sigma, a, b, points, n_paths, bias }
            }
        }
        "rate" => {
            let offset = r.f64("model.offset", -1.0)?;
            require("model.offset", offset, offset < 0.0, "< 0")?;
            let ts = r.f64_list("estimator.t", &[1.0])?;
            let [t] = ts[..] else { return Err(config_err("`estimator.t` must hold a single time for the rate sweep")) };
            let sigmas = r.f64_list("estimator.sigmas", &[0.5, 0.2, 0.1, 0.05])?;
            for &s in &sigmas {
                positive("estimator.sigmas", s)?;
            }
            if sigmas.is_empty() {
                return Err(config_err("`estimator.sigmas` must be non-empty"));
            }
            let tolerance = positive("estimator.tolerance", r.f64("estimator.tolerance", 0.1)?)?;
            Experiment::Rate { offset, t: positive("estimator.t", t)?, sigmas, tolerance }
        }
        "comparison" => {
            let d = dim(r)?;
            let k = r.f64("model.k", 1.0)?;
            let sigma = nonnegative("model.sigma", r.f64("model.sigma", 1.0)?)?;
            let u0 = initial_datum(r, d, 1.0, 1.0)?;
            let points = eval_points(r, d, &[0.0], &[1.0])?;
            let n_paths = n_paths(r, 100_000)?;
            let steps_per_unit = r.u64("estimator.steps_per_unit", 1000)? as usize;
            if steps_per_unit == 0 {
                return Err(config_err("`estimator.steps_per_unit` must be >= 1"));
            }
            let bias = nonnegative("estimator.bias", r.f64("estimator.bias", 0.0)?)?;
            Experiment::Comparison { u0, k, sigma, points, n_paths, steps_per_unit, bias }
        }
        "sublinear" => {
            let d = dim(r)?;
            let k = r.f64("model.k", 1.0)?;
            let p = r.f64("model.p", 0.5)?;
            require("model.p", p, p > 0.0 && p <= 1.0, "in (0, 1]")?;
            let sigma = nonnegative("model.sigma", r.f64("model.sigma", 1.0)?)?;
            let u0 = initial_datum(r, d, 5.0, 1.0)?;
            let solver = solver(r, 2e-3, 0.05, 2.0)?;
            let domain = whole_space(r, d, &u0, solver.horizon)?;
            let setup = check_setup(r, d, &[0.0, 0.5, 1.0], &[0.5, 1.0, 2.0], 1000, 1e-3, solver.horizon)?;
            Experiment::Sublinear { k, p, sigma, u0, domain, solver, setup }
        }
        "exp_event" | "large_p" => {
            let d = dim(r)? as u32;
            let default_p = if name == "exp_event" { 2.0 } else { 2.5 };
            let p = r.f64("model.p", default_p)?;
            let sigma = r.f64("model.sigma", if name == "exp_event" { 1.0 } else { 0.1 })?;
            require("model.sigma", sigma, sigma != 0.0 && sigma.is_finite(), "finite and nonzero")?;
            let epsilon = r.f64("model.epsilon", 0.01)?;
            require("model.epsilon", epsilon, epsilon > 0.0 && epsilon < 1.0, "in (0, 1)")?;
            // Regime problems surface before any sampling.
            let regime = classify_regime(p, d)?;
            let expected = if name == "exp_event" { "small_p" } else { "large_p" };
            let got = serde_json::to_value(regime.regime).unwrap_or_default();
            if got != expected {
                return Err(CliError::Core(noiseblow::Error::Regime(format!(
                    "p = {p} with d = {d} lies in regime {got}, but experiment `{name}` needs {expected}"
                ))));
            }
            let n_paths = n_paths(r, 100_000)?;
            let bias = nonnegative("estimator.bias", r.f64("estimator.bias", 0.0)?)?;
            if name == "exp_event" {
                let times = r.f64_list("estimator.t", &[1.0])?;
                for &t in &times {
                    positive("estimator.t", t)?;
                }
                Experiment::ExpEvent { p, dim: d, sigma, epsilon, times, n_paths, bias }
            } else {
                let c2 = positive("model.c2", r.f64("model.c2", 1.0)?)?;
                let c3 = positive("model.c3", r.f64("model.c3", 1.0)?)?;
                let form = match r.string("model.bound_form", Some("proof"))?.as_str() {
                    "proof" => BoundForm::Proof,
                    "statement" => BoundForm::Statement,
                    other => {
                        return Err(config_err(format!("`model.bound_form` must be proof or statement, got `{other}`")))
                    }
                };
                Experiment::LargeP { p, dim: d, sigma, epsilon, c2, c3, form, n_paths, bias }
            }
        }
        "positivity_multiplicative" | "supersolution" => {
            let d = dim(r)?;
            let k = r.f64("model.k", 1.0)?;
            let p = r.f64("model.p", 2.0)?;
            require("model.p", p, p > 1.0, "> 1")?;
            let sigma = nonnegative("model.sigma", r.f64("model.sigma", 0.5)?)?;
            let super_ = name == "supersolution";
            let u0 = initial_datum(r, d, if super_ { 5.0 } else { 1.0 }, 1.0)?;
            if !u0.is_nonnegative() {
                return Err(config_err("`model.u0` must be nonnegative"));
            }
            let solver = solver(r, 1e-3, 0.05, if super_ { 0.05 } else { 0.2 })?;
            let domain = whole_space(r, d, &u0, solver.horizon)?;
            let model = PdeModel { domain, drift: Drift::Power { k, p }, noise: Noise::Multiplicative { sigma } };
            if super_ {
                let setup = check_setup(r, d, &[-1.0, -0.5, 0.0, 0.5, 1.0, 2.0], &[solver.horizon], 10_000, 1e-3, solver.horizon)?;
                Experiment::Supersolution { model, u0, solver, setup }
            } else {
                let n_paths = n_paths(r, 100)?;
                let floor = r.f64("estimator.floor", -1e-8)?;
                Experiment::PositivityMultiplicative { model, u0, solver, n_paths, floor }
            }
        }
        "tau_survival" => {
            let u_phi_0 = nonnegative("model.u_phi_0", r.f64("model.u_phi_0", 0.5)?)?;
            let params = bounded_params(r, u_phi_0)?;
            let choice = match r.string("estimator.threshold", Some("pairing"))?.as_str() {
                "pairing" => ThresholdChoice::Pairing,
                "pairing_powered" => ThresholdChoice::PairingPowered,
                other => {
                    return Err(config_err(format!(
                        "`estimator.threshold` must be pairing or pairing_powered, got `{other}`"
                    )))
                }
            };
            let dt_fraction = r.f64("estimator.dt_fraction", 1e-3)?;
            require("estimator.dt_fraction", dt_fraction, dt_fraction > 0.0 && dt_fraction <= 1.0, "in (0, 1]")?;
            let n_paths = n_paths(r, 10_000)?;
            Experiment::TauSurvival { params, choice, dt_fraction, n_paths }
        }
        "dlm_bound" => {
            let params = bounded_params(r, 0.0)?;
            let mut pairings = r.f64_list("estimator.u_phi_0", &[0.1, 0.25, 0.5, 1.0, 2.0])?;
            for &u in &pairings {
                nonnegative("estimator.u_phi_0", u)?;
            }
            pairings.sort_by(f64::total_cmp);
            let tolerance = positive("estimator.tolerance", r.f64("estimator.tolerance", 1e-6)?)?;
            Experiment::DlmBound { params, pairings, tolerance }
        }
        "fujita" => {
            let d = dim(r)?;
            let k = r.f64("model.k", 1.0)?;
            let p = positive("model.p", r.f64("model.p", 2.0)?)?;
            let sigma = nonnegative("model.sigma", r.f64("model.sigma", 0.0)?)?;
            let u0 = initial_datum(r, d, 50.0, 1.0)?;
            let solver = solver(r, 1e-3, 0.05, 1.0)?;
            let domain = whole_space(r, d, &u0, solver.horizon)?;
            let expect = match r.string("estimator.expect", Some("blowup"))?.as_str() {
                "blowup" => Expectation::Blowup,
                "bounded" => Expectation::Bounded,
                other => return Err(config_err(format!("`estimator.expect` must be blowup or bounded, got `{other}`"))),
            };
            let n_paths = r.u64("estimator.n_paths", 0)?;
            let model = PdeModel { domain, drift: Drift::Power { k, p }, noise: Noise::None };
            model.validate()?;
            Experiment::Fujita { model, u0, solver, expect, sigma, n_paths }
        }
        _ => unreachable!("experiment names are checked by the caller"),
    })
}

impl Experiment {
    pub fn modes(&self) -> &'static [Mode] {
        use Mode::*;
        match self {
            Experiment::Positivity { .. } | Experiment::Interval { .. } => &[Analytic, SimulateAdditive],
            Experiment::Rate { .. } => &[Analytic, Sweep],
            Experiment::Comparison { .. } | Experiment::Sublinear { .. } => &[SimulateAdditive],
            Experiment::ExpEvent { .. } | Experiment::LargeP { .. } | Experiment::TauSurvival { .. } => {
                &[Analytic, SimulateMultiplicative]
            }
            Experiment::PositivityMultiplicative { .. } | Experiment::Supersolution { .. } => &[SimulateMultiplicative],
            Experiment::DlmBound { .. } => &[Analytic],
            Experiment::Fujita { .. } => &[BlowupTime],
        }
    }

    pub fn run(&self, mode: Mode, seed: u64, exec: Execution) -> Result<Report> {
        let mc = mode != Mode::Analytic;
        match self {
            Experiment::Positivity { u0, sigma, points, n_paths, bias } => {
                let estimand = Estimand::Positivity { u0: u0.clone(), sigma: *sigma };
                probability_table(estimand, u0, *sigma, None, points, *n_paths, *bias, mc, seed, exec)
            }
            Experiment::Interval { u0, sigma, a, b, points, n_paths, bias } => {
                let estimand = Estimand::Interval { u0: u0.clone(), sigma: *sigma, a: *a, b: *b };
                let mut report =
                    probability_table(estimand, u0, *sigma, Some((*a, *b)), points, *n_paths, *bias, mc, seed, exec)?;
                interval_additivity(&mut report, u0, *sigma, *a, *b, points)?;
                Ok(report)
            }
            Experiment::Rate { offset, t, sigmas, tolerance } => rate(*offset, *t, sigmas, *tolerance),
            Experiment::Comparison { u0, k, sigma, points, n_paths, steps_per_unit, bias } => {
                let spec = EstimatorSpec {
                    estimand: Estimand::Comparison {
                        u0: u0.clone(),
                        k: *k,
                        sigma: *sigma,
                        steps_per_unit: *steps_per_unit,
                    },
                    n_paths: *n_paths,
                    points: points.clone(),
                    bias: Some(*bias),
                };
                let mut report = Report::with_columns(&MC_COLUMNS);
                for row in run_estimator(&spec, seed, exec)? {
                    push_mc_row(&mut report, &row.label, &row.x, row.t, row.analytic, &row.estimate, row.bias, row.check, &row.verdict);
                }
                Ok(report)
            }
            Experiment::Sublinear { k, p, sigma, u0, domain, solver, setup } => {
                let setup = CheckSetup { master_seed: seed, ..setup.clone() };
                let r = sublinear_global_check(*k, *p, *sigma, u0, *domain, solver, &setup, exec)?;
                let mut report = Report::with_columns(&MC_COLUMNS);
                push_nodes(&mut report, "abs_mean_vs_reference", &r.rows, CheckKind::UpperBound);
                let blown = MCEstimate::from_count(r.blown_paths, setup.n_paths, seed);
                let verdict = bound_check(0.0, &blown, 0.0, CheckKind::TwoSided)?;
                push_mc_row(&mut report, "blowup_fraction", &[], solver.horizon, 0.0, &blown, 0.0, CheckKind::TwoSided, &verdict);
                report.note("blown_paths", r.blown_paths);
                Ok(report)
            }
            Experiment::ExpEvent { p, dim, sigma, epsilon, times, n_paths, bias } => {
                let mut report = Report::with_columns(&MC_COLUMNS);
                report.note("regime", serde_json::to_value(classify_regime(*p, *dim)?).unwrap_or_default());
                let points: Vec<EvalPoint> = times.iter().map(|&t| EvalPoint { x: Vec::new(), t }).collect();
                if !mc {
                    for pt in &points {
                        let lb = blowup_lb_small_p(*p, *dim, *sigma, *epsilon, pt.t)?;
                        push_analytic_row(&mut report, "blowup_lower_bound", &pt.x, pt.t, lb);
                    }
                    return Ok(report);
                }
                let spec = EstimatorSpec {
                    estimand: Estimand::ExpEvent { p: *p, sigma: *sigma, epsilon: *epsilon },
                    n_paths: *n_paths,
                    points,
                    bias: Some(*bias),
                };
                for row in run_estimator(&spec, seed, exec)? {
                    let lb = blowup_lb_small_p(*p, *dim, *sigma, *epsilon, row.t)?;
                    let verdict = bound_check(lb, &row.estimate, row.bias, CheckKind::TwoSided)?;
                    push_mc_row(&mut report, "blowup_lower_bound", &row.x, row.t, lb, &row.estimate, row.bias, CheckKind::TwoSided, &verdict);
                }
                Ok(report)
            }
            Experiment::LargeP { p, dim, sigma, epsilon, c2, c3, form, n_paths, bias } => {
                large_p(*p, *dim, *sigma, *epsilon, *c2, *c3, *form, *n_paths, *bias, mc, seed, exec)
            }
            Experiment::PositivityMultiplicative { model, u0, solver, n_paths, floor } => {
                positivity_multiplicative(model, u0, solver, *n_paths, *floor, seed, exec)
            }
            Experiment::Supersolution { model, u0, solver, setup } => {
                let setup = CheckSetup { master_seed: seed, ..setup.clone() };
                let r = supersolution_check(model, u0, solver, &setup, exec)?;
                let mut report = Report::with_columns(&MC_COLUMNS);
                push_nodes(&mut report, "mean_u_vs_reference", &r.rows, CheckKind::LowerBound);
                report.note("blown_paths", r.blown_paths);
                report.note("min_nodal", r.min_nodal);
                Ok(report)
            }
            Experiment::TauSurvival { params, choice, dt_fraction, n_paths } => {
                tau_survival(params, *choice, *dt_fraction, *n_paths, mc, seed, exec)
            }
            Experiment::DlmBound { params, pairings, tolerance } => dlm_bound(params, pairings, *tolerance),
            Experiment::Fujita { model, u0, solver, expect, sigma, n_paths } => {
                fujita(model, u0, solver, *expect, *sigma, *n_paths, seed, exec)
            }
        }
    }
}

const MC_COLUMNS: [&str; 10] = ["quantity", "x", "t", "reference", "estimate", "stderr", "bias", "check", "margin", "verdict"];

fn check_name(kind: CheckKind) -> &'static str {
    match kind {
        CheckKind::TwoSided => "two_sided",
        CheckKind::LowerBound => "lower_bound",
        CheckKind::UpperBound => "upper_bound",
    }
}

#[allow(clippy::too_many_arguments)]
fn push_mc_row(
    report: &mut Report,
    label: &str,
    x: &[f64],
    t: f64,
    reference: f64,
    est: &MCEstimate,
    bias: f64,
    kind: CheckKind,
    verdict: &Verdict,
) {
    report.rows.push(vec![
        label.into(),
        point_cell(x),
        t.into(),
        reference.into(),
        est.mean.into(),
        est.stderr.into(),
        bias.into(),
        check_name(kind).into(),
        verdict.margin.into(),
        verdict_cell(verdict.pass),
    ]);
    if let Some(note) = &verdict.note {
        report.note(&format!("note_{}", report.rows.len()), note.clone());
    }
}

fn push_analytic_row(report: &mut Report, label: &str, x: &[f64], t: f64, reference: f64) {
    let mut row = vec![label.into(), point_cell(x), t.into(), reference.into()];
    row.resize(MC_COLUMNS.len(), Cell::Empty);
    report.rows.push(row);
}

fn push_nodes(report: &mut Report, label: &str, rows: &[NodeComparison], kind: CheckKind) {
    for r in rows {
        push_mc_row(report, label, &r.x, r.t, r.reference, &r.estimate, r.bias, kind, &r.verdict);
    }
}

fn additive_params(u0: &InitialDatum, sigma: f64, p: &EvalPoint) -> Result<(f64, AdditiveNoiseParams)> {
    let heat = convolve_initial(u0, p.t, &p.x, &QuadSpec::for_dim(p.x.len()))?;
    Ok((-heat, AdditiveNoiseParams::new(sigma, p.t, -heat)?))
}

#[allow(clippy::too_many_arguments)]
fn probability_table(
    estimand: Estimand,
    u0: &InitialDatum,
    sigma: f64,
    interval: Option<(f64, f64)>,
    points: &[EvalPoint],
    n_paths: u64,
    bias: f64,
    mc: bool,
    seed: u64,
    exec: Execution,
) -> Result<Report> {
    let mut report = Report::with_columns(&["x", "t", "analytic_p", "mc_p", "stderr", "verdict"]);
    let mut offsets = Vec::new();
    for p in points {
        let (a, _) = additive_params(u0, sigma, p)?;
        offsets.push(json!({ "x": p.x, "t": p.t, "offset_a": a }));
    }
    report.note("offsets", offsets);
    if mc {
        let spec = EstimatorSpec { estimand, n_paths, points: points.to_vec(), bias: Some(bias) };
        for r in run_estimator(&spec, seed, exec)? {
            report.rows.push(vec![
                point_cell(&r.x),
                r.t.into(),
                r.analytic.into(),
                r.estimate.mean.into(),
                r.estimate.stderr.into(),
                verdict_cell(r.verdict.pass),
            ]);
        }
    } else {
        for p in points {
            let (_, params) = additive_params(u0, sigma, p)?;
            let prob = match interval {
                None => positivity_probability(&params)?,
                Some((a, b)) => interval_probability(a, b, &params)?,
            };
            report.rows.push(vec![point_cell(&p.x), p.t.into(), prob.into(), Cell::Empty, Cell::Empty, Cell::Empty]);
        }
    }
    Ok(report)
}

fn interval_additivity(report: &mut Report, u0: &InitialDatum, sigma: f64, a: f64, b: f64, points: &[EvalPoint]) -> Result<()> {
    let mid = match (a.is_finite(), b.is_finite()) {
        (true, true) => 0.5 * (a + b),
        (true, false) => a + 1.0,
        (false, true) => b - 1.0,
        (false, false) => 0.0,
    };
    let mut worst: f64 = 0.0;
    for p in points {
        let (_, params) = additive_params(u0, sigma, p)?;
        let whole = interval_probability(a, b, &params)?;
        let parts = interval_probability(a, mid, &params)? + interval_probability(mid, b, &params)?;
        worst = worst.max((whole - parts).abs());
    }
    report.check("interval_additivity", worst <= 1e-12, format!("max |P(a,b) - P(a,m) - P(m,b)| = {worst:e}"));
    Ok(())
}

fn rate(offset: f64, t: f64, sigmas: &[f64], tolerance: f64) -> Result<Report> {
    let mut report = Report::with_columns(&["sigma", "t", "offset_a", "tail_probability", "log_tail_ratio"]);
    let mut samples = Vec::new();
    for &sigma in sigmas {
        let s = vanishing_noise_rate(&AdditiveNoiseParams::new(sigma, t, offset)?)?;
        report.rows.push(vec![sigma.into(), t.into(), offset.into(), s.tail.into(), s.log_ratio.into()]);
        samples.push((sigma, s.log_ratio));
    }
    report.plots.push(Plot {
        name: "rate_sweep".into(),
        columns: vec!["sigma".into(), "log_tail_ratio".into()],
        rows: samples.iter().map(|&(s, r)| vec![s, r]).collect(),
    });
    let mut by_sigma = samples.clone();
    by_sigma.sort_by(|a, b| b.0.total_cmp(&a.0));
    let monotone = by_sigma.windows(2).all(|w| (w[1].1 - 1.0).abs() <= (w[0].1 - 1.0).abs());
    report.check("monotone_toward_one", monotone, "|ratio - 1| is nonincreasing as sigma decreases".into());
    let (smallest, ratio) = by_sigma[by_sigma.len() - 1];
    report.check(
        "tolerance_at_smallest_sigma",
        (ratio - 1.0).abs() <= tolerance,
        format!("sigma = {smallest}: |{ratio} - 1| vs tolerance {tolerance}"),
    );
    Ok(report)
}

#[allow(clippy::too_many_arguments)]
fn large_p(
    p: f64,
    dim: u32,
    sigma: f64,
    epsilon: f64,
    c2: f64,
    c3: f64,
    form: BoundForm,
    n_paths: u64,
    bias: f64,
    mc: bool,
    seed: u64,
    exec: Execution,
) -> Result<Report> {
    let bound = blowup_lb_large_p(p, dim, sigma, epsilon, c2, c3, form)?;
    let mut report = Report::with_columns(&MC_COLUMNS);
    report.note("tstar", bound.tstar);
    report.note("regime", serde_json::to_value(classify_regime(p, dim)?).unwrap_or_default());
    let inputs = TstarInputs { p, d: dim, c2, c3, epsilon };
    let (lhs, rhs) = tstar_inequality_sides(&inputs, bound.tstar);
    report.check("tstar_admissible", lhs < rhs, format!("at T* = {}: lhs {lhs:e} < rhs {rhs:e}", bound.tstar));
    let below = bound.tstar / (1.0 + 2e-6);
    let (lhs_b, rhs_b) = tstar_inequality_sides(&inputs, below);
    report.check("tstar_minimal", lhs_b >= rhs_b, format!("at T*/(1+2e-6): lhs {lhs_b:e} >= rhs {rhs_b:e}"));
    if !mc {
        push_analytic_row(&mut report, "blowup_lower_bound", &[], bound.tstar, bound.probability);
        return Ok(report);
    }
    let spec = EstimatorSpec {
        estimand: Estimand::ExpEvent { p, sigma, epsilon },
        n_paths,
        points: vec![EvalPoint { x: Vec::new(), t: bound.tstar }],
        bias: Some(bias),
    };
    // The proof form is the event probability itself; the statement form
    // only bounds it from below.
    let kind = if form == BoundForm::Proof { CheckKind::TwoSided } else { CheckKind::LowerBound };
    for row in run_estimator(&spec, seed, exec)? {
        let verdict = bound_check(bound.probability, &row.estimate, row.bias, kind)?;
        push_mc_row(&mut report, "blowup_lower_bound", &row.x, row.t, bound.probability, &row.estimate, row.bias, kind, &verdict);
    }
    Ok(report)
}

fn path_steps(solver: &SolverSpec) -> usize {
    (solver.horizon / solver.dt).round().max(1.0) as usize
}

fn positivity_multiplicative(
    model: &PdeModel,
    u0: &InitialDatum,
    solver: &SolverSpec,
    n_paths: u64,
    floor: f64,
    seed: u64,
    exec: Execution,
) -> Result<Report> {
    let outcomes = exec.try_map(n_paths, |i| {
        let path = sample_path(solver.horizon, path_steps(solver), SeedSpec::new(seed, i))?;
        let out = solve_random_multiplicative(model, u0, &path, solver)?;
        Ok((out.running_min, out.blowup_time()))
    })?;
    let mut report = Report::with_columns(&["path", "min_nodal", "blowup_time", "verdict"]);
    let mut worst = f64::INFINITY;
    for (i, (min, tb)) in outcomes.iter().enumerate() {
        worst = worst.min(*min);
        report.rows.push(vec![
            Cell::Num(i as f64),
            (*min).into(),
            tb.map(Cell::Num).unwrap_or(Cell::Empty),
            verdict_cell(*min >= floor),
        ]);
    }
    report.note("min_nodal", worst);
    report.note("floor", floor);
    Ok(report)
}

fn tau_survival(
    params: &BoundedDomainParams,
    choice: ThresholdChoice,
    dt_fraction: f64,
    n_paths: u64,
    mc: bool,
    seed: u64,
    exec: Execution,
) -> Result<Report> {
    let level = choice.level(params);
    let tstar = deterministic_tstar(params, level)?.finite().ok_or_else(|| {
        CliError::Core(noiseblow::Error::Domain(format!(
            "T* is infinite (threshold {level} >= 1/(lambda1 beta)); P(tau > T*) is not defined"
        )))
    })?;
    let mut report = Report::with_columns(&MC_COLUMNS);
    report.note("tstar", tstar);
    report.note("threshold_level", level);
    let lb = dlm_blowup_lower_bound(params)?;
    report.note("blowup_probability_lower_bound", lb.probability);
    if !mc {
        return Ok(report);
    }
    let dt = dt_fraction * tstar;
    let tau = estimate_p_tau_gt_tstar(params, choice, n_paths, dt, seed, exec)?;
    let exact = Verdict { pass: tau.mismatches == 0, margin: tau.mismatches as f64, note: None };
    push_mc_row(&mut report, "p_tau_gt_tstar_direct", &[], tau.tstar, tau.functional.mean, &tau.direct, 0.0, CheckKind::TwoSided, &exact);
    push_mc_row(&mut report, "p_tau_gt_tstar_functional", &[], tau.tstar, tau.direct.mean, &tau.functional, 0.0, CheckKind::TwoSided, &exact);
    report.check("path_by_path_agreement", tau.mismatches == 0, format!("{} mismatching paths", tau.mismatches));
    let (coarse, fine) = tau_refinement_check(params, choice, n_paths, dt, seed, exec)?;
    let shift = (fine.mean - coarse.mean).abs();
    let shift_ok = shift < coarse.stderr;
    let verdict = Verdict { pass: shift_ok, margin: shift - coarse.stderr, note: None };
    push_mc_row(&mut report, "p_tau_gt_tstar_dt_half", &[], tau.tstar, coarse.mean, &fine, 0.0, CheckKind::TwoSided, &verdict);
    report.check("dt_halving_shift_below_one_se", shift_ok, format!("|shift| = {shift:e}, SE = {:e}", coarse.stderr));
    report.note("threshold", tau.threshold);
    report.note("dt", tau.dt);
    Ok(report)
}

fn dlm_bound(params: &BoundedDomainParams, pairings: &[f64], tolerance: f64) -> Result<Report> {
    let mut report = Report::with_columns(&["u_phi_0", "y0", "probability"]);
    let probe = BoundedDomainParams { u_phi_0: 1.0, ..*params };
    // ∫₀^∞ h via y = z/(1-z); h vanishes at both ends.
    let integrand = |z: f64| {
        if z <= 0.0 || z >= 1.0 {
            return 0.0;
        }
        let y = z / (1.0 - z);
        dlm_density_h(y, &probe).unwrap_or(f64::NAN) / ((1.0 - z) * (1.0 - z))
    };
    let mass = adaptive_simpson(&integrand, 0.0, 1.0, 1e-12, 60);
    report.check("density_normalized", (mass - 1.0).abs() <= tolerance, format!("integral of h = {mass}"));
    report.note("density_mass", mass);
    let mut probs = Vec::new();
    for &u in pairings {
        let b = dlm_blowup_lower_bound(&BoundedDomainParams { u_phi_0: u, ..*params })?;
        report.rows.push(vec![u.into(), if b.degenerate { Cell::Empty } else { b.y0.into() }, b.probability.into()]);
        probs.push(b.probability);
    }
    let monotone = probs.windows(2).all(|w| w[1] >= w[0]);
    report.check("monotone_in_pairing", monotone, "lower bound is nondecreasing in u(phi,0)".into());
    report.plots.push(Plot {
        name: "dlm_bound".into(),
        columns: vec!["u_phi_0".into(), "probability".into()],
        rows: pairings.iter().zip(&probs).map(|(&u, &p)| vec![u, p]).collect(),
    });
    Ok(report)
}

#[allow(clippy::too_many_arguments)]
fn fujita(
    model: &PdeModel,
    u0: &InitialDatum,
    solver: &SolverSpec,
    expect: Expectation,
    sigma: f64,
    n_paths: u64,
    seed: u64,
    exec: Execution,
) -> Result<Report> {
    let mut spec = solver.clone();
    spec.record_trace = true;
    let det = solve_deterministic(model, u0, &spec)?;
    let max_sup = det.trace.iter().map(|p| p.sup).fold(0.0, f64::max);
    let mut report = Report::with_columns(&["run", "blowup_time", "max_sup", "verdict"]);
    let ok = match expect {
        Expectation::Blowup => det.blew_up(),
        Expectation::Bounded => !det.blew_up() && max_sup.is_finite(),
    };
    report.rows.push(vec![
        "deterministic".into(),
        det.blowup_time().map(Cell::Num).unwrap_or(Cell::Empty),
        max_sup.into(),
        verdict_cell(ok),
    ]);
    report.note("threshold", spec.threshold_for(u0));
    report.note("sup_u0", u0.sup_abs());
    report.plots.push(Plot {
        name: "sup_trace".into(),
        columns: vec!["t".into(), "sup".into()],
        rows: det.trace.iter().map(|p| vec![p.t, p.sup]).collect(),
    });
    if sigma > 0.0 && n_paths > 0 {
        let noisy = PdeModel { noise: Noise::Multiplicative { sigma }, ..*model };
        let steps = path_steps(solver);
        let outcomes = exec.try_map(n_paths, |i| {
            let path = sample_path(solver.horizon, steps, SeedSpec::new(seed, i))?;
            let out = solve_random_multiplicative(&noisy, u0, &path, solver)?;
            let tb = out.blowup_time();
            let sup = out.field.sup_abs();
            Ok((tb, sup))
        })?;
        let blown = outcomes.iter().filter(|o| o.0.is_some()).count();
        for (i, (tb, sup)) in outcomes.iter().enumerate() {
            report.rows.push(vec![
                Cell::Text(format!("path_{i}")),
                tb.map(Cell::Num).unwrap_or(Cell::Empty),
                (*sup).into(),
                Cell::Empty,
            ]);
        }
        report.note("random_paths_blown", blown as u64);
    }
    Ok(report)
}
