//! Seeded Monte Carlo experiments.
//!
//! Path `i` of an experiment draws from its own stream derived from
//! `(master_seed, i)`, per-path outputs come back in index order and are
//! reduced sequentially, so estimates do not depend on the worker count.

mod estimate;
mod estimators;
pub mod exec;

pub use estimate::{bound_check, two_sided_bound_check, CheckKind, MCEstimate, Verdict, CI_LEVEL, CI_SIGMAS};
pub use estimators::{
    estimate_p_tau_gt_tstar, run_estimator, tau_refinement_check, Estimand, EstimatorSpec, EvalPoint, PointEstimate, TauReport,
};
pub use exec::Execution;
