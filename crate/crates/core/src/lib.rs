//! Numerical laboratory for blowup and positivity of stochastic parabolic
//! equations driven by a single Brownian motion.
//!
//! | Module       | Contents                                                            |
//! |--------------|---------------------------------------------------------------------|
//! | [`kernel`]   | heat kernel, convolution with initial data, the offset `A_t(x)`     |
//! | [`analytic`] | closed-form probabilities, regime thresholds, `T⋆`, inverse-gamma law |
//! | [`paths`]    | seeded Brownian paths, exponential functionals, hitting times       |
//! | [`pde`]      | method-of-lines solvers, random-coefficient PDEs, blowup detection  |
//! | [`mc`]       | reproducible Monte Carlo estimators and the analytic-vs-MC verdict  |
//!
//! With the default `parallel` feature, Monte Carlo work is spread over a
//! rayon pool; without it every estimator runs sequentially. Results are
//! bit-identical either way.

// Guards are written `!(x > 0.0)` on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytic;
mod error;
pub mod kernel;
pub mod mc;
pub mod paths;
pub mod pde;
pub mod quad;

pub use error::{Error, Result};
