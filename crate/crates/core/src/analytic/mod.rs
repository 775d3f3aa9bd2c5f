//! Closed-form probabilities, bounds and thresholds.
//!
//! Everything here is a pure function of its arguments. The Monte Carlo and
//! PDE layers use these values as the analytic side of each comparison.

mod additive;
mod bounded;
mod fujita;

pub use additive::{
    interval_probability, jensen_sign_bound, nonpositive_probability, positivity_probability,
    vanishing_noise_rate, AdditiveNoiseParams, RateSample, SignDirection,
};
pub use bounded::{
    deterministic_tstar, dlm_blowup_lower_bound, dlm_density_h, dlm_gamma_shape, dlm_scale, dlm_tail_probability,
    first_eigenpair, BoundedDomainParams, DlmBound, EigenPair, ThresholdChoice, TstarOutcome,
};
pub use fujita::{
    blowup_lb_large_p, blowup_lb_small_p, classify_regime, exp_event_probability, tstar_critical,
    tstar_inequality_sides, BoundForm, LargePBound, Regime, RegimeClassification, TstarInputs,
    TSTAR_SLACK,
};

use statrs::function::erf::erfc;

/// Below this Φ is reported as exactly 0 (and 1 - Φ as exactly 1).
const TAIL_FLOOR: f64 = 1e-300;

/// Standard normal distribution function Φ.
///
/// Uses `Φ(x) = erfc(-x/√2)/2`, which keeps full relative accuracy in the
/// lower tail.
pub fn normal_cdf(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    let v = 0.5 * erfc(-x * std::f64::consts::FRAC_1_SQRT_2);
    if v < TAIL_FLOOR {
        0.0
    } else if v > 1.0 {
        1.0
    } else {
        v
    }
}

/// Natural log of Φ, finite far into the lower tail where Φ itself underflows.
pub fn ln_normal_cdf(x: f64) -> f64 {
    if x > -30.0 {
        let v = 0.5 * erfc(-x * std::f64::consts::FRAC_1_SQRT_2);
        return v.ln();
    }
    // Asymptotic Mills-ratio series for x → -∞.
    let z = -x;
    let z2 = z * z;
    let series = 1.0 - 1.0 / z2 + 3.0 / (z2 * z2) - 15.0 / (z2 * z2 * z2) + 105.0 / (z2 * z2 * z2 * z2);
    -0.5 * z2 - z.ln() - 0.5 * (2.0 * std::f64::consts::PI).ln() + series.ln()
}
