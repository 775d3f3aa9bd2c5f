//! Blowup-probability lower bounds for `du = (Δu + u^p) dt + σu dB_t` on ℝ^d.
//!
//! After the change of variables `w = e^{σ²t/2 - σB_t} u` the question
//! reduces to the event `e^{-(p-1)σ²t/2 + (p-1)σB_t} > ε`, whose probability
//! is a single Φ evaluation. Which time `t` is used depends on the exponent
//! regime.

use serde::{Deserialize, Serialize};

use super::normal_cdf;
use crate::error::{argument, domain, Error, Result};

/// Relative amount by which [`tstar_critical`] overshoots the critical time.
pub const TSTAR_SLACK: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// `1 < p ≤ p_c_lower`, i.e. `d p² - d p - 2 ≤ 0`.
    SmallP,
    /// `p_c_lower < p < 1 + 2/d`.
    LargeP,
    /// `p ≥ 1 + 2/d`; no bound is claimed.
    Uncovered,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegimeClassification {
    pub regime: Regime,
    /// Positive root of `d p² - d p - 2 = 0`.
    pub p_c_lower: f64,
    /// Fujita exponent `1 + 2/d`.
    pub p_c_fujita: f64,
}

pub fn classify_regime(p: f64, d: u32) -> Result<RegimeClassification> {
    if d == 0 {
        return Err(domain("dimension must be >= 1"));
    }
    if !(p > 1.0) || !p.is_finite() {
        return Err(domain(format!("exponent p must be > 1, got {p}")));
    }
    let df = d as f64;
    let p_c_lower = (df + (df * df + 8.0 * df).sqrt()) / (2.0 * df);
    let p_c_fujita = 1.0 + 2.0 / df;
    let regime = if p <= p_c_lower {
        Regime::SmallP
    } else if p < p_c_fujita {
        Regime::LargeP
    } else {
        Regime::Uncovered
    };
    Ok(RegimeClassification { regime, p_c_lower, p_c_fujita })
}

fn require_regime(p: f64, d: u32, want: Regime) -> Result<()> {
    let c = classify_regime(p, d)?;
    if c.regime != want {
        return Err(Error::Regime(format!(
            "p = {p}, d = {d} is in regime {:?}, formula requires {:?} (p_c_lower = {}, fujita = {})",
            c.regime, want, c.p_c_lower, c.p_c_fujita
        )));
    }
    Ok(())
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if epsilon > 0.0 && epsilon < 1.0 {
        Ok(())
    } else {
        Err(argument(format!("epsilon must lie in (0, 1), got {epsilon}")))
    }
}

/// `P(e^{-(p-1)σ²t/2 + (p-1)σB_t} > ε) = Φ((ln(1/ε) - (p-1)σ²t/2) / (|σ|(p-1)√t))`.
///
/// Valid for any `p > 1`, `σ ≠ 0`, `ε > 0`, `t > 0`; no regime check.
pub fn exp_event_probability(p: f64, sigma: f64, epsilon: f64, t: f64) -> Result<f64> {
    if !(p > 1.0) {
        return Err(domain(format!("exponent p must be > 1, got {p}")));
    }
    if sigma == 0.0 || !sigma.is_finite() {
        return Err(domain("sigma must be finite and nonzero"));
    }
    if !(epsilon > 0.0) {
        return Err(argument(format!("epsilon must be > 0, got {epsilon}")));
    }
    if !(t > 0.0 && t.is_finite()) {
        return Err(domain(format!("evaluation time must be > 0, got {t}")));
    }
    let q = p - 1.0;
    let arg = ((1.0 / epsilon).ln() - q * sigma * sigma * t / 2.0) / (sigma.abs() * q * t.sqrt());
    Ok(normal_cdf(arg))
}

/// Lower bound on the blowup probability for `1 < p ≤ p_c_lower`.
/// The natural evaluation time is `t_eval = 1`.
pub fn blowup_lb_small_p(p: f64, d: u32, sigma: f64, epsilon: f64, t_eval: f64) -> Result<f64> {
    require_regime(p, d, Regime::SmallP)?;
    check_epsilon(epsilon)?;
    exp_event_probability(p, sigma, epsilon, t_eval)
}

/// Inputs to the critical-time inequality of the large-p regime.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TstarInputs {
    pub p: f64,
    pub d: u32,
    pub c2: f64,
    pub c3: f64,
    pub epsilon: f64,
}

impl TstarInputs {
    fn validate(&self) -> Result<()> {
        require_regime(self.p, self.d, Regime::LargeP)?;
        check_epsilon(self.epsilon)?;
        if !(self.c2 > 0.0 && self.c3 > 0.0) {
            return Err(argument("constants C2 and C3 must be > 0"));
        }
        Ok(())
    }
}

/// Both sides of the defining inequality at time `t`:
/// `lhs = C₂^{1-p}/(p-1) · t^{-d(p-1)²/2}`,
/// `rhs = 2C₃ε/((p²-p)d-2) · t^{((p-p²)d+2)/2}`. `T⋆` is admissible iff `lhs < rhs`.
pub fn tstar_inequality_sides(inputs: &TstarInputs, t: f64) -> (f64, f64) {
    let TstarInputs { p, d, c2, c3, epsilon } = *inputs;
    let df = d as f64;
    let lhs = c2.powf(1.0 - p) / (p - 1.0) * t.powf(-df * (p - 1.0) * (p - 1.0) / 2.0);
    let rhs = 2.0 * c3 * epsilon / ((p * p - p) * df - 2.0) * t.powf(((p - p * p) * df + 2.0) / 2.0);
    (lhs, rhs)
}

/// Smallest admissible critical time, inflated by [`TSTAR_SLACK`].
///
/// The inequality rearranges to `t^{(2-d(p-1))/2} > L/R`, so the threshold is
/// `(L/R)^{2/(2-d(p-1))}`.
pub fn tstar_critical(inputs: &TstarInputs) -> Result<f64> {
    inputs.validate()?;
    let TstarInputs { p, d, c2, c3, epsilon } = *inputs;
    let df = d as f64;
    let l = c2.powf(1.0 - p) / (p - 1.0);
    let r = 2.0 * c3 * epsilon / ((p * p - p) * df - 2.0);
    let exponent = 2.0 / (2.0 - df * (p - 1.0));
    let critical = (l / r).powf(exponent);
    if !critical.is_finite() || critical <= 0.0 {
        return Err(domain(format!("critical time is not representable: {critical}")));
    }
    Ok((1.0 + TSTAR_SLACK) * critical)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum BoundForm {
    /// `Φ((ln(1/ε) - (p-1)σ²T⋆/2) / (|σ|(p-1)√T⋆))`.
    #[default]
    Proof,
    /// `Φ((ln(1/ε) - 2(p-1)σ²T⋆/2) / (|σ|(p-1)√(2T⋆)))`.
    Statement,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LargePBound {
    pub probability: f64,
    pub tstar: f64,
}

/// Lower bound on the blowup probability for `p_c_lower < p < 1 + 2/d`.
pub fn blowup_lb_large_p(
    p: f64,
    d: u32,
    sigma: f64,
    epsilon: f64,
    c2: f64,
    c3: f64,
    form: BoundForm,
) -> Result<LargePBound> {
    let tstar = tstar_critical(&TstarInputs { p, d, c2, c3, epsilon })?;
    let probability = match form {
        BoundForm::Proof => exp_event_probability(p, sigma, epsilon, tstar)?,
        BoundForm::Statement => {
            if sigma == 0.0 || !sigma.is_finite() {
                return Err(domain("sigma must be finite and nonzero"));
            }
            let q = p - 1.0;
            let arg = ((1.0 / epsilon).ln() - 2.0 * q * sigma * sigma * tstar / 2.0)
                / (sigma.abs() * q * (2.0 * tstar).sqrt());
            normal_cdf(arg)
        }
    };
    Ok(LargePBound { probability, tstar })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn regime_examples() {
        assert_eq!(classify_regime(2.0, 1).unwrap().regime, Regime::SmallP);
        assert_eq!(classify_regime(2.5, 1).unwrap().regime, Regime::LargeP);
        assert_eq!(classify_regime(3.5, 1).unwrap().regime, Regime::Uncovered);
        assert_eq!(classify_regime(3.0, 1).unwrap().regime, Regime::Uncovered);
        assert!(matches!(classify_regime(1.0, 1), Err(Error::Domain(_))));
    }

    #[test]
    fn regime_boundaries_follow_inequalities() {
        for d in 1..=4u32 {
            let c = classify_regime(1.5, d).unwrap();
            assert!(1.0 < c.p_c_lower && c.p_c_lower < c.p_c_fujita);
            // quadratic root check
            let df = d as f64;
            assert!((df * c.p_c_lower * c.p_c_lower - df * c.p_c_lower - 2.0).abs() < 1e-12);
            assert_eq!(classify_regime(c.p_c_lower, d).unwrap().regime, Regime::SmallP);
            assert_eq!(classify_regime(c.p_c_fujita, d).unwrap().regime, Regime::Uncovered);
        }
    }

    #[test]
    fn small_p_examples() {
        let v = blowup_lb_small_p(2.0, 1, 1.0, 0.01, 1.0).unwrap();
        // Φ(ln 100 - 1/2) at 40 digits
        assert!((v - 0.999_979_799_133_435_7).abs() < 1e-10);
        let near_one = blowup_lb_small_p(2.0, 1, 0.8, 1.0 - 1e-12, 1.0).unwrap();
        assert!((near_one - normal_cdf(-0.8 / 2.0)).abs() < 1e-10);
        assert!(blowup_lb_small_p(2.0, 1, 1.0, 0.01, 1.0).unwrap() > blowup_lb_small_p(2.0, 1, 1.0, 0.1, 1.0).unwrap());
        assert!(matches!(blowup_lb_small_p(2.5, 1, 1.0, 0.01, 1.0), Err(Error::Regime(_))));
        assert!(blowup_lb_small_p(2.0, 1, 1.0, 1.5, 1.0).is_err());
    }

    fn inputs() -> TstarInputs {
        TstarInputs { p: 2.5, d: 1, c2: 1.0, c3: 1.0, epsilon: 0.01 }
    }

    #[test]
    fn tstar_satisfies_inequality_and_is_minimal() {
        let ts = tstar_critical(&inputs()).unwrap();
        let (l, r) = tstar_inequality_sides(&inputs(), ts);
        assert!(l < r);
        let (l, r) = tstar_inequality_sides(&inputs(), ts / (1.0 + 2.0 * TSTAR_SLACK));
        assert!(l >= r);
        let (l, r) = tstar_inequality_sides(&inputs(), (1.0 - 2.0 * TSTAR_SLACK) * ts);
        assert!(l >= r);
    }

    #[test]
    fn tstar_scaling_in_epsilon() {
        let a = tstar_critical(&inputs()).unwrap();
        let b = tstar_critical(&TstarInputs { epsilon: 0.005, ..inputs() }).unwrap();
        // 2^{2/(2 - d(p-1))} = 2^4
        assert!((b / a - 16.0).abs() < 1e-9);
    }

    #[test]
    fn tstar_rejects_wrong_regime() {
        assert!(matches!(tstar_critical(&TstarInputs { p: 2.0, ..inputs() }), Err(Error::Regime(_))));
        assert!(matches!(tstar_critical(&TstarInputs { epsilon: 0.0, ..inputs() }), Err(Error::Argument(_))));
    }

    #[test]
    fn large_p_bound_vanishes_when_drift_dominates() {
        let b = blowup_lb_large_p(2.5, 1, 0.1, 0.01, 1.0, 1.0, BoundForm::Proof).unwrap();
        assert!(b.tstar > 1e7);
        assert_eq!(b.probability, 0.0);
    }

    #[test]
    fn proof_form_dominates_statement_form() {
        // Moderate C2 keeps T⋆ >= 1 so both arguments are positive.
        for &(c2, sigma) in &[(10.0, 0.05), (5.0, 0.02), (3.0, 0.01)] {
            let proof = blowup_lb_large_p(2.5, 1, sigma, 0.01, c2, 1.0, BoundForm::Proof).unwrap();
            let stmt = blowup_lb_large_p(2.5, 1, sigma, 0.01, c2, 1.0, BoundForm::Statement).unwrap();
            assert!(proof.tstar >= 1.0);
            let q = 1.5;
            let arg_stmt = ((100f64).ln() - q * sigma * sigma * proof.tstar) / (sigma * q * (2.0 * proof.tstar).sqrt());
            assert!(arg_stmt > 0.0);
            assert!(proof.probability >= stmt.probability);
        }
    }

    proptest! {
        #[test]
        fn small_p_monotone_in_epsilon(e1 in 1e-6f64..0.99, frac in 0.01f64..0.99, sigma in 0.05f64..3.0) {
            let e2 = e1 * frac;
            let a = blowup_lb_small_p(1.8, 1, sigma, e1, 1.0).unwrap();
            let b = blowup_lb_small_p(1.8, 1, sigma, e2, 1.0).unwrap();
            prop_assert!(b >= a);
            prop_assert!((0.0..=1.0).contains(&a));
        }

        #[test]
        fn tstar_always_admissible(p in 2.05f64..2.95, c2 in 0.1f64..10.0, c3 in 0.1f64..10.0, eps in 1e-4f64..0.9) {
            let inp = TstarInputs { p, d: 1, c2, c3, epsilon: eps };
            let ts = tstar_critical(&inp).unwrap();
            let (l, r) = tstar_inequality_sides(&inp, ts);
            prop_assert!(l < r);
            let (l, r) = tstar_inequality_sides(&inp, ts / (1.0 + 2.0 * TSTAR_SLACK));
            prop_assert!(l >= r);
        }
    }
}
