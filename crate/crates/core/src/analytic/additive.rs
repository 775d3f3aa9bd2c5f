use serde::{Deserialize, Serialize};

use super::{ln_normal_cdf, normal_cdf};
use crate::error::{argument, domain, Error, Result};

/// Noise amplitude, time, and drift offset `A = A_t(x)` for the
/// additive-noise heat equation `du = Δu dt + σ dB_t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdditiveNoiseParams {
    pub sigma: f64,
    pub t: f64,
    pub offset: f64,
}

impl AdditiveNoiseParams {
    pub fn new(sigma: f64, t: f64, offset: f64) -> Result<Self> {
        let p = AdditiveNoiseParams { sigma, t, offset };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(domain(format!("sigma must be > 0, got {}", self.sigma)));
        }
        if !(self.t > 0.0 && self.t.is_finite()) {
            return Err(domain(format!("t must be > 0, got {}", self.t)));
        }
        if !self.offset.is_finite() {
            return Err(domain("offset A must be finite"));
        }
        Ok(())
    }

    /// `σ√t`, the standard deviation of `σB_t`.
    pub fn spread(&self) -> f64 {
        self.sigma * self.t.sqrt()
    }

    /// `A / (σ√t)`.
    pub fn standardized_offset(&self) -> f64 {
        self.offset / self.spread()
    }
}

/// `P(u(x,t) > 0) = 1 - Φ(A/(σ√t))`.
pub fn positivity_probability(params: &AdditiveNoiseParams) -> Result<f64> {
    params.validate()?;
    Ok(1.0 - normal_cdf(params.standardized_offset()))
}

/// `P(u(x,t) ≤ 0) = Φ(A/(σ√t))`, the complement of [`positivity_probability`].
pub fn nonpositive_probability(params: &AdditiveNoiseParams) -> Result<f64> {
    params.validate()?;
    Ok(normal_cdf(params.standardized_offset()))
}

/// `P(a < u(x,t) ≤ b) = Φ((b+A)/(σ√t)) - Φ((a+A)/(σ√t))`. Infinite
/// endpoints are allowed.
pub fn interval_probability(a: f64, b: f64, params: &AdditiveNoiseParams) -> Result<f64> {
    params.validate()?;
    if a.is_nan() || b.is_nan() || a >= b {
        return Err(argument(format!("interval requires a < b, got a = {a}, b = {b}")));
    }
    let s = params.spread();
    let upper = normal_cdf((b + params.offset) / s);
    let lower = normal_cdf((a + params.offset) / s);
    Ok((upper - lower).max(0.0))
}

/// One point of the small-noise rate comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateSample {
    /// `1 - P(u > 0) = Φ(A/(σ√t))`.
    pub tail: f64,
    /// `exp(-A²/(2σ²t))`.
    pub reference: f64,
    /// `ln(tail) / ln(reference)`, computed in log space so it stays finite
    /// after `tail` underflows.
    pub log_ratio: f64,
}

/// Exponential rate at which positivity becomes certain as σ → 0.
pub fn vanishing_noise_rate(params: &AdditiveNoiseParams) -> Result<RateSample> {
    params.validate()?;
    if params.offset >= 0.0 {
        return Err(Error::Domain(format!(
            "rate applies to a strictly negative offset, got A = {}",
            params.offset
        )));
    }
    let z = params.standardized_offset();
    let ln_ref = -0.5 * z * z;
    Ok(RateSample { tail: normal_cdf(z), reference: ln_ref.exp(), log_ratio: ln_normal_cdf(z) / ln_ref })
}

/// Which sign event the lower bound refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignDirection {
    /// Bound on `P(u ≥ 0)`.
    Nonnegative,
    /// Bound on `P(u ≤ 0)`.
    Nonpositive,
}

/// Sign bounds for `du = (Δu + k u^p) dt + σ dB_t` with even `p`.
///
/// `k > 0` gives `P(u ≥ 0) ≥ 1 - Φ(A/(σ√t))`; `k < 0` gives
/// `P(u ≤ 0) ≥ Φ(A/(σ√t))`.
pub fn jensen_sign_bound(p: u32, k: f64, params: &AdditiveNoiseParams) -> Result<(SignDirection, f64)> {
    params.validate()?;
    if p == 0 || !p.is_multiple_of(2) {
        return Err(Error::Unsupported(format!("sign bound needs an even exponent p >= 2, got {p}")));
    }
    if k == 0.0 || !k.is_finite() {
        return Err(argument("sign bound needs a finite nonzero k"));
    }
    let z = params.standardized_offset();
    if k > 0.0 {
        Ok((SignDirection::Nonnegative, 1.0 - normal_cdf(z)))
    } else {
        Ok((SignDirection::Nonpositive, normal_cdf(z)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn params(sigma: f64, t: f64, a: f64) -> AdditiveNoiseParams {
        AdditiveNoiseParams::new(sigma, t, a).unwrap()
    }

    #[test]
    fn zero_offset_gives_one_half() {
        assert_eq!(positivity_probability(&params(1.0, 1.0, 0.0)).unwrap(), 0.5);
    }

    #[test]
    fn bump_offset_composes_with_phi() {
        let a = -(5f64.powf(-0.5));
        let v = positivity_probability(&params(1.0, 1.0, a)).unwrap();
        // Φ(5^{-1/2}) at 40 digits: 0.67263957699071148529...
        assert!((v - 0.672_639_576_990_711_5).abs() < 1e-10);
    }

    #[test]
    fn large_sigma_tends_to_half() {
        let v = positivity_probability(&params(1e8, 1.0, -3.0)).unwrap();
        assert!((v - 0.5).abs() < 1e-7);
    }

    #[test]
    fn invalid_params_rejected() {
        assert!(AdditiveNoiseParams::new(0.0, 1.0, 0.0).is_err());
        assert!(AdditiveNoiseParams::new(1.0, -1.0, 0.0).is_err());
        let bad = AdditiveNoiseParams { sigma: -1.0, t: 1.0, offset: 0.0 };
        assert!(matches!(positivity_probability(&bad), Err(Error::Domain(_))));
    }

    #[test]
    fn interval_total_mass_and_known_value() {
        let p = params(1.0, 1.0, 0.0);
        assert_eq!(interval_probability(f64::NEG_INFINITY, f64::INFINITY, &p).unwrap(), 1.0);
        let v = interval_probability(-1.0, 1.0, &p).unwrap();
        assert!((v - 0.682_689_492_137_085_9).abs() < 1e-10);
        assert!(matches!(interval_probability(1.0, 1.0, &p), Err(Error::Argument(_))));
    }

    #[test]
    fn rate_examples() {
        let r = vanishing_noise_rate(&params(0.1, 1.0, -1.0)).unwrap();
        assert!(r.tail < r.reference);
        let r = vanishing_noise_rate(&params(0.3, 2.0, -(0.3 * 2f64.sqrt()))).unwrap();
        assert!((r.tail - normal_cdf(-1.0)).abs() < 1e-15);
        assert!((r.reference - (-0.5f64).exp()).abs() < 1e-15);
        assert!(r.tail < r.reference);
        assert!(vanishing_noise_rate(&params(0.1, 1.0, 0.0)).is_err());
    }

    #[test]
    fn rate_ratio_decreases_to_one() {
        let ratios: Vec<f64> = [0.5, 0.2, 0.1, 0.05]
            .iter()
            .map(|&s| vanishing_noise_rate(&params(s, 1.0, -1.0)).unwrap().log_ratio)
            .collect();
        for w in ratios.windows(2) {
            assert!(w[1] < w[0] && w[1] > 1.0);
        }
        assert!(ratios[3] < 1.1);
    }

    #[test]
    fn jensen_bounds() {
        let p0 = params(1.0, 1.0, 0.0);
        assert_eq!(jensen_sign_bound(2, 1.0, &p0).unwrap(), (SignDirection::Nonnegative, 0.5));
        assert_eq!(jensen_sign_bound(2, -1.0, &p0).unwrap(), (SignDirection::Nonpositive, 0.5));
        let (dir, b) = jensen_sign_bound(2, 1.0, &params(1.0, 1.0, -1.0)).unwrap();
        assert_eq!(dir, SignDirection::Nonnegative);
        assert!((b - 0.841_344_746_068_542_9).abs() < 1e-10);
        assert!(matches!(jensen_sign_bound(3, 1.0, &p0), Err(Error::Unsupported(_))));
        assert!(jensen_sign_bound(2, 0.0, &p0).is_err());
    }

    proptest! {
        #[test]
        fn complement_sums_to_one(sigma in 0.01f64..10.0, t in 0.01f64..10.0, a in -5.0f64..5.0) {
            let p = params(sigma, t, a);
            let s = positivity_probability(&p).unwrap() + nonpositive_probability(&p).unwrap();
            prop_assert_eq!(s, 1.0);
        }

        #[test]
        fn interval_is_additive(a in -5.0f64..0.0, w1 in 0.01f64..3.0, w2 in 0.01f64..3.0,
                                sigma in 0.1f64..3.0, off in -2.0f64..2.0) {
            let p = params(sigma, 1.0, off);
            let b = a + w1;
            let c = b + w2;
            let lhs = interval_probability(a, b, &p).unwrap() + interval_probability(b, c, &p).unwrap();
            prop_assert!((lhs - interval_probability(a, c, &p).unwrap()).abs() < 1e-12);
        }

        #[test]
        fn nonpositive_offset_keeps_positivity_above_half(sigma in 0.01f64..10.0, a in -10.0f64..=0.0) {
            prop_assert!(positivity_probability(&params(sigma, 1.0, a)).unwrap() >= 0.5);
        }

        #[test]
        fn positivity_monotone_in_offset(a in -3.0f64..3.0, da in 0.0f64..1.0) {
            let p1 = positivity_probability(&params(1.0, 1.0, a)).unwrap();
            let p2 = positivity_probability(&params(1.0, 1.0, a + da)).unwrap();
            prop_assert!(p2 <= p1);
        }
    }
}
