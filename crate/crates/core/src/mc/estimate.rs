use serde::{Deserialize, Serialize};

use crate::error::{argument, Result};
use crate::quad::pairwise_sum;

/// Half-width multiplier of every reported confidence interval.
pub const CI_SIGMAS: f64 = 3.0;
/// Two-sided coverage of a 3σ normal interval.
pub const CI_LEVEL: f64 = 0.997;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MCEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub n: u64,
    pub ci_level: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub master_seed: u64,
}

impl MCEstimate {
    fn build(mean: f64, stderr: f64, n: u64, master_seed: u64) -> Self {
        MCEstimate {
            mean,
            stderr,
            n,
            ci_level: CI_LEVEL,
            ci_low: mean - CI_SIGMAS * stderr,
            ci_high: mean + CI_SIGMAS * stderr,
            master_seed,
        }
    }

    /// Sample mean and CLT standard error (unbiased variance) of `samples`,
    /// reduced in index order.
    pub fn from_samples(samples: &[f64], master_seed: u64) -> Result<Self> {
        let n = samples.len();
        if n == 0 {
            return Err(argument("cannot estimate from zero samples"));
        }
        if samples.iter().any(|v| !v.is_finite()) {
            return Err(argument("non-finite sample in Monte Carlo reduction"));
        }
        let mean = pairwise_sum(samples) / n as f64;
        let stderr = if n > 1 {
            let sq: Vec<f64> = samples.iter().map(|v| (v - mean) * (v - mean)).collect();
            (pairwise_sum(&sq) / (n - 1) as f64 / n as f64).sqrt()
        } else {
            0.0
        };
        Ok(Self::build(mean, stderr, n as u64, master_seed))
    }

    /// Frequency of `true` with the binomial standard error `√(m(1-m)/n)`.
    pub fn from_indicators(hits: &[bool], master_seed: u64) -> Result<Self> {
        let n = hits.len();
        if n == 0 {
            return Err(argument("cannot estimate from zero samples"));
        }
        let count = hits.iter().filter(|&&h| h).count();
        Ok(Self::from_count(count as u64, n as u64, master_seed))
    }

    pub fn from_count(count: u64, n: u64, master_seed: u64) -> Self {
        let m = count as f64 / n as f64;
        Self::build(m, (m * (1.0 - m) / n as f64).sqrt(), n, master_seed)
    }
}

/// Direction of an analytic-versus-Monte-Carlo comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum CheckKind {
    /// `|reference - mean| ≤ 3 SE + bias`.
    #[default]
    TwoSided,
    /// `mean ≥ reference - (3 SE + bias)`.
    LowerBound,
    /// `mean ≤ reference + 3 SE + bias`.
    UpperBound,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub pass: bool,
    /// Violation amount; `≤ 0` on PASS. For two-sided checks this is
    /// `|Δ| - 3 SE - bias`.
    pub margin: f64,
    pub note: Option<String>,
}

/// `PASS` iff `|analytic - mean| ≤ 3·stderr + bias`.
pub fn two_sided_bound_check(analytic: f64, estimate: &MCEstimate, bias: f64) -> Result<Verdict> {
    bound_check(analytic, estimate, bias, CheckKind::TwoSided)
}

pub fn bound_check(reference: f64, estimate: &MCEstimate, bias: f64, kind: CheckKind) -> Result<Verdict> {
    if !reference.is_finite() || !estimate.mean.is_finite() || !estimate.stderr.is_finite() {
        return Err(argument("bound check needs finite inputs"));
    }
    if !(bias >= 0.0) {
        return Err(argument(format!("bias budget must be >= 0, got {bias}")));
    }
    let delta = estimate.mean - reference;
    let excess = match kind {
        CheckKind::TwoSided => delta.abs(),
        CheckKind::LowerBound => -delta,
        CheckKind::UpperBound => delta,
    };
    let margin = excess - CI_SIGMAS * estimate.stderr - bias;
    let pass = margin <= 0.0;
    let note = if estimate.stderr == 0.0 && !pass {
        Some("degenerate variance: zero standard error with a mismatch".to_string())
    } else {
        None
    };
    Ok(Verdict { pass, margin, note })
}
