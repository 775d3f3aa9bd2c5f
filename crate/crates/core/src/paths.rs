//! Seeded Brownian paths and the functionals built on them.
//!
//! Every path is generated from its own ChaCha8 stream keyed by
//! `(master_seed, path_index)`, so a path never depends on which worker
//! produced it or in what order. Refinement by Brownian-bridge midpoints
//! draws from a separate block range of the same stream.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{argument, Result};

/// Word offset separating the increment lane from each refinement lane.
const LANE_SHIFT: u32 = 56;

/// Identifies one path's random stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SeedSpec {
    pub master_seed: u64,
    pub path_index: u64,
}

impl SeedSpec {
    pub fn new(master_seed: u64, path_index: u64) -> Self {
        SeedSpec { master_seed, path_index }
    }

    /// Generator positioned at the start of `lane` of this path's stream.
    pub fn rng(&self, lane: u32) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master_seed);
        rng.set_stream(self.path_index);
        rng.set_word_pos((lane as u128) << LANE_SHIFT);
        rng
    }
}

/// A Brownian trajectory on the uniform grid `t_i = i·dt`, `i = 0..=n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BrownianPath {
    pub dt: f64,
    /// `values[i] = B(i·dt)`, with `values[0] = 0`.
    pub values: Vec<f64>,
    pub seed: SeedSpec,
    /// Number of bridge refinements applied since sampling.
    pub level: u32,
}

impl BrownianPath {
    pub fn n_steps(&self) -> usize {
        self.values.len() - 1
    }

    pub fn horizon(&self) -> f64 {
        self.dt * self.n_steps() as f64
    }

    pub fn time(&self, i: usize) -> f64 {
        i as f64 * self.dt
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.values.len()).map(move |i| self.time(i))
    }

    pub fn terminal(&self) -> f64 {
        *self.values.last().expect("path has at least one node")
    }

    /// Grid index of `t`, which must coincide with a node up to 1e-9 relative.
    pub fn index_of(&self, t: f64) -> Result<usize> {
        let s = t / self.dt;
        let i = s.round();
        if !(i >= 0.0) || i > self.n_steps() as f64 || (s - i).abs() > 1e-9 * s.abs().max(1.0) {
            return Err(argument(format!(
                "time {t} is not on the path grid (dt = {}, horizon = {})",
                self.dt,
                self.horizon()
            )));
        }
        Ok(i as usize)
    }

    /// `B(t)` at a grid time.
    pub fn value_at(&self, t: f64) -> Result<f64> {
        Ok(self.values[self.index_of(t)?])
    }

    /// Piecewise-linear interpolation of the path, clamped to `[0, horizon]`.
    pub fn interpolate(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return self.values[0];
        }
        let s = t / self.dt;
        let n = self.n_steps();
        if s >= n as f64 {
            return self.values[n];
        }
        let nearest = s.round();
        if (s - nearest).abs() <= 1e-9 * s.max(1.0) {
            return self.values[nearest as usize];
        }
        let i = s.floor() as usize;
        let f = s - i as f64;
        {
            self.values[i] * (1.0 - f) + self.values[i + 1] * f
        }
    }

    /// Halve `dt` by inserting Brownian-bridge midpoints. Existing nodes are
    /// kept exactly; midpoint noise comes from refinement lane `level + 1`.
    pub fn refine(&self) -> BrownianPath {
        let level = self.level + 1;
        let mut rng = self.seed.rng(level);
        let half_sd = 0.5 * self.dt.sqrt();
        let mut values = Vec::with_capacity(2 * self.values.len() - 1);
        values.push(self.values[0]);
        for w in self.values.windows(2) {
            let z: f64 = rng.sample(StandardNormal);
            values.push(0.5 * (w[0] + w[1]) + half_sd * z);
            values.push(w[1]);
        }
        BrownianPath { dt: 0.5 * self.dt, values, seed: self.seed, level }
    }

    /// Keep every `factor`-th node.
    pub fn coarsen(&self, factor: usize) -> Result<BrownianPath> {
        if factor == 0 || !self.n_steps().is_multiple_of(factor) {
            return Err(argument(format!("cannot coarsen {} steps by {factor}", self.n_steps())));
        }
        Ok(BrownianPath {
            dt: self.dt * factor as f64,
            values: self.values.iter().step_by(factor).copied().collect(),
            seed: self.seed,
            level: self.level,
        })
    }
}

/// Sample `B` on `[0, horizon]` with `n_steps` equal increments.
pub fn sample_path(horizon: f64, n_steps: usize, seed: SeedSpec) -> Result<BrownianPath> {
    if n_steps == 0 {
        return Err(argument("n_steps must be at least 1"));
    }
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(argument(format!("horizon must be > 0, got {horizon}")));
    }
    let dt = horizon / n_steps as f64;
    let sd = dt.sqrt();
    let mut rng = seed.rng(0);
    let mut values = Vec::with_capacity(n_steps + 1);
    let mut b = 0.0;
    values.push(b);
    for _ in 0..n_steps {
        let z: f64 = rng.sample(StandardNormal);
        b += sd * z;
        values.push(b);
    }
    Ok(BrownianPath { dt, values, seed, level: 0 })
}

/// Cumulative trapezoid values of `∫₀^{t_i} e^{a s + b B_s} ds`, one per node
/// (starting with 0 at `t_0`).
pub fn running_exp_integral(path: &BrownianPath, a: f64, b: f64) -> impl Iterator<Item = f64> + '_ {
    let half_dt = 0.5 * path.dt;
    let mut prev = 1.0; // integrand at s = 0
    let mut acc = 0.0;
    std::iter::once(0.0).chain(path.values.iter().enumerate().skip(1).map(move |(i, &bv)| {
        let cur = (a * path.time(i) + b * bv).exp();
        acc += half_dt * (prev + cur);
        prev = cur;
        acc
    }))
}

/// Trapezoid approximation of `∫₀^T e^{a s + b B_s} ds` over the whole path.
pub fn exp_functional(path: &BrownianPath, a: f64, b: f64) -> f64 {
    running_exp_integral(path, a, b).last().unwrap_or(0.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "time", rename_all = "snake_case")]
pub enum HittingTime {
    At(f64),
    BeyondHorizon,
}

impl HittingTime {
    pub fn is_beyond(&self) -> bool {
        matches!(self, HittingTime::BeyondHorizon)
    }
}

/// First time `∫₀^t e^{-(λ₁+κ²/2)βs + κβB_s} ds` reaches `threshold`,
/// linearly interpolated inside the crossing step.
pub fn tau_hitting(path: &BrownianPath, lambda1: f64, kappa: f64, beta: f64, threshold: f64) -> HittingTime {
    let a = -(lambda1 + 0.5 * kappa * kappa) * beta;
    let b = kappa * beta;
    let mut prev = 0.0;
    for (i, cur) in running_exp_integral(path, a, b).enumerate() {
        if cur >= threshold {
            if i == 0 {
                return HittingTime::At(0.0);
            }
            let frac = (threshold - prev) / (cur - prev);
            return HittingTime::At(path.time(i - 1) + frac * path.dt);
        }
        prev = cur;
    }
    HittingTime::BeyondHorizon
}

/// Indicator of `e^{-(p-1)σ²t/2 + (p-1)σB_t} > ε` at a grid time `t`.
pub fn event_exp_exceeds(path: &BrownianPath, p: f64, sigma: f64, epsilon: f64, t_eval: f64) -> Result<bool> {
    let b = path.value_at(t_eval)?;
    let q = p - 1.0;
    Ok((-q * sigma * sigma * t_eval / 2.0 + q * sigma * b).exp() > epsilon)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_path() {
        let s = SeedSpec::new(7, 3);
        let a = sample_path(1.0, 500, s).unwrap();
        let b = sample_path(1.0, 500, s).unwrap();
        assert_eq!(a, b);
        let c = sample_path(1.0, 500, SeedSpec::new(7, 4)).unwrap();
        assert_ne!(a.values, c.values);
        assert_eq!(a.values[0], 0.0);
    }

    #[test]
    fn zero_steps_rejected() {
        assert!(matches!(sample_path(1.0, 0, SeedSpec::new(1, 0)), Err(crate::Error::Argument(_))));
    }

    #[test]
    fn increments_have_variance_dt() {
        let n = 100_000;
        let path = sample_path(2.0, n, SeedSpec::new(11, 0)).unwrap();
        let ss: f64 = path.values.windows(2).map(|w| (w[1] - w[0]).powi(2)).sum();
        // Σ ΔB²/dt ~ χ²_n: mean n, sd √(2n)
        let chi = ss / path.dt;
        assert!((chi - n as f64).abs() < 4.0 * (2.0 * n as f64).sqrt(), "chi2 = {chi}");
    }

    #[test]
    fn deterministic_integrand_cases() {
        let path = sample_path(2.0, 1000, SeedSpec::new(1, 1)).unwrap();
        assert!((exp_functional(&path, 0.0, 0.0) - 2.0).abs() < 1e-12);
        let lambda: f64 = 1.7;
        let exact = (1.0 - (-lambda * 2.0).exp()) / lambda;
        let approx = exp_functional(&path, -lambda, 0.0);
        // trapezoid error ≈ dt² T max|f''| / 12
        assert!((approx - exact).abs() < 2.0 * path.dt * path.dt * lambda * lambda / 12.0 * 2.0);
    }

    #[test]
    fn tau_degenerate_cases() {
        let path = sample_path(1.0, 1000, SeedSpec::new(5, 9)).unwrap();
        match tau_hitting(&path, 1.0, 0.5, 1.0, 1e-12) {
            HittingTime::At(t) => assert!(t < 1e-9),
            HittingTime::BeyondHorizon => panic!("tiny threshold must be hit"),
        }
        let total = exp_functional(&path, -(1.0 + 0.125), 0.5);
        assert!(tau_hitting(&path, 1.0, 0.5, 1.0, total * 1.0001).is_beyond());
    }

    #[test]
    fn tau_without_noise_matches_closed_form() {
        // κ = 0: ∫₀^τ e^{-λβs} ds = thr ⇒ τ = -ln(1 - λβ thr)/(λβ)
        let (lambda1, beta, thr) = (1.0, 1.0, 0.5);
        let exact = -(1.0f64 - lambda1 * beta * thr).ln() / (lambda1 * beta);
        let path = sample_path(2.0, 2000, SeedSpec::new(3, 3)).unwrap();
        match tau_hitting(&path, lambda1, 0.0, beta, thr) {
            HittingTime::At(t) => assert!((t - exact).abs() < path.dt),
            HittingTime::BeyondHorizon => panic!(),
        }
    }

    #[test]
    fn event_exact_substitution() {
        let mut path = sample_path(1.0, 10, SeedSpec::new(0, 0)).unwrap();
        path.values.iter_mut().for_each(|v| *v = 0.0);
        let (p, sigma, t) = (2.0, 1.0, 1.0);
        let level = (-(p - 1.0) * sigma * sigma * t / 2.0f64).exp();
        assert!(event_exp_exceeds(&path, p, sigma, level * 0.999, t).unwrap());
        assert!(!event_exp_exceeds(&path, p, sigma, level * 1.001, t).unwrap());
        assert!(event_exp_exceeds(&path, p, sigma, 1e-300, t).unwrap());
        assert!(event_exp_exceeds(&path, p, sigma, 0.5, 0.55).is_err());
    }

    #[test]
    fn refine_keeps_coarse_nodes() {
        let p = sample_path(1.0, 64, SeedSpec::new(9, 2)).unwrap();
        let f = p.refine();
        assert_eq!(f.n_steps(), 128);
        assert_eq!(f.coarsen(2).unwrap().values, p.values);
        assert_ne!(f.refine().values[1], f.values[1]);
        assert!(p.coarsen(3).is_err());
    }

    #[test]
    fn interpolation_hits_nodes() {
        let p = sample_path(1.0, 10, SeedSpec::new(2, 2)).unwrap();
        assert_eq!(p.interpolate(0.3), p.values[3]);
        assert_eq!(p.interpolate(5.0), p.terminal());
        let mid = p.interpolate(0.35);
        assert!((mid - 0.5 * (p.values[3] + p.values[4])).abs() < 1e-12);
    }
}
