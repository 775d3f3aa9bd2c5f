//! Gaussian heat kernel and its action on initial data.
//!
//! `K(x, t) = (4πt)^{-d/2} exp(-|x|²/(4t))` is the fundamental solution of
//! `∂_t - Δ` on ℝ^d. Convolutions against initial data are evaluated with a
//! tensor-product trapezoid rule on a truncated box; the box half-width
//! around the evaluation point is [`kernel_halfwidth`].

use serde::{Deserialize, Serialize};

use crate::error::{argument, config, domain, Result};

/// Relative level at which a Gaussian bump is treated as zero when sizing
/// the quadrature box.
const BUMP_CUTOFF_LOG: f64 = 41.446_531_673_892_82; // ln(1e18)

/// Initial datum `u₀` on ℝ^d (d = 1 or 2).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitialDatum {
    /// `c · exp(-k|x|²)`.
    GaussianBump { c: f64, k: f64 },
    /// `c` everywhere.
    Constant { c: f64 },
    /// `c` on the closed ball of the given radius about the origin, 0 outside.
    IndicatorBall { c: f64, radius: f64 },
    /// Nodal values on the square grid `[lower, lower + (n-1)·spacing]^dim`,
    /// row-major for `dim = 2`. Linearly (bilinearly) interpolated, 0 outside.
    Tabulated { dim: usize, lower: f64, spacing: f64, values: Vec<f64> },
}

impl InitialDatum {
    pub fn gaussian_bump(c: f64, k: f64) -> Result<Self> {
        let d = InitialDatum::GaussianBump { c, k };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            InitialDatum::GaussianBump { c, k } => {
                if !(c >= 0.0 && c.is_finite()) {
                    return Err(domain(format!("gaussian_bump amplitude c must be >= 0, got {c}")));
                }
                if !(k > 0.0 && k.is_finite()) {
                    return Err(domain(format!("gaussian_bump decay k must be > 0, got {k}")));
                }
            }
            InitialDatum::Constant { c } => {
                if !c.is_finite() {
                    return Err(domain("constant datum must be finite"));
                }
            }
            InitialDatum::IndicatorBall { c, radius } => {
                if !(c >= 0.0 && c.is_finite()) {
                    return Err(domain(format!("indicator_ball amplitude c must be >= 0, got {c}")));
                }
                if !(radius > 0.0 && radius.is_finite()) {
                    return Err(domain(format!("indicator_ball radius must be > 0, got {radius}")));
                }
            }
            InitialDatum::Tabulated { dim, lower, spacing, ref values } => {
                if dim != 1 && dim != 2 {
                    return Err(domain(format!("tabulated datum dimension must be 1 or 2, got {dim}")));
                }
                if !(spacing > 0.0 && spacing.is_finite()) || !lower.is_finite() {
                    return Err(domain("tabulated grid spacing must be positive and finite"));
                }
                let n = tabulated_side(dim, values.len())
                    .ok_or_else(|| domain("tabulated value count does not form a square grid"))?;
                if n < 2 {
                    return Err(domain("tabulated datum needs at least two nodes per axis"));
                }
                if values.iter().any(|v| !v.is_finite()) {
                    return Err(domain("tabulated values must be finite"));
                }
            }
        }
        Ok(())
    }

    /// Evaluate `u₀(x)`; `x.len()` is the spatial dimension.
    pub fn eval(&self, x: &[f64]) -> f64 {
        match *self {
            InitialDatum::GaussianBump { c, k } => c * (-k * norm_sq(x)).exp(),
            InitialDatum::Constant { c } => c,
            InitialDatum::IndicatorBall { c, radius } => {
                if norm_sq(x) <= radius * radius {
                    c
                } else {
                    0.0
                }
            }
            InitialDatum::Tabulated { dim, lower, spacing, ref values } => {
                let n = tabulated_side(dim, values.len()).unwrap_or(0);
                if n < 2 || x.len() != dim {
                    return 0.0;
                }
                let locate = |xi: f64| -> Option<(usize, f64)> {
                    let s = (xi - lower) / spacing;
                    if s < 0.0 || s > (n - 1) as f64 {
                        return None;
                    }
                    let i = (s.floor() as usize).min(n - 2);
                    Some((i, s - i as f64))
                };
                match dim {
                    1 => match locate(x[0]) {
                        Some((i, f)) => values[i] * (1.0 - f) + values[i + 1] * f,
                        None => 0.0,
                    },
                    _ => match (locate(x[0]), locate(x[1])) {
                        (Some((i, fx)), Some((j, fy))) => {
                            let at = |a: usize, b: usize| values[a * n + b];
                            at(i, j) * (1.0 - fx) * (1.0 - fy)
                                + at(i + 1, j) * fx * (1.0 - fy)
                                + at(i, j + 1) * (1.0 - fx) * fy
                                + at(i + 1, j + 1) * fx * fy
                        }
                        _ => 0.0,
                    },
                }
            }
        }
    }

    /// Half-width of an origin-centred box outside which the datum vanishes
    /// (to 1e-18 relative for the Gaussian bump). `None` for unbounded support.
    pub fn support_radius(&self) -> Option<f64> {
        match *self {
            InitialDatum::GaussianBump { k, .. } => Some((BUMP_CUTOFF_LOG / k).sqrt()),
            InitialDatum::Constant { .. } => None,
            InitialDatum::IndicatorBall { radius, .. } => Some(radius),
            InitialDatum::Tabulated { dim, lower, spacing, ref values } => {
                let n = tabulated_side(dim, values.len()).unwrap_or(1);
                let upper = lower + (n.saturating_sub(1)) as f64 * spacing;
                Some(lower.abs().max(upper.abs()))
            }
        }
    }

    /// `sup |u₀|`.
    pub fn sup_abs(&self) -> f64 {
        match *self {
            InitialDatum::GaussianBump { c, .. } => c.abs(),
            InitialDatum::Constant { c } => c.abs(),
            InitialDatum::IndicatorBall { c, .. } => c.abs(),
            InitialDatum::Tabulated { ref values, .. } => values.iter().fold(0.0, |m, v| m.max(v.abs())),
        }
    }

    pub fn is_nonnegative(&self) -> bool {
        match *self {
            InitialDatum::GaussianBump { c, .. }
            | InitialDatum::Constant { c }
            | InitialDatum::IndicatorBall { c, .. } => c >= 0.0,
            InitialDatum::Tabulated { ref values, .. } => values.iter().all(|v| *v >= 0.0),
        }
    }
}

fn tabulated_side(dim: usize, len: usize) -> Option<usize> {
    match dim {
        1 => Some(len),
        2 => {
            let n = (len as f64).sqrt().round() as usize;
            (n * n == len).then_some(n)
        }
        _ => None,
    }
}

fn norm_sq(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

/// A point-time evaluation of the kernel.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelQuery {
    pub x: Vec<f64>,
    pub t: f64,
}

impl KernelQuery {
    pub fn new(x: Vec<f64>, t: f64) -> Self {
        KernelQuery { x, t }
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }
}

/// Quadrature settings for [`convolve_initial`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadSpec {
    /// Trapezoid nodes per axis.
    pub nodes: usize,
    /// Explicit half-width of the origin-centred integration box. When
    /// `None` the box is sized from the datum support and the kernel width.
    pub radius: Option<f64>,
}

impl QuadSpec {
    pub fn for_dim(d: usize) -> Self {
        QuadSpec { nodes: if d == 1 { 4001 } else { 401 }, radius: None }
    }
}

impl Default for QuadSpec {
    fn default() -> Self {
        QuadSpec::for_dim(1)
    }
}

fn check_dim(d: usize) -> Result<()> {
    if d == 1 || d == 2 {
        Ok(())
    } else {
        Err(domain(format!("spatial dimension must be 1 or 2, got {d}")))
    }
}

fn check_time(t: f64) -> Result<()> {
    if t > 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(domain(format!("time must be > 0, got {t}")))
    }
}

/// Distance beyond which `K(·, t)` carries less than ~1e-16 of its mass per
/// axis (about 8.5 standard deviations of the variance-2t Gaussian).
pub fn kernel_halfwidth(t: f64) -> f64 {
    12.0 * t.sqrt()
}

/// `K(x, t) = (4πt)^{-d/2} exp(-|x|²/(4t))`.
pub fn heat_kernel(x: &[f64], t: f64) -> f64 {
    let d = x.len() as f64;
    (4.0 * std::f64::consts::PI * t).powf(-0.5 * d) * (-norm_sq(x) / (4.0 * t)).exp()
}

/// Checked form of [`heat_kernel`].
pub fn heat_kernel_value(q: &KernelQuery) -> Result<f64> {
    check_dim(q.dim())?;
    check_time(q.t)?;
    if q.x.iter().any(|v| !v.is_finite()) {
        return Err(domain("kernel query point must be finite"));
    }
    Ok(heat_kernel(&q.x, q.t))
}

/// Trapezoid approximation of `∫ K(x - y, t) u₀(y) dy` over a truncated box.
pub fn convolve_initial(u0: &InitialDatum, t: f64, x: &[f64], quad: &QuadSpec) -> Result<f64> {
    let d = x.len();
    check_dim(d)?;
    check_time(t)?;
    if quad.nodes < 2 {
        return Err(config("quadrature node count must be at least 2"));
    }
    u0.validate()?;
    if let InitialDatum::Tabulated { dim, .. } = u0 {
        if *dim != d {
            return Err(config(format!("tabulated datum has dimension {dim}, query has {d}")));
        }
    }
    if let InitialDatum::Constant { c } = *u0 {
        if c == 0.0 {
            return Ok(0.0);
        }
    }

    let width = kernel_halfwidth(t);
    let mut ranges = Vec::with_capacity(d);
    match quad.radius {
        Some(r) => {
            if !(r > 0.0) {
                return Err(config("quadrature truncation radius must be positive"));
            }
            if let InitialDatum::Tabulated { .. } = u0 {
                let s = u0.support_radius().unwrap_or(0.0);
                if r < s {
                    return Err(config(format!(
                        "truncation radius {r} does not cover tabulated support radius {s}"
                    )));
                }
            }
            ranges.extend(std::iter::repeat_n((-r, r), d));
        }
        None => {
            for &xi in x {
                let (mut lo, mut hi) = (xi - width, xi + width);
                if let Some(s) = u0.support_radius() {
                    lo = lo.max(-s);
                    hi = hi.min(s);
                }
                if lo >= hi {
                    return Ok(0.0);
                }
                ranges.push((lo, hi));
            }
        }
    }

    let n = quad.nodes;
    let weights = |(lo, hi): (f64, f64)| -> (f64, Vec<f64>) {
        let h = (hi - lo) / (n - 1) as f64;
        let nodes = (0..n).map(|i| lo + i as f64 * h).collect();
        (h, nodes)
    };
    let end_weight = |i: usize| if i == 0 || i == n - 1 { 0.5 } else { 1.0 };

    let value = if d == 1 {
        let (h, ys) = weights(ranges[0]);
        let mut acc = 0.0;
        for (i, &y) in ys.iter().enumerate() {
            acc += end_weight(i) * heat_kernel(&[x[0] - y], t) * u0.eval(&[y]);
        }
        acc * h
    } else {
        let (hx, ys0) = weights(ranges[0]);
        let (hy, ys1) = weights(ranges[1]);
        // The 2-d kernel factorises into two 1-d kernels.
        let kx: Vec<f64> = ys0.iter().map(|&y| heat_kernel(&[x[0] - y], t)).collect();
        let ky: Vec<f64> = ys1.iter().map(|&y| heat_kernel(&[x[1] - y], t)).collect();
        let mut acc = 0.0;
        for (i, &y0) in ys0.iter().enumerate() {
            let mut row = 0.0;
            for (j, &y1) in ys1.iter().enumerate() {
                row += end_weight(j) * ky[j] * u0.eval(&[y0, y1]);
            }
            acc += end_weight(i) * kx[i] * row;
        }
        acc * hx * hy
    };
    Ok(value)
}

/// `A_t(x) = -∫ K(t, x - y) u₀(y) dy`, the offset in the additive-noise
/// probability formulas.
pub fn offset_a(u0: &InitialDatum, t: f64, x: &[f64], quad: &QuadSpec) -> Result<f64> {
    Ok(-convolve_initial(u0, t, x, quad)?)
}

/// Closed-form `∫ K(x - y, t) c e^{-k|y|²} dy = c (1+4kt)^{-d/2} e^{-k|x|²/(1+4kt)}`.
pub fn gaussian_bump_heat(c: f64, k: f64, t: f64, x: &[f64]) -> f64 {
    let s = 1.0 + 4.0 * k * t;
    c * s.powf(-0.5 * x.len() as f64) * (-k * norm_sq(x) / s).exp()
}

/// Validates `t` and the quadrature spec without evaluating anything.
pub fn check_query(t: f64, x: &[f64]) -> Result<()> {
    check_dim(x.len())?;
    check_time(t)?;
    if x.iter().any(|v| !v.is_finite()) {
        return Err(argument("evaluation point must be finite"));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::adaptive_simpson;
    use std::f64::consts::PI;

    #[test]
    fn kernel_at_origin() {
        let v = heat_kernel_value(&KernelQuery::new(vec![0.0], 1.0)).unwrap();
        assert!((v - (4.0 * PI).powf(-0.5)).abs() < 1e-16);
    }

    #[test]
    fn kernel_matches_extended_precision_value() {
        // (2π)^{-1/2} e^{-2} evaluated with 40-digit arithmetic.
        const ORACLE: f64 = 0.053_990_966_513_188_051_950_560_420_410_713_58;
        let v = heat_kernel_value(&KernelQuery::new(vec![2.0], 0.5)).unwrap();
        assert!((v - ORACLE).abs() <= 2.0 * f64::EPSILON * ORACLE);
    }

    #[test]
    fn kernel_rejects_bad_queries() {
        assert!(matches!(
            heat_kernel_value(&KernelQuery::new(vec![0.0], 0.0)),
            Err(crate::Error::Domain(_))
        ));
        assert!(heat_kernel_value(&KernelQuery::new(vec![0.0, 0.0, 0.0], 1.0)).is_err());
    }

    #[test]
    fn kernel_mass_is_one() {
        for &t in &[0.1, 1.0, 10.0] {
            let one = InitialDatum::Constant { c: 1.0 };
            let m1 = convolve_initial(&one, t, &[0.3], &QuadSpec::for_dim(1)).unwrap();
            assert!((m1 - 1.0).abs() < 1e-8, "d=1 t={t} mass {m1}");
            let m2 = convolve_initial(&one, t, &[0.3, -0.2], &QuadSpec::for_dim(2)).unwrap();
            assert!((m2 - 1.0).abs() < 1e-6, "d=2 t={t} mass {m2}");
        }
    }

    #[test]
    fn kernel_mass_by_adaptive_quadrature() {
        let t = 0.7;
        let m = adaptive_simpson(&|y: f64| heat_kernel(&[y], t), -40.0, 40.0, 1e-12, 40);
        assert!((m - 1.0).abs() < 1e-8);
    }

    #[test]
    fn gaussian_convolution_matches_closed_form() {
        let u0 = InitialDatum::gaussian_bump(1.0, 1.0).unwrap();
        let v = convolve_initial(&u0, 1.0, &[0.0], &QuadSpec::default()).unwrap();
        assert!((v - 5f64.powf(-0.5)).abs() < 1e-10);
        for &(x, t) in &[(0.5, 0.2), (-1.5, 2.0), (3.0, 0.05)] {
            let v = convolve_initial(&u0, t, &[x], &QuadSpec::default()).unwrap();
            assert!((v - gaussian_bump_heat(1.0, 1.0, t, &[x])).abs() < 1e-10);
        }
        let v2 = convolve_initial(&u0, 0.5, &[0.2, 0.4], &QuadSpec::for_dim(2)).unwrap();
        assert!((v2 - gaussian_bump_heat(1.0, 1.0, 0.5, &[0.2, 0.4])).abs() < 1e-8);
    }

    #[test]
    fn zero_and_constant_data() {
        let zero = InitialDatum::Constant { c: 0.0 };
        assert_eq!(convolve_initial(&zero, 1.0, &[0.0], &QuadSpec::default()).unwrap(), 0.0);
        assert_eq!(offset_a(&zero, 1.0, &[0.0], &QuadSpec::default()).unwrap(), 0.0);
        let two = InitialDatum::Constant { c: 2.0 };
        let a = offset_a(&two, 1.0, &[0.0], &QuadSpec::default()).unwrap();
        assert!((a + 2.0).abs() < 1e-8);
        let zero_bump = InitialDatum::gaussian_bump(0.0, 1.0).unwrap();
        assert_eq!(convolve_initial(&zero_bump, 1.0, &[0.0], &QuadSpec::default()).unwrap(), 0.0);
    }

    #[test]
    fn offset_is_exact_negation() {
        let u0 = InitialDatum::IndicatorBall { c: 1.5, radius: 0.7 };
        let q = QuadSpec::default();
        let c = convolve_initial(&u0, 0.3, &[0.1], &q).unwrap();
        let a = offset_a(&u0, 0.3, &[0.1], &q).unwrap();
        assert_eq!(a.to_bits(), (-c).to_bits());
        assert!(a <= 0.0);
    }

    #[test]
    fn semigroup_property() {
        // ∫ K(x-y, s) K(y, t) dy = K(x, s+t)
        let (s, t) = (0.3, 0.9);
        for &x in &[0.0, 0.7, -2.1] {
            let lhs = adaptive_simpson(&|y: f64| heat_kernel(&[x - y], s) * heat_kernel(&[y], t), -30.0, 30.0, 1e-13, 40);
            assert!((lhs - heat_kernel(&[x], s + t)).abs() < 1e-9);
        }
    }

    #[test]
    fn indicator_ball_against_erf_oracle() {
        // 1-d: ∫_{-r}^{r} K(x-y,t) dy = Φ((r-x)/√(2t)) - Φ((-r-x)/√(2t)), here via Simpson.
        let (r, t, x) = (0.8, 0.4, 0.3);
        let oracle = adaptive_simpson(&|y: f64| heat_kernel(&[x - y], t), -r, r, 1e-14, 40);
        let u0 = InitialDatum::IndicatorBall { c: 1.0, radius: r };
        let v = convolve_initial(&u0, t, &[x], &QuadSpec::default()).unwrap();
        assert!((v - oracle).abs() < 1e-7);
    }

    #[test]
    fn tabulated_datum_interpolates_and_checks_radius() {
        let values: Vec<f64> = (0..41).map(|i| { let y = -2.0 + 0.1 * i as f64; (-y * y).exp() }).collect();
        let u0 = InitialDatum::Tabulated { dim: 1, lower: -2.0, spacing: 0.1, values };
        assert!((u0.eval(&[0.05]) - 0.5 * (1.0 + (-0.01f64).exp())).abs() < 1e-15);
        assert_eq!(u0.eval(&[2.5]), 0.0);
        let too_small = QuadSpec { nodes: 2001, radius: Some(1.0) };
        assert!(matches!(convolve_initial(&u0, 0.5, &[0.0], &too_small), Err(crate::Error::Config(_))));
        let ok = QuadSpec { nodes: 4001, radius: Some(2.0) };
        let v = convolve_initial(&u0, 0.5, &[0.0], &ok).unwrap();
        // truncated at |y| = 2 where e^{-4} is small but not negligible
        assert!((v - gaussian_bump_heat(1.0, 1.0, 0.5, &[0.0])).abs() < 5e-3);
    }

    #[test]
    fn monotone_in_initial_datum() {
        let big = InitialDatum::gaussian_bump(2.0, 0.5).unwrap();
        let small = InitialDatum::IndicatorBall { c: 1.0, radius: 1.0 };
        for &x in &[-3.0, -0.5, 0.0, 0.9, 4.0] {
            for &t in &[0.05, 0.5, 3.0] {
                let q = QuadSpec::default();
                assert!(convolve_initial(&big, t, &[x], &q).unwrap() >= convolve_initial(&small, t, &[x], &q).unwrap());
            }
        }
    }

    #[test]
    fn result_stays_within_datum_range() {
        let u0 = InitialDatum::IndicatorBall { c: 3.0, radius: 0.5 };
        for &x in &[0.0, 0.4, 2.0] {
            let v = convolve_initial(&u0, 0.01, &[x], &QuadSpec::default()).unwrap();
            assert!((0.0..=3.0 + 1e-12).contains(&v));
        }
    }
}
