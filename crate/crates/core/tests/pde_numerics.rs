use noiseblow::kernel::{gaussian_bump_heat, InitialDatum};
use noiseblow::mc::Execution;
use noiseblow::paths::{sample_path, SeedSpec};
use noiseblow::pde::*;
use proptest::prelude::*;

const SEED: u64 = 20261016;

fn bump(c: f64) -> InitialDatum {
    InitialDatum::gaussian_bump(c, 1.0).unwrap()
}

fn whole_line(drift: Drift, noise: Noise, radius: f64) -> PdeModel {
    PdeModel { domain: Domain::WholeSpace { dim: 1, radius }, drift, noise }
}

fn linear_error(h: f64, dt: f64) -> f64 {
    let model = whole_line(Drift::Linear { k: 1.0 }, Noise::None, 12.0);
    let out = solve_deterministic(&model, &bump(1.0), &SolverSpec::new(dt, h, 0.5)).unwrap();
    let exact = 0.5f64.exp() * gaussian_bump_heat(1.0, 1.0, 0.5, &[0.0]);
    (out.field.at(&[0.0]).unwrap() - exact).abs()
}

#[test]
fn linear_drift_matches_closed_form() {
    assert!(linear_error(0.05, 2.5e-5) < 2e-4);
}

#[test]
fn grid_halving_reduces_error_at_least_threefold() {
    let coarse = linear_error(0.2, 1e-4);
    let fine = linear_error(0.1, 5e-5);
    assert!(coarse / fine >= 3.0, "{coarse} / {fine}");
}

#[test]
fn linear_drift_matches_closed_form_in_two_dimensions() {
    let model = PdeModel {
        domain: Domain::WholeSpace { dim: 2, radius: 7.0 },
        drift: Drift::Linear { k: 0.5 },
        noise: Noise::None,
    };
    let out = solve_deterministic(&model, &bump(1.0), &SolverSpec::new(1e-3, 0.1, 0.3)).unwrap();
    let exact = 0.15f64.exp() * gaussian_bump_heat(1.0, 1.0, 0.3, &[0.0, 0.0]);
    assert!((out.field.at(&[0.0, 0.0]).unwrap() - exact).abs() < 5e-3);
}

#[test]
fn explicit_and_semi_implicit_agree() {
    let model = whole_line(Drift::Power { k: 1.0, p: 2.0 }, Noise::None, 10.0);
    let mut spec = SolverSpec::new(1e-3, 0.05, 0.2);
    let a = solve_deterministic(&model, &bump(1.0), &spec).unwrap();
    spec.scheme = Scheme::Explicit;
    let b = solve_deterministic(&model, &bump(1.0), &spec).unwrap();
    assert!((a.field.at(&[0.0]).unwrap() - b.field.at(&[0.0]).unwrap()).abs() < 2e-3);
}

#[test]
fn large_data_below_fujita_exponent_blows_up() {
    let u0 = bump(50.0);
    let model = PdeModel {
        domain: Domain::whole_space_for(1, &u0, 1.0),
        drift: Drift::Power { k: 1.0, p: 2.0 },
        noise: Noise::None,
    };
    let out = solve_deterministic(&model, &u0, &SolverSpec::new(1e-3, 0.05, 1.0)).unwrap();
    let tb = out.blowup_time().expect("blowup");
    // The ODE u' = u² from the peak value 50 blows up at 1/50; diffusion
    // can only delay it.
    assert!((0.02..1.0).contains(&tb), "{tb}");
}

#[test]
fn small_data_above_fujita_exponent_stays_bounded() {
    let u0 = bump(0.01);
    let model = PdeModel {
        domain: Domain::whole_space_for(1, &u0, 5.0),
        drift: Drift::Power { k: 1.0, p: 4.0 },
        noise: Noise::None,
    };
    let mut spec = SolverSpec::new(1e-2, 0.05, 5.0);
    spec.record_trace = true;
    let out = solve_deterministic(&model, &u0, &spec).unwrap();
    assert!(!out.blew_up());
    assert!(out.trace.iter().all(|p| p.sup <= 0.01 + 1e-12));
}

#[test]
fn zero_noise_multiplicative_solve_is_bit_identical() {
    let u0 = bump(2.0);
    let noisy = whole_line(Drift::Power { k: 1.0, p: 2.0 }, Noise::Multiplicative { sigma: 0.0 }, 8.0);
    let det = PdeModel { noise: Noise::None, ..noisy };
    let spec = SolverSpec::new(1e-3, 0.05, 0.3);
    let path = sample_path(0.3, 300, SeedSpec::new(SEED, 0)).unwrap();
    let a = solve_random_multiplicative(&noisy, &u0, &path, &spec).unwrap();
    let b = solve_deterministic(&det, &u0, &spec).unwrap();
    assert_eq!(a, b);
}

#[test]
fn misaligned_path_is_a_config_error() {
    let model = whole_line(Drift::Power { k: 1.0, p: 2.0 }, Noise::Multiplicative { sigma: 0.5 }, 8.0);
    let spec = SolverSpec::new(1e-3, 0.05, 0.3);
    let short = sample_path(0.2, 200, SeedSpec::new(SEED, 0)).unwrap();
    assert!(matches!(
        solve_random_multiplicative(&model, &bump(1.0), &short, &spec),
        Err(noiseblow::Error::Config(_))
    ));
    let odd = sample_path(0.3, 210, SeedSpec::new(SEED, 0)).unwrap();
    assert!(solve_random_multiplicative(&model, &bump(1.0), &odd, &spec).is_err());
}

#[test]
fn transformed_linear_solve_matches_closed_form() {
    // For f(u) = ku the transformed equation is w_t = Δw + kw, so
    // u = e^{(k - σ²/2)t + σB_t} (K_t * u₀).
    let (k, sigma, t) = (0.7, 0.6, 0.4);
    let model = whole_line(Drift::Linear { k }, Noise::Multiplicative { sigma }, 12.0);
    let spec = SolverSpec::new(2.5e-5, 0.05, t);
    for i in 0..3 {
        let path = sample_path(t, 400, SeedSpec::new(SEED, i)).unwrap();
        let w = solve_random_multiplicative(&model, &bump(1.0), &path, &spec).unwrap().field;
        let u = reconstruct_u(&w, &path, sigma, t).unwrap();
        let b = path.terminal();
        let exact = ((k - 0.5 * sigma * sigma) * t + sigma * b).exp() * gaussian_bump_heat(1.0, 1.0, t, &[0.0]);
        assert!((u.at(&[0.0]).unwrap() - exact).abs() < 1e-3 * exact, "path {i}");
    }
}

#[test]
fn supersolution_without_noise_reproduces_deterministic_solution() {
    let model = whole_line(Drift::Power { k: 1.0, p: 2.0 }, Noise::Multiplicative { sigma: 0.0 }, 8.0);
    let setup = CheckSetup {
        points: vec![vec![0.0], vec![1.0]],
        times: vec![0.05],
        n_paths: 8,
        master_seed: SEED,
        bias: 0.0,
    };
    let r = supersolution_check(&model, &bump(5.0), &SolverSpec::new(1e-3, 0.05, 0.05), &setup, Execution::Auto)
        .unwrap();
    assert!(r.pass);
    for row in &r.rows {
        assert!((row.estimate.mean - row.reference).abs() <= 1e-14 * row.reference);
        assert!(row.estimate.stderr <= 1e-14 * row.reference);
    }
}

#[test]
fn supersolution_needs_finite_reference() {
    let model = whole_line(Drift::Power { k: 1.0, p: 2.0 }, Noise::Multiplicative { sigma: 0.5 }, 8.0);
    let setup = CheckSetup { points: vec![vec![0.0]], times: vec![0.5], n_paths: 4, master_seed: SEED, bias: 0.0 };
    let r = supersolution_check(&model, &bump(50.0), &SolverSpec::new(1e-3, 0.05, 0.5), &setup, Execution::Auto);
    assert!(matches!(r, Err(noiseblow::Error::Domain(_))));
}

#[test]
fn sublinear_linear_case_is_tight_near_the_centre() {
    let setup = CheckSetup {
        points: vec![vec![0.0]],
        times: vec![0.5],
        n_paths: 200,
        master_seed: SEED,
        bias: 0.0,
    };
    let r = sublinear_global_check(
        1.0,
        1.0,
        0.2,
        &bump(5.0),
        Domain::WholeSpace { dim: 1, radius: 8.0 },
        &SolverSpec::new(2e-3, 0.05, 0.5),
        &setup,
        Execution::Auto,
    )
    .unwrap();
    assert!(r.pass, "{r:?}");
    let row = &r.rows[0];
    assert!((row.estimate.mean - row.reference).abs() < 3.0 * row.estimate.stderr + 1e-3);
}

#[test]
fn sublinear_mean_exceeds_reference_in_the_far_field() {
    // Where u changes sign often, E|u| picks up the local-time contribution
    // and rises above the noise-free solution.
    let setup = CheckSetup {
        points: vec![vec![3.0]],
        times: vec![1.0],
        n_paths: 400,
        master_seed: SEED,
        bias: 0.0,
    };
    let r = sublinear_global_check(
        1.0,
        0.5,
        1.0,
        &bump(5.0),
        Domain::WholeSpace { dim: 1, radius: 10.0 },
        &SolverSpec::new(2e-3, 0.05, 1.0),
        &setup,
        Execution::Auto,
    )
    .unwrap();
    assert_eq!(r.blown_paths, 0);
    assert!(!r.rows[0].verdict.pass);
}

#[test]
fn comparison_without_noise_is_always_true() {
    let path = sample_path(1.0, 100, SeedSpec::new(SEED, 0)).unwrap();
    let u = additive_linear_solution(1.3, 1.0, 0.0, 1.0, &path).unwrap();
    assert!(comparison_event(u, 1.3));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn transformed_solution_stays_nonnegative(seed in any::<u64>(), c in 0.1f64..5.0, sigma in 0.0f64..1.5) {
        let model = whole_line(Drift::Power { k: 1.0, p: 2.0 }, Noise::Multiplicative { sigma }, 6.0);
        let spec = SolverSpec::new(2e-3, 0.1, 0.2);
        let path = sample_path(0.2, 100, SeedSpec::new(seed, 0)).unwrap();
        let out = solve_random_multiplicative(&model, &bump(c), &path, &spec).unwrap();
        prop_assert!(out.running_min >= -1e-8);
    }

    #[test]
    fn ordered_data_give_ordered_solutions(seed in any::<u64>(), c in 0.1f64..2.0, gap in 0.0f64..1.0) {
        let model = whole_line(Drift::Power { k: 1.0, p: 2.0 }, Noise::Multiplicative { sigma: 0.5 }, 6.0);
        let spec = SolverSpec::new(2e-3, 0.1, 0.2);
        let path = sample_path(0.2, 100, SeedSpec::new(seed, 0)).unwrap();
        let lo = solve_random_multiplicative(&model, &bump(c), &path, &spec).unwrap();
        let hi = solve_random_multiplicative(&model, &bump(c + gap), &path, &spec).unwrap();
        prop_assume!(!lo.blew_up() && !hi.blew_up());
        for (a, b) in lo.field.values.iter().zip(&hi.field.values) {
            prop_assert!(a <= b);
        }
    }
}
