//! Monte Carlo oracle against closed forms and its own invariants.

use rollover::fixtures;
use rollover::mc::{mc_expectation, sample_estimate, simulate_cir, Expr, McConfig, McError, Scheme};
use rollover_core::affine::{factor_transform, CirFactor};

fn cfg(n_paths: usize, seed: u64) -> McConfig {
    McConfig {
        n_paths,
        steps_per_year: 24,
        seed,
        scheme: Scheme::Exact,
        workers: 1,
    }
}

#[test]
fn cir_terminal_moments_match() {
    let f = CirFactor::new(0.5, 0.3, 0.4, 0.1).unwrap();
    let paths = simulate_cir(&f, 2.0, &McConfig { steps_per_year: 4, ..cfg(20_000, 3) }).unwrap();
    let y = paths.terminal();
    let m = sample_estimate(&y);
    assert!(m.within(f.mean(2.0), 3.0), "mean {:?} vs {}", m, f.mean(2.0));
    let sq: Vec<f64> = y.iter().map(|v| (v - f.mean(2.0)).powi(2)).collect();
    let v = sample_estimate(&sq);
    assert!(v.within(f.variance(2.0), 3.0), "variance {:?} vs {}", v, f.variance(2.0));
}

#[test]
fn low_dimension_chi_square_branch_matches() {
    // 4κθ/σ² = 0.3 < 1 exercises the Poisson mixture
    let f = CirFactor::new(0.3, 0.1, 0.4, 0.2).unwrap();
    let paths = simulate_cir(&f, 1.0, &McConfig { steps_per_year: 2, ..cfg(20_000, 5) }).unwrap();
    let y = paths.terminal();
    assert!(y.iter().all(|&v| v >= 0.0));
    assert!(sample_estimate(&y).within(f.mean(1.0), 3.0));
}

#[test]
fn vanishing_volatility_is_deterministic() {
    let f = CirFactor::new(0.7, 0.05, 0.0, 0.02).unwrap();
    let paths = simulate_cir(&f, 3.0, &cfg(1000, 1)).unwrap();
    let y = paths.terminal();
    assert!(y.iter().all(|&v| (v - f.mean(3.0)).abs() < 1e-14));
    assert_eq!(sample_estimate(&y).std_error, 0.0);
}

#[test]
fn transform_agrees_with_closed_form() {
    let m = fixtures::ois_model(0, 3).unwrap();
    for (i, f) in m.factors.factors().iter().enumerate() {
        let (phi, psi) = factor_transform(f, 2.0, 0.1, -0.5).unwrap();
        let exact = (phi + psi * f.y0).exp();
        let expr = Expr::Transform { factor: i, gamma: -0.5, u: 0.1, tau: 2.0 };
        let e = mc_expectation(&m, &expr, &cfg(20_000, 11)).unwrap();
        assert!(e.within(exact, 3.0), "factor {i}: {e:?} vs {exact}");
    }
}

#[test]
fn standard_error_scales_with_root_n() {
    let m = fixtures::basis_model(0).unwrap();
    let expr = Expr::FundingGrowth { t_end: 3.0 };
    let small = mc_expectation(&m, &expr, &cfg(5_000, 2)).unwrap();
    let large = mc_expectation(&m, &expr, &cfg(20_000, 2)).unwrap();
    let ratio = small.std_error / large.std_error;
    assert!((1.8..=2.2).contains(&ratio), "ratio {ratio}");
}

#[test]
fn euler_agrees_with_exact_on_fine_grid() {
    let m = fixtures::ois_model(3, 1).unwrap();
    let expr = Expr::OisDiscount { t_end: 2.0 };
    let exact = mc_expectation(&m, &expr, &cfg(20_000, 4)).unwrap();
    let euler = mc_expectation(
        &m,
        &expr,
        &McConfig { scheme: Scheme::Euler, steps_per_year: 252, ..cfg(20_000, 4) },
    )
    .unwrap();
    let se = exact.std_error.hypot(euler.std_error);
    assert!((exact.estimate - euler.estimate).abs() <= 4.0 * se, "{exact:?} vs {euler:?}");
}

#[test]
fn result_independent_of_worker_count() {
    let m = fixtures::basis_model(2).unwrap();
    let expr = Expr::LiborLegPv { t_prev: 0.5, t_next: 1.0 };
    let one = mc_expectation(&m, &expr, &cfg(5_000, 9)).unwrap();
    let four = mc_expectation(&m, &expr, &McConfig { workers: 4, ..cfg(5_000, 9) }).unwrap();
    assert_eq!(one.estimate.to_bits(), four.estimate.to_bits());
    assert_eq!(one.std_error.to_bits(), four.std_error.to_bits());
}

#[test]
fn too_few_paths_rejected() {
    let m = fixtures::ois_model(0, 1).unwrap();
    let err = mc_expectation(&m, &Expr::OisDiscount { t_end: 1.0 }, &cfg(999, 1)).unwrap_err();
    assert!(matches!(err, McError::Config(_)));
}

#[test]
fn malformed_expression_rejected() {
    let m = fixtures::ois_model(0, 1).unwrap();
    let err = mc_expectation(&m, &Expr::LiborLegPv { t_prev: 1.0, t_next: 0.5 }, &cfg(1000, 1)).unwrap_err();
    assert!(matches!(err, McError::Spec(_)));
}

#[test]
fn batch_matches_single_expression_on_shared_grid() {
    use rollover::mc::mc_expectations;
    let m = fixtures::basis_model(1).unwrap();
    let exprs = [
        Expr::OisDiscount { t_end: 3.0 },
        Expr::FundingGrowth { t_end: 3.0 },
        Expr::RiskyDiscount { t_end: 3.0 },
    ];
    let batch = mc_expectations(&m, &exprs, &cfg(5000, 8)).unwrap();
    for (e, b) in exprs.iter().zip(&batch) {
        assert_eq!(&mc_expectation(&m, e, &cfg(5000, 8)).unwrap(), b);
    }
}

#[test]
fn caplet_characteristic_function_matches_simulation() {
    use num_complex::Complex64;
    use rollover_core::instruments::caplet_char_fn;
    let m = fixtures::basis_model(0).unwrap();
    let (t_prev, t_next, u) = (1.0, 1.25, 1.5);
    let strike = m.spot_libor(0.0, 0.25).unwrap();
    let phi = caplet_char_fn(&m, t_prev, t_next, strike, Complex64::new(u, 0.0)).unwrap();
    for (imaginary, want) in [(false, phi.re), (true, phi.im)] {
        let e = Expr::CapletCharFn {
            t_prev,
            t_next,
            strike,
            u,
            imaginary,
        };
        let est = mc_expectation(&m, &e, &cfg(20_000, 9)).unwrap();
        assert!(est.within(want, 3.0), "{imaginary}: {est:?} vs {want}");
    }
}
