//! Model invariants checked over randomly drawn parameters.

use proptest::prelude::*;
use rollover_core::affine::{factor_transform, factor_transform_numeric, CirFactor, FactorSet, NUMERIC_TOL};
use rollover_core::calibration::{
    adaptive_simulated_annealing, band_residual, differential_evolution, panel_mean, AsaConfig, Bounds, DeConfig,
    Sequential,
};
use rollover_core::curve::{ModelSpec, PiecewiseShift, SpreadProjection};
use rollover_core::date::Date;
use rollover_core::instruments::{
    cds_legs, ois_annuity, par_basis_spread, survival_discount, BankCredit, CdsSpec, TenorStructure,
};

/// Feller-satisfying factor: σ² ≤ 2κθ.
fn feller_factor() -> impl Strategy<Value = CirFactor> {
    (0.05f64..2.0, 0.01f64..1.0, 0.05f64..1.0, 0.0f64..1.0).prop_map(|(kappa, theta, s, y0)| {
        let sigma = s * (2.0 * kappa * theta).sqrt();
        CirFactor::new(kappa, theta, sigma, y0).unwrap()
    })
}

fn shift(max: f64) -> impl Strategy<Value = PiecewiseShift> {
    prop::collection::vec(0.0..max, 1..5).prop_map(|v| {
        let knots = (0..=v.len()).map(|k| k as f64 * 1.5).collect();
        PiecewiseShift::new(knots, v).unwrap()
    })
}

fn projection(d: usize, shift_max: f64, load_max: f64) -> impl Strategy<Value = SpreadProjection> {
    (shift(shift_max), prop::collection::vec(0.0..load_max, d)).prop_map(|(s, l)| SpreadProjection::new(s, l))
}

/// Model with nonnegative spreads on 1 to 3 factors.
fn model() -> impl Strategy<Value = ModelSpec> {
    (1usize..=3).prop_flat_map(|d| {
        (
            prop::collection::vec(feller_factor(), d),
            projection(d, 0.03, 0.05),
            projection(d, 0.01, 0.02),
            projection(d, 0.005, 0.02),
            0.1f64..1.0,
        )
            .prop_map(|(f, rc, lambda, phi, q)| {
                ModelSpec::new(
                    FactorSet::new(f).unwrap(),
                    rc,
                    lambda,
                    phi,
                    q,
                    0.0005,
                    Date::new(2013, 1, 1).unwrap(),
                )
                .unwrap()
            })
    })
}

fn value(f: &CirFactor, (phi, psi): (f64, f64)) -> f64 {
    (phi + psi * f.y0).exp()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn closed_form_matches_rk4(f in feller_factor(), tau in 0.01f64..30.0, u in -1.0f64..0.0, w in -1.0f64..0.0) {
        let exact = value(&f, factor_transform(&f, tau, u, w).unwrap());
        let numeric = value(&f, factor_transform_numeric(&f, tau, u, w, NUMERIC_TOL).unwrap());
        prop_assert!((exact - numeric).abs() <= 1e-9 * numeric.abs(), "{exact} vs {numeric}");
    }

    #[test]
    fn discounting_decreases_with_horizon(f in feller_factor(), w in 0.001f64..1.0, t in 0.1f64..20.0, dt in 0.01f64..5.0) {
        let a = value(&f, factor_transform(&f, t, 0.0, -w).unwrap());
        let b = value(&f, factor_transform(&f, t + dt, 0.0, -w).unwrap());
        prop_assert!(b < a && a < 1.0);
    }

    #[test]
    fn transform_nests(f in feller_factor(), s in 0.01f64..10.0, rest in 0.01f64..10.0, w in -1.0f64..0.0) {
        let direct = factor_transform(&f, s + rest, 0.0, w).unwrap();
        let (p_in, s_in) = factor_transform(&f, rest, 0.0, w).unwrap();
        let (p_out, s_out) = factor_transform(&f, s, s_in, w).unwrap();
        prop_assert!((direct.0 - (p_in + p_out)).abs() <= 1e-12 * (1.0 + direct.0.abs()));
        prop_assert!((direct.1 - s_out).abs() <= 1e-12 * (1.0 + direct.1.abs()));
    }

    #[test]
    fn libor_is_at_least_ois(m in model(), t in 0.0f64..5.0, delta in 0.05f64..1.0) {
        let l = m.spot_libor(t, t + delta).unwrap();
        let d = m.ois_discount(t, t + delta).unwrap();
        let ois = (1.0 - d) / (delta * d);
        prop_assert!(l >= ois - 1e-14, "{l} < {ois}");
    }

    #[test]
    fn noarb_identity(m in model(), t in 0.0f64..5.0, delta in 0.05f64..1.0) {
        prop_assert!(m.noarb_residual(t, t + delta).unwrap().abs() <= 1e-12);
    }

    #[test]
    fn basis_is_annuity_additive(m in model(), years in 1u32..8) {
        let t = years as f64;
        let legs: Vec<_> = [1, 3, 6].iter().map(|&k| TenorStructure::regular(0.0, t, k).unwrap()).collect();
        let a1 = ois_annuity(&m, 0.0, &legs[0]).unwrap();
        let a3 = ois_annuity(&m, 0.0, &legs[1]).unwrap();
        let lhs = par_basis_spread(&m, &legs[0], &legs[2]).unwrap() * a1;
        let rhs = par_basis_spread(&m, &legs[0], &legs[1]).unwrap() * a1 + par_basis_spread(&m, &legs[1], &legs[2]).unwrap() * a3;
        prop_assert!((lhs - rhs).abs() <= 1e-12, "{lhs} vs {rhs}");
    }

    #[test]
    fn cds_value_is_affine_and_decreasing_in_spread(m in model(), h in 0.0f64..0.05, years in 1u32..6, c1 in 0.0f64..0.05, c2 in 0.0f64..0.05) {
        let bank = BankCredit::flat(h, m.dim());
        let legs = cds_legs(&m, &bank, &CdsSpec::quarterly(years as f64, 0.0).unwrap()).unwrap();
        let mid = legs.value(0.5 * (c1 + c2));
        prop_assert!((mid - 0.5 * (legs.value(c1) + legs.value(c2))).abs() <= 1e-15);
        if c1 < c2 {
            prop_assert!(legs.value(c1) > legs.value(c2));
        }
    }

    #[test]
    fn survival_is_below_ois_discount(m in model(), h in 0.0001f64..0.05, t in 0.1f64..10.0) {
        let bank = BankCredit::flat(h, m.dim());
        prop_assert!(survival_discount(&m, &bank, 0.0, t).unwrap() < m.ois_discount(0.0, t).unwrap());
    }

    #[test]
    fn hinge_vanishes_exactly_inside_band(lo in -1.0f64..1.0, width in 0.0f64..1.0, p in -3.0f64..3.0) {
        let hi = lo + width;
        let r = band_residual(p, lo, hi);
        prop_assert_eq!(r == 0.0, (lo..=hi).contains(&p));
        prop_assert!(r.is_sign_negative() || p >= lo);
    }

    #[test]
    fn panel_mean_is_linear(
        banks in prop::collection::vec((shift(0.01), prop::collection::vec(0.0f64..0.01, 2)), 1..6),
        t in 0.0f64..8.0,
    ) {
        let banks: Vec<BankCredit> = banks.into_iter().map(|(s, l)| BankCredit::new(s, l)).collect();
        let m = panel_mean(&banks).unwrap();
        let x = [0.3, 0.7];
        let want = banks.iter().map(|b| b.intensity(t, &x)).sum::<f64>() / banks.len() as f64;
        prop_assert!((m.intensity(t, &x) - want).abs() <= 1e-15);
        let doubled: Vec<BankCredit> = banks.iter().chain(banks.iter()).cloned().collect();
        prop_assert!((panel_mean(&doubled).unwrap().intensity(t, &x) - want).abs() <= 1e-15);
    }

    #[test]
    fn optimizers_are_reproducible(seed in 0u64..1000) {
        let f = |x: &[f64]| (x[0] - 0.3).powi(2) + (x[1] + 0.2).powi(2);
        let b = Bounds::new(vec![-1.0, -1.0], vec![1.0, 1.0]).unwrap();
        let de = DeConfig { seed, max_iter: 30, ..DeConfig::default() };
        let r1 = differential_evolution(&f, &b, &de, &[], &Sequential);
        let r2 = differential_evolution(&f, &b, &de, &[], &Sequential);
        prop_assert_eq!(&r1.x, &r2.x);
        let asa = AsaConfig { seed, max_evals: 500, ..AsaConfig::default() };
        let a1 = adaptive_simulated_annealing(&f, &b, &asa);
        let a2 = adaptive_simulated_annealing(&f, &b, &asa);
        prop_assert_eq!(&a1.x, &a2.x);
    }
}
