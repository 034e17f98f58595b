//! OIS, vanilla swaps, tenor basis swaps and term LIBOR.

use crate::curve::ModelSpec;
use crate::instruments::TenorStructure;
use crate::math::{self, Kahan};
use crate::{Error, Result};

/// Single-period OIS par rate `(1 − D)/(δD)`.
pub fn ois_par_rate(model: &ModelSpec, t: f64, tt: f64) -> Result<f64> {
    let delta = tt - t;
    if !(delta > 0.0) {
        return Err(Error::Domain(alloc::format!("OIS needs T > t, got t = {t}, T = {tt}")));
    }
    let d = model.ois_discount(t, tt)?;
    Ok((1.0 - d) / (delta * d))
}

/// Discount factor implied by a single-period OIS rate.
pub fn ois_discount_from_rate(rate: f64, delta: f64) -> f64 {
    1.0 / (1.0 + delta * rate)
}

/// `Σⱼ δ·D^OIS(t, Tⱼ)` over the schedule.
pub fn ois_annuity(model: &ModelSpec, t: f64, dates: &TenorStructure) -> Result<f64> {
    let delta = dates.delta();
    let mut acc = Kahan::default();
    for &tj in dates.payment_dates() {
        acc.add(delta * model.ois_discount(t, tj)?);
    }
    Ok(acc.value())
}

/// Multi-period OIS par rate `(D(t, T₀) − D(t, Tₙ))/(δ Σⱼ D(t, Tⱼ))`.
pub fn ois_par_rate_multi(model: &ModelSpec, t: f64, dates: &TenorStructure) -> Result<f64> {
    let d0 = model.ois_discount(t, dates.start().max(t))?;
    let dn = model.ois_discount(t, dates.maturity())?;
    Ok((d0 - dn) / ois_annuity(model, t, dates)?)
}

/// Present value of the floating leg `Σⱼ δ L(T_{j−1}, Tⱼ)` paid at `Tⱼ`.
pub fn float_leg_pv(model: &ModelSpec, leg: &TenorStructure) -> Result<f64> {
    let mut acc = Kahan::default();
    for (tp, tn) in leg.periods() {
        acc.add(model.libor_leg_pv(0.0, tp, tn)?);
    }
    Ok(acc.value())
}

/// Floating leg PV minus `fixed_rate` times the fixed-leg annuity.
pub fn vanilla_swap_residual(
    model: &ModelSpec,
    float_tenor: &TenorStructure,
    fixed_tenor: &TenorStructure,
    fixed_rate: f64,
) -> Result<f64> {
    check_coterminal(float_tenor, fixed_tenor)?;
    Ok(float_leg_pv(model, float_tenor)? - fixed_rate * ois_annuity(model, 0.0, fixed_tenor)?)
}

/// Model par swap rate.
pub fn par_swap_rate(model: &ModelSpec, float_tenor: &TenorStructure, fixed_tenor: &TenorStructure) -> Result<f64> {
    check_coterminal(float_tenor, fixed_tenor)?;
    let a = ois_annuity(model, 0.0, fixed_tenor)?;
    if !(a > 0.0) {
        return Err(Error::DegenerateAnnuity { value: a });
    }
    Ok(float_leg_pv(model, float_tenor)? / a)
}

fn check_coterminal(x: &TenorStructure, y: &TenorStructure) -> Result<()> {
    if math::abs(x.start() - y.start()) > 1e-12 || math::abs(x.maturity() - y.maturity()) > 1e-12 {
        return Err(Error::Domain(alloc::format!(
            "legs are not co-terminal: [{}, {}] vs [{}, {}]",
            x.start(),
            x.maturity(),
            y.start(),
            y.maturity()
        )));
    }
    Ok(())
}

/// Which leg of the quoted basis pair is priced against the fixed equivalent.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum BasisSide {
    /// The priced leg is the shorter tenor and pays the spread.
    Shorter,
    /// The priced leg is the longer tenor; the spread sits on the reference leg.
    Longer,
}

/// Residual of a basis condition built from a fixed-equivalent swap.
///
/// The spread is always paid on the shorter of `leg` and `reference`, with
/// that leg's annuity:
///
/// - [`BasisSide::Shorter`]: `PV(leg) − (s·A_fixed − b·A_leg)`
/// - [`BasisSide::Longer`]: `PV(leg) − (s·A_fixed + b·A_reference)`
///
/// where `s` is the fixed rate of the reference-vs-fixed swap.
pub fn basis_swap_residual(
    model: &ModelSpec,
    leg: &TenorStructure,
    reference: &TenorStructure,
    fixed: (&TenorStructure, f64),
    spread: f64,
    side: BasisSide,
) -> Result<f64> {
    check_coterminal(leg, reference)?;
    check_coterminal(leg, fixed.0)?;
    let (lt, rt) = (leg.tenor_months(), reference.tenor_months());
    let consistent = match side {
        BasisSide::Shorter => lt < rt,
        BasisSide::Longer => lt > rt,
    };
    if !consistent {
        return Err(Error::Convention(alloc::format!(
            "{side:?} side with a {lt}m leg against a {rt}m reference"
        )));
    }
    let pv = float_leg_pv(model, leg)?;
    let a_fixed = ois_annuity(model, 0.0, fixed.0)?;
    let market = match side {
        BasisSide::Shorter => fixed.1 * a_fixed - spread * ois_annuity(model, 0.0, leg)?,
        BasisSide::Longer => fixed.1 * a_fixed + spread * ois_annuity(model, 0.0, reference)?,
    };
    Ok(pv - market)
}

/// Par spread paid on the shorter leg of a co-terminal basis swap.
pub fn par_basis_spread(model: &ModelSpec, short_leg: &TenorStructure, long_leg: &TenorStructure) -> Result<f64> {
    check_coterminal(short_leg, long_leg)?;
    if short_leg.tenor_months() >= long_leg.tenor_months() {
        return Err(Error::Convention(alloc::format!(
            "short leg {}m is not shorter than long leg {}m",
            short_leg.tenor_months(),
            long_leg.tenor_months()
        )));
    }
    let a = ois_annuity(model, 0.0, short_leg)?;
    if !(a > 0.0) {
        return Err(Error::DegenerateAnnuity { value: a });
    }
    Ok((float_leg_pv(model, long_leg)? - float_leg_pv(model, short_leg)?) / a)
}

/// Term LIBOR from the multi-period roll-over identity.
///
/// With `G = [Σⱼ F(t, T_{j−1}, Tⱼ) − Σ_{j<n} RD(t, Tⱼ)]/RD(t, Tₙ)`, where `F` is
/// [`ModelSpec::rollover_forward_term`], the rate solves `(1 + L)^m = G` for
/// `m = Tₙ − t ≥ 1` and `1 + mL = G` for shorter horizons.
pub fn implied_term_libor(model: &ModelSpec, t: f64, dates: &TenorStructure) -> Result<f64> {
    if math::abs(dates.start() - t) > 1e-12 {
        return Err(Error::Domain(alloc::format!(
            "term LIBOR schedule must start at t = {t}, starts at {}",
            dates.start()
        )));
    }
    let mut num = Kahan::default();
    for (tp, tn) in dates.periods() {
        num.add(model.rollover_forward_term(t, tp, tn)?);
    }
    let pays = dates.payment_dates();
    for &tj in &pays[..pays.len() - 1] {
        num.add(-model.risky_discount(t, tj)?);
    }
    let num = num.value();
    if !(num > 0.0) {
        return Err(Error::NegativeGrowth { value: num });
    }
    let g = num / model.risky_discount(t, dates.maturity())?;
    let m = dates.maturity() - t;
    if m >= 1.0 {
        Ok(math::expm1(math::ln(g) / m))
    } else {
        Ok((g - 1.0) / m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::tests::{close, deterministic, rich};
    use crate::curve::SpreadProjection;

    fn zero_risk() -> ModelSpec {
        let mut m = rich();
        m.lambda = SpreadProjection::zero(3);
        m.phi = SpreadProjection::zero(3);
        m
    }

    #[test]
    fn ois_trivia() {
        let m = deterministic(0.0, 0.0, 0.0);
        assert_eq!(ois_par_rate(&m, 0.0, 1.0).unwrap(), 0.0);
        let d = ois_discount_from_rate(0.0015, 0.5);
        assert!(math::abs(d - 0.999250562078441) < 5e-9);
        let r = 0.0123;
        let d = ois_discount_from_rate(r, 0.75);
        assert!(math::abs((1.0 - d) / (0.75 * d) - r) <= 1e-14);
    }

    #[test]
    fn multi_period_reduces_and_matches_geometric_annuity() {
        let m = deterministic(0.02, 0.0, 0.0);
        let one = TenorStructure::regular(0.0, 1.0, 12).unwrap();
        assert!(close(ois_par_rate_multi(&m, 0.0, &one).unwrap(), ois_par_rate(&m, 0.0, 1.0).unwrap(), 1e-14));
        let five = TenorStructure::regular(0.0, 5.0, 12).unwrap();
        let q = math::exp(-0.02);
        let annuity = q * (1.0 - libm::pow(q, 5.0)) / (1.0 - q);
        let want = (1.0 - libm::pow(q, 5.0)) / annuity;
        assert!(close(ois_par_rate_multi(&m, 0.0, &five).unwrap(), want, 1e-13));
    }

    #[test]
    fn par_swap_rate_zeroes_the_residual() {
        let m = rich();
        let fl = TenorStructure::regular(0.0, 5.0, 3).unwrap();
        let fx = TenorStructure::regular(0.0, 5.0, 6).unwrap();
        let s = par_swap_rate(&m, &fl, &fx).unwrap();
        assert!(math::abs(vanilla_swap_residual(&m, &fl, &fx, s).unwrap()) <= 1e-12);
    }

    #[test]
    fn zero_risk_swap_is_single_curve() {
        let m = zero_risk();
        let fl = TenorStructure::regular(0.0, 3.0, 3).unwrap();
        let fx = TenorStructure::regular(0.0, 3.0, 6).unwrap();
        let pv = vanilla_swap_residual(&m, &fl, &fx, 0.01).unwrap();
        let want = 1.0 - m.ois_discount(0.0, 3.0).unwrap() - 0.01 * ois_annuity(&m, 0.0, &fx).unwrap();
        assert!(close(pv, want, 1e-12));
        for (s, l) in [(1, 3), (3, 6), (1, 12), (2, 5)] {
            let a = TenorStructure::regular(0.0, 10.0, s).unwrap();
            let b = TenorStructure::regular(0.0, 10.0, l).unwrap();
            assert!(math::abs(par_basis_spread(&m, &a, &b).unwrap()) <= 1e-14);
        }
    }

    #[test]
    fn basis_residuals_vanish_at_par() {
        let m = rich();
        let t1 = TenorStructure::regular(0.0, 4.0, 1).unwrap();
        let t3 = TenorStructure::regular(0.0, 4.0, 3).unwrap();
        let t6 = TenorStructure::regular(0.0, 4.0, 6).unwrap();
        let s = par_swap_rate(&m, &t3, &t6).unwrap();
        let b13 = par_basis_spread(&m, &t1, &t3).unwrap();
        let r = basis_swap_residual(&m, &t1, &t3, (&t6, s), b13, BasisSide::Shorter).unwrap();
        assert!(math::abs(r) <= 1e-12, "{r}");
        let b36 = par_basis_spread(&m, &t3, &t6).unwrap();
        let r = basis_swap_residual(&m, &t6, &t3, (&t6, s), b36, BasisSide::Longer).unwrap();
        assert!(math::abs(r) <= 1e-12, "{r}");
        let e = basis_swap_residual(&m, &t6, &t3, (&t6, s), b36, BasisSide::Shorter).unwrap_err();
        assert!(matches!(e, Error::Convention(_)));
    }

    #[test]
    fn basis_additivity() {
        let m = rich();
        let t1 = TenorStructure::regular(0.0, 7.0, 1).unwrap();
        let t3 = TenorStructure::regular(0.0, 7.0, 3).unwrap();
        let t12 = TenorStructure::regular(0.0, 7.0, 12).unwrap();
        let a1 = ois_annuity(&m, 0.0, &t1).unwrap();
        let a3 = ois_annuity(&m, 0.0, &t3).unwrap();
        let lhs = par_basis_spread(&m, &t1, &t12).unwrap() * a1;
        let rhs = par_basis_spread(&m, &t1, &t3).unwrap() * a1 + par_basis_spread(&m, &t3, &t12).unwrap() * a3;
        assert!(math::abs(lhs - rhs) <= 1e-12);
    }

    #[test]
    fn term_libor_cases() {
        let m = zero_risk();
        let dates = TenorStructure::regular(0.0, 3.0, 3).unwrap();
        let l = implied_term_libor(&m, 0.0, &dates).unwrap();
        let want = libm::pow(m.ois_discount(0.0, 3.0).unwrap(), -1.0 / 3.0) - 1.0;
        assert!(close(l, want, 1e-12));

        let (s, a0, b0) = (0.002, 0.01, 0.003);
        let d = deterministic(a0, b0, s);
        let rbar = a0 + d.q * b0;
        let dates = TenorStructure::regular(0.0, 2.0, 6).unwrap();
        // (1+L)^2 = [Σ e^{-r̄T_{j-1}} e^{sδ} − Σ_{j<n} e^{-r̄T_j}] e^{2 r̄}
        let mut num = 0.0;
        for j in 0..4 {
            num += math::exp(-rbar * 0.5 * j as f64 + s * 0.5);
        }
        for j in 1..4 {
            num -= math::exp(-rbar * 0.5 * j as f64);
        }
        let want = libm::sqrt(num * math::exp(2.0 * rbar)) - 1.0;
        assert!(close(implied_term_libor(&d, 0.0, &dates).unwrap(), want, 1e-12));

        let one = TenorStructure::regular(0.0, 1.0 / 12.0, 1).unwrap();
        let l = implied_term_libor(&rich(), 0.0, &one).unwrap();
        let spot = rich().spot_libor(0.0, 1.0 / 12.0).unwrap();
        assert!(close(l, spot, 1e-12));
    }
}
