//! Credit default swaps on individual panel banks.
//!
//! Every leg is a joint expectation under `Q` of collateral discounting and
//! survival with intensity `λ̂ⱼ(t) = b̂₀ʲ(t) + ⟨b̂ʲ, X(t)⟩`, so no change of
//! measure is needed. With a mesh `{t_p}` refining the premium dates and
//! `m_p` the discounted probability of default in `(t_p, t_{p+1}]`:
//!
//! ```text
//! protection = (1 − R) Σ_p m_p
//! accrued    = Σ_k Σ_{p ∈ k} (t̄_p − T_{k−1}) m_p
//! annuity    = Σ_k (T_k − T_{k−1}) S(0, T_k)
//! value      = protection − C·(annuity + accrued)
//! ```
//!
//! In [`AccrualRule::Midpoint`] mode default is settled at the interval
//! midpoint `t̄_p`; [`AccrualRule::LeftEndpoint`] uses `t_p` throughout.

use alloc::vec::Vec;

use crate::affine::factor_transform;
use crate::curve::{ModelSpec, PiecewiseShift};
use crate::instruments::TenorStructure;
use crate::math::{self, Kahan};
use crate::{Error, Result};

/// Idiosyncratic default intensity of one bank.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BankCredit {
    /// Deterministic part `b̂₀ʲ(t)`.
    pub shift: PiecewiseShift,
    /// Loading `b̂ʲ`.
    pub loading: Vec<f64>,
}

impl BankCredit {
    /// Builds a bank intensity.
    pub fn new(shift: PiecewiseShift, loading: Vec<f64>) -> Self {
        BankCredit { shift, loading }
    }

    /// Constant shift `h`, no factor loading.
    pub fn flat(h: f64, d: usize) -> Self {
        BankCredit {
            shift: PiecewiseShift::constant(h),
            loading: alloc::vec![0.0; d],
        }
    }

    /// `λ̂ⱼ(t)` at state `x`.
    pub fn intensity(&self, t: f64, x: &[f64]) -> f64 {
        self.shift.value(t) + self.loading.iter().zip(x).map(|(l, xi)| l * xi).sum::<f64>()
    }
}

/// Settlement convention for default within a mesh interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum AccrualRule {
    /// Discount and accrue to the mesh-interval midpoint.
    #[default]
    Midpoint,
    /// Discount and accrue to the mesh-interval start.
    LeftEndpoint,
}

/// Default mesh step (about three days).
pub const DEFAULT_MESH_STEP: f64 = 1.0 / 120.0;
/// Default recovery rate.
pub const DEFAULT_RECOVERY: f64 = 0.4;

/// Contract terms of a CDS.
#[derive(Debug, Clone, PartialEq)]
pub struct CdsSpec {
    /// Premium schedule.
    pub premium_dates: TenorStructure,
    /// Recovery rate in `[0, 1)`.
    pub recovery: f64,
    /// Running spread `C`.
    pub spread: f64,
    /// Default-time mesh step in years.
    pub mesh_step: f64,
    /// Default settlement convention.
    pub accrual: AccrualRule,
}

impl CdsSpec {
    /// Quarterly CDS from the valuation date to `maturity` with default mesh and recovery.
    pub fn quarterly(maturity: f64, spread: f64) -> Result<Self> {
        Ok(CdsSpec {
            premium_dates: TenorStructure::regular(0.0, maturity, 3)?,
            recovery: DEFAULT_RECOVERY,
            spread,
            mesh_step: DEFAULT_MESH_STEP,
            accrual: AccrualRule::Midpoint,
        })
    }

    fn substeps(&self) -> Result<usize> {
        let delta = self.premium_dates.delta();
        let k = delta / self.mesh_step;
        let n = math::round(k);
        if !(self.mesh_step > 0.0) || n < 1.0 || math::abs(k - n) > 1e-9 * n {
            return Err(Error::Mesh { step: self.mesh_step });
        }
        Ok(n as usize)
    }
}

fn bank_gamma(model: &ModelSpec, bank: &BankCredit, i: usize) -> f64 {
    -(model.rc.loading[i] + bank.loading[i])
}

fn check_bank(model: &ModelSpec, bank: &BankCredit) -> Result<()> {
    model.factors.check_len(bank.loading.len())
}

/// `S(t, T) = E[exp(−∫ₜᵀ (r_c + λ̂ⱼ))]` at the spot state.
pub fn survival_discount(model: &ModelSpec, bank: &BankCredit, t: f64, tt: f64) -> Result<f64> {
    check_bank(model, bank)?;
    if !(tt >= t) {
        return Err(Error::Domain(alloc::format!("need t <= T, got t = {t}, T = {tt}")));
    }
    if tt == t {
        return Ok(1.0);
    }
    let mut e = -model.rc.shift.integral(t, tt) - bank.shift.integral(t, tt);
    for (i, f) in model.factors.factors().iter().enumerate() {
        let (phi, psi) = factor_transform(f, tt - t, 0.0, bank_gamma(model, bank, i))?;
        e += phi + psi * f.y0;
    }
    Ok(math::exp(e))
}

/// Zero-recovery bond `E[exp(−∫ (r_c − qΛ + λ̂ⱼ))] = S(t, T)·e^{qΛ(T − t)}`.
pub fn zero_recovery_bond(model: &ModelSpec, bank: &BankCredit, t: f64, tt: f64) -> Result<f64> {
    Ok(survival_discount(model, bank, t, tt)? * math::exp(model.q * model.big_lambda * (tt - t)))
}

/// `E[e^{−∫₀^{s₁}(r_c+λ̂)} · e^{−∫_{s₁}^{s₂} ρ}]` with `ρ = r_c` when
/// `collateral` is set and `ρ = λ̂` otherwise.
fn nested(model: &ModelSpec, bank: &BankCredit, s1: f64, s2: f64, collateral: bool) -> Result<f64> {
    let mut e = -model.rc.shift.integral(0.0, s1) - bank.shift.integral(0.0, s1);
    e -= if collateral {
        model.rc.shift.integral(s1, s2)
    } else {
        bank.shift.integral(s1, s2)
    };
    for (i, f) in model.factors.factors().iter().enumerate() {
        let w_in = if collateral {
            -model.rc.loading[i]
        } else {
            -bank.loading[i]
        };
        let (p_in, s_in) = factor_transform(f, s2 - s1, 0.0, w_in)?;
        let (p_out, s_out) = factor_transform(f, s1, s_in, bank_gamma(model, bank, i))?;
        e += p_in + p_out + s_out * f.y0;
    }
    Ok(math::exp(e))
}

/// The three CDS legs per unit spread.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CdsLegs {
    /// `(1 − R) Σ m_p`.
    pub protection: f64,
    /// `Σ Δ_k S(0, T_k)`.
    pub annuity: f64,
    /// Accrued-on-default factor `Σ (t̄_p − T_{k−1}) m_p`.
    pub accrued: f64,
}

impl CdsLegs {
    /// Value to the protection buyer at spread `c`.
    pub fn value(&self, c: f64) -> f64 {
        self.protection - c * (self.annuity + self.accrued)
    }

    /// Spread that zeroes the value.
    pub fn par_spread(&self) -> Result<f64> {
        let a = self.annuity + self.accrued;
        if !(a > 0.0) {
            return Err(Error::DegenerateAnnuity { value: a });
        }
        Ok(self.protection / a)
    }
}

/// Evaluates the protection, premium and accrued legs at the valuation date.
pub fn cds_legs(model: &ModelSpec, bank: &BankCredit, spec: &CdsSpec) -> Result<CdsLegs> {
    check_bank(model, bank)?;
    if !(0.0..1.0).contains(&spec.recovery) {
        return Err(Error::InvalidParameter(alloc::format!(
            "recovery must lie in [0, 1), got {}",
            spec.recovery
        )));
    }
    if spec.premium_dates.start() < 0.0 {
        return Err(Error::Domain("CDS must start at or after the valuation date".into()));
    }
    let n = spec.substeps()?;
    let h = spec.premium_dates.delta() / n as f64;
    let mut default_mass = Kahan::default();
    let mut accrued = Kahan::default();
    let mut annuity = Kahan::default();
    for (tk0, tk1) in spec.premium_dates.periods() {
        for p in 0..n {
            let lo = tk0 + p as f64 * h;
            let hi = if p + 1 == n { tk1 } else { tk0 + (p + 1) as f64 * h };
            let settle = match spec.accrual {
                AccrualRule::Midpoint => 0.5 * (lo + hi),
                AccrualRule::LeftEndpoint => lo,
            };
            let alive_lo = nested(model, bank, lo, settle, true)?;
            let alive_hi = nested(model, bank, settle, hi, false)?;
            let m = alive_lo - alive_hi;
            default_mass.add(m);
            accrued.add((settle - tk0) * m);
        }
        annuity.add((tk1 - tk0) * survival_discount(model, bank, 0.0, tk1)?);
    }
    Ok(CdsLegs {
        protection: (1.0 - spec.recovery) * default_mass.value(),
        annuity: annuity.value(),
        accrued: accrued.value(),
    })
}

/// Value to the protection buyer at the contract spread.
pub fn cds_value(model: &ModelSpec, bank: &BankCredit, spec: &CdsSpec) -> Result<f64> {
    Ok(cds_legs(model, bank, spec)?.value(spec.spread))
}

/// Par spread of a CDS with the given schedule and recovery.
pub fn cds_par_spread(
    model: &ModelSpec,
    bank: &BankCredit,
    dates: &TenorStructure,
    recovery: f64,
    mesh_step: f64,
) -> Result<f64> {
    let spec = CdsSpec {
        premium_dates: dates.clone(),
        recovery,
        spread: 0.0,
        mesh_step,
        accrual: AccrualRule::Midpoint,
    };
    cds_legs(model, bank, &spec)?.par_spread()
}

/// Par spreads of quarterly CDS maturing at each of `maturities`, in one
/// pass over a shared premium and default mesh.
///
/// Every maturity must be a whole number of quarters; the result equals
/// [`cds_par_spread`] on the corresponding quarterly schedule.
pub fn cds_par_curve(
    model: &ModelSpec,
    bank: &BankCredit,
    maturities: &[f64],
    recovery: f64,
    mesh_step: f64,
) -> Result<Vec<f64>> {
    let Some(&last) = maturities.iter().max_by(|a, b| a.total_cmp(b)) else {
        return Ok(Vec::new());
    };
    let spec = CdsSpec {
        premium_dates: TenorStructure::regular(0.0, last, 3)?,
        recovery,
        spread: 0.0,
        mesh_step,
        accrual: AccrualRule::Midpoint,
    };
    check_bank(model, bank)?;
    if !(0.0..1.0).contains(&recovery) {
        return Err(Error::InvalidParameter(alloc::format!(
            "recovery must lie in [0, 1), got {recovery}"
        )));
    }
    let quarters: Vec<usize> = maturities
        .iter()
        .map(|&t| {
            let q = math::round(t * 4.0);
            if q < 1.0 || math::abs(t * 4.0 - q) > 1e-9 {
                Err(Error::Domain(alloc::format!("CDS maturity {t} is not a whole number of quarters")))
            } else {
                Ok(q as usize)
            }
        })
        .collect::<Result<_>>()?;
    let n = spec.substeps()?;
    let h = spec.premium_dates.delta() / n as f64;
    let mut default_mass = Kahan::default();
    let mut accrued = Kahan::default();
    let mut annuity = Kahan::default();
    let mut curve = Vec::new();
    for (tk0, tk1) in spec.premium_dates.periods() {
        for p in 0..n {
            let lo = tk0 + p as f64 * h;
            let hi = if p + 1 == n { tk1 } else { tk0 + (p + 1) as f64 * h };
            let settle = 0.5 * (lo + hi);
            let m = nested(model, bank, lo, settle, true)? - nested(model, bank, settle, hi, false)?;
            default_mass.add(m);
            accrued.add((settle - tk0) * m);
        }
        annuity.add((tk1 - tk0) * survival_discount(model, bank, 0.0, tk1)?);
        let legs = CdsLegs {
            protection: (1.0 - recovery) * default_mass.value(),
            annuity: annuity.value(),
            accrued: accrued.value(),
        };
        curve.push(legs.par_spread()?);
    }
    Ok(quarters.iter().map(|&q| curve[q - 1]).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::tests::{close, deterministic, rich};

    /// Constant-hazard CDS in continuous time with discrete premiums.
    fn closed_form(r: f64, h: f64, recovery: f64, maturity: f64, c: f64) -> f64 {
        let k = r + h;
        let protection = (1.0 - recovery) * h / k * (1.0 - math::exp(-k * maturity));
        let delta = 0.25;
        let n = math::round(maturity / delta) as usize;
        let mut annuity = 0.0;
        let mut accrued = 0.0;
        for j in 0..n {
            let t0 = j as f64 * delta;
            annuity += delta * math::exp(-k * (t0 + delta));
            // ∫_0^δ u h e^{−k(t0+u)} du
            let e = math::exp(-k * delta);
            accrued += h * math::exp(-k * t0) * ((1.0 - e) / (k * k) - delta * e / k);
        }
        protection - c * (annuity + accrued)
    }

    #[test]
    fn zero_intensity_has_no_protection() {
        let m = deterministic(0.02, 0.0, 0.0);
        let bank = BankCredit::flat(0.0, 1);
        let spec = CdsSpec::quarterly(5.0, 0.01).unwrap();
        let legs = cds_legs(&m, &bank, &spec).unwrap();
        assert!(math::abs(legs.protection) < 1e-15 && math::abs(legs.accrued) < 1e-15);
        assert!(close(cds_value(&m, &bank, &spec).unwrap(), -0.01 * legs.annuity, 1e-14));
        assert!(math::abs(legs.par_spread().unwrap()) < 1e-15);
    }

    #[test]
    fn survival_trivia() {
        let m = rich();
        let zero = BankCredit::flat(0.0, 3);
        assert!(close(survival_discount(&m, &zero, 0.0, 4.0).unwrap(), m.ois_discount(0.0, 4.0).unwrap(), 1e-14));
        let h = BankCredit::flat(0.01, 3);
        let s = survival_discount(&m, &h, 0.0, 4.0).unwrap();
        assert!(close(s, m.ois_discount(0.0, 4.0).unwrap() * math::exp(-0.04), 1e-14));
        let mut m0 = m.clone();
        m0.big_lambda = 0.0;
        assert_eq!(zero_recovery_bond(&m0, &h, 0.0, 4.0).unwrap(), s);
    }

    #[test]
    fn constant_hazard_matches_closed_form() {
        let (r, h, rec) = (0.03, 0.02, 0.4);
        let m = deterministic(r, 0.0, 0.0);
        let bank = BankCredit::flat(h, 1);
        for maturity in [1.0, 5.0, 10.0] {
            let spec = CdsSpec::quarterly(maturity, 0.0).unwrap();
            let legs = cds_legs(&m, &bank, &spec).unwrap();
            let exact_prot = closed_form(r, h, rec, maturity, 0.0);
            let exact_rpv = exact_prot - closed_form(r, h, rec, maturity, 1.0);
            let exact_spread = exact_prot / exact_rpv;
            let err_bp = math::abs(legs.par_spread().unwrap() - exact_spread) * 1e4;
            assert!(err_bp <= 0.05, "maturity {maturity}: {err_bp} bp");
        }
    }

    #[test]
    fn recovery_one_is_rejected_and_near_one_gives_tiny_spread() {
        let m = deterministic(0.01, 0.0, 0.0);
        let bank = BankCredit::flat(0.02, 1);
        let mut spec = CdsSpec::quarterly(2.0, 0.0).unwrap();
        spec.recovery = 1.0;
        assert!(cds_legs(&m, &bank, &spec).is_err());
        spec.recovery = 1.0 - 1e-12;
        assert!(cds_legs(&m, &bank, &spec).unwrap().par_spread().unwrap() < 1e-13);
    }

    #[test]
    fn misaligned_mesh_is_rejected() {
        let m = deterministic(0.01, 0.0, 0.0);
        let bank = BankCredit::flat(0.02, 1);
        let mut spec = CdsSpec::quarterly(2.0, 0.0).unwrap();
        spec.mesh_step = 0.1;
        assert_eq!(cds_legs(&m, &bank, &spec).unwrap_err(), Error::Mesh { step: 0.1 });
    }

    #[test]
    fn left_endpoint_mode_is_first_order() {
        let m = deterministic(0.03, 0.0, 0.0);
        let bank = BankCredit::flat(0.02, 1);
        let mut spec = CdsSpec::quarterly(5.0, 0.01).unwrap();
        let mid = cds_value(&m, &bank, &spec).unwrap();
        spec.accrual = AccrualRule::LeftEndpoint;
        let left = cds_value(&m, &bank, &spec).unwrap();
        let exact = closed_form(0.03, 0.02, 0.4, 5.0, 0.01);
        assert!(math::abs(left - exact) > math::abs(mid - exact));
    }

    #[test]
    fn par_curve_matches_single_maturity_pricing() {
        let m = rich();
        let bank = BankCredit::new(
            PiecewiseShift::new(alloc::vec![0.0, 1.0, 3.0], alloc::vec![0.001, 0.004]).unwrap(),
            alloc::vec![0.002, 0.0, 0.01],
        );
        let mats = [0.5, 1.0, 2.0, 5.0];
        let curve = cds_par_curve(&m, &bank, &mats, 0.4, 1.0 / 12.0).unwrap();
        for (t, c) in mats.iter().zip(curve) {
            let dates = TenorStructure::regular(0.0, *t, 3).unwrap();
            let single = cds_par_spread(&m, &bank, &dates, 0.4, 1.0 / 12.0).unwrap();
            assert!(close(c, single, 1e-13), "{t}: {c} vs {single}");
        }
        assert!(cds_par_curve(&m, &bank, &[0.3], 0.4, 1.0 / 12.0).is_err());
    }
}
