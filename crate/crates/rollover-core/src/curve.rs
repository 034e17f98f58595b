//! Model state and the core discounting and LIBOR expectations.
//!
//! With state `X` of independent CIR factors,
//!
//! ```text
//! r_c(t) = a₀(t) + ⟨a, X(t)⟩
//! λ(t)   = b₀(t) + ⟨b, X(t)⟩
//! φ(t)   = c₀(t) + ⟨c, X(t)⟩
//! ```
//!
//! Every operation has a spot form evaluated at `X(t) = y₀` and an `_at`
//! form taking an explicit state. Times are year fractions measured from
//! the valuation date.

use alloc::vec;
use alloc::vec::Vec;

use crate::affine::{factor_transform, FactorSet};
use crate::date::Date;
use crate::instruments::TenorStructure;
use crate::math;
use crate::{Error, Result};

/// Piecewise-constant function of time on left-closed intervals.
///
/// `values[k]` applies on `[knots[k], knots[k + 1])`. The first value also
/// applies before `knots[0]` and the last one from the final knot onwards.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PiecewiseShift {
    knots: Vec<f64>,
    values: Vec<f64>,
}

impl PiecewiseShift {
    /// Builds a shift from `n + 1` strictly increasing knots and `n` values.
    pub fn new(knots: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if values.is_empty() || knots.len() != values.len() + 1 {
            return Err(Error::InvalidParameter(alloc::format!(
                "piecewise shift needs n + 1 knots for n >= 1 values (got {} knots, {} values)",
                knots.len(),
                values.len()
            )));
        }
        if knots.iter().chain(values.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("non-finite knot or value".into()));
        }
        if knots.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidParameter("knots must be strictly increasing".into()));
        }
        Ok(PiecewiseShift { knots, values })
    }

    /// The constant function `v`.
    pub fn constant(v: f64) -> Self {
        PiecewiseShift {
            knots: vec![0.0, 1.0],
            values: vec![v],
        }
    }

    /// Knot times.
    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    /// Interval values.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Mutable interval values.
    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    /// Whether every interval carries the same value.
    pub fn is_constant(&self) -> bool {
        self.values.iter().all(|&v| v == self.values[0])
    }

    /// Value at `t`; a knot belongs to the interval on its right.
    pub fn value(&self, t: f64) -> f64 {
        // number of interior knots <= t
        let inner = &self.knots[1..self.knots.len() - 1];
        let k = inner.partition_point(|&x| x <= t);
        self.values[k]
    }

    /// `∫ₛᵗ shift(u) du`, summed exactly interval by interval.
    pub fn integral(&self, s: f64, t: f64) -> f64 {
        if t < s {
            return -self.integral(t, s);
        }
        let n = self.values.len();
        let mut acc = 0.0;
        for k in 0..n {
            let lo = if k == 0 { f64::NEG_INFINITY } else { self.knots[k] };
            let hi = if k + 1 == n { f64::INFINITY } else { self.knots[k + 1] };
            let a = s.max(lo);
            let b = t.min(hi);
            if b > a {
                acc += (b - a) * self.values[k];
            }
        }
        acc
    }

    /// `wa·self + wb·other` on the union of both knot grids.
    pub fn combine(&self, wa: f64, other: &PiecewiseShift, wb: f64) -> PiecewiseShift {
        let mut grid: Vec<f64> = self.knots.iter().chain(other.knots.iter()).copied().collect();
        grid.sort_by(|x, y| x.total_cmp(y));
        grid.dedup();
        let values = grid[..grid.len() - 1]
            .iter()
            .map(|&t| wa * self.value(t) + wb * other.value(t))
            .collect();
        PiecewiseShift {
            knots: grid,
            values,
        }
    }

    /// Adds `c` to every interval.
    pub fn shifted(&self, c: f64) -> PiecewiseShift {
        PiecewiseShift {
            knots: self.knots.clone(),
            values: self.values.iter().map(|v| v + c).collect(),
        }
    }
}

/// A deterministic shift plus a loading on the factor state.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SpreadProjection {
    /// Deterministic part `·₀(t)`.
    pub shift: PiecewiseShift,
    /// Loading vector on `X`.
    pub loading: Vec<f64>,
}

impl SpreadProjection {
    /// Builds a projection.
    pub fn new(shift: PiecewiseShift, loading: Vec<f64>) -> Self {
        SpreadProjection { shift, loading }
    }

    /// The zero projection on `d` factors.
    pub fn zero(d: usize) -> Self {
        SpreadProjection {
            shift: PiecewiseShift::constant(0.0),
            loading: vec![0.0; d],
        }
    }

    /// Constant shift `c` with the given loading.
    pub fn constant(c: f64, loading: Vec<f64>) -> Self {
        SpreadProjection {
            shift: PiecewiseShift::constant(c),
            loading,
        }
    }

    /// `shift(t) + ⟨loading, x⟩`.
    pub fn rate(&self, t: f64, x: &[f64]) -> f64 {
        self.shift.value(t) + self.loading.iter().zip(x).map(|(l, xi)| l * xi).sum::<f64>()
    }
}

/// Default loss fraction in default.
pub const DEFAULT_Q: f64 = 0.6;
/// Default systemic intensity (5 bp).
pub const DEFAULT_BIG_LAMBDA: f64 = 0.0005;

/// Complete model state.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ModelSpec {
    /// Factor dynamics.
    pub factors: FactorSet,
    /// `(a₀, a)` for the collateral rate.
    pub rc: SpreadProjection,
    /// `(b₀, b)` for the panel default intensity.
    pub lambda: SpreadProjection,
    /// `(c₀, c)` for the funding-liquidity spread.
    pub phi: SpreadProjection,
    /// Loss fraction in default.
    pub q: f64,
    /// Systemic intensity `Λ`.
    pub big_lambda: f64,
    /// Valuation date.
    pub valuation_date: Date,
}

/// Which running integral a transform is built on.
#[derive(Clone, Copy)]
enum Rate {
    /// `−r_c`
    Ois,
    /// `+φ`
    Funding,
    /// `−(r_c + qλ)`
    Risky,
    /// `−(r_c + qλ + φ)`
    Total,
}

impl ModelSpec {
    /// Builds and validates a model.
    pub fn new(
        factors: FactorSet,
        rc: SpreadProjection,
        lambda: SpreadProjection,
        phi: SpreadProjection,
        q: f64,
        big_lambda: f64,
        valuation_date: Date,
    ) -> Result<Self> {
        let m = ModelSpec {
            factors,
            rc,
            lambda,
            phi,
            q,
            big_lambda,
            valuation_date,
        };
        m.validate()?;
        Ok(m)
    }

    /// A model with zero spreads and the given collateral projection.
    pub fn ois_only(factors: FactorSet, rc: SpreadProjection, valuation_date: Date) -> Result<Self> {
        let d = factors.len();
        ModelSpec::new(
            factors,
            rc,
            SpreadProjection::zero(d),
            SpreadProjection::zero(d),
            DEFAULT_Q,
            DEFAULT_BIG_LAMBDA,
            valuation_date,
        )
    }

    /// Checks loading lengths, `0 < q ≤ 1` and `Λ ≥ 0`.
    pub fn validate(&self) -> Result<()> {
        for p in [&self.rc, &self.lambda, &self.phi] {
            self.factors.check_len(p.loading.len())?;
            if p.loading.iter().any(|l| !l.is_finite()) {
                return Err(Error::InvalidParameter("non-finite loading".into()));
            }
        }
        for f in self.factors.factors() {
            f.validate()?;
        }
        if !(self.q > 0.0 && self.q <= 1.0) {
            return Err(Error::InvalidParameter(alloc::format!("q must lie in (0, 1], got {}", self.q)));
        }
        if !(self.big_lambda >= 0.0) {
            return Err(Error::InvalidParameter(alloc::format!(
                "Lambda must be nonnegative, got {}",
                self.big_lambda
            )));
        }
        Ok(())
    }

    /// Number of factors.
    pub fn dim(&self) -> usize {
        self.factors.len()
    }

    /// Credit-adjusted loading `d = a + q·b`.
    pub fn combined_loading(&self) -> Vec<f64> {
        self.rc
            .loading
            .iter()
            .zip(&self.lambda.loading)
            .map(|(a, b)| a + self.q * b)
            .collect()
    }

    /// Credit-adjusted shift `a₀ + q·b₀`.
    pub fn combined_shift(&self) -> PiecewiseShift {
        self.rc.shift.combine(1.0, &self.lambda.shift, self.q)
    }

    fn gamma(&self, rate: Rate, i: usize) -> f64 {
        let a = self.rc.loading[i];
        let b = self.lambda.loading[i];
        let c = self.phi.loading[i];
        match rate {
            Rate::Ois => -a,
            Rate::Funding => c,
            Rate::Risky => -(a + self.q * b),
            Rate::Total => -(a + self.q * b + c),
        }
    }

    fn shift_integral(&self, rate: Rate, t: f64, tt: f64) -> f64 {
        let a0 = self.rc.shift.integral(t, tt);
        let b0 = || self.lambda.shift.integral(t, tt);
        let c0 = || self.phi.shift.integral(t, tt);
        match rate {
            Rate::Ois => -a0,
            Rate::Funding => c0(),
            Rate::Risky => -(a0 + self.q * b0()),
            Rate::Total => -(a0 + self.q * b0() + c0()),
        }
    }

    fn check_state(&self, x: Option<&[f64]>) -> Result<()> {
        if let Some(x) = x {
            self.factors.check_len(x.len())?;
        }
        Ok(())
    }

    fn state(&self, x: Option<&[f64]>, i: usize) -> f64 {
        x.map_or(self.factors.factors()[i].y0, |x| x[i])
    }

    fn check_order(t: f64, tt: f64) -> Result<()> {
        if !(tt >= t) || !t.is_finite() || !tt.is_finite() {
            return Err(Error::Domain(alloc::format!("need t <= T, got t = {t}, T = {tt}")));
        }
        Ok(())
    }

    fn simple(&self, rate: Rate, t: f64, tt: f64, x: Option<&[f64]>) -> Result<f64> {
        Self::check_order(t, tt)?;
        self.check_state(x)?;
        if tt == t {
            return Ok(1.0);
        }
        let mut e = self.shift_integral(rate, t, tt);
        for (i, f) in self.factors.factors().iter().enumerate() {
            let (phi, psi) = factor_transform(f, tt - t, 0.0, self.gamma(rate, i))?;
            e += phi + psi * self.state(x, i);
        }
        Ok(math::exp(e))
    }

    /// `D^OIS(t, T)` at the spot state.
    pub fn ois_discount(&self, t: f64, tt: f64) -> Result<f64> {
        self.simple(Rate::Ois, t, tt, None)
    }

    /// `D^OIS(t, T)` at state `x`.
    pub fn ois_discount_at(&self, t: f64, tt: f64, x: &[f64]) -> Result<f64> {
        self.simple(Rate::Ois, t, tt, Some(x))
    }

    /// `E_t[exp(∫ₜᵀ φ)]` at the spot state.
    pub fn funding_growth(&self, t: f64, tt: f64) -> Result<f64> {
        self.simple(Rate::Funding, t, tt, None)
    }

    /// `E_t[exp(∫ₜᵀ φ)]` at state `x`.
    pub fn funding_growth_at(&self, t: f64, tt: f64, x: &[f64]) -> Result<f64> {
        self.simple(Rate::Funding, t, tt, Some(x))
    }

    /// `E_t[exp(−∫ₜᵀ (r_c + qλ))]` at the spot state.
    pub fn risky_discount(&self, t: f64, tt: f64) -> Result<f64> {
        self.simple(Rate::Risky, t, tt, None)
    }

    /// `E_t[exp(−∫ₜᵀ (r_c + qλ))]` at state `x`.
    pub fn risky_discount_at(&self, t: f64, tt: f64, x: &[f64]) -> Result<f64> {
        self.simple(Rate::Risky, t, tt, Some(x))
    }

    /// `E_t[exp(−∫ₜᵀ (r_c + qλ + φ))]` at the spot state.
    ///
    /// Equals `1/(1 + δL)` only when `φ` is deterministic and independent of
    /// `r_c + qλ`; otherwise it is an upper bound for it under disjoint factor
    /// support.
    pub fn total_discount(&self, t: f64, tt: f64) -> Result<f64> {
        self.simple(Rate::Total, t, tt, None)
    }

    /// Simple-compounded `L(t, T)` at the spot state.
    pub fn spot_libor(&self, t: f64, tt: f64) -> Result<f64> {
        self.libor_impl(t, tt, None)
    }

    /// Simple-compounded `L(t, T)` at state `x`.
    pub fn spot_libor_at(&self, t: f64, tt: f64, x: &[f64]) -> Result<f64> {
        self.libor_impl(t, tt, Some(x))
    }

    fn libor_impl(&self, t: f64, tt: f64, x: Option<&[f64]>) -> Result<f64> {
        let delta = tt - t;
        if !(delta > 0.0) {
            return Err(Error::Domain(alloc::format!("LIBOR needs T > t, got t = {t}, T = {tt}")));
        }
        let g = self.simple(Rate::Funding, t, tt, x)?;
        let r = self.simple(Rate::Risky, t, tt, x)?;
        Ok((g / r - 1.0) / delta)
    }

    /// `E_t[e^{−∫_t^{T_prev}(r_c + qλ)} e^{∫_{T_prev}^{T_next} φ}]` at the spot state.
    pub fn rollover_forward_term(&self, t: f64, t_prev: f64, t_next: f64) -> Result<f64> {
        self.forward_term_impl(t, t_prev, t_next, None)
    }

    /// [`ModelSpec::rollover_forward_term`] at state `x`.
    pub fn rollover_forward_term_at(&self, t: f64, t_prev: f64, t_next: f64, x: &[f64]) -> Result<f64> {
        self.forward_term_impl(t, t_prev, t_next, Some(x))
    }

    fn forward_term_impl(&self, t: f64, t_prev: f64, t_next: f64, x: Option<&[f64]>) -> Result<f64> {
        Self::check_order(t, t_prev)?;
        Self::check_order(t_prev, t_next)?;
        self.check_state(x)?;
        let mut e = self.shift_integral(Rate::Risky, t, t_prev) + self.shift_integral(Rate::Funding, t_prev, t_next);
        for (i, f) in self.factors.factors().iter().enumerate() {
            let (phi_in, psi_in) = factor_transform(f, t_next - t_prev, 0.0, self.gamma(Rate::Funding, i))?;
            let (phi_out, psi_out) = factor_transform(f, t_prev - t, psi_in, self.gamma(Rate::Risky, i))?;
            e += phi_in + phi_out + psi_out * self.state(x, i);
        }
        Ok(math::exp(e))
    }

    /// Exponent pieces of the floating-leg expectation for one accrual period.
    ///
    /// Returns `(D^OIS(t, T_next), B)` such that
    /// `E_t[e^{−∫_t^{T_next} r_c} δ L(T_prev, T_next)] = B·exp(∫_{T_prev}^{T_next} (c₀ + qb₀)) − D^OIS(t, T_next)`.
    pub fn libor_leg_parts(&self, t: f64, t_prev: f64, t_next: f64) -> Result<(f64, f64)> {
        self.leg_parts_impl(t, t_prev, t_next, None)
    }

    fn leg_parts_impl(&self, t: f64, t_prev: f64, t_next: f64, x: Option<&[f64]>) -> Result<(f64, f64)> {
        Self::check_order(t, t_prev)?;
        if !(t_next > t_prev) {
            return Err(Error::Domain(alloc::format!(
                "accrual period needs T_next > T_prev, got [{t_prev}, {t_next}]"
            )));
        }
        self.check_state(x)?;
        let delta = t_next - t_prev;
        let d_next = self.simple(Rate::Ois, t, t_next, x)?;
        let mut e = -self.rc.shift.integral(t, t_prev);
        for (i, f) in self.factors.factors().iter().enumerate() {
            let (p1, s1) = factor_transform(f, delta, 0.0, self.gamma(Rate::Ois, i))?;
            let (p2, s2) = factor_transform(f, delta, 0.0, self.gamma(Rate::Funding, i))?;
            let (p3, s3) = factor_transform(f, delta, 0.0, self.gamma(Rate::Risky, i))?;
            let u = s1 + s2 - s3;
            let (po, so) = factor_transform(f, t_prev - t, u, self.gamma(Rate::Ois, i))?;
            e += p1 + p2 - p3 + po + so * self.state(x, i);
        }
        Ok((d_next, math::exp(e)))
    }

    /// [`ModelSpec::libor_leg_parts`] at `t = 0` for every period of a regular
    /// schedule, sharing the period-length transforms across periods.
    pub fn leg_parts_schedule(&self, leg: &TenorStructure) -> Result<Vec<(f64, f64)>> {
        let b = self.leg_growth_schedule(leg)?;
        leg.payment_dates()
            .iter()
            .zip(b)
            .map(|(&tn, b)| Ok((self.simple(Rate::Ois, 0.0, tn, None)?, b)))
            .collect()
    }

    /// The `B` parts of [`ModelSpec::leg_parts_schedule`].
    pub fn leg_growth_schedule(&self, leg: &TenorStructure) -> Result<Vec<f64>> {
        if leg.start() < 0.0 {
            return Err(Error::Domain("leg must start at or after the valuation date".into()));
        }
        let delta = leg.delta();
        let d = self.dim();
        let mut inner_phi = 0.0;
        let mut inner_u = Vec::with_capacity(d);
        for (i, f) in self.factors.factors().iter().enumerate() {
            let (p1, s1) = factor_transform(f, delta, 0.0, self.gamma(Rate::Ois, i))?;
            let (p2, s2) = factor_transform(f, delta, 0.0, self.gamma(Rate::Funding, i))?;
            let (p3, s3) = factor_transform(f, delta, 0.0, self.gamma(Rate::Risky, i))?;
            inner_phi += p1 + p2 - p3;
            inner_u.push(s1 + s2 - s3);
        }
        let mut out = Vec::with_capacity(leg.payment_dates().len());
        for (tp, _) in leg.periods() {
            let mut e = inner_phi - self.rc.shift.integral(0.0, tp);
            for (i, f) in self.factors.factors().iter().enumerate() {
                let (po, so) = factor_transform(f, tp, inner_u[i], self.gamma(Rate::Ois, i))?;
                e += po + so * f.y0;
            }
            out.push(math::exp(e));
        }
        Ok(out)
    }

    /// `E_t[e^{−∫_t^{T_next} r_c} δ L(T_prev, T_next)]` at the spot state.
    pub fn libor_leg_pv(&self, t: f64, t_prev: f64, t_next: f64) -> Result<f64> {
        self.libor_leg_pv_impl(t, t_prev, t_next, None)
    }

    /// [`ModelSpec::libor_leg_pv`] at state `x`.
    pub fn libor_leg_pv_at(&self, t: f64, t_prev: f64, t_next: f64, x: &[f64]) -> Result<f64> {
        self.libor_leg_pv_impl(t, t_prev, t_next, Some(x))
    }

    fn libor_leg_pv_impl(&self, t: f64, t_prev: f64, t_next: f64, x: Option<&[f64]>) -> Result<f64> {
        let (d_next, b) = self.leg_parts_impl(t, t_prev, t_next, x)?;
        let spread = self.phi.shift.integral(t_prev, t_next) + self.q * self.lambda.shift.integral(t_prev, t_next);
        Ok(b * math::exp(spread) - d_next)
    }

    /// Residual of the one-period no-arbitrage identity
    /// `1 + RD·(1 + δL) − D^OIS·(1 + δ·OIS) − FG`, which vanishes by construction.
    pub fn noarb_residual(&self, t: f64, tt: f64) -> Result<f64> {
        let delta = tt - t;
        let l = self.spot_libor(t, tt)?;
        let d = self.ois_discount(t, tt)?;
        let ois = (1.0 - d) / (delta * d);
        let rd = self.risky_discount(t, tt)?;
        let fg = self.funding_growth(t, tt)?;
        Ok(1.0 + rd * (1.0 + delta * l) - d * (1.0 + delta * ois) - fg)
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::affine::CirFactor;

    pub(crate) fn date() -> Date {
        Date::new(2013, 1, 1).unwrap()
    }

    pub(crate) fn close(a: f64, b: f64, rel: f64) -> bool {
        math::abs(a - b) <= rel * math::abs(a).max(math::abs(b)) + 1e-15
    }

    /// One factor with zero loadings everywhere.
    pub(crate) fn deterministic(a0: f64, b0: f64, c0: f64) -> ModelSpec {
        let fs = FactorSet::new(vec![CirFactor::new(0.5, 0.05, 0.1, 0.04).unwrap()]).unwrap();
        ModelSpec::new(
            fs,
            SpreadProjection::constant(a0, vec![0.0]),
            SpreadProjection::constant(b0, vec![0.0]),
            SpreadProjection::constant(c0, vec![0.0]),
            DEFAULT_Q,
            DEFAULT_BIG_LAMBDA,
            date(),
        )
        .unwrap()
    }

    /// Three factors, each projection loading on all of them.
    pub(crate) fn rich() -> ModelSpec {
        let fs = FactorSet::new(vec![
            CirFactor::new(0.455794, 0.134384, 0.052677, 0.02).unwrap(),
            CirFactor::new(0.9, 0.03, 0.15, 0.01).unwrap(),
            CirFactor::new(0.3, 0.08, 0.2, 0.05).unwrap(),
        ])
        .unwrap();
        let a0 = PiecewiseShift::new(vec![0.0, 1.0, 3.0, 10.0], vec![0.001, 0.002, 0.0035]).unwrap();
        ModelSpec::new(
            fs,
            SpreadProjection::new(a0, vec![0.02, 0.0, 0.01]),
            SpreadProjection::constant(0.0008, vec![0.004, 0.01, 0.0]),
            SpreadProjection::constant(0.0004, vec![0.003, 0.002, 0.006]),
            0.6,
            0.0005,
            date(),
        )
        .unwrap()
    }

    #[test]
    fn leg_schedule_matches_per_period_parts() {
        let m = rich();
        for months in [1, 3, 6] {
            let leg = TenorStructure::regular(0.0, 4.0, months).unwrap();
            let sched = m.leg_parts_schedule(&leg).unwrap();
            for ((tp, tn), (d, b)) in leg.periods().zip(sched) {
                let (d1, b1) = m.libor_leg_parts(0.0, tp, tn).unwrap();
                assert!(close(d, d1, 1e-14) && close(b, b1, 1e-13), "{months}m [{tp}, {tn}]");
            }
        }
    }

    #[test]
    fn piecewise_shift_is_left_closed_and_flat() {
        let s = PiecewiseShift::new(vec![0.0, 1.0, 2.0], vec![0.1, 0.2]).unwrap();
        assert_eq!(s.value(-1.0), 0.1);
        assert_eq!(s.value(0.0), 0.1);
        assert_eq!(s.value(1.0), 0.2);
        assert_eq!(s.value(5.0), 0.2);
        assert!(close(s.integral(0.5, 1.5), 0.05 + 0.1, 1e-15));
        assert!(close(s.integral(-1.0, 3.0), 0.2 + 0.4, 1e-15));
        assert_eq!(s.integral(1.5, 0.5), -s.integral(0.5, 1.5));
        assert!(PiecewiseShift::new(vec![0.0, 0.0], vec![1.0]).is_err());
    }

    #[test]
    fn combine_on_union_grid() {
        let a = PiecewiseShift::new(vec![0.0, 1.0, 2.0], vec![1.0, 2.0]).unwrap();
        let b = PiecewiseShift::new(vec![0.0, 0.5, 2.0], vec![10.0, 20.0]).unwrap();
        let c = a.combine(1.0, &b, 0.5);
        assert_eq!(c.knots(), &[0.0, 0.5, 1.0, 2.0]);
        assert_eq!(c.values(), &[6.0, 11.0, 12.0]);
    }

    #[test]
    fn discount_trivia() {
        let m = deterministic(0.01, 0.0, 0.0);
        assert_eq!(m.ois_discount(3.0, 3.0).unwrap(), 1.0);
        assert!(close(m.ois_discount(1.0, 3.0).unwrap(), math::exp(-0.02), 1e-15));
        assert!(matches!(m.ois_discount(3.0, 1.0), Err(Error::Domain(_))));
        let g = deterministic(0.0, 0.0, 0.001);
        assert!(close(g.funding_growth(0.0, 1.0).unwrap(), math::exp(0.001), 1e-15));
        let z = deterministic(0.0, 0.0, 0.0);
        assert_eq!(z.funding_growth(0.0, 4.0).unwrap(), 1.0);
    }

    #[test]
    fn risky_discount_collapses_without_credit() {
        let mut m = rich();
        m.lambda = SpreadProjection::zero(3);
        for tt in [0.5, 2.0, 7.0] {
            assert!(close(m.risky_discount(0.0, tt).unwrap(), m.ois_discount(0.0, tt).unwrap(), 1e-14));
        }
    }

    #[test]
    fn libor_without_rollover_risk_is_ois_rate() {
        let mut m = rich();
        m.lambda = SpreadProjection::zero(3);
        m.phi = SpreadProjection::zero(3);
        let d = m.ois_discount(1.0, 1.25).unwrap();
        assert!(close(m.spot_libor(1.0, 1.25).unwrap(), (1.0 / d - 1.0) / 0.25, 1e-12));
    }

    #[test]
    fn deterministic_libor() {
        let (s, a0, b0) = (0.003, 0.01, 0.002);
        let m = deterministic(a0, b0, s);
        let rbar = a0 + m.q * b0;
        let l = m.spot_libor(0.0, 0.25).unwrap();
        assert!(close(l, (math::exp((s + rbar) * 0.25) - 1.0) / 0.25, 1e-12));
        let pv = m.libor_leg_pv(0.0, 0.5, 0.75).unwrap();
        assert!(close(pv, 0.25 * l * math::exp(-a0 * 0.75), 1e-12));
    }

    #[test]
    fn zero_risk_leg_is_textbook() {
        let mut m = rich();
        m.lambda = SpreadProjection::zero(3);
        m.phi = SpreadProjection::zero(3);
        let pv = m.libor_leg_pv(0.0, 1.5, 2.0).unwrap();
        let want = m.ois_discount(0.0, 1.5).unwrap() - m.ois_discount(0.0, 2.0).unwrap();
        assert!(close(pv, want, 1e-12), "{pv} vs {want}");
    }

    #[test]
    fn forward_term_edge_cases() {
        let m = rich();
        let a = m.rollover_forward_term(0.0, 0.0, 0.75).unwrap();
        assert!(close(a, m.funding_growth(0.0, 0.75).unwrap(), 1e-14));
        let b = m.rollover_forward_term(0.0, 0.75, 0.75).unwrap();
        assert!(close(b, m.risky_discount(0.0, 0.75).unwrap(), 1e-14));
    }

    #[test]
    fn noarb_identity_holds() {
        let m = rich();
        for (t, tt) in [(0.0, 0.25), (0.5, 1.0), (2.0, 3.0)] {
            assert!(math::abs(m.noarb_residual(t, tt).unwrap()) <= 1e-12);
        }
    }

    #[test]
    fn dlibora_exact_for_deterministic_funding_spread() {
        // r_c + qλ on factor 0, φ deterministic
        let fs = FactorSet::new(vec![
            CirFactor::new(0.4, 0.1, 0.2, 0.05).unwrap(),
            CirFactor::new(0.9, 0.03, 0.15, 0.01).unwrap(),
        ])
        .unwrap();
        let mut m = ModelSpec::new(
            fs,
            SpreadProjection::constant(0.002, vec![0.05, 0.0]),
            SpreadProjection::constant(0.001, vec![0.01, 0.0]),
            SpreadProjection::constant(0.0015, vec![0.0, 0.0]),
            0.6,
            0.0005,
            date(),
        )
        .unwrap();
        let delta = 0.5;
        let l = m.spot_libor(0.0, delta).unwrap();
        let lhs = 1.0 / (1.0 + delta * l);
        assert!(close(lhs, m.total_discount(0.0, delta).unwrap(), 1e-12));
        // stochastic φ on the disjoint factor: Jensen gap in one direction
        m.phi.loading = vec![0.0, 0.2];
        let l = m.spot_libor(0.0, delta).unwrap();
        assert!(1.0 / (1.0 + delta * l) <= m.total_discount(0.0, delta).unwrap());
    }
}
