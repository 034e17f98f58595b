//! Instruments priced off a [`ModelSpec`](crate::curve::ModelSpec).
//!
//! All prices are spot values at the valuation date (`t = 0`) unless a
//! function takes an explicit `t`.

use alloc::vec::Vec;

use crate::math;
use crate::{Error, Result};

pub mod caplet;
pub mod cds;
pub mod swaps;

pub use caplet::{caplet_char_fn, caplet_price, caplet_price_with, FourierConfig};
pub use cds::{
    cds_legs, cds_par_curve, cds_par_spread, cds_value, survival_discount, zero_recovery_bond, AccrualRule, BankCredit, CdsLegs,
    CdsSpec,
};
pub use swaps::{
    basis_swap_residual, float_leg_pv, implied_term_libor, ois_annuity, ois_discount_from_rate, ois_par_rate,
    ois_par_rate_multi, par_basis_spread, par_swap_rate, vanilla_swap_residual, BasisSide,
};

/// Equally spaced payment schedule `start + k·δ`, `k = 1..=n`, with `δ` a
/// whole number of months.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TenorStructure {
    start: f64,
    tenor_months: u32,
    payment_dates: Vec<f64>,
}

impl TenorStructure {
    /// `n` periods of `tenor_months` months from `start`.
    pub fn new(start: f64, tenor_months: u32, n: usize) -> Result<Self> {
        if tenor_months == 0 || n == 0 || !start.is_finite() {
            return Err(Error::Domain(alloc::format!(
                "tenor structure needs a positive tenor and period count (tenor {tenor_months}m, n = {n})"
            )));
        }
        let payment_dates = (1..=n)
            .map(|k| start + (k as f64 * tenor_months as f64) / 12.0)
            .collect();
        Ok(TenorStructure {
            start,
            tenor_months,
            payment_dates,
        })
    }

    /// Schedule from `start` to `maturity`; the span must be a whole number of periods.
    pub fn regular(start: f64, maturity: f64, tenor_months: u32) -> Result<Self> {
        if tenor_months == 0 {
            return Err(Error::Domain("tenor must be at least one month".into()));
        }
        let periods = (maturity - start) * 12.0 / tenor_months as f64;
        let n = math::round(periods);
        if !(n >= 1.0) || math::abs(periods - n) > 1e-9 {
            return Err(Error::Domain(alloc::format!(
                "span [{start}, {maturity}] is not a whole number of {tenor_months}m periods"
            )));
        }
        TenorStructure::new(start, tenor_months, n as usize)
    }

    /// Start of the first accrual period.
    pub fn start(&self) -> f64 {
        self.start
    }

    /// Final payment date.
    pub fn maturity(&self) -> f64 {
        self.payment_dates[self.payment_dates.len() - 1]
    }

    /// Payment dates.
    pub fn payment_dates(&self) -> &[f64] {
        &self.payment_dates
    }

    /// Tenor in months.
    pub fn tenor_months(&self) -> u32 {
        self.tenor_months
    }

    /// Accrual fraction `δ`.
    pub fn delta(&self) -> f64 {
        self.tenor_months as f64 / 12.0
    }

    /// Frequency label such as `"3m"`.
    pub fn label(&self) -> alloc::string::String {
        alloc::format!("{}m", self.tenor_months)
    }

    /// Accrual periods `(T_{j−1}, T_j)`.
    pub fn periods(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        core::iter::once(self.start)
            .chain(self.payment_dates.iter().copied())
            .zip(self.payment_dates.iter().copied())
    }
}
