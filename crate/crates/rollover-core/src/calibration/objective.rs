//! Objectives, parameter boxes and batch evaluation.

use alloc::vec::Vec;

use crate::math;
use crate::{Error, Result};

/// Objective function over a parameter vector.
pub type ObjectiveFn<'a> = dyn Fn(&[f64]) -> f64 + Sync + 'a;

/// Evaluates a batch of candidates; implementations may run them concurrently.
///
/// Every evaluation must be independent, so the output is the same for any
/// implementation.
pub trait Executor: Sync {
    /// `f` applied to each candidate, in order.
    fn map(&self, xs: &[Vec<f64>], f: &ObjectiveFn<'_>) -> Vec<f64>;
}

/// Evaluates candidates one after another.
#[derive(Debug, Clone, Copy, Default)]
pub struct Sequential;

impl Executor for Sequential {
    fn map(&self, xs: &[Vec<f64>], f: &ObjectiveFn<'_>) -> Vec<f64> {
        xs.iter().map(|x| f(x)).collect()
    }
}

/// Box constraints `lo ≤ x ≤ hi`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Bounds {
    /// Lower bounds.
    pub lo: Vec<f64>,
    /// Upper bounds.
    pub hi: Vec<f64>,
}

impl Bounds {
    /// Builds a box, requiring `lo < hi` componentwise.
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.len() != hi.len() {
            return Err(Error::Dimension {
                expected: lo.len(),
                got: hi.len(),
            });
        }
        if lo.is_empty() || lo.iter().zip(&hi).any(|(l, h)| !(l < h) || !l.is_finite() || !h.is_finite()) {
            return Err(Error::InvalidParameter("bounds need finite lo < hi in every component".into()));
        }
        Ok(Bounds { lo, hi })
    }

    /// The same interval in every one of `dim` components.
    pub fn uniform(dim: usize, lo: f64, hi: f64) -> Result<Self> {
        Bounds::new(alloc::vec![lo; dim], alloc::vec![hi; dim])
    }

    /// Number of components.
    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    /// Clamps `x` into the box.
    pub fn clamp(&self, x: &mut [f64]) {
        for ((xi, l), h) in x.iter_mut().zip(&self.lo).zip(&self.hi) {
            *xi = xi.clamp(*l, *h);
        }
    }

    /// Whether `x` lies in the box.
    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter().zip(&self.lo).zip(&self.hi).all(|((v, l), h)| *l <= *v && *v <= *h)
    }
}

/// Weight of the Feller penalty `max(0, σ² − 2κθ)²`.
pub const FELLER_WEIGHT: f64 = 1e6;

/// Calibration loss.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum ObjectiveMode {
    /// Squared relative distance to the bid/ask band.
    #[default]
    BidAskHinge,
    /// Squared relative distance to the mid.
    RelativeLeastSquares,
}

/// Signed relative distance of `p` to `[bid, ask]`: positive above the ask,
/// negative below the bid, zero inside.
pub fn band_residual(p: f64, bid: f64, ask: f64) -> f64 {
    if p > ask {
        (p - ask) / band_scale(ask)
    } else if p < bid {
        (p - bid) / band_scale(bid)
    } else {
        0.0
    }
}

fn band_scale(v: f64) -> f64 {
    let a = math::abs(v);
    if a > 0.0 {
        a
    } else {
        1.0
    }
}

/// Residual under the chosen mode.
pub fn residual(mode: ObjectiveMode, p: f64, bid: f64, ask: f64) -> f64 {
    match mode {
        ObjectiveMode::BidAskHinge => band_residual(p, bid, ask),
        ObjectiveMode::RelativeLeastSquares => {
            let mid = 0.5 * (bid + ask);
            (p - mid) / band_scale(mid)
        }
    }
}

/// `Σᵢ (max{(Pᵢ − askᵢ)/askᵢ, 0} + max{(bidᵢ − Pᵢ)/bidᵢ, 0})²` over
/// `(P, bid, ask)` triples; a failed price makes the objective `+∞`.
pub fn bidask_objective<I>(items: I) -> f64
where
    I: IntoIterator<Item = Result<(f64, f64, f64)>>,
{
    let mut acc = 0.0;
    for it in items {
        match it {
            Ok((p, bid, ask)) if p.is_finite() => {
                let r = band_residual(p, bid, ask);
                acc += r * r;
            }
            _ => return f64::INFINITY,
        }
    }
    acc
}
