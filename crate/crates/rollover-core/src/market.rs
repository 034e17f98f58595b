//! Quotes, unit normalization and calibration instrument construction.
//!
//! Swap-type quotes are turned into "market side" bands for the three
//! tenor conditions of each maturity. With `s` the benchmark IRS rate
//! (3m float vs 6m fixed), `b` a basis spread and `Aₖ` the OIS annuity of the
//! `k`-month schedule:
//!
//! ```text
//! 3m leg:  [s_bid·A₆,             s_ask·A₆]
//! 1m leg:  [s_bid·A₆ − b_ask·A₁,  s_ask·A₆ − b_bid·A₁]
//! 6m leg:  [s_bid·A₆ + b_bid·A₃,  s_ask·A₆ + b_ask·A₃]
//! ```

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::curve::ModelSpec;
use crate::date::Date;
use crate::instruments::{float_leg_pv, ois_annuity, TenorStructure};
use crate::math;
use crate::{Error, Result};

/// Instrument type of a quote.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum QuoteKind {
    /// Overnight index swap rate.
    #[cfg_attr(feature = "serde", serde(rename = "OIS"))]
    Ois,
    /// Benchmark swap rate, 3m float vs 6m fixed.
    #[cfg_attr(feature = "serde", serde(rename = "IRS"))]
    Irs,
    /// 1m vs 3m basis spread.
    #[cfg_attr(feature = "serde", serde(rename = "BASIS_1m3m"))]
    Basis1m3m,
    /// 3m vs 6m basis spread.
    #[cfg_attr(feature = "serde", serde(rename = "BASIS_3m6m"))]
    Basis3m6m,
    /// Single-name CDS par spread.
    #[cfg_attr(feature = "serde", serde(rename = "CDS"))]
    Cds,
}

impl QuoteKind {
    /// Label used in files.
    pub fn as_str(&self) -> &'static str {
        match self {
            QuoteKind::Ois => "OIS",
            QuoteKind::Irs => "IRS",
            QuoteKind::Basis1m3m => "BASIS_1m3m",
            QuoteKind::Basis3m6m => "BASIS_3m6m",
            QuoteKind::Cds => "CDS",
        }
    }
}

impl fmt::Display for QuoteKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for QuoteKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "OIS" => Ok(QuoteKind::Ois),
            "IRS" => Ok(QuoteKind::Irs),
            "BASIS_1m3m" => Ok(QuoteKind::Basis1m3m),
            "BASIS_3m6m" => Ok(QuoteKind::Basis3m6m),
            "CDS" => Ok(QuoteKind::Cds),
            other => Err(Error::Domain(alloc::format!("unknown instrument kind {other:?}"))),
        }
    }
}

/// Unit a quote is expressed in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Unit {
    /// Percent (`×1e-2`).
    Percent,
    /// Basis points (`×1e-4`).
    BasisPoints,
    /// Plain decimal.
    Decimal,
}

impl Unit {
    fn places(self) -> i32 {
        match self {
            Unit::Percent => 2,
            Unit::BasisPoints => 4,
            Unit::Decimal => 0,
        }
    }
}

impl FromStr for Unit {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "%" | "pct" => Ok(Unit::Percent),
            "bp" => Ok(Unit::BasisPoints),
            "dec" => Ok(Unit::Decimal),
            other => Err(Error::Domain(alloc::format!("unknown unit {other:?}"))),
        }
    }
}

/// Parses a decimal literal and divides it by `10^places` by moving the
/// decimal point, so the result is the nearest double to the scaled value.
pub fn parse_scaled(s: &str, places: i32) -> Result<f64> {
    let bad = || Error::Domain(alloc::format!("not a decimal number: {s:?}"));
    let s = s.trim();
    if s.is_empty() {
        return Err(bad());
    }
    if s.contains(['e', 'E']) || places == 0 {
        let v: f64 = s.parse().map_err(|_| bad())?;
        return if places == 0 {
            Ok(v)
        } else {
            Ok(v / libm::pow(10.0, places as f64))
        };
    }
    let (sign, body) = match s.as_bytes()[0] {
        b'-' => ("-", &s[1..]),
        b'+' => ("", &s[1..]),
        _ => ("", s),
    };
    let (int, frac) = body.split_once('.').unwrap_or((body, ""));
    if int.is_empty() && frac.is_empty() || !int.bytes().chain(frac.bytes()).all(|b| b.is_ascii_digit()) {
        return Err(bad());
    }
    let mut digits = String::with_capacity(int.len() + frac.len());
    digits.push_str(int);
    digits.push_str(frac);
    let point = int.len() as i32 - places;
    let scaled = if point <= 0 {
        let mut z = String::from("0.");
        for _ in 0..(-point) {
            z.push('0');
        }
        z.push_str(&digits);
        z
    } else {
        let p = point as usize;
        alloc::format!("{}.{}", &digits[..p], &digits[p..])
    };
    let v: f64 = alloc::format!("{sign}{scaled}").parse().map_err(|_| bad())?;
    Ok(v)
}

/// One normalized bid/ask quote.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Quote {
    /// Instrument type.
    pub kind: QuoteKind,
    /// Maturity in years.
    pub maturity: f64,
    /// Bid as a decimal rate.
    pub bid: f64,
    /// Ask as a decimal rate.
    pub ask: f64,
    /// Bank ticker for CDS quotes.
    #[cfg_attr(feature = "serde", serde(default, skip_serializing_if = "Option::is_none"))]
    pub entity: Option<String>,
    /// Set when the source had bid above ask and the two were exchanged.
    #[cfg_attr(feature = "serde", serde(default, skip_serializing_if = "core::ops::Not::not"))]
    pub swapped: bool,
}

impl Quote {
    /// Builds a quote from textual fields, normalizing units and ordering bid ≤ ask.
    pub fn from_text(maturity: &str, bid: &str, ask: &str, kind: &str, unit: &str, entity: Option<&str>) -> Result<Self> {
        let kind: QuoteKind = kind.parse()?;
        let unit: Unit = unit.parse()?;
        let maturity: f64 = maturity
            .trim()
            .parse()
            .map_err(|_| Error::Domain(alloc::format!("bad maturity {maturity:?}")))?;
        let bid = parse_scaled(bid, unit.places())?;
        let ask = parse_scaled(ask, unit.places())?;
        let entity = entity.map(str::trim).filter(|e| !e.is_empty()).map(ToString::to_string);
        Quote::new(kind, maturity, bid, ask, entity)
    }

    /// Builds a quote from decimal values.
    pub fn new(kind: QuoteKind, maturity: f64, bid: f64, ask: f64, entity: Option<String>) -> Result<Self> {
        if !(maturity > 0.0) || !bid.is_finite() || !ask.is_finite() {
            return Err(Error::Domain(alloc::format!(
                "invalid {kind} quote: maturity {maturity}, bid {bid}, ask {ask}"
            )));
        }
        if kind == QuoteKind::Cds && entity.is_none() {
            return Err(Error::MissingQuote(alloc::format!("CDS quote at {maturity}y without entity")));
        }
        let swapped = bid > ask;
        let (bid, ask) = if swapped { (ask, bid) } else { (bid, ask) };
        Ok(Quote {
            kind,
            maturity,
            bid,
            ask,
            entity,
            swapped,
        })
    }

    /// Midpoint of bid and ask.
    pub fn mid(&self) -> f64 {
        0.5 * (self.bid + self.ask)
    }
}

/// Benchmark conventions for swap quotes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Conventions {
    /// Floating tenor of the benchmark IRS, in months.
    pub float_months: u32,
    /// Fixed-leg tenor of the benchmark IRS, in months.
    pub fixed_months: u32,
}

impl Default for Conventions {
    fn default() -> Self {
        Conventions {
            float_months: 3,
            fixed_months: 6,
        }
    }
}

/// A data-quality observation raised during ingestion.
#[derive(Debug, Clone, PartialEq)]
pub enum Anomaly {
    /// Bid exceeded ask in the source.
    Swapped {
        /// Instrument type.
        kind: QuoteKind,
        /// Maturity in years.
        maturity: f64,
    },
    /// An OIS-implied discount factor rises with maturity.
    DiscountInversion {
        /// Maturity in years.
        maturity: f64,
        /// `"bid"` or `"ask"`.
        side: &'static str,
    },
}

impl fmt::Display for Anomaly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Anomaly::Swapped { kind, maturity } => write!(f, "{kind} {maturity}y: bid above ask, swapped"),
            Anomaly::DiscountInversion { maturity, side } => {
                write!(f, "OIS {maturity}y: {side}-implied discount factor exceeds the previous maturity")
            }
        }
    }
}

/// Dated set of quotes.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct QuoteSet {
    /// Valuation date.
    pub date: Date,
    /// Quotes in insertion order.
    pub quotes: Vec<Quote>,
    /// Benchmark conventions.
    #[cfg_attr(feature = "serde", serde(skip, default))]
    pub conventions: Conventions,
}

impl QuoteSet {
    /// An empty set.
    pub fn new(date: Date) -> Self {
        QuoteSet {
            date,
            quotes: Vec::new(),
            conventions: Conventions::default(),
        }
    }

    /// Adds a quote, rejecting a second quote for the same (kind, maturity, entity).
    pub fn insert(&mut self, q: Quote) -> Result<()> {
        if self
            .quotes
            .iter()
            .any(|o| o.kind == q.kind && o.maturity == q.maturity && o.entity == q.entity)
        {
            return Err(Error::Domain(alloc::format!(
                "duplicate {} quote at {}y{}",
                q.kind,
                q.maturity,
                q.entity.as_deref().map(|e| alloc::format!(" for {e}")).unwrap_or_default()
            )));
        }
        self.quotes.push(q);
        Ok(())
    }

    /// Whether the set has no quotes.
    pub fn is_empty(&self) -> bool {
        self.quotes.is_empty()
    }

    /// Quotes of one kind sorted by maturity.
    pub fn of_kind(&self, kind: QuoteKind) -> Vec<&Quote> {
        let mut v: Vec<&Quote> = self.quotes.iter().filter(|q| q.kind == kind).collect();
        v.sort_by(|a, b| a.maturity.total_cmp(&b.maturity));
        v
    }

    /// Quote for a (kind, maturity) pair without entity.
    pub fn get(&self, kind: QuoteKind, maturity: f64) -> Option<&Quote> {
        self.quotes
            .iter()
            .find(|q| q.kind == kind && math::abs(q.maturity - maturity) < 1e-9 && q.entity.is_none())
    }

    /// CDS entities in first-seen order.
    pub fn cds_entities(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for q in &self.quotes {
            if let (QuoteKind::Cds, Some(e)) = (q.kind, &q.entity) {
                if !out.contains(e) {
                    out.push(e.clone());
                }
            }
        }
        out
    }

    /// CDS quotes of one entity sorted by maturity.
    pub fn cds_for(&self, entity: &str) -> Vec<&Quote> {
        let mut v: Vec<&Quote> = self
            .quotes
            .iter()
            .filter(|q| q.kind == QuoteKind::Cds && q.entity.as_deref() == Some(entity))
            .collect();
        v.sort_by(|a, b| a.maturity.total_cmp(&b.maturity));
        v
    }

    /// Swapped quotes and OIS discount inversions.
    pub fn anomalies(&self) -> Vec<Anomaly> {
        let mut out: Vec<Anomaly> = self
            .quotes
            .iter()
            .filter(|q| q.swapped)
            .map(|q| Anomaly::Swapped {
                kind: q.kind,
                maturity: q.maturity,
            })
            .collect();
        for (side, pick) in [("bid", Side::Bid), ("ask", Side::Ask)] {
            let ois = self.of_kind(QuoteKind::Ois);
            if let Ok(curve) = ois_discount_curve(&ois, pick) {
                for w in curve.windows(2) {
                    if w[1].1 > w[0].1 {
                        out.push(Anomaly::DiscountInversion { maturity: w[1].0, side });
                    }
                }
            }
        }
        out
    }

    /// OIS quotes excluding maturities flagged by a discount inversion on either side.
    pub fn clean_ois(&self) -> Vec<&Quote> {
        let bad: Vec<f64> = self
            .anomalies()
            .into_iter()
            .filter_map(|a| match a {
                Anomaly::DiscountInversion { maturity, .. } => Some(maturity),
                _ => None,
            })
            .collect();
        self.of_kind(QuoteKind::Ois)
            .into_iter()
            .filter(|q| !bad.contains(&q.maturity))
            .collect()
    }
}

/// Side of a quote.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    /// Bid rate.
    Bid,
    /// Ask rate.
    Ask,
    /// Mid rate.
    Mid,
}

impl Side {
    /// Rate of `q` on this side.
    pub fn rate(self, q: &Quote) -> f64 {
        match self {
            Side::Bid => q.bid,
            Side::Ask => q.ask,
            Side::Mid => q.mid(),
        }
    }
}

/// Discount factors implied by OIS quotes.
///
/// Maturities up to one year are single-period; longer ones pay annually,
/// with missing annual dates interpolated log-linearly between neighbouring
/// quoted maturities.
pub fn ois_discount_curve(quotes: &[&Quote], side: Side) -> Result<Vec<(f64, f64)>> {
    let mut out: Vec<(f64, f64)> = Vec::with_capacity(quotes.len());
    // annual discount factors D(1), D(2), ... known so far
    let mut annual: Vec<f64> = Vec::new();
    for q in quotes {
        let t = q.maturity;
        let r = side.rate(q);
        if t <= 1.0 + 1e-12 {
            let d = 1.0 / (1.0 + t * r);
            if math::abs(t - 1.0) < 1e-12 {
                annual.clear();
                annual.push(d);
            }
            out.push((t, d));
            continue;
        }
        let n = math::round(t);
        if math::abs(t - n) > 1e-12 {
            return Err(Error::Domain(alloc::format!("OIS maturity {t} above 1y is not a whole year")));
        }
        let n = n as usize;
        if annual.is_empty() {
            return Err(Error::MissingQuote("1y OIS quote needed for annual bootstrap".into()));
        }
        let k = annual.len();
        if n <= k {
            return Err(Error::Domain(alloc::format!("OIS maturities out of order at {t}")));
        }
        let d_prev = annual[k - 1];
        let fill = |dn: f64| -> Vec<f64> {
            (k + 1..n)
                .map(|j| d_prev * libm::pow(dn / d_prev, (j - k) as f64 / (n - k) as f64))
                .collect()
        };
        let known: f64 = annual.iter().sum();
        let f = |dn: f64| r * (known + fill(dn).iter().sum::<f64>() + dn) - (1.0 - dn);
        let (mut lo, mut hi) = (1e-12, 4.0);
        if !(f(lo) < 0.0 && f(hi) > 0.0) {
            return Err(Error::Bootstrap {
                maturity: t,
                reason: alloc::format!("no discount factor reproduces OIS rate {r}"),
            });
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-16 {
                break;
            }
        }
        let dn = 0.5 * (lo + hi);
        annual.extend(fill(dn));
        annual.push(dn);
        out.push((t, dn));
    }
    Ok(out)
}

/// Which tenor condition a swap instrument represents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ConditionKind {
    /// 1m floating leg via the 1m/3m basis.
    OneMonth,
    /// Benchmark 3m floating leg.
    ThreeMonth,
    /// 6m floating leg via the 3m/6m basis.
    SixMonth,
}

impl ConditionKind {
    /// Tenor of the priced floating leg in months.
    pub fn months(&self) -> u32 {
        match self {
            ConditionKind::OneMonth => 1,
            ConditionKind::ThreeMonth => 3,
            ConditionKind::SixMonth => 6,
        }
    }

    /// Short label.
    pub fn label(&self) -> &'static str {
        match self {
            ConditionKind::OneMonth => "1m",
            ConditionKind::ThreeMonth => "3m",
            ConditionKind::SixMonth => "6m",
        }
    }
}

/// One swap-type calibration condition.
#[derive(Debug, Clone, PartialEq)]
pub struct SwapCondition {
    /// Condition type.
    pub kind: ConditionKind,
    /// Maturity in years.
    pub maturity: f64,
    /// Priced floating leg.
    pub leg: TenorStructure,
    /// Fixed leg of the benchmark swap.
    pub fixed: TenorStructure,
    /// Leg whose annuity carries the basis spread (1m or 3m).
    pub spread_leg: Option<TenorStructure>,
    /// IRS bid and ask.
    pub swap: (f64, f64),
    /// Basis bid and ask (zero for the 3m condition).
    pub basis: (f64, f64),
}

impl SwapCondition {
    /// Market-side band `[lo, hi]` with OIS annuities from `model`.
    pub fn band(&self, model: &ModelSpec) -> Result<(f64, f64)> {
        let a_fixed = ois_annuity(model, 0.0, &self.fixed)?;
        let a_spread = match &self.spread_leg {
            Some(l) => ois_annuity(model, 0.0, l)?,
            None => 0.0,
        };
        Ok(self.band_from(a_fixed, a_spread))
    }

    /// Band from precomputed annuities.
    pub fn band_from(&self, a_fixed: f64, a_spread: f64) -> (f64, f64) {
        let (sb, sa) = self.swap;
        let (bb, ba) = self.basis;
        match self.kind {
            ConditionKind::ThreeMonth => (sb * a_fixed, sa * a_fixed),
            ConditionKind::OneMonth => (sb * a_fixed - ba * a_spread, sa * a_fixed - bb * a_spread),
            ConditionKind::SixMonth => (sb * a_fixed + bb * a_spread, sa * a_fixed + ba * a_spread),
        }
    }

    /// Model side: PV of the priced floating leg.
    pub fn model_value(&self, model: &ModelSpec) -> Result<f64> {
        float_leg_pv(model, &self.leg)
    }

    /// Identifier such as `"1m@5y"`.
    pub fn id(&self) -> String {
        alloc::format!("{}@{}y", self.kind.label(), self.maturity)
    }
}

/// One CDS calibration condition.
#[derive(Debug, Clone, PartialEq)]
pub struct CdsCondition {
    /// Bank ticker.
    pub entity: String,
    /// Maturity in years.
    pub maturity: f64,
    /// Quoted par spread (mid).
    pub spread: f64,
    /// Quarterly premium schedule.
    pub dates: TenorStructure,
}

/// Instruments built from a quote set.
#[derive(Debug, Clone, Default)]
pub struct Instruments {
    /// Swap-type conditions ordered by maturity then tenor.
    pub swaps: Vec<SwapCondition>,
    /// CDS conditions ordered by bank then maturity.
    pub cds: Vec<CdsCondition>,
    /// Conditions skipped for missing quotes.
    pub skipped: Vec<Error>,
}

/// Builds the three tenor conditions per swap maturity and the CDS conditions.
pub fn build_instruments(qs: &QuoteSet) -> Result<Instruments> {
    let conv = qs.conventions;
    let mut out = Instruments::default();
    let mut maturities: Vec<f64> = qs
        .quotes
        .iter()
        .filter(|q| matches!(q.kind, QuoteKind::Irs | QuoteKind::Basis1m3m | QuoteKind::Basis3m6m))
        .map(|q| q.maturity)
        .collect();
    maturities.sort_by(|a, b| a.total_cmp(b));
    maturities.dedup();
    for &t in &maturities {
        let Some(irs) = qs.get(QuoteKind::Irs, t) else {
            out.skipped.push(Error::MissingQuote(alloc::format!("IRS {t}y")));
            continue;
        };
        let fixed = TenorStructure::regular(0.0, t, conv.fixed_months)?;
        let leg3 = TenorStructure::regular(0.0, t, conv.float_months)?;
        let swap = (irs.bid, irs.ask);
        match qs.get(QuoteKind::Basis1m3m, t) {
            Some(b) => out.swaps.push(SwapCondition {
                kind: ConditionKind::OneMonth,
                maturity: t,
                leg: TenorStructure::regular(0.0, t, 1)?,
                fixed: fixed.clone(),
                spread_leg: Some(TenorStructure::regular(0.0, t, 1)?),
                swap,
                basis: (b.bid, b.ask),
            }),
            None => out.skipped.push(Error::MissingQuote(alloc::format!("BASIS_1m3m {t}y"))),
        }
        out.swaps.push(SwapCondition {
            kind: ConditionKind::ThreeMonth,
            maturity: t,
            leg: leg3.clone(),
            fixed: fixed.clone(),
            spread_leg: None,
            swap,
            basis: (0.0, 0.0),
        });
        match qs.get(QuoteKind::Basis3m6m, t) {
            Some(b) => out.swaps.push(SwapCondition {
                kind: ConditionKind::SixMonth,
                maturity: t,
                leg: TenorStructure::regular(0.0, t, 6)?,
                fixed,
                spread_leg: Some(leg3),
                swap,
                basis: (b.bid, b.ask),
            }),
            None => out.skipped.push(Error::MissingQuote(alloc::format!("BASIS_3m6m {t}y"))),
        }
    }
    for e in qs.cds_entities() {
        for q in qs.cds_for(&e) {
            out.cds.push(CdsCondition {
                entity: e.clone(),
                maturity: q.maturity,
                spread: q.mid(),
                dates: TenorStructure::regular(0.0, q.maturity, 3)?,
            });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_scaling_is_exact() {
        assert_eq!(parse_scaled("0.50825", 2).unwrap(), 0.0050825);
        assert_eq!(parse_scaled("9.6", 4).unwrap(), 0.00096);
        assert_eq!(parse_scaled("-12.5", 4).unwrap(), -0.00125);
        assert_eq!(parse_scaled("1234", 2).unwrap(), 12.34);
        assert_eq!(parse_scaled("0.003", 0).unwrap(), 0.003);
        assert!(parse_scaled("abc", 2).is_err());
        assert!(parse_scaled(".", 2).is_err());
    }

    #[test]
    fn quote_rows() {
        let q = Quote::from_text("0.5", "0.50825", "0.50825", "IRS", "%", None).unwrap();
        assert_eq!((q.bid, q.ask), (0.0050825, 0.0050825));
        let q = Quote::from_text("0.5", "9.6", "9.6", "BASIS_1m3m", "bp", Some("")).unwrap();
        assert_eq!(q.bid, 0.00096);
        assert_eq!(q.entity, None);
        let q = Quote::from_text("2", "15", "14.4", "BASIS_1m3m", "bp", None).unwrap();
        assert!(q.swapped && q.bid < q.ask);
        assert!(Quote::from_text("1", "1", "1", "CDS", "%", None).is_err());
        assert!(Quote::from_text("1", "1", "1", "FRA", "%", None).is_err());
    }

    #[test]
    fn ois_curve_round_trips_par_rates() {
        let mut qs = QuoteSet::new(Date::new(2013, 1, 1).unwrap());
        for (t, r) in [(0.5, 0.01), (1.0, 0.012), (2.0, 0.015), (3.0, 0.02), (5.0, 0.025)] {
            qs.insert(Quote::new(QuoteKind::Ois, t, r, r, None).unwrap()).unwrap();
        }
        let ois = qs.of_kind(QuoteKind::Ois);
        let c = ois_discount_curve(&ois, Side::Mid).unwrap();
        assert_eq!(c[0], (0.5, 1.0 / 1.005));
        let d: Vec<f64> = c.iter().map(|x| x.1).collect();
        let d4 = libm::sqrt(d[3] * d[4]);
        let annuity = d[1] + d[2] + d[3] + d4 + d[4];
        assert!(math::abs(0.025 * annuity - (1.0 - d[4])) < 1e-15);
        assert!(qs.anomalies().is_empty());
    }
}
