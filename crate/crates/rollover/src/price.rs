//! Instrument specifications priced off a calibrated model.
//!
//! Grammar (maturities and dates in years, tenors in months):
//!
//! | spec                 | value                                           |
//! |----------------------|-------------------------------------------------|
//! | `ois@T`              | OIS par rate, single period to 1y, annual after |
//! | `libor:Nm`           | spot LIBOR for an `N`-month tenor               |
//! | `swap:Fm/Xm@T`       | par rate, `F`-month float vs `X`-month fixed    |
//! | `basis:Sm/Lm@T`      | par spread on the `S`-month leg, in bp          |
//! | `caplet:Nm@T:K`      | caplet on `[T, T + N/12]` struck at `K`         |
//!
//! Any tenor pair is accepted, so bespoke tenors such as `basis:2m/5m@5`
//! price the same way as quoted ones.

use std::fmt;
use std::str::FromStr;

use rollover_core::curve::ModelSpec;
use rollover_core::instruments::{
    caplet_price, ois_par_rate, ois_par_rate_multi, par_basis_spread, par_swap_rate, TenorStructure,
};

/// Damping used for caplet Fourier inversion.
pub const CAPLET_ALPHA: f64 = 0.75;

/// A parsed instrument specification.
#[derive(Debug, Clone, PartialEq)]
pub enum Instrument {
    /// OIS par rate to `maturity`.
    Ois {
        /// Maturity.
        maturity: f64,
    },
    /// Spot LIBOR.
    Libor {
        /// Tenor in months.
        months: u32,
    },
    /// Vanilla par swap rate.
    Swap {
        /// Floating tenor in months.
        float_months: u32,
        /// Fixed tenor in months.
        fixed_months: u32,
        /// Maturity.
        maturity: f64,
    },
    /// Par basis spread on the shorter leg.
    Basis {
        /// Shorter tenor in months.
        short_months: u32,
        /// Longer tenor in months.
        long_months: u32,
        /// Maturity.
        maturity: f64,
    },
    /// Unit-notional caplet.
    Caplet {
        /// Tenor in months.
        months: u32,
        /// Fixing date.
        fixing: f64,
        /// Strike.
        strike: f64,
    },
}

/// Failures while parsing or pricing an instrument.
#[derive(Debug, thiserror::Error)]
pub enum PriceError {
    /// Specification not understood.
    #[error("unknown instrument {0:?}")]
    UnknownInstrument(String),
    /// Pricing failed.
    #[error("{spec}: {source}")]
    Model {
        /// Specification.
        spec: String,
        /// Cause.
        #[source]
        source: rollover_core::Error,
    },
}

fn months(s: &str) -> Option<u32> {
    s.strip_suffix('m')?.parse().ok().filter(|&m| m > 0)
}

fn years(s: &str) -> Option<f64> {
    s.parse().ok().filter(|t: &f64| t.is_finite() && *t > 0.0)
}

fn pair(s: &str) -> Option<(u32, u32)> {
    let (a, b) = s.split_once('/')?;
    Some((months(a)?, months(b)?))
}

impl FromStr for Instrument {
    type Err = PriceError;

    fn from_str(spec: &str) -> Result<Self, PriceError> {
        let unknown = || PriceError::UnknownInstrument(spec.to_string());
        let s = spec.trim();
        let parsed = if let Some(t) = s.strip_prefix("ois@") {
            years(t).map(|maturity| Instrument::Ois { maturity })
        } else if let Some(m) = s.strip_prefix("libor:") {
            months(m).map(|months| Instrument::Libor { months })
        } else if let Some(rest) = s.strip_prefix("swap:") {
            let (p, t) = rest.split_once('@').ok_or_else(unknown)?;
            pair(p).zip(years(t)).map(|((f, x), maturity)| Instrument::Swap {
                float_months: f,
                fixed_months: x,
                maturity,
            })
        } else if let Some(rest) = s.strip_prefix("basis:") {
            let (p, t) = rest.split_once('@').ok_or_else(unknown)?;
            pair(p)
                .filter(|(a, b)| a < b)
                .zip(years(t))
                .map(|((a, b), maturity)| Instrument::Basis {
                    short_months: a,
                    long_months: b,
                    maturity,
                })
        } else if let Some(rest) = s.strip_prefix("caplet:") {
            let (m, rest) = rest.split_once('@').ok_or_else(unknown)?;
            let (t, k) = rest.split_once(':').ok_or_else(unknown)?;
            let strike = k.parse::<f64>().ok().filter(|k| k.is_finite());
            months(m).zip(years(t)).zip(strike).map(|((months, fixing), strike)| Instrument::Caplet {
                months,
                fixing,
                strike,
            })
        } else {
            None
        };
        parsed.ok_or_else(unknown)
    }
}

impl fmt::Display for Instrument {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Instrument::Ois { maturity } => write!(f, "ois@{maturity}"),
            Instrument::Libor { months } => write!(f, "libor:{months}m"),
            Instrument::Swap {
                float_months,
                fixed_months,
                maturity,
            } => write!(f, "swap:{float_months}m/{fixed_months}m@{maturity}"),
            Instrument::Basis {
                short_months,
                long_months,
                maturity,
            } => write!(f, "basis:{short_months}m/{long_months}m@{maturity}"),
            Instrument::Caplet { months, fixing, strike } => write!(f, "caplet:{months}m@{fixing}:{strike}"),
        }
    }
}

/// A priced instrument.
#[derive(Debug, Clone, PartialEq)]
pub struct Quote {
    /// Instrument.
    pub instrument: Instrument,
    /// Value.
    pub value: f64,
    /// Unit label: `rate`, `bp` or `pv`.
    pub unit: &'static str,
}

impl Instrument {
    /// Prices the instrument at the valuation date.
    pub fn price(&self, m: &ModelSpec) -> Result<Quote, PriceError> {
        let wrap = |source| PriceError::Model {
            spec: self.to_string(),
            source,
        };
        let (value, unit) = match *self {
            Instrument::Ois { maturity } if maturity <= 1.0 => (ois_par_rate(m, 0.0, maturity).map_err(wrap)?, "rate"),
            Instrument::Ois { maturity } => {
                let dates = TenorStructure::regular(0.0, maturity, 12).map_err(wrap)?;
                (ois_par_rate_multi(m, 0.0, &dates).map_err(wrap)?, "rate")
            }
            Instrument::Libor { months } => (m.spot_libor(0.0, months as f64 / 12.0).map_err(wrap)?, "rate"),
            Instrument::Swap {
                float_months,
                fixed_months,
                maturity,
            } => {
                let fl = TenorStructure::regular(0.0, maturity, float_months).map_err(wrap)?;
                let fx = TenorStructure::regular(0.0, maturity, fixed_months).map_err(wrap)?;
                (par_swap_rate(m, &fl, &fx).map_err(wrap)?, "rate")
            }
            Instrument::Basis {
                short_months,
                long_months,
                maturity,
            } => {
                let s = TenorStructure::regular(0.0, maturity, short_months).map_err(wrap)?;
                let l = TenorStructure::regular(0.0, maturity, long_months).map_err(wrap)?;
                (par_basis_spread(m, &s, &l).map_err(wrap)? * 1e4, "bp")
            }
            Instrument::Caplet { months, fixing, strike } => {
                let end = fixing + months as f64 / 12.0;
                (caplet_price(m, fixing, end, strike, 1.0, CAPLET_ALPHA).map_err(wrap)?, "pv")
            }
        };
        Ok(Quote {
            instrument: self.clone(),
            value,
            unit,
        })
    }
}

/// Prices every spec, as CSV text with header `instrument,value,unit`.
pub fn price_table(m: &ModelSpec, specs: &[String]) -> Result<String, PriceError> {
    let mut out = String::from("instrument,value,unit\n");
    for s in specs {
        let q = s.parse::<Instrument>()?.price(m)?;
        out.push_str(&format!("{},{:.12e},{}\n", q.instrument, q.value, q.unit));
    }
    Ok(out)
}
