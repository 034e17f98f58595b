//! Published calibrated parameter sets, used as reference models.
//!
//! Each date carries a one-factor and a three-factor OIS fit with its
//! piecewise-constant `a₀(t)`, and a three-factor basis fit with loadings on
//! `r_c`, `λ` and `φ`. Bank intensities come from the coefficient file in
//! `data/`.

use std::collections::BTreeMap;

use rollover_core::affine::{CirFactor, FactorSet};
use rollover_core::curve::{ModelSpec, PiecewiseShift, SpreadProjection, DEFAULT_BIG_LAMBDA, DEFAULT_Q};
use rollover_core::date::Date;
use rollover_core::instruments::BankCredit;
use rollover_core::Result;

use crate::io::CoefficientRecord;

/// Valuation dates of the reference fits.
pub const DATES: [(i32, u8, u8); 6] = [
    (2013, 1, 1),
    (2014, 9, 8),
    (2015, 6, 18),
    (2016, 4, 20),
    (2017, 3, 22),
    (2017, 10, 31),
];

/// Knots of the fitted `a₀(t)`.
pub const A0_KNOTS: [f64; 11] = [0.0, 0.5, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 8.0, 9.0, 10.0];

/// Knots of the fitted bank shifts `b̂₀ʲ(t)`.
pub const CDS_KNOTS: [f64; 9] = [0.0, 0.5, 1.0, 2.0, 3.0, 4.0, 5.0, 7.0, 10.0];

/// OIS fit rows `(y0, κ, θ, σ, a)`: one-factor first, then three-factor.
const OIS: [([f64; 5], [[f64; 5]; 3]); 6] = [
    (
        [0.476693, 0.455794, 0.134384, 0.052677, 0.000699],
        [
            [0.049993, 0.419187, 0.199849, 0.355935, 0.003736],
            [0.01501, 0.691312, 0.006249, 0.08993, 0.002735],
            [0.002957, 0.074725, 0.18461, 0.009337, 0.00404],
        ],
    ),
    (
        [0.54686, 0.7273657, 0.04681492, 0.205392, 6.67e-5],
        [
            [0.738431, 0.5457939, 0.8202671, 0.850932, 1.73e-7],
            [0.013289, 0.9216817, 0.1453924, 0.114773, 0.004153],
            [0.168724, 0.5690233, 0.09363364, 0.005876, 0.000693],
        ],
    ),
    (
        [0.660211, 0.49086, 0.602925, 0.318304, 0.001602],
        [
            [0.345831, 0.038334, 0.891026, 0.024648, 1.25e-6],
            [0.127899, 0.391148, 0.90416, 0.184931, 3.78e-6],
            [0.926643, 0.694078, 0.06601, 0.160443, 0.000129],
        ],
    ),
    (
        [0.002608, 0.674544, 0.051723, 0.253174, 0.01166],
        [
            [0.241573, 0.723951, 0.262249, 0.614391, 0.006614],
            [0.974125, 0.435349, 0.016192, 0.022887, 0.001613],
            [0.155927, 0.531023, 0.088924, 0.08861, 0.006218],
        ],
    ),
    (
        [0.340134, 0.2156976, 0.1746632, 0.005657, 9.40e-3],
        [
            [0.342, 0.7045459, 0.2785814, 0.254248, 0.003887],
            [0.534943, 0.6002792, 0.966547, 0.333788, 0.001546],
            [0.673438, 0.4692102, 0.1112721, 0.206185, 0.001157],
        ],
    ),
    (
        [0.773084, 0.2608761, 0.7980566, 0.264573, 3.34e-3],
        [
            [0.365879, 0.2461593, 0.1192502, 0.11067, 0.000127],
            [0.028448, 0.2058425, 0.9971775, 0.177739, 0.000251],
            [0.095642, 0.9477889, 0.4641101, 0.312365, 0.003171],
        ],
    ),
];

/// `a₀` on each knot interval: one-factor row, then three-factor row.
const A0: [[[f64; 10]; 2]; 6] = [
    [
        [1.03e-3, 0.001164, 0.001251, 0.001756, 0.000284, 0.00174, 0.002237, 0.004769, 0.017322, 0.023314],
        [1.00e-3, 0.001524, 0.000397, 0.000795, 0.000684, 0.000206, 0.000958, 0.005657, 0.010415, 0.027489],
    ],
    [
        [0.000923, 0.000871, 0.001037, 0.000964, 0.002122, 0.004211, 0.011486, 0.034919, 0.033426, 0.040708],
        [0.000655, 0.000591, 0.000424, 0.000461, 0.001435, 0.003586, 0.011333, 0.032802, 0.031482, 0.041732],
    ],
    [
        [3.463e-4, 0.000807, 0.000901, 0.001155, 0.003721, 0.005422, 0.016119, 0.022774, 0.035287, 0.037843],
        [5.09e-4, 0.000817, 0.001029, 0.000885, 0.003477, 0.005166, 0.014454, 0.024241, 0.030412, 0.037339],
    ],
    [
        [3.67e-3, 0.00399, 0.003692, 0.003975, 0.00521, 0.00534, 0.007987, 0.010661, 0.01513, 0.018535],
        [0.000964, 0.000465, 0.000876, 0.001434, 0.0028, 0.003874, 0.00584, 0.008865, 0.014107, 0.015489],
    ],
    [
        [0.006667, 0.009529, 0.012614, 0.015748, 0.016677, 0.019813, 0.019809, 0.030165, 0.002889, 0.026624],
        [0.006766, 0.00978, 0.012493, 0.015599, 0.017447, 0.017904, 0.019014, 0.029841, 0.001362, 0.023907],
    ],
    [
        [0.010865, 0.013164, 0.014373, 0.016675, 0.016015, 0.018735, 0.018916, 0.029504, 0.003794, 0.021191],
        [0.012902, 0.014817, 0.01626, 0.016998, 0.019136, 0.017861, 0.021131, 0.029561, 0.00262, 0.022741],
    ],
];

/// Basis fit rows `(y0, a, b, c, σ, κ, θ)`.
const BASIS: [[[f64; 7]; 3]; 6] = [
    [
        [0.831418, 0.000517, 1.04e-5, 0.000108, 0.22479, 0.278658, 0.715343],
        [0.094204, 0.0, 1.62e-5, 0.000749, 0.220092, 0.352275, 0.383409],
        [0.100625, 0.0, 2.14e-5, 0.001809, 0.343971, 0.334376, 0.797952],
    ],
    [
        [0.54686, 6.67e-5, 0.000374, 0.002578, 0.205392, 0.7273657, 0.04681492],
        [0.055658, 0.0, 0.003208, 0.003004, 0.355417, 0.7175086, 0.09971208],
        [0.184441, 0.0, 0.000472, 0.000216, 0.568733, 0.9197932, 0.3863628],
    ],
    [
        [0.483062, 0.001577, 1.53e-3, 0.004607, 0.29234, 0.94945, 0.326688],
        [0.100874, 0.0, 4.29e-5, 0.00285, 0.500709, 0.780582, 0.187569],
        [0.326835, 0.0, 2.51e-5, 0.000325, 0.124841, 0.898274, 0.363523],
    ],
    [
        [0.002608, 0.01166, 0.00455, 0.016407, 0.253174, 0.674544, 0.051723],
        [0.074159, 0.0, 0.001414, 0.002822, 0.008161, 0.031635, 0.156863],
        [0.009814, 0.0, 0.002227, 0.004898, 0.377, 0.261372, 0.431784],
    ],
    [
        [0.340134, 9.40e-3, 2.96e-5, 9.37e-5, 0.0056574, 0.2156976, 0.174663],
        [0.000873, 0.0, 0.002236, 0.001796, 0.04284526, 0.1823359, 0.014394],
        [0.000873, 0.0, 0.000662, 0.000394, 0.03652793, 0.9609686, 0.031956],
    ],
    [
        [0.773084, 3.34e-3, 5.39e-5, 3.72e-5, 0.264573, 0.2608761, 0.7980566],
        [0.013896, 0.0, 0.113603, 0.008913, 0.004227, 0.3975118, 0.0002119],
        [0.065454, 0.0, 7.94e-5, 4.09e-6, 0.403512, 0.9037867, 0.8058104],
    ],
];

/// A named reference model.
#[derive(Debug, Clone)]
pub struct Fixture {
    /// Identifier such as `ois1_2013-01-01` or `basis3_2015-06-18`.
    pub name: String,
    /// The model.
    pub model: ModelSpec,
}

/// Valuation date of reference set `k`.
pub fn date(k: usize) -> Date {
    let (y, m, d) = DATES[k];
    Date::new(y, m, d).expect("valid fixture date")
}

fn a0(k: usize, three: bool) -> Result<PiecewiseShift> {
    PiecewiseShift::new(A0_KNOTS.to_vec(), A0[k][three as usize].to_vec())
}

/// OIS-only fit on date `k` with `d ∈ {1, 3}` factors.
pub fn ois_model(k: usize, d: usize) -> Result<ModelSpec> {
    let (one, three) = &OIS[k];
    let rows: &[[f64; 5]] = if d == 1 { std::slice::from_ref(one) } else { three };
    let factors = rows
        .iter()
        .map(|r| CirFactor::new(r[1], r[2], r[3], r[0]))
        .collect::<Result<Vec<_>>>()?;
    let loading = rows.iter().map(|r| r[4]).collect();
    ModelSpec::ois_only(
        FactorSet::new(factors)?,
        SpreadProjection::new(a0(k, d != 1)?, loading),
        date(k),
    )
}

/// Three-factor basis fit on date `k`; `λ` and `φ` carry no deterministic shift.
pub fn basis_model(k: usize) -> Result<ModelSpec> {
    let rows = &BASIS[k];
    let factors = rows
        .iter()
        .map(|r| CirFactor::new(r[5], r[6], r[4], r[0]))
        .collect::<Result<Vec<_>>>()?;
    let col = |j: usize| rows.iter().map(|r| r[j]).collect::<Vec<_>>();
    ModelSpec::new(
        FactorSet::new(factors)?,
        SpreadProjection::new(a0(k, false)?, col(1)),
        SpreadProjection::new(PiecewiseShift::constant(0.0), col(2)),
        SpreadProjection::new(PiecewiseShift::constant(0.0), col(3)),
        DEFAULT_Q,
        DEFAULT_BIG_LAMBDA,
        date(k),
    )
}

/// Every reference model: six dates of one- and three-factor OIS fits, then
/// six basis fits.
pub fn all() -> Result<Vec<Fixture>> {
    let mut out = Vec::new();
    for k in 0..DATES.len() {
        for d in [1, 3] {
            out.push(Fixture {
                name: format!("ois{d}_{}", date(k)),
                model: ois_model(k, d)?,
            });
        }
    }
    for k in 0..DATES.len() {
        out.push(Fixture {
            name: format!("basis3_{}", date(k)),
            model: basis_model(k)?,
        });
    }
    Ok(out)
}

/// Bank intensities with `factors` loadings, keyed by entity, from coefficient
/// rows (`bhat` or `bhat1…`, and `bhat0(1)…bhat0(8)` on [`CDS_KNOTS`]).
pub fn banks_from_coefficients(records: &[CoefficientRecord], factors: usize) -> Result<BTreeMap<String, BankCredit>> {
    let mut shifts: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    let mut loads: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    let n = CDS_KNOTS.len() - 1;
    for r in records.iter().filter(|r| r.factors == factors) {
        let c = r.coefficient.as_str();
        if let Some(k) = c.strip_prefix("bhat0(").and_then(|s| s.strip_suffix(')')) {
            let k: usize = k.parse().map_err(|_| bad(c))?;
            if !(1..=n).contains(&k) {
                return Err(bad(c));
            }
            shifts.entry(&r.entity).or_insert_with(|| vec![f64::NAN; n])[k - 1] = r.value;
        } else if let Some(i) = c.strip_prefix("bhat") {
            let i = if i.is_empty() { 1 } else { i.parse().map_err(|_| bad(c))? };
            if !(1..=factors).contains(&i) {
                return Err(bad(c));
            }
            loads.entry(&r.entity).or_insert_with(|| vec![f64::NAN; factors])[i - 1] = r.value;
        } else {
            return Err(bad(c));
        }
    }
    let mut out = BTreeMap::new();
    for (entity, values) in shifts {
        let loading = loads.remove(entity).unwrap_or_else(|| vec![f64::NAN; factors]);
        if loading.iter().any(|v| v.is_nan()) {
            return Err(rollover_core::Error::InvalidParameter(format!("{entity}: incomplete loading")));
        }
        // NaN entries are rejected by the shift constructor
        let shift = PiecewiseShift::new(CDS_KNOTS.to_vec(), values)?;
        out.insert(entity.to_string(), BankCredit::new(shift, loading));
    }
    Ok(out)
}

fn bad(c: &str) -> rollover_core::Error {
    rollover_core::Error::InvalidParameter(format!("unknown coefficient label {c:?}"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_fixture_builds() {
        let all = all().unwrap();
        assert_eq!(all.len(), 18);
        assert!(all.iter().all(|f| f.model.ois_discount(0.0, 10.0).unwrap() < 1.0));
    }

    #[test]
    fn basis_first_factor_matches_ois_fit_in_2014() {
        let b = basis_model(1).unwrap();
        let o = ois_model(1, 1).unwrap();
        assert_eq!(b.factors.factors()[0], o.factors.factors()[0]);
        assert_eq!(b.rc.loading[0], o.rc.loading[0]);
    }

    #[test]
    fn coefficient_rows_assemble() {
        let rec = |c: &str, v: f64| CoefficientRecord {
            factors: 1,
            coefficient: c.into(),
            entity: "X".into(),
            value: v,
        };
        let mut rows = vec![rec("bhat", 0.001)];
        rows.extend((1..=8).map(|k| rec(&format!("bhat0({k})"), k as f64 * 1e-4)));
        let banks = banks_from_coefficients(&rows, 1).unwrap();
        let x = &banks["X"];
        assert_eq!(x.loading, vec![0.001]);
        assert_eq!(x.shift.value(6.0), 7e-4);
        rows.pop();
        assert!(banks_from_coefficients(&rows, 1).is_err());
    }
}
