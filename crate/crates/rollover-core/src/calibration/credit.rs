//! Credit side: per-bank CDS fits, panel averaging and the
//! funding-liquidity stage that fits `φ` with the credit part held fixed.

use alloc::string::String;
use alloc::vec::Vec;

use super::de::{DeConfig, OptimResult};
use super::lm::levenberg_marquardt;
use super::objective::{Bounds, Executor};
use super::stages::{auto_mu, monthly_knots, CalibrationConfig, MonthlyProblem, SwapEngine};
use crate::curve::{ModelSpec, PiecewiseShift, SpreadProjection};
use crate::instruments::cds::{cds_par_curve, BankCredit, DEFAULT_MESH_STEP, DEFAULT_RECOVERY};
use crate::math;
use crate::{Error, Result};

/// Settings of the credit stages.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct CreditConfig {
    /// Recovery rate.
    pub recovery: f64,
    /// Default mesh of the bootstrap and of reported spreads.
    pub mesh_step: f64,
    /// Default mesh of the global loading search.
    pub coarse_mesh_step: f64,
    /// Bootstrap stops once every spread is within this distance (decimal).
    pub spread_tol: f64,
    /// Bounds of the constant `b̂₀` in the global search.
    pub shift_bounds: (f64, f64),
    /// DE settings of the per-bank loading search.
    pub bank: DeConfig,
    /// DE settings of the funding-liquidity search.
    pub liquidity: DeConfig,
}

impl Default for CreditConfig {
    fn default() -> Self {
        CreditConfig {
            recovery: DEFAULT_RECOVERY,
            mesh_step: DEFAULT_MESH_STEP,
            coarse_mesh_step: 1.0 / 12.0,
            spread_tol: 1e-12,
            shift_bounds: (-0.01, 0.05),
            bank: DeConfig {
                max_iter: 60,
                pop: Some(20),
                ..DeConfig::default()
            },
            liquidity: DeConfig {
                max_iter: 300,
                ..DeConfig::default()
            },
        }
    }
}

/// Outcome of one bank's CDS calibration.
#[derive(Debug, Clone, PartialEq)]
pub struct BankFit {
    /// Bank ticker.
    pub entity: String,
    /// Fitted intensity.
    pub credit: BankCredit,
    /// `(maturity, quoted spread, model spread)`.
    pub repriced: Vec<(f64, f64, f64)>,
    /// Relative least-squares objective of the global loading search.
    pub objective: f64,
}

impl BankFit {
    /// Largest absolute repricing error in basis points.
    pub fn max_error_bp(&self) -> f64 {
        self.repriced
            .iter()
            .map(|(_, q, m)| math::abs(q - m) * 1e4)
            .fold(0.0, f64::max)
    }
}

/// Fits `b̂ʲ` and a constant `b̂₀ʲ` on a coarse mesh, then bootstraps a
/// piecewise `b̂₀ʲ(t)` with one interval per quoted maturity so every quote
/// reprices on the fine mesh.
///
/// If the bootstrap would make `λ̂ʲ(t, y₀)` negative at a knot, the loading
/// is halved (down to zero) and the bootstrap repeated.
///
/// `quotes` holds `(maturity, spread)` pairs; `stream` selects the RNG stream.
pub fn calibrate_bank_cds(
    model: &ModelSpec,
    entity: &str,
    quotes: &[(f64, f64)],
    cfg: &CalibrationConfig,
    stream: u64,
    exec: &dyn Executor,
) -> Result<BankFit> {
    if quotes.is_empty() {
        return Err(Error::MissingQuote(alloc::format!("no CDS quotes for {entity}")));
    }
    let mut quotes = quotes.to_vec();
    quotes.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mats: Vec<f64> = quotes.iter().map(|q| q.0).collect();
    let cc = &cfg.credit;
    let d = model.dim();
    if quotes.iter().all(|q| q.1 == 0.0) {
        // zero spreads admit only the zero intensity when λ̂ ≥ 0
        let credit = BankCredit::flat(0.0, d);
        return Ok(BankFit {
            entity: entity.into(),
            repriced: quotes.iter().map(|q| (q.0, 0.0, 0.0)).collect(),
            credit,
            objective: 0.0,
        });
    }
    let mut lo = alloc::vec![cfg.bounds.loading.0; d];
    let mut hi = alloc::vec![cfg.bounds.loading.1; d];
    lo.push(cc.shift_bounds.0);
    hi.push(cc.shift_bounds.1);
    let bounds = Bounds::new(lo, hi)?;
    let objective = |x: &[f64]| -> f64 {
        let bank = BankCredit::new(PiecewiseShift::constant(x[d]), x[..d].to_vec());
        match cds_par_curve(model, &bank, &mats, cc.recovery, cc.coarse_mesh_step) {
            Ok(curve) => curve
                .iter()
                .zip(&quotes)
                .map(|(m, (_, q))| {
                    let s = if *q != 0.0 { math::abs(*q) } else { 1.0 };
                    let r = (m - q) / s;
                    r * r
                })
                .sum(),
            Err(_) => f64::INFINITY,
        }
    };
    let optim: OptimResult = cfg.optimize(&objective, &bounds, &cc.bank, 100 + stream, &[], exec);
    // shrink the fitted loading toward zero until the bootstrap keeps
    // λ̂(t, y₀) ≥ 0 at every knot
    let mut last = None;
    for scale in LOADING_SCALES {
        let loading: Vec<f64> = optim.x[..d].iter().map(|l| l * scale).collect();
        match bootstrap_shift(model, entity, &quotes, &mats, loading, optim.x[d], cc) {
            Ok(credit) => {
                let model_spreads = cds_par_curve(model, &credit, &mats, cc.recovery, cc.mesh_step)?;
                return Ok(BankFit {
                    entity: entity.into(),
                    repriced: quotes.iter().zip(model_spreads).map(|(q, m)| (q.0, q.1, m)).collect(),
                    credit,
                    objective: optim.f,
                });
            }
            Err(e @ Error::NegativeIntensity { .. }) => last = Some(e),
            Err(e) => return Err(e),
        }
    }
    Err(last.unwrap_or(Error::EmptyPanel))
}

const LOADING_SCALES: [f64; 6] = [1.0, 0.5, 0.25, 0.125, 0.0625, 0.0];

fn bootstrap_shift(
    model: &ModelSpec,
    entity: &str,
    quotes: &[(f64, f64)],
    mats: &[f64],
    loading: Vec<f64>,
    start: f64,
    cc: &CreditConfig,
) -> Result<BankCredit> {
    let mut knots = alloc::vec![0.0];
    knots.extend_from_slice(mats);
    let mut values = alloc::vec![start; mats.len()];
    let lx: f64 = loading.iter().zip(model.factors.initial_state()).map(|(l, y)| l * y).sum();
    for k in 0..mats.len() {
        let target = quotes[k].1;
        let spread_at = |v: f64, values: &mut Vec<f64>| -> Result<f64> {
            values[k..].iter_mut().for_each(|x| *x = v);
            let bank = BankCredit::new(PiecewiseShift::new(knots.clone(), values.clone())?, loading.clone());
            Ok(cds_par_curve(model, &bank, &[mats[k]], cc.recovery, cc.mesh_step)?[0])
        };
        let guess = values[k];
        let v = solve_increasing(|v| Ok(spread_at(v, &mut values)? - target), guess, 1e-3, cc.spread_tol)
            .map_err(|e| match e {
                Error::Bootstrap { reason, .. } => Error::Bootstrap {
                    maturity: mats[k],
                    reason: alloc::format!("{entity}: {reason}"),
                },
                other => other,
            })?;
        values[k..].iter_mut().for_each(|x| *x = v);
        // intensity is resolved to about spread_tol/(1 − R)
        if v + lx < -cc.spread_tol / (1.0 - cc.recovery) {
            return Err(Error::NegativeIntensity { t: knots[k], value: v + lx });
        }
    }
    Ok(BankCredit::new(PiecewiseShift::new(knots, values)?, loading))
}

/// Root of an increasing function by bracketing and Illinois false position,
/// stopping once `|f| ≤ tol`.
fn solve_increasing(mut f: impl FnMut(f64) -> Result<f64>, x0: f64, step: f64, tol: f64) -> Result<f64> {
    let mut a = x0;
    let mut fa = f(a)?;
    if math::abs(fa) <= tol {
        return Ok(a);
    }
    let dir = if fa < 0.0 { 1.0 } else { -1.0 };
    let mut h = step;
    let mut b = a + dir * h;
    let mut fb = f(b)?;
    let mut tries = 0;
    while fa * fb > 0.0 {
        a = b;
        fa = fb;
        h *= 2.0;
        b = a + dir * h;
        fb = f(b)?;
        tries += 1;
        if tries > 60 || !fb.is_finite() {
            return Err(Error::Bootstrap {
                maturity: f64::NAN,
                reason: "no sign change while bracketing the root".into(),
            });
        }
    }
    let mut side = 0;
    for _ in 0..200 {
        let c = (a * fb - b * fa) / (fb - fa);
        let fc = f(c)?;
        if math::abs(fc) <= tol {
            return Ok(c);
        }
        if fc * fb < 0.0 {
            a = b;
            fa = fb;
            side = 0;
        } else {
            fa *= if side == 1 { 0.5 } else { 1.0 };
            side = 1;
        }
        b = c;
        fb = fc;
        if math::abs(b - a) <= 1e-16 * (1.0 + math::abs(b)) {
            return Ok(b);
        }
    }
    Err(Error::Bootstrap {
        maturity: f64::NAN,
        reason: "false position did not converge".into(),
    })
}

/// Componentwise mean loading and pointwise mean shift on the union grid.
pub fn panel_mean(banks: &[BankCredit]) -> Result<BankCredit> {
    let Some(first) = banks.first() else {
        return Err(Error::EmptyPanel);
    };
    let d = first.loading.len();
    let w = 1.0 / banks.len() as f64;
    let mut shift = PiecewiseShift::constant(0.0);
    let mut loading = alloc::vec![0.0; d];
    for b in banks {
        if b.loading.len() != d {
            return Err(Error::Dimension {
                expected: d,
                got: b.loading.len(),
            });
        }
        shift = shift.combine(1.0, &b.shift, w);
        for (l, x) in loading.iter_mut().zip(&b.loading) {
            *l += w * x;
        }
    }
    Ok(BankCredit::new(shift, loading))
}

/// Panel intensity `(b₀(t), b)`: the panel mean with `Λ` subtracted from the shift.
pub fn panel_average(banks: &[BankCredit], big_lambda: f64) -> Result<SpreadProjection> {
    let m = panel_mean(banks)?;
    Ok(SpreadProjection::new(m.shift.shifted(-big_lambda), m.loading))
}

/// Outcome of the funding-liquidity stage.
#[derive(Debug, Clone, PartialEq)]
pub struct LiquidityFit {
    /// Model with the credit part fixed and the fitted `(c₀(t), c)`.
    pub model: ModelSpec,
    /// Hinge objective of the global `(c, c₀)` search.
    pub objective_constant: f64,
    /// Hinge objective after the monthly `c₀(t)` refinement.
    pub objective: f64,
    /// `(t, q·λ(t, y₀), φ(t, y₀))` on the monthly grid.
    pub decomposition: Vec<(f64, f64, f64)>,
}

/// Fits `c` and a monthly `c₀(t)` to the swap conditions with `λ` fixed to
/// the panel average in `model`.
pub fn stage_liquidity(
    engine: &SwapEngine,
    model: &ModelSpec,
    cfg: &CalibrationConfig,
    exec: &dyn Executor,
) -> Result<LiquidityFit> {
    let d = model.dim();
    let q = model.q;
    let lam = model.lambda.shift.clone();
    let credit_exponent = |m: u32, j: usize| {
        let dt = m as f64 / 12.0;
        q * lam.integral(j as f64 * dt, (j + 1) as f64 * dt)
    };
    let mut lo = alloc::vec![cfg.bounds.loading.0; d];
    let mut hi = alloc::vec![cfg.bounds.loading.1; d];
    lo.push(cfg.bounds.d0.0);
    hi.push(cfg.bounds.d0.1);
    let bounds = Bounds::new(lo, hi)?;
    let build = |x: &[f64]| -> Result<ModelSpec> {
        let mut m = model.clone();
        m.phi = SpreadProjection::constant(x[d], x[..d].to_vec());
        m.validate()?;
        Ok(m)
    };
    let objective = |x: &[f64]| -> f64 {
        let Ok(m) = build(x) else {
            return f64::INFINITY;
        };
        let Ok(tables) = engine.tables(&m) else {
            return f64::INFINITY;
        };
        let c0 = x[d];
        let v = engine.values(&tables, &|months, j| credit_exponent(months, j) + c0 * months as f64 / 12.0);
        let h = engine.hinge(&v);
        if h.is_nan() {
            f64::INFINITY
        } else {
            h
        }
    };
    let optim = cfg.optimize(&objective, &bounds, &cfg.credit.liquidity, 4, &[], exec);
    let base = build(&optim.x)?;
    let months = engine.horizon_months();
    let problem = MonthlyProblem {
        engine,
        tables: engine.tables(&base)?,
        months,
        extra: &credit_exponent,
    };
    let mu = cfg.mu.unwrap_or_else(|| auto_mu(optim.f, months));
    let f = |v: &[f64]| Ok(problem.residuals(v, mu));
    let fit = levenberg_marquardt(&f, alloc::vec![optim.x[d]; months], &cfg.lm)?;
    let mut v = fit.x;
    if cfg.exact_feasibility {
        problem.project(&mut v);
    }
    let objective = engine.hinge(&problem.values(&v));
    let mut out = base;
    out.phi.shift = PiecewiseShift::new(monthly_knots(months), v)?;
    let y0 = out.factors.initial_state();
    let decomposition = (0..months)
        .map(|k| {
            let t = k as f64 / 12.0;
            (t, q * out.lambda.rate(t, &y0), out.phi.rate(t, &y0))
        })
        .collect();
    Ok(LiquidityFit {
        model: out,
        objective_constant: optim.f,
        objective,
        decomposition,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calibration::objective::Sequential;
    use crate::curve::tests::{close, deterministic};

    #[test]
    fn panel_of_one_is_identity_minus_lambda() {
        let b = BankCredit::new(
            PiecewiseShift::new(alloc::vec![0.0, 1.0, 2.0], alloc::vec![0.001, 0.002]).unwrap(),
            alloc::vec![0.003],
        );
        let p = panel_average(core::slice::from_ref(&b), 0.0005).unwrap();
        assert_eq!(p.loading, b.loading);
        for t in [0.0, 0.5, 1.0, 3.0] {
            assert!(close(p.shift.value(t), b.shift.value(t) - 0.0005, 1e-15));
        }
        assert_eq!(panel_average(&[], 0.0), Err(Error::EmptyPanel));
    }

    #[test]
    fn symmetric_panel_cancels() {
        let a = BankCredit::flat(0.002, 1);
        let b = BankCredit::flat(-0.002, 1);
        let p = panel_average(&[a, b], 0.0005).unwrap();
        assert!(close(p.shift.value(2.0), -0.0005, 1e-15));
    }

    #[test]
    fn solver_finds_roots() {
        let r = solve_increasing(|x| Ok(x * x * x - 2.0), 0.0, 0.1, 1e-14).unwrap();
        assert!(math::abs(r * r * r - 2.0) <= 1e-14);
        let r = solve_increasing(|x| Ok(x - 5.0), 0.0, 1e-3, 0.0).unwrap();
        assert!(math::abs(r - 5.0) < 1e-14);
    }

    #[test]
    fn constant_hazard_quotes_recover_flat_intensity() {
        let m = deterministic(0.01, 0.0, 0.0);
        let (h, rec) = (0.02, 0.4);
        let quotes: Vec<(f64, f64)> = [1.0, 3.0, 5.0].iter().map(|&t| (t, (1.0 - rec) * h)).collect();
        let mut cfg = CalibrationConfig::default();
        cfg.credit.bank.max_iter = 10;
        let fit = calibrate_bank_cds(&m, "X", &quotes, &cfg, 0, &Sequential).unwrap();
        assert!(fit.max_error_bp() <= 0.01);
        for t in [0.2, 2.0, 4.5] {
            let l = fit.credit.intensity(t, &[m.factors.factors()[0].y0]);
            assert!(math::abs(l / h - 1.0) < 0.01, "{t}: {l}");
        }
    }

    #[test]
    fn zero_quotes_give_zero_intensity() {
        let m = deterministic(0.01, 0.0, 0.0);
        let quotes = [(1.0, 0.0), (2.0, 0.0)];
        let cfg = CalibrationConfig::default();
        let fit = calibrate_bank_cds(&m, "Z", &quotes, &cfg, 0, &Sequential).unwrap();
        assert!(fit.max_error_bp() <= 1e-6);
        let y0 = m.factors.initial_state();
        assert!(math::abs(fit.credit.intensity(1.5, &y0)) < 1e-9);
    }
}
