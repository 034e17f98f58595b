//! Oracle suite run against a model.
//!
//! Each check has a stable id:
//!
//! - `riccati_ode/f{i}`: closed-form transform of factor `i` against the
//!   adaptive RK4 integration of its Riccati system, relative error ≤ 1e-9.
//! - `mc/{expression}`: closed-form expectation against the Monte Carlo
//!   oracle, within 3 standard errors.
//! - `noarb`: one-period no-arbitrage residual ≤ 1e-12.
//! - `caplet_char_fn_norm`: characteristic function of the caplet log-payoff
//!   equals 1 at the origin to 1e-12.
//!
//! [`run_against`] takes separate models for the closed forms and for the
//! oracles, which is how a corrupted parameter is shown to be caught.

use std::fmt::Write as _;

use num_complex::Complex64;
use rollover_core::affine::{factor_transform, factor_transform_numeric, NUMERIC_TOL};
use rollover_core::curve::ModelSpec;
use rollover_core::instruments::{caplet_char_fn, survival_discount, BankCredit};

use crate::mc::{mc_expectations, Expr, McConfig, McError};

/// Relative tolerance of the Riccati check.
pub const RICCATI_TOL: f64 = 1e-9;
/// Standard errors allowed in Monte Carlo checks.
pub const MC_SIGMAS: f64 = 3.0;
/// Tolerance of the identity checks.
pub const IDENTITY_TOL: f64 = 1e-12;

const TAUS: [f64; 5] = [0.25, 1.0, 5.0, 10.0, 30.0];

/// Outcome of one check.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    /// Stable identifier.
    pub id: String,
    /// Whether the check passed.
    pub passed: bool,
    /// Measured quantity and threshold.
    pub detail: String,
}

/// Outcome of the suite.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ValidationReport {
    /// Checks in execution order.
    pub checks: Vec<Check>,
}

impl ValidationReport {
    /// Whether every check passed.
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    /// Ids of failing checks.
    pub fn failures(&self) -> Vec<&str> {
        self.checks.iter().filter(|c| !c.passed).map(|c| c.id.as_str()).collect()
    }

    /// One line per check.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for c in &self.checks {
            let _ = writeln!(s, "{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.id, c.detail);
        }
        let n = self.checks.iter().filter(|c| c.passed).count();
        let _ = writeln!(s, "{n} of {} checks passed", self.checks.len());
        s
    }

    fn push(&mut self, id: impl Into<String>, passed: bool, detail: String) {
        self.checks.push(Check {
            id: id.into(),
            passed,
            detail,
        });
    }
}

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

/// Runs every check with the same model on both sides.
pub fn run(model: &ModelSpec, mc: &McConfig) -> Result<ValidationReport, McError> {
    run_against(model, model, mc)
}

/// Runs every check, evaluating closed forms on `closed` and oracles on
/// `reference`.
pub fn run_against(closed: &ModelSpec, reference: &ModelSpec, mc: &McConfig) -> Result<ValidationReport, McError> {
    mc.validate()?;
    closed.validate()?;
    reference.validate()?;
    if closed.dim() != reference.dim() {
        return Err(McError::Spec("models differ in factor count".into()));
    }
    let mut report = ValidationReport::default();
    riccati_checks(closed, reference, &mut report);
    mc_checks(closed, reference, mc, &mut report)?;
    identity_checks(closed, &mut report);
    Ok(report)
}

fn riccati_checks(closed: &ModelSpec, reference: &ModelSpec, report: &mut ValidationReport) {
    for i in 0..closed.dim() {
        let fc = &closed.factors.factors()[i];
        let fr = &reference.factors.factors()[i];
        let a = reference.rc.loading[i];
        let b = reference.lambda.loading[i];
        let weights = [-a, -(a + reference.q * b), -1.0, -0.1];
        let mut worst: f64 = 0.0;
        let mut failure = None;
        for &tau in &TAUS {
            for &w in &weights {
                for u in [0.0, -0.5] {
                    let numeric = factor_transform_numeric(fr, tau, u, w, NUMERIC_TOL).map(|(p, s)| (p + s * fr.y0).exp());
                    let exact = factor_transform(fc, tau, u, w).map(|(p, s)| (p + s * fc.y0).exp());
                    match (exact, numeric) {
                        (Ok(x), Ok(y)) => worst = worst.max(rel_err(x, y)),
                        (x, y) => {
                            failure.get_or_insert(format!("tau {tau}, u {u}, w {w}: {x:?} vs {y:?}"));
                        }
                    }
                }
            }
        }
        let passed = failure.is_none() && worst <= RICCATI_TOL;
        let detail = failure.unwrap_or_else(|| format!("max relative error {worst:.3e} (tol {RICCATI_TOL:e})"));
        report.push(format!("riccati_ode/f{i}"), passed, detail);
    }
}

/// Panel intensity `λ + Λ` as a bank, so survival discounting has a subject.
fn panel_bank(m: &ModelSpec) -> BankCredit {
    BankCredit::new(m.lambda.shift.shifted(m.big_lambda), m.lambda.loading.clone())
}

fn mc_checks(closed: &ModelSpec, reference: &ModelSpec, mc: &McConfig, report: &mut ValidationReport) -> Result<(), McError> {
    let (t_end, t_prev, t_next) = (5.0, 2.0, 2.5);
    let bank = panel_bank(reference);
    let exprs = [
        Expr::OisDiscount { t_end },
        Expr::FundingGrowth { t_end },
        Expr::RiskyDiscount { t_end },
        Expr::RolloverForwardTerm { t_prev, t_next },
        Expr::LiborLegPv { t_prev, t_next },
        Expr::SurvivalDiscount {
            bank: bank.clone(),
            t_end,
        },
    ];
    let analytic = [
        closed.ois_discount(0.0, t_end),
        closed.funding_growth(0.0, t_end),
        closed.risky_discount(0.0, t_end),
        closed.rollover_forward_term(0.0, t_prev, t_next),
        closed.libor_leg_pv(0.0, t_prev, t_next),
        survival_discount(closed, &panel_bank(closed), 0.0, t_end),
    ];
    let names = [
        "ois_discount",
        "funding_growth",
        "risky_discount",
        "rollover_forward_term",
        "libor_leg_pv",
        "survival_discount",
    ];
    let estimates = mc_expectations(reference, &exprs, mc)?;
    for ((name, value), est) in names.iter().zip(analytic).zip(estimates) {
        let id = format!("mc/{name}");
        match value {
            Ok(v) => {
                let z = est.z_score(v);
                report.push(
                    id,
                    z <= MC_SIGMAS,
                    format!(
                        "analytic {v:.12e}, MC {:.12e} ± {:.3e} ({z:.2} SE)",
                        est.estimate, est.std_error
                    ),
                );
            }
            Err(e) => report.push(id, false, format!("analytic evaluation failed: {e}")),
        }
    }
    Ok(())
}

fn identity_checks(m: &ModelSpec, report: &mut ValidationReport) {
    let mut worst: f64 = 0.0;
    let mut failure = None;
    for (t, tt) in [(0.0, 0.25), (0.0, 1.0), (0.5, 1.0), (2.0, 3.0), (4.5, 5.0)] {
        match m.noarb_residual(t, tt) {
            Ok(r) => worst = worst.max(r.abs()),
            Err(e) => {
                failure.get_or_insert(e.to_string());
            }
        }
    }
    let detail = failure
        .clone()
        .unwrap_or_else(|| format!("max |residual| {worst:.3e} (tol {IDENTITY_TOL:e})"));
    report.push("noarb", failure.is_none() && worst <= IDENTITY_TOL, detail);

    let strike = m.spot_libor(0.75, 1.0).unwrap_or(0.01);
    match caplet_char_fn(m, 0.75, 1.0, strike, Complex64::new(0.0, 0.0)) {
        Ok(v) => {
            let e = (v - 1.0).norm();
            report.push("caplet_char_fn_norm", e <= IDENTITY_TOL, format!("|phi(0) - 1| = {e:.3e}"));
        }
        Err(e) => report.push("caplet_char_fn_norm", false, e.to_string()),
    }
}
