//! The three interest-rate calibration stages.
//!
//! 1. [`stage1_ois`] fits the collateral factors and a constant `a₀` to the
//!    OIS discount bands, then bootstraps a piecewise `a₀(t)` through the
//!    bid-implied and ask-implied discount factors.
//! 2. [`stage2_basis`] freezes the OIS side, adds factors with zero collateral
//!    loading and fits `b`, `c` and a constant `d₀ = c₀ + q·b₀` to the 1m, 3m
//!    and 6m swap conditions.
//! 3. [`stage3_d0_term_structure`] replaces `d₀` by a monthly step function
//!    with a first-difference smoothness penalty.

use alloc::string::String;
use alloc::vec::Vec;

use super::asa::{adaptive_simulated_annealing, AsaConfig};
use super::credit::CreditConfig;
use super::de::{differential_evolution, DeConfig, OptimResult};
use super::lm::{cholesky_apply, cholesky_factor, cholesky_solve, levenberg_marquardt, LmConfig};
use super::objective::{band_residual, Bounds, Executor, ObjectiveFn, FELLER_WEIGHT};
use crate::affine::{CirFactor, FactorSet};
use crate::curve::{ModelSpec, PiecewiseShift, SpreadProjection, DEFAULT_BIG_LAMBDA, DEFAULT_Q};
use crate::instruments::TenorStructure;
use crate::market::{build_instruments, ois_discount_curve, QuoteKind, QuoteSet, Side, SwapCondition};
use crate::math;
use crate::{Error, Result};

/// Residuals this small count as inside the band.
pub const IN_BAND_TOL: f64 = 1e-12;

/// Global optimizer used by the stages.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum Optimizer {
    /// Differential evolution.
    #[default]
    De,
    /// Adaptive simulated annealing.
    Asa,
}

/// Parameter boxes shared by all stages.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct ParamBounds {
    /// Initial factor value.
    pub y0: (f64, f64),
    /// Mean-reversion speed.
    pub kappa: (f64, f64),
    /// Long-run level.
    pub theta: (f64, f64),
    /// Volatility.
    pub sigma: (f64, f64),
    /// Every projection loading.
    pub loading: (f64, f64),
    /// Constant `a₀` in the Stage 1 search.
    pub a0: (f64, f64),
    /// Constant `d₀` in the Stage 2 search.
    pub d0: (f64, f64),
}

impl Default for ParamBounds {
    fn default() -> Self {
        ParamBounds {
            y0: (1e-6, 1.0),
            kappa: (1e-3, 1.0),
            theta: (1e-6, 1.0),
            sigma: (1e-3, 1.0),
            loading: (0.0, 0.05),
            a0: (-0.01, 0.05),
            d0: (-0.01, 0.05),
        }
    }
}

impl ParamBounds {
    fn push_factor(&self, lo: &mut Vec<f64>, hi: &mut Vec<f64>) {
        for (l, h) in [self.y0, self.kappa, self.theta, self.sigma] {
            lo.push(l);
            hi.push(h);
        }
    }
}

/// Settings of the staged calibration.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct CalibrationConfig {
    /// Master seed; every stage derives its own stream from it.
    pub seed: u64,
    /// Factors fitted to OIS in Stage 1.
    pub ois_factors: usize,
    /// Total factors after Stage 2.
    pub factors: usize,
    /// Loss fraction in default.
    pub q: f64,
    /// Systemic intensity `Λ`.
    pub big_lambda: f64,
    /// Global optimizer.
    pub optimizer: Optimizer,
    /// DE settings for Stage 1 (`seed` is replaced by the derived stage seed).
    pub stage1: DeConfig,
    /// DE settings for Stage 2 (`seed` is replaced by the derived stage seed).
    pub stage2: DeConfig,
    /// ASA settings when [`Optimizer::Asa`] is selected.
    pub asa: AsaConfig,
    /// Parameter boxes.
    pub bounds: ParamBounds,
    /// Apply the Feller penalty.
    pub feller_penalty: bool,
    /// Stage 3 smoothness weight; `None` selects it from the Stage 2 fit.
    pub mu: Option<f64>,
    /// After the penalized Stage 3 fit, move every out-of-band condition
    /// into its band with a minimum-roughness correction.
    pub exact_feasibility: bool,
    /// Skip OIS maturities whose implied discount factor is not decreasing.
    pub skip_ois_inversions: bool,
    /// Stage 3 least-squares settings.
    pub lm: LmConfig,
    /// CDS and funding-liquidity settings.
    pub credit: CreditConfig,
}

impl Default for CalibrationConfig {
    fn default() -> Self {
        CalibrationConfig {
            seed: 1,
            ois_factors: 1,
            factors: 3,
            q: DEFAULT_Q,
            big_lambda: DEFAULT_BIG_LAMBDA,
            optimizer: Optimizer::De,
            stage1: DeConfig {
                max_iter: 400,
                ..DeConfig::default()
            },
            stage2: DeConfig {
                max_iter: 1500,
                ..DeConfig::default()
            },
            asa: AsaConfig::default(),
            bounds: ParamBounds::default(),
            feller_penalty: true,
            mu: None,
            exact_feasibility: true,
            skip_ois_inversions: true,
            lm: LmConfig::default(),
            credit: CreditConfig::default(),
        }
    }
}

impl CalibrationConfig {
    /// Seed of stage `k`, decorrelated from the master seed.
    pub fn stage_seed(&self, k: u64) -> u64 {
        self.seed ^ k.wrapping_mul(0x9E37_79B9_7F4A_7C15)
    }

    pub(crate) fn optimize(
        &self,
        objective: &ObjectiveFn<'_>,
        bounds: &Bounds,
        de: &DeConfig,
        stage: u64,
        initial: &[Vec<f64>],
        exec: &dyn Executor,
    ) -> OptimResult {
        let seed = self.stage_seed(stage);
        match self.optimizer {
            Optimizer::De => {
                let cfg = DeConfig { seed, ..de.clone() };
                differential_evolution(objective, bounds, &cfg, initial, exec)
            }
            Optimizer::Asa => {
                let cfg = AsaConfig { seed, ..self.asa.clone() };
                adaptive_simulated_annealing(objective, bounds, &cfg)
            }
        }
    }

    pub(crate) fn feller(&self, factors: &[CirFactor]) -> f64 {
        if !self.feller_penalty {
            return 0.0;
        }
        FELLER_WEIGHT * factors.iter().map(|f| f.feller_gap() * f.feller_gap()).sum::<f64>()
    }
}

/// Signed band residual of one instrument in the final fit.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct InstrumentResidual {
    /// Identifier such as `"OIS@5y"` or `"1m@5y"`.
    pub id: String,
    /// Maturity in years.
    pub maturity: f64,
    /// Model value.
    pub model: f64,
    /// Lower band edge.
    pub lo: f64,
    /// Upper band edge.
    pub hi: f64,
    /// Relative distance to the band; zero inside.
    pub residual: f64,
}

impl InstrumentResidual {
    /// Builds the record for a model value against `[lo, hi]`.
    pub fn new(id: String, maturity: f64, model: f64, lo: f64, hi: f64) -> Self {
        InstrumentResidual {
            id,
            maturity,
            model,
            lo,
            hi,
            residual: band_residual(model, lo, hi),
        }
    }

    /// Whether the model value lies in the band up to [`IN_BAND_TOL`].
    pub fn in_band(&self) -> bool {
        math::abs(self.residual) <= IN_BAND_TOL
    }

    /// Out-of-band distance as a fraction of the band width (`∞` for a
    /// zero-width band that is missed).
    pub fn excess_over_width(&self) -> f64 {
        if self.in_band() {
            return 0.0;
        }
        let dist = if self.model > self.hi {
            self.model - self.hi
        } else {
            self.lo - self.model
        };
        let w = self.hi - self.lo;
        if w > 0.0 {
            dist / w
        } else {
            f64::INFINITY
        }
    }
}

/// Outcome of a full calibration run.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CalibrationResult {
    /// Fitted model (mid `a₀` curve).
    pub model: ModelSpec,
    /// Bid-side bootstrapped `a₀`.
    pub a0_bid: PiecewiseShift,
    /// Ask-side bootstrapped `a₀`.
    pub a0_ask: PiecewiseShift,
    /// Hinge objective over the swap conditions of the last stage run.
    pub objective: f64,
    /// Stage 3 smoothness weight, if Stage 3 ran.
    pub mu: Option<f64>,
    /// Per-instrument residuals: OIS first, then swap conditions.
    pub residuals: Vec<InstrumentResidual>,
    /// Best objective per optimizer generation, concatenated over stages.
    pub trace: Vec<f64>,
    /// Objective evaluations over all stages.
    pub evaluations: usize,
    /// Master seed.
    pub seed: u64,
    /// Stages run.
    pub stages: u8,
}

/// Outcome of Stage 1.
#[derive(Debug, Clone, PartialEq)]
pub struct Stage1Fit {
    /// Model with the mid `a₀(t)` curve and zero spreads.
    pub model: ModelSpec,
    /// Bid-side `a₀(t)`.
    pub a0_bid: PiecewiseShift,
    /// Ask-side `a₀(t)`.
    pub a0_ask: PiecewiseShift,
    /// Bootstrap maturities.
    pub maturities: Vec<f64>,
    /// Bid-implied (upper) discount factors.
    pub d_bid: Vec<f64>,
    /// Ask-implied (lower) discount factors.
    pub d_ask: Vec<f64>,
    /// `(maturity, bid residual, ask residual)` of the bootstrapped curves.
    pub knot_residuals: Vec<(f64, f64, f64)>,
    /// Hinge objective of the constant-`a₀` global fit.
    pub objective: f64,
    /// Optimizer diagnostics.
    pub optim: OptimResult,
}

impl Stage1Fit {
    /// Model discount factors against their bands.
    pub fn residuals(&self) -> Result<Vec<InstrumentResidual>> {
        self.maturities
            .iter()
            .zip(self.d_ask.iter().zip(&self.d_bid))
            .map(|(&t, (&lo, &hi))| {
                Ok(InstrumentResidual::new(
                    alloc::format!("OIS@{t}y"),
                    t,
                    self.model.ois_discount(0.0, t)?,
                    lo,
                    hi,
                ))
            })
            .collect()
    }
}

fn factors_from(x: &[f64]) -> Result<Vec<CirFactor>> {
    x.chunks_exact(4).map(|p| CirFactor::new(p[1], p[2], p[3], p[0])).collect()
}

/// Stage 1: OIS fit and bootstrap of `a₀(t)` on both sides of the market.
pub fn stage1_ois(qs: &QuoteSet, cfg: &CalibrationConfig, exec: &dyn Executor) -> Result<Stage1Fit> {
    let ois: Vec<_> = if cfg.skip_ois_inversions {
        qs.clean_ois()
    } else {
        qs.of_kind(QuoteKind::Ois)
    };
    if ois.is_empty() {
        return Err(Error::MissingQuote("no OIS quotes".into()));
    }
    let bid = ois_discount_curve(&ois, Side::Bid)?;
    let ask = ois_discount_curve(&ois, Side::Ask)?;
    let maturities: Vec<f64> = bid.iter().map(|p| p.0).collect();
    let d_bid: Vec<f64> = bid.iter().map(|p| p.1).collect();
    let d_ask: Vec<f64> = ask.iter().map(|p| p.1).collect();
    let d = cfg.ois_factors.max(1);
    let b = &cfg.bounds;

    // x = [y0, κ, θ, σ] per factor, then a per factor, then a₀
    let mut lo = Vec::new();
    let mut hi = Vec::new();
    for _ in 0..d {
        b.push_factor(&mut lo, &mut hi);
    }
    for _ in 0..d {
        lo.push(b.loading.0);
        hi.push(b.loading.1);
    }
    lo.push(b.a0.0);
    hi.push(b.a0.1);
    let bounds = Bounds::new(lo, hi)?;
    let date = qs.date;
    let build = |x: &[f64]| -> Result<ModelSpec> {
        let fs = FactorSet::new(factors_from(&x[..4 * d])?)?;
        let rc = SpreadProjection::constant(x[5 * d], x[4 * d..5 * d].to_vec());
        ModelSpec::ois_only(fs, rc, date)
    };
    let objective = |x: &[f64]| -> f64 {
        let Ok(m) = build(x) else {
            return f64::INFINITY;
        };
        let mut acc = cfg.feller(m.factors.factors());
        for (i, &t) in maturities.iter().enumerate() {
            match m.ois_discount(0.0, t) {
                Ok(p) => {
                    let r = band_residual(p, d_ask[i], d_bid[i]);
                    acc += r * r;
                }
                Err(_) => return f64::INFINITY,
            }
        }
        acc
    };
    let optim = cfg.optimize(&objective, &bounds, &cfg.stage1, 1, &[], exec);
    let global = build(&optim.x)?;

    // D(T) = exp(−∫₀ᵀ a₀)·F(T) with F the factor part, so each knot solves in closed form
    let mut knots = alloc::vec![0.0];
    knots.extend_from_slice(&maturities);
    let mut zero = global.clone();
    zero.rc.shift = PiecewiseShift::constant(0.0);
    let factor_part: Vec<f64> = maturities
        .iter()
        .map(|&t| zero.ois_discount(0.0, t))
        .collect::<Result<_>>()?;
    let side_curve = |targets: &[f64]| -> Result<PiecewiseShift> {
        let mut values = Vec::with_capacity(targets.len());
        let mut integral = 0.0;
        let mut prev = 1.0;
        for (k, &dk) in targets.iter().enumerate() {
            if !(dk < prev) {
                return Err(Error::Bootstrap {
                    maturity: maturities[k],
                    reason: alloc::format!("discount factor {dk} does not decrease from {prev}"),
                });
            }
            let width = knots[k + 1] - knots[k];
            let v = (math::ln(factor_part[k] / dk) - integral) / width;
            integral += v * width;
            values.push(v);
            prev = dk;
        }
        PiecewiseShift::new(knots.clone(), values)
    };
    let a0_bid = side_curve(&d_bid)?;
    let a0_ask = side_curve(&d_ask)?;
    let mid = PiecewiseShift::new(
        knots.clone(),
        a0_bid
            .values()
            .iter()
            .zip(a0_ask.values())
            .map(|(x, y)| 0.5 * (x + y))
            .collect(),
    )?;
    let mut knot_residuals = Vec::with_capacity(maturities.len());
    let mut with_shift = global.clone();
    for (k, &t) in maturities.iter().enumerate() {
        with_shift.rc.shift = a0_bid.clone();
        let rb = with_shift.ois_discount(0.0, t)? - d_bid[k];
        with_shift.rc.shift = a0_ask.clone();
        let ra = with_shift.ois_discount(0.0, t)? - d_ask[k];
        knot_residuals.push((t, rb, ra));
    }
    let mut model = global;
    model.rc.shift = mid;
    model.q = cfg.q;
    model.big_lambda = cfg.big_lambda;
    model.validate()?;
    Ok(Stage1Fit {
        model,
        a0_bid,
        a0_ask,
        maturities,
        d_bid,
        d_ask,
        knot_residuals,
        objective: optim.f,
        optim,
    })
}

/// Swap conditions with fixed bands and shared per-tenor leg tables.
#[derive(Debug, Clone, PartialEq)]
pub struct SwapEngine {
    conditions: Vec<SwapCondition>,
    bands: Vec<(f64, f64)>,
    // (tenor in months, longest leg needed)
    tenors: Vec<(u32, TenorStructure)>,
    // (tenor index, period count) per condition
    index: Vec<(usize, usize)>,
    // OIS discount at each payment date per tenor
    discounts: Vec<Vec<f64>>,
}

/// Leg tables of one model evaluation: `B_j` per tenor and period.
pub type LegTables = Vec<Vec<f64>>;

impl SwapEngine {
    /// Freezes the bands of `conditions` at the OIS annuities of `model`.
    pub fn new(conditions: Vec<SwapCondition>, model: &ModelSpec) -> Result<Self> {
        if conditions.is_empty() {
            return Err(Error::MissingQuote("no swap conditions".into()));
        }
        let mut tenors: Vec<(u32, f64)> = Vec::new();
        for c in &conditions {
            let m = c.leg.tenor_months();
            match tenors.iter_mut().find(|t| t.0 == m) {
                Some(t) => t.1 = t.1.max(c.maturity),
                None => tenors.push((m, c.maturity)),
            }
        }
        tenors.sort_by_key(|t| t.0);
        let tenors: Vec<(u32, TenorStructure)> = tenors
            .into_iter()
            .map(|(m, t)| Ok((m, TenorStructure::regular(0.0, t, m)?)))
            .collect::<Result<_>>()?;
        let index = conditions
            .iter()
            .map(|c| {
                let k = tenors.iter().position(|t| t.0 == c.leg.tenor_months()).unwrap_or(0);
                (k, c.leg.payment_dates().len())
            })
            .collect();
        let bands = conditions.iter().map(|c| c.band(model)).collect::<Result<_>>()?;
        let discounts = tenors
            .iter()
            .map(|(_, leg)| {
                leg.payment_dates()
                    .iter()
                    .map(|&t| model.ois_discount(0.0, t))
                    .collect::<Result<Vec<f64>>>()
            })
            .collect::<Result<_>>()?;
        Ok(SwapEngine {
            conditions,
            bands,
            tenors,
            index,
            discounts,
        })
    }

    /// Conditions in order.
    pub fn conditions(&self) -> &[SwapCondition] {
        &self.conditions
    }

    /// Frozen bands in order.
    pub fn bands(&self) -> &[(f64, f64)] {
        &self.bands
    }

    /// Months covered by the longest leg.
    pub fn horizon_months(&self) -> usize {
        self.tenors
            .iter()
            .map(|(m, l)| *m as usize * l.payment_dates().len())
            .max()
            .unwrap_or(0)
    }

    /// `B_j` tables for `model`, whose OIS side must match the one the
    /// engine was built with.
    pub fn tables(&self, model: &ModelSpec) -> Result<LegTables> {
        self.tenors.iter().map(|(_, leg)| model.leg_growth_schedule(leg)).collect()
    }

    /// Condition values `Σ_{j ≤ n} (B_j e^{E_j} − D_j)` with period exponent
    /// `E_j = exponent(months, j)`.
    pub fn values(&self, tables: &LegTables, exponent: &dyn Fn(u32, usize) -> f64) -> Vec<f64> {
        let cum: Vec<Vec<f64>> = self
            .tenors
            .iter()
            .enumerate()
            .map(|(k, (m, _))| {
                let mut acc = 0.0;
                let mut out = Vec::with_capacity(tables[k].len());
                for (j, (b, d)) in tables[k].iter().zip(&self.discounts[k]).enumerate() {
                    acc += b * math::exp(exponent(*m, j)) - d;
                    out.push(acc);
                }
                out
            })
            .collect();
        self.index.iter().map(|&(k, n)| cum[k][n - 1]).collect()
    }

    /// Residual records for the given values.
    pub fn residuals(&self, values: &[f64]) -> Vec<InstrumentResidual> {
        self.conditions
            .iter()
            .zip(values)
            .zip(&self.bands)
            .map(|((c, &v), &(lo, hi))| InstrumentResidual::new(c.id(), c.maturity, v, lo, hi))
            .collect()
    }

    /// `Σ` squared band residuals.
    pub fn hinge(&self, values: &[f64]) -> f64 {
        values
            .iter()
            .zip(&self.bands)
            .map(|(&v, &(lo, hi))| {
                let r = band_residual(v, lo, hi);
                r * r
            })
            .sum()
    }

    /// Values of the conditions under `model`'s own `c₀ + q·b₀`.
    pub fn model_values(&self, model: &ModelSpec) -> Result<Vec<f64>> {
        let tables = self.tables(model)?;
        let shift = model.phi.shift.combine(1.0, &model.lambda.shift, model.q);
        Ok(self.values(&tables, &|m, j| {
            let d = m as f64 / 12.0;
            shift.integral(j as f64 * d, (j + 1) as f64 * d)
        }))
    }
}

/// Outcome of Stage 2.
#[derive(Debug, Clone, PartialEq)]
pub struct Stage2Fit {
    /// Model with constant `d₀` stored in `c₀` and `b₀ = 0`.
    pub model: ModelSpec,
    /// Fitted constant `d₀`.
    pub d0: f64,
    /// Hinge objective over the swap conditions.
    pub objective: f64,
    /// Optimizer diagnostics.
    pub optim: OptimResult,
}

/// Swap conditions of `qs` with bands frozen at the Stage 1 annuities.
pub fn swap_engine(qs: &QuoteSet, stage1: &Stage1Fit) -> Result<SwapEngine> {
    let inst = build_instruments(qs)?;
    SwapEngine::new(inst.swaps, &stage1.model)
}

/// Stage 2: loadings `b`, `c`, constant `d₀` and the added factors.
pub fn stage2_basis(
    engine: &SwapEngine,
    stage1: &Stage1Fit,
    cfg: &CalibrationConfig,
    exec: &dyn Executor,
) -> Result<Stage2Fit> {
    let base = &stage1.model;
    let d1 = base.dim();
    let d = cfg.factors.max(d1);
    let extra = d - d1;
    let b = &cfg.bounds;
    // x = [b (d), c (d), d₀, then [y0, κ, θ, σ] per added factor]
    let mut lo = alloc::vec![b.loading.0; 2 * d];
    let mut hi = alloc::vec![b.loading.1; 2 * d];
    lo.push(b.d0.0);
    hi.push(b.d0.1);
    for _ in 0..extra {
        b.push_factor(&mut lo, &mut hi);
    }
    let bounds = Bounds::new(lo, hi)?;
    let build = |x: &[f64]| -> Result<ModelSpec> {
        let mut fs = base.factors.clone();
        for f in factors_from(&x[2 * d + 1..])? {
            fs.push(f)?;
        }
        let mut a = base.rc.loading.clone();
        a.resize(d, 0.0);
        ModelSpec::new(
            fs,
            SpreadProjection::new(base.rc.shift.clone(), a),
            SpreadProjection::constant(0.0, x[..d].to_vec()),
            SpreadProjection::constant(x[2 * d], x[d..2 * d].to_vec()),
            cfg.q,
            cfg.big_lambda,
            base.valuation_date,
        )
    };
    let objective = |x: &[f64]| -> f64 {
        let Ok(m) = build(x) else {
            return f64::INFINITY;
        };
        let Ok(tables) = engine.tables(&m) else {
            return f64::INFINITY;
        };
        let d0 = x[2 * d];
        let v = engine.values(&tables, &|months, _| d0 * months as f64 / 12.0);
        let h = engine.hinge(&v) + cfg.feller(&m.factors.factors()[d1..]);
        if h.is_nan() {
            f64::INFINITY
        } else {
            h
        }
    };
    let optim = cfg.optimize(&objective, &bounds, &cfg.stage2, 2, &[], exec);
    let model = build(&optim.x)?;
    Ok(Stage2Fit {
        d0: optim.x[2 * d],
        objective: optim.f,
        model,
        optim,
    })
}

/// Outcome of Stage 3.
#[derive(Debug, Clone, PartialEq)]
pub struct Stage3Fit {
    /// Model with the monthly `d₀(t)` stored in `c₀` and `b₀ = 0`.
    pub model: ModelSpec,
    /// Smoothness weight used.
    pub mu: f64,
    /// Hinge objective over the swap conditions.
    pub objective: f64,
    /// `Σ (Δd₀)²`.
    pub roughness: f64,
}

/// Monthly step-function exponents and Jacobian for Stage 3.
///
/// `extra(months, j)` is a fixed additional period exponent, used by the
/// funding-liquidity stage for `q∫b₀`.
pub(crate) struct MonthlyProblem<'a> {
    pub engine: &'a SwapEngine,
    pub tables: LegTables,
    pub months: usize,
    pub extra: &'a dyn Fn(u32, usize) -> f64,
}

impl MonthlyProblem<'_> {
    fn exponent(&self, v: &[f64], m: u32, j: usize) -> f64 {
        let start = j * m as usize;
        let mut e = (self.extra)(m, j);
        for k in start..start + m as usize {
            e += v[k.min(self.months - 1)] / 12.0;
        }
        e
    }

    pub fn values(&self, v: &[f64]) -> Vec<f64> {
        self.engine.values(&self.tables, &|m, j| self.exponent(v, m, j))
    }

    /// Row-major `∂value/∂v` (conditions × months).
    pub fn jacobian(&self, v: &[f64]) -> Vec<f64> {
        let n = self.months;
        let e = &self.engine;
        let mut jac = alloc::vec![0.0; e.conditions.len() * n];
        for (i, &(k, np)) in e.index.iter().enumerate() {
            let m = e.tenors[k].0;
            for j in 0..np {
                let w = self.tables[k][j] * math::exp(self.exponent(v, m, j)) / 12.0;
                let start = j * m as usize;
                for kk in start..start + m as usize {
                    jac[i * n + kk.min(n - 1)] += w;
                }
            }
        }
        jac
    }

    /// Hinge residuals, their Jacobian, and `√μ·Δv` rows.
    pub fn residuals(&self, v: &[f64], mu: f64) -> (Vec<f64>, Vec<f64>) {
        let n = self.months;
        let vals = self.values(v);
        let full = self.jacobian(v);
        let mut r = Vec::with_capacity(vals.len() + n);
        let mut jac = Vec::with_capacity((vals.len() + n) * n);
        for (i, (&p, &(lo, hi))) in vals.iter().zip(&self.engine.bands).enumerate() {
            let res = band_residual(p, lo, hi);
            r.push(res);
            let scale = if res > 0.0 {
                1.0 / scale_of(hi)
            } else if res < 0.0 {
                1.0 / scale_of(lo)
            } else {
                0.0
            };
            jac.extend(full[i * n..(i + 1) * n].iter().map(|g| g * scale));
        }
        let s = math::sqrt(mu);
        for k in 0..n.saturating_sub(1) {
            r.push(s * (v[k + 1] - v[k]));
            let mut row = alloc::vec![0.0; n];
            row[k] = -s;
            row[k + 1] = s;
            jac.extend(row);
        }
        (r, jac)
    }

    /// Moves every out-of-band condition onto a target just inside its band
    /// using the smallest correction in the roughness metric
    /// `M = ΔᵀΔ + εI`. Conditions touched once stay pinned afterwards.
    /// Keeps the iterate with the lowest hinge, so `v` never gets worse.
    pub fn project(&self, v: &mut [f64]) {
        let mut best = v.to_vec();
        let mut best_h = self.engine.hinge(&self.values(v));
        self.project_steps(v, &mut best, &mut best_h);
        v.copy_from_slice(&best);
    }

    fn project_steps(&self, v: &mut [f64], best: &mut Vec<f64>, best_h: &mut f64) {
        let n = self.months;
        let mut metric = alloc::vec![0.0; n * n];
        for k in 0..n {
            metric[k * n + k] += 1e-4;
            if k + 1 < n {
                metric[k * n + k] += 1.0;
                metric[(k + 1) * n + k + 1] += 1.0;
                metric[k * n + k + 1] -= 1.0;
                metric[(k + 1) * n + k] -= 1.0;
            }
        }
        let bands = &self.engine.bands;
        let mut pinned = alloc::vec![false; bands.len()];
        for _ in 0..100 {
            let vals = self.values(v);
            let h = self.engine.hinge(&vals);
            if !h.is_finite() {
                return;
            }
            if h < *best_h {
                *best_h = h;
                best.copy_from_slice(v);
            }
            let mut any = false;
            for (i, (&p, &(lo, hi))) in vals.iter().zip(bands).enumerate() {
                if math::abs(band_residual(p, lo, hi)) > IN_BAND_TOL {
                    pinned[i] = true;
                    any = true;
                }
            }
            if !any {
                return;
            }
            let rows: Vec<usize> = (0..bands.len()).filter(|&i| pinned[i]).collect();
            let full = self.jacobian(v);
            let targets: Vec<f64> = rows
                .iter()
                .map(|&i| {
                    let (lo, hi) = bands[i];
                    let margin = 1e-3 * (hi - lo);
                    vals[i].clamp(lo + margin, hi - margin) - vals[i]
                })
                .collect();
            // z_r = M⁻¹ J_rᵀ for each pinned row
            let mut mf = metric.clone();
            if !cholesky_factor(&mut mf, n) {
                return;
            }
            let z: Vec<Vec<f64>> = rows
                .iter()
                .map(|&i| {
                    let mut col = full[i * n..(i + 1) * n].to_vec();
                    cholesky_apply(&mf, n, &mut col);
                    col
                })
                .collect();
            let k = rows.len();
            let mut s = alloc::vec![0.0; k * k];
            let mut trace = 0.0;
            for a in 0..k {
                for b in 0..k {
                    s[a * k + b] = dot(&full[rows[a] * n..(rows[a] + 1) * n], &z[b]);
                }
                trace += s[a * k + a];
            }
            for a in 0..k {
                s[a * k + a] += 1e-14 * trace / k as f64;
            }
            let mut lam = targets;
            if !cholesky_solve(&mut s, k, &mut lam) {
                return;
            }
            for (a, zr) in z.iter().enumerate() {
                for (vk, zk) in v.iter_mut().zip(zr) {
                    *vk += lam[a] * zk;
                }
            }
        }
    }
}

fn scale_of(v: f64) -> f64 {
    let a = math::abs(v);
    if a > 0.0 {
        a
    } else {
        1.0
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Smoothness weight making a 1 bp step at every knot cost as much as the
/// Stage 2 hinge objective.
pub fn auto_mu(stage2_objective: f64, knots: usize) -> f64 {
    let steps = knots.saturating_sub(1).max(1) as f64;
    stage2_objective.max(1e-16) / (steps * 1e-8)
}

pub(crate) fn monthly_knots(months: usize) -> Vec<f64> {
    (0..=months).map(|k| k as f64 / 12.0).collect()
}

/// Stage 3: monthly `d₀(t)` minimizing hinge plus `μ·Σ(Δd₀)²`.
pub fn stage3_d0_term_structure(
    engine: &SwapEngine,
    stage2: &Stage2Fit,
    mu: Option<f64>,
    cfg: &CalibrationConfig,
) -> Result<Stage3Fit> {
    let months = engine.horizon_months();
    let zero = |_: u32, _: usize| 0.0;
    let problem = MonthlyProblem {
        engine,
        tables: engine.tables(&stage2.model)?,
        months,
        extra: &zero,
    };
    let mu = mu.unwrap_or_else(|| auto_mu(stage2.objective, months));
    if !(mu >= 0.0) {
        return Err(Error::InvalidParameter(alloc::format!("smoothness weight must be >= 0, got {mu}")));
    }
    let v0 = alloc::vec![stage2.d0; months];
    let f = |v: &[f64]| Ok(problem.residuals(v, mu));
    let fit = levenberg_marquardt(&f, v0, &cfg.lm)?;
    let mut v = fit.x;
    if cfg.exact_feasibility {
        problem.project(&mut v);
    }
    let values = problem.values(&v);
    let objective = engine.hinge(&values);
    let roughness = v.windows(2).map(|w| (w[1] - w[0]) * (w[1] - w[0])).sum();
    let mut model = stage2.model.clone();
    model.phi.shift = PiecewiseShift::new(monthly_knots(months), v)?;
    model.lambda.shift = PiecewiseShift::constant(0.0);
    Ok(Stage3Fit {
        model,
        mu,
        objective,
        roughness,
    })
}

/// Runs stages `1..=stages` (at most 3) on a quote set.
pub fn calibrate(qs: &QuoteSet, cfg: &CalibrationConfig, stages: u8, exec: &dyn Executor) -> Result<CalibrationResult> {
    if qs.is_empty() {
        return Err(Error::MissingQuote("quote set is empty".into()));
    }
    let s1 = stage1_ois(qs, cfg, exec)?;
    let mut residuals = s1.residuals()?;
    let mut trace = s1.optim.trace.clone();
    let mut evaluations = s1.optim.evaluations;
    let mut model = s1.model.clone();
    let mut objective = residuals.iter().map(|r| r.residual * r.residual).sum();
    let mut mu = None;
    if stages >= 2 {
        let engine = swap_engine(qs, &s1)?;
        let s2 = stage2_basis(&engine, &s1, cfg, exec)?;
        trace.extend_from_slice(&s2.optim.trace);
        evaluations += s2.optim.evaluations;
        model = s2.model.clone();
        objective = s2.objective;
        if stages >= 3 {
            let s3 = stage3_d0_term_structure(&engine, &s2, cfg.mu, cfg)?;
            trace.push(s3.objective);
            model = s3.model;
            objective = s3.objective;
            mu = Some(s3.mu);
        }
        residuals.extend(engine.residuals(&engine.model_values(&model)?));
    }
    Ok(CalibrationResult {
        model,
        a0_bid: s1.a0_bid,
        a0_ask: s1.a0_ask,
        objective,
        mu,
        residuals,
        trace,
        evaluations,
        seed: cfg.seed,
        stages: stages.min(3),
    })
}
