//! Monte Carlo oracle for the closed-form expectations.
//!
//! Factors are sampled either from the exact noncentral chi-square transition
//! or by full-truncation Euler. Running integrals `∫y ds` use the trapezoid
//! rule on the simulation grid, which always contains the event dates of the
//! expression being estimated.
//!
//! Paths are grouped in fixed blocks of [`BLOCK`] paths. Block `k` draws from
//! ChaCha8 stream `k` of the master seed, and block results are reduced in
//! block order with compensated sums, so an estimate does not depend on how
//! many workers ran the blocks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, Poisson, StandardNormal};
use rayon::prelude::*;
use rollover_core::affine::{CirFactor, SIGMA_EPS};
use rollover_core::curve::ModelSpec;
use rollover_core::instruments::BankCredit;
use serde::{Deserialize, Serialize};

/// Paths per RNG block.
pub const BLOCK: usize = 1024;
/// Smallest path count accepted for a reported comparison.
pub const MIN_PATHS: usize = 1000;

/// Discretization of the factor dynamics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    /// Exact noncentral chi-square transition.
    #[default]
    Exact,
    /// Full-truncation Euler.
    Euler,
}

/// Simulation settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct McConfig {
    /// Number of paths.
    pub n_paths: usize,
    /// Grid points per year (event dates are added on top).
    pub steps_per_year: usize,
    /// Master seed.
    pub seed: u64,
    /// Discretization.
    pub scheme: Scheme,
    /// Worker threads; `0` uses every available core.
    pub workers: usize,
}

impl Default for McConfig {
    fn default() -> Self {
        McConfig {
            n_paths: 100_000,
            steps_per_year: 120,
            seed: 1,
            scheme: Scheme::Exact,
            workers: 0,
        }
    }
}

impl McConfig {
    /// Rejects path counts below [`MIN_PATHS`] and an empty grid.
    pub fn validate(&self) -> Result<(), McError> {
        if self.n_paths < MIN_PATHS {
            return Err(McError::Config(format!(
                "n_paths = {} is below the minimum of {MIN_PATHS}",
                self.n_paths
            )));
        }
        if self.steps_per_year == 0 {
            return Err(McError::Config("steps_per_year must be positive".into()));
        }
        Ok(())
    }
}

/// Monte Carlo failures.
#[derive(Debug, thiserror::Error)]
pub enum McError {
    /// Malformed expression.
    #[error("malformed expression: {0}")]
    Spec(String),
    /// Rejected configuration.
    #[error("invalid Monte Carlo configuration: {0}")]
    Config(String),
    /// Error raised by the model while evaluating a payoff.
    #[error(transparent)]
    Model(#[from] rollover_core::Error),
}

/// Expectations at the valuation date and the initial state.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    /// `E[exp(γ∫₀^τ y + u·y(τ))]` for one factor.
    Transform {
        /// Factor index.
        factor: usize,
        /// Running weight `γ`.
        gamma: f64,
        /// Terminal weight `u`.
        u: f64,
        /// Horizon.
        tau: f64,
    },
    /// `E[exp(−∫₀ᵀ r_c)]`.
    OisDiscount {
        /// Maturity.
        t_end: f64,
    },
    /// `E[exp(∫₀ᵀ φ)]`.
    FundingGrowth {
        /// Maturity.
        t_end: f64,
    },
    /// `E[exp(−∫₀ᵀ (r_c + qλ))]`.
    RiskyDiscount {
        /// Maturity.
        t_end: f64,
    },
    /// `E[exp(−∫₀^{T_prev} (r_c + qλ)) · exp(∫_{T_prev}^{T_next} φ)]`.
    RolloverForwardTerm {
        /// Start of the accrual period.
        t_prev: f64,
        /// End of the accrual period.
        t_next: f64,
    },
    /// `E[exp(−∫₀^{T_next} r_c) · δ·L(T_prev, T_next)]`.
    LiborLegPv {
        /// Fixing date.
        t_prev: f64,
        /// Payment date.
        t_next: f64,
    },
    /// `E[exp(−∫₀ᵀ (r_c + λ̂ⱼ))]`.
    SurvivalDiscount {
        /// Bank intensity coefficients.
        bank: BankCredit,
        /// Maturity.
        t_end: f64,
    },
    /// `E[exp(−∫₀^{T_next} r_c) · K·δ·(L(T_prev, T_next) − R)⁺]`.
    CapletPayoff {
        /// Fixing date.
        t_prev: f64,
        /// Payment date.
        t_next: f64,
        /// Strike `R`.
        strike: f64,
        /// Notional `K`.
        notional: f64,
    },
    /// Real or imaginary part of `E^{T_next}[e^{iuZ}]` with
    /// `Z = ln((1 + δL)/(1 + δR))`, reweighted by `exp(−∫r_c)/D^OIS(0, T_next)`.
    CapletCharFn {
        /// Fixing date.
        t_prev: f64,
        /// Payment date.
        t_next: f64,
        /// Strike `R`.
        strike: f64,
        /// Frequency.
        u: f64,
        /// `true` for the imaginary part.
        imaginary: bool,
    },
}

/// Estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    /// Sample mean.
    pub estimate: f64,
    /// Standard error of the mean.
    pub std_error: f64,
    /// Paths used.
    pub n_paths: usize,
}

impl McEstimate {
    /// Whether `|estimate − value| ≤ k·SE`.
    pub fn within(&self, value: f64, k: f64) -> bool {
        (self.estimate - value).abs() <= k * self.std_error
    }

    /// `|estimate − value| / SE`, or `0`/`∞` when the SE vanishes.
    pub fn z_score(&self, value: f64) -> f64 {
        let d = (self.estimate - value).abs();
        if self.std_error > 0.0 {
            d / self.std_error
        } else if d == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    }
}

/// Compensated summation.
#[derive(Debug, Clone, Copy, Default)]
struct Kahan {
    sum: f64,
    c: f64,
}

impl Kahan {
    fn add(&mut self, x: f64) {
        let y = x - self.c;
        let t = self.sum + y;
        self.c = (t - self.sum) - y;
        self.sum = t;
    }
}

/// Per-interval transition constants of one factor.
#[derive(Debug, Clone)]
enum Step {
    Deterministic { decay: f64, theta: f64 },
    Exact { decay: f64, c: f64, nu: f64, chi: Option<Gamma<f64>> },
    Euler { kappa: f64, theta: f64, sigma: f64, dt: f64 },
}

impl Step {
    fn new(f: &CirFactor, dt: f64, scheme: Scheme) -> Self {
        let decay = (-f.kappa * dt).exp();
        if f.sigma < SIGMA_EPS {
            return Step::Deterministic { decay, theta: f.theta };
        }
        match scheme {
            Scheme::Exact => {
                let c = f.sigma * f.sigma * (1.0 - decay) / (4.0 * f.kappa);
                let nu = 4.0 * f.kappa * f.theta / (f.sigma * f.sigma);
                // χ²_{ν−1} = Gamma((ν−1)/2, 2), fixed for the interval when ν > 1
                let chi = (nu > 1.0).then(|| Gamma::new((nu - 1.0) / 2.0, 2.0).expect("positive shape"));
                Step::Exact { decay, c, nu, chi }
            }
            Scheme::Euler => Step::Euler {
                kappa: f.kappa,
                theta: f.theta,
                sigma: f.sigma,
                dt,
            },
        }
    }

    fn advance(&self, y: f64, rng: &mut ChaCha8Rng) -> f64 {
        match *self {
            Step::Deterministic { decay, theta } => theta + (y - theta) * decay,
            Step::Exact { decay, c, nu, ref chi } => {
                let lambda = y * decay / c;
                let x = match chi {
                    Some(chi) => {
                        let z: f64 = rng.sample(StandardNormal);
                        let s = z + lambda.sqrt();
                        s * s + chi.sample(rng)
                    }
                    None => {
                        let n = if lambda > 0.0 {
                            Poisson::new(lambda / 2.0).expect("positive mean").sample(rng)
                        } else {
                            0.0
                        };
                        let shape = nu / 2.0 + n;
                        Gamma::new(shape, 2.0).expect("positive shape").sample(rng)
                    }
                };
                let next = c * x;
                assert!(next >= 0.0, "exact CIR transition produced {next}");
                next
            }
            Step::Euler { kappa, theta, sigma, dt } => {
                let yp = y.max(0.0);
                let z: f64 = rng.sample(StandardNormal);
                y + kappa * (theta - yp) * dt + sigma * (yp * dt).sqrt() * z
            }
        }
    }
}

/// Simulation grid on `[0, horizon]` containing every event date.
fn grid(horizon: f64, events: &[f64], steps_per_year: usize) -> Vec<f64> {
    let n = ((horizon * steps_per_year as f64).ceil() as usize).max(1);
    let mut t: Vec<f64> = (0..=n).map(|k| horizon * k as f64 / n as f64).collect();
    t.extend_from_slice(events);
    t.sort_by(f64::total_cmp);
    t.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * (1.0 + b.abs()));
    t
}

fn index_of(times: &[f64], t: f64) -> usize {
    times
        .iter()
        .position(|&s| (s - t).abs() <= 1e-12 * (1.0 + t.abs()))
        .expect("event date on grid")
}

/// Factor values and running integrals at the event dates of one path.
struct Snapshot {
    // [event][factor]
    y: Vec<Vec<f64>>,
    integral: Vec<Vec<f64>>,
}

impl Snapshot {
    fn weighted(&self, w: &[f64], from: usize, to: usize) -> f64 {
        w.iter()
            .enumerate()
            .map(|(i, wi)| wi * (self.integral[to][i] - self.integral[from][i]))
            .sum()
    }
}

/// Simulates the factors along one grid and records event snapshots.
struct Simulator {
    // [interval][factor]
    steps: Vec<Vec<Step>>,
    dts: Vec<f64>,
    y0: Vec<f64>,
    events: Vec<usize>,
}

impl Simulator {
    fn new(factors: &[CirFactor], times: &[f64], events: Vec<usize>, scheme: Scheme) -> Self {
        let dts: Vec<f64> = times.windows(2).map(|w| w[1] - w[0]).collect();
        let steps = dts
            .iter()
            .map(|&dt| factors.iter().map(|f| Step::new(f, dt, scheme)).collect())
            .collect();
        Simulator {
            steps,
            dts,
            y0: factors.iter().map(|f| f.y0).collect(),
            events,
        }
    }

    fn path(&self, rng: &mut ChaCha8Rng, snap: &mut Snapshot) {
        let d = self.y0.len();
        let mut y = self.y0.clone();
        let mut integral = vec![0.0; d];
        let mut next_event = 0;
        let mut record = |k: usize, y: &[f64], integral: &[f64], next_event: &mut usize| {
            while *next_event < self.events.len() && self.events[*next_event] == k {
                snap.y[*next_event].copy_from_slice(y);
                snap.integral[*next_event].copy_from_slice(integral);
                *next_event += 1;
            }
        };
        record(0, &y, &integral, &mut next_event);
        for (k, (steps, &dt)) in self.steps.iter().zip(&self.dts).enumerate() {
            for i in 0..d {
                let prev = y[i];
                let next = steps[i].advance(prev, rng);
                // Euler keeps the raw state but accrues the truncated one
                integral[i] += 0.5 * dt * (prev.max(0.0) + next.max(0.0));
                y[i] = next;
            }
            record(k + 1, &y, &integral, &mut next_event);
        }
    }
}

fn check_times(pairs: &[(f64, f64)]) -> Result<(), McError> {
    for &(a, b) in pairs {
        if !(a.is_finite() && b.is_finite() && a >= 0.0 && b > a) {
            return Err(McError::Spec(format!("need 0 <= {a} < {b}")));
        }
    }
    Ok(())
}

impl Expr {
    /// Event dates, ascending.
    fn events(&self) -> Vec<f64> {
        match *self {
            Expr::Transform { tau, .. } => vec![0.0, tau],
            Expr::OisDiscount { t_end }
            | Expr::FundingGrowth { t_end }
            | Expr::RiskyDiscount { t_end }
            | Expr::SurvivalDiscount { t_end, .. } => vec![0.0, t_end],
            Expr::RolloverForwardTerm { t_prev, t_next }
            | Expr::LiborLegPv { t_prev, t_next }
            | Expr::CapletPayoff { t_prev, t_next, .. }
            | Expr::CapletCharFn { t_prev, t_next, .. } => vec![0.0, t_prev, t_next],
        }
    }

    fn validate(&self, model: &ModelSpec) -> Result<(), McError> {
        match self {
            Expr::Transform { factor, gamma, u, tau } => {
                if *factor >= model.dim() {
                    return Err(McError::Spec(format!("factor {factor} out of range")));
                }
                if !gamma.is_finite() || !u.is_finite() {
                    return Err(McError::Spec("non-finite transform weights".into()));
                }
                check_times(&[(0.0, *tau)])
            }
            Expr::OisDiscount { t_end } | Expr::FundingGrowth { t_end } | Expr::RiskyDiscount { t_end } => {
                check_times(&[(0.0, *t_end)])
            }
            Expr::SurvivalDiscount { bank, t_end } => {
                if bank.loading.len() != model.dim() {
                    return Err(McError::Spec(format!(
                        "bank loading has {} entries for {} factors",
                        bank.loading.len(),
                        model.dim()
                    )));
                }
                check_times(&[(0.0, *t_end)])
            }
            Expr::RolloverForwardTerm { t_prev, t_next } | Expr::LiborLegPv { t_prev, t_next } => {
                check_times(&[(*t_prev, *t_next)])
            }
            Expr::CapletPayoff {
                t_prev,
                t_next,
                strike,
                notional,
            } => {
                if !strike.is_finite() || !notional.is_finite() {
                    return Err(McError::Spec("non-finite caplet terms".into()));
                }
                check_times(&[(*t_prev, *t_next)])
            }
            Expr::CapletCharFn {
                t_prev,
                t_next,
                strike,
                u,
                ..
            } => {
                if !strike.is_finite() || !u.is_finite() {
                    return Err(McError::Spec("non-finite characteristic-function terms".into()));
                }
                check_times(&[(*t_prev, *t_next)])
            }
        }
    }
}

/// Payoff evaluator bound to a model and an expression.
struct Payoff<'a> {
    model: &'a ModelSpec,
    expr: &'a Expr,
    a: Vec<f64>,
    risky: Vec<f64>,
    c: Vec<f64>,
    d_next: f64,
    // snapshot rows of the expression's event dates
    ix: Vec<usize>,
}

impl<'a> Payoff<'a> {
    fn new(model: &'a ModelSpec, expr: &'a Expr, ix: Vec<usize>) -> Result<Self, McError> {
        let q = model.q;
        let a = model.rc.loading.clone();
        let risky = a.iter().zip(&model.lambda.loading).map(|(a, b)| a + q * b).collect();
        let c = model.phi.loading.clone();
        let d_next = match *expr {
            Expr::CapletCharFn { t_next, .. } => model.ois_discount(0.0, t_next)?,
            _ => 1.0,
        };
        Ok(Payoff {
            model,
            expr,
            a,
            risky,
            c,
            d_next,
            ix,
        })
    }

    fn rc_int(&self, s: &Snapshot, from: usize, to: usize, t0: f64, t1: f64) -> f64 {
        self.model.rc.shift.integral(t0, t1) + s.weighted(&self.a, self.ix[from], self.ix[to])
    }

    fn risky_int(&self, s: &Snapshot, from: usize, to: usize, t0: f64, t1: f64) -> f64 {
        let m = self.model;
        m.rc.shift.integral(t0, t1) + m.q * m.lambda.shift.integral(t0, t1) + s.weighted(&self.risky, self.ix[from], self.ix[to])
    }

    fn phi_int(&self, s: &Snapshot, from: usize, to: usize, t0: f64, t1: f64) -> f64 {
        self.model.phi.shift.integral(t0, t1) + s.weighted(&self.c, self.ix[from], self.ix[to])
    }

    fn eval(&self, s: &Snapshot) -> Result<f64, McError> {
        let m = self.model;
        Ok(match self.expr {
            Expr::Transform { factor, gamma, u, .. } => {
                let (i0, i1) = (self.ix[0], self.ix[1]);
                (gamma * (s.integral[i1][*factor] - s.integral[i0][*factor]) + u * s.y[i1][*factor]).exp()
            }
            Expr::OisDiscount { t_end } => (-self.rc_int(s, 0, 1, 0.0, *t_end)).exp(),
            Expr::FundingGrowth { t_end } => self.phi_int(s, 0, 1, 0.0, *t_end).exp(),
            Expr::RiskyDiscount { t_end } => (-self.risky_int(s, 0, 1, 0.0, *t_end)).exp(),
            Expr::SurvivalDiscount { bank, t_end } => {
                let e = self.rc_int(s, 0, 1, 0.0, *t_end) + bank.shift.integral(0.0, *t_end) + s.weighted(&bank.loading, self.ix[0], self.ix[1]);
                (-e).exp()
            }
            Expr::RolloverForwardTerm { t_prev, t_next } => {
                (-self.risky_int(s, 0, 1, 0.0, *t_prev) + self.phi_int(s, 1, 2, *t_prev, *t_next)).exp()
            }
            Expr::LiborLegPv { t_prev, t_next } => {
                let l = m.spot_libor_at(*t_prev, *t_next, &s.y[self.ix[1]])?;
                (-self.rc_int(s, 0, 2, 0.0, *t_next)).exp() * (t_next - t_prev) * l
            }
            Expr::CapletPayoff {
                t_prev,
                t_next,
                strike,
                notional,
            } => {
                let l = m.spot_libor_at(*t_prev, *t_next, &s.y[self.ix[1]])?;
                (-self.rc_int(s, 0, 2, 0.0, *t_next)).exp() * notional * (t_next - t_prev) * (l - strike).max(0.0)
            }
            Expr::CapletCharFn {
                t_prev,
                t_next,
                strike,
                u,
                imaginary,
            } => {
                let delta = t_next - t_prev;
                let l = m.spot_libor_at(*t_prev, *t_next, &s.y[self.ix[1]])?;
                let z = ((1.0 + delta * l) / (1.0 + delta * strike)).ln();
                let w = (-self.rc_int(s, 0, 2, 0.0, *t_next)).exp() / self.d_next;
                w * if *imaginary { (u * z).sin() } else { (u * z).cos() }
            }
        })
    }
}

fn block_rng(seed: u64, block: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(block as u64);
    rng
}

fn run_blocks<T: Send>(cfg: &McConfig, f: impl Fn(usize, usize) -> T + Sync) -> Vec<T> {
    let blocks = cfg.n_paths.div_ceil(BLOCK);
    let work = |b: usize| f(b, BLOCK.min(cfg.n_paths - b * BLOCK));
    if cfg.workers == 1 {
        return (0..blocks).map(work).collect();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .expect("thread pool");
    pool.install(|| (0..blocks).into_par_iter().map(work).collect())
}

/// Mean and standard error of per-path values.
///
/// The mean is accumulated as deviations from the first value, so a
/// degenerate sample returns that value exactly with zero error.
fn summarize(values: &[f64]) -> McEstimate {
    let n = values.len();
    let x0 = values[0];
    let mut dev = Kahan::default();
    for &v in values {
        dev.add(v - x0);
    }
    let shift = dev.sum / n as f64;
    let mut ss = Kahan::default();
    for &v in values {
        let e = (v - x0) - shift;
        ss.add(e * e);
    }
    let var = if n > 1 { ss.sum / (n - 1) as f64 } else { 0.0 };
    McEstimate {
        estimate: x0 + shift,
        std_error: (var / n as f64).sqrt(),
        n_paths: n,
    }
}

/// Estimates `expr` under `model` from `cfg.n_paths` simulated paths.
pub fn mc_expectation(model: &ModelSpec, expr: &Expr, cfg: &McConfig) -> Result<McEstimate, McError> {
    Ok(mc_expectations(model, std::slice::from_ref(expr), cfg)?[0])
}

/// Estimates several expressions on one shared set of paths.
///
/// The grid is the union of every expression's event dates with the uniform
/// grid, so each estimate equals the one a dedicated run on that grid gives.
pub fn mc_expectations(model: &ModelSpec, exprs: &[Expr], cfg: &McConfig) -> Result<Vec<McEstimate>, McError> {
    cfg.validate()?;
    model.validate()?;
    if exprs.is_empty() {
        return Ok(Vec::new());
    }
    for e in exprs {
        e.validate(model)?;
    }
    let mut events: Vec<f64> = exprs.iter().flat_map(Expr::events).collect();
    events.sort_by(f64::total_cmp);
    events.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * (1.0 + b.abs()));
    let horizon = events.iter().copied().fold(0.0, f64::max);
    let times = grid(horizon, &events, cfg.steps_per_year);
    let rows: Vec<usize> = events.iter().map(|&t| index_of(&times, t)).collect();
    let sim = Simulator::new(model.factors.factors(), &times, rows, cfg.scheme);
    let payoffs = exprs
        .iter()
        .map(|e| {
            let ix = e.events().iter().map(|&t| index_of(&events, t)).collect();
            Payoff::new(model, e, ix)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let d = model.dim();
    let k = exprs.len();
    let blocks = run_blocks(cfg, |b, n| -> Result<Vec<f64>, McError> {
        let mut rng = block_rng(cfg.seed, b);
        let mut snap = Snapshot {
            y: vec![vec![0.0; d]; events.len()],
            integral: vec![vec![0.0; d]; events.len()],
        };
        let mut out = Vec::with_capacity(n * k);
        for _ in 0..n {
            sim.path(&mut rng, &mut snap);
            for p in &payoffs {
                out.push(p.eval(&snap)?);
            }
        }
        Ok(out)
    });
    let mut values = vec![Vec::with_capacity(cfg.n_paths); k];
    for b in blocks {
        for (j, v) in b?.into_iter().enumerate() {
            values[j % k].push(v);
        }
    }
    Ok(values.iter().map(|v| summarize(v)).collect())
}

/// Simulated paths of one factor.
#[derive(Debug, Clone, PartialEq)]
pub struct CirPaths {
    /// Grid times.
    pub times: Vec<f64>,
    /// `y` per path and grid point, path-major.
    pub values: Vec<f64>,
    /// `∫₀ᵗ y ds` per path and grid point, path-major.
    pub integrals: Vec<f64>,
}

impl CirPaths {
    /// Number of paths.
    pub fn n_paths(&self) -> usize {
        self.values.len() / self.times.len()
    }

    /// Values at the last grid point.
    pub fn terminal(&self) -> Vec<f64> {
        let m = self.times.len();
        self.values.chunks_exact(m).map(|p| p[m - 1]).collect()
    }

    /// Integrals over the whole horizon.
    pub fn terminal_integrals(&self) -> Vec<f64> {
        let m = self.times.len();
        self.integrals.chunks_exact(m).map(|p| p[m - 1]).collect()
    }
}

/// Simulates `cfg.n_paths` paths of `factor` on `[0, horizon]`, keeping the
/// whole grid. Memory grows with paths × steps, so keep both modest.
pub fn simulate_cir(factor: &CirFactor, horizon: f64, cfg: &McConfig) -> Result<CirPaths, McError> {
    if cfg.n_paths == 0 || cfg.steps_per_year == 0 {
        return Err(McError::Config("need at least one path and one step per year".into()));
    }
    factor.validate()?;
    check_times(&[(0.0, horizon)])?;
    let times = grid(horizon, &[], cfg.steps_per_year);
    let m = times.len();
    let events: Vec<usize> = (0..m).collect();
    let sim = Simulator::new(std::slice::from_ref(factor), &times, events, cfg.scheme);
    let blocks = run_blocks(cfg, |b, n| {
        let mut rng = block_rng(cfg.seed, b);
        let mut snap = Snapshot {
            y: vec![vec![0.0]; m],
            integral: vec![vec![0.0]; m],
        };
        let mut vals = Vec::with_capacity(n * m);
        let mut ints = Vec::with_capacity(n * m);
        for _ in 0..n {
            sim.path(&mut rng, &mut snap);
            vals.extend(snap.y.iter().map(|v| v[0]));
            ints.extend(snap.integral.iter().map(|v| v[0]));
        }
        (vals, ints)
    });
    let mut values = Vec::with_capacity(cfg.n_paths * m);
    let mut integrals = Vec::with_capacity(cfg.n_paths * m);
    for (v, i) in blocks {
        values.extend(v);
        integrals.extend(i);
    }
    Ok(CirPaths {
        times,
        values,
        integrals,
    })
}

/// Mean and standard error of a sample.
pub fn sample_estimate(values: &[f64]) -> McEstimate {
    summarize(values)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_contains_events() {
        let t = grid(0.5, &[0.0, 0.25, 0.3, 0.5], 12);
        assert_eq!(t.first(), Some(&0.0));
        assert_eq!(t.last(), Some(&0.5));
        assert!(t.iter().any(|&s| (s - 0.3).abs() < 1e-15));
        assert!(t.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn constant_sample_has_zero_error() {
        let e = summarize(&[0.3; 17]);
        assert_eq!(e.estimate, 0.3);
        assert_eq!(e.std_error, 0.0);
    }

    #[test]
    fn few_paths_rejected() {
        let cfg = McConfig {
            n_paths: 999,
            ..McConfig::default()
        };
        assert!(matches!(cfg.validate(), Err(McError::Config(_))));
    }

    #[test]
    fn block_streams_differ() {
        let a: u64 = block_rng(7, 0).random();
        let b: u64 = block_rng(7, 1).random();
        assert_ne!(a, b);
    }
}
