//! Differential evolution, DE/rand/1/bin.

use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::objective::{Bounds, Executor, ObjectiveFn};

/// Settings of [`differential_evolution`].
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct DeConfig {
    /// Population size; `None` means `15·dim`.
    pub pop: Option<usize>,
    /// Differential weight `F`.
    pub f: f64,
    /// Crossover probability.
    pub cr: f64,
    /// Maximum number of generations.
    pub max_iter: usize,
    /// Stop once the best objective is at or below this value.
    pub tol: f64,
    /// RNG seed.
    pub seed: u64,
}

impl Default for DeConfig {
    fn default() -> Self {
        DeConfig {
            pop: None,
            f: 0.7,
            cr: 0.9,
            max_iter: 1000,
            tol: 0.0,
            seed: 1,
        }
    }
}

/// Outcome of an optimizer run.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimResult {
    /// Best parameters found.
    pub x: Vec<f64>,
    /// Objective at `x`.
    pub f: f64,
    /// Generations (DE) or accepted moves (ASA).
    pub iterations: usize,
    /// Objective evaluations.
    pub evaluations: usize,
    /// Best-so-far objective after each generation or reannealing cycle.
    pub trace: Vec<f64>,
}

/// Minimizes `objective` over `bounds` with DE/rand/1/bin.
///
/// `initial` members, if any, replace the first random members of the
/// starting population. Trials replace their target only on strict
/// improvement. Components leaving the box are reset halfway between the
/// base vector and the violated bound.
pub fn differential_evolution(
    objective: &ObjectiveFn<'_>,
    bounds: &Bounds,
    cfg: &DeConfig,
    initial: &[Vec<f64>],
    exec: &dyn Executor,
) -> OptimResult {
    let dim = bounds.dim();
    let np = cfg.pop.unwrap_or(15 * dim).max(4);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut pop: Vec<Vec<f64>> = (0..np)
        .map(|_| (0..dim).map(|j| rng.random_range(bounds.lo[j]..bounds.hi[j])).collect())
        .collect();
    for (slot, x) in pop.iter_mut().zip(initial) {
        let mut x = x.clone();
        bounds.clamp(&mut x);
        *slot = x;
    }
    let mut fit = sanitize(exec.map(&pop, objective));
    let mut evaluations = np;
    let mut best = argmin(&fit);
    let mut trace = alloc::vec![fit[best]];
    let mut gen = 0;
    while gen < cfg.max_iter && !(fit[best] <= cfg.tol) {
        let mut trials = Vec::with_capacity(np);
        for i in 0..np {
            let (r1, r2, r3) = distinct3(&mut rng, np, i);
            let jrand = rng.random_range(0..dim);
            let mut trial = pop[i].clone();
            for j in 0..dim {
                if j == jrand || rng.random::<f64>() < cfg.cr {
                    let base = pop[r1][j];
                    let mut v = base + cfg.f * (pop[r2][j] - pop[r3][j]);
                    if v < bounds.lo[j] {
                        v = 0.5 * (base + bounds.lo[j]);
                    } else if v > bounds.hi[j] {
                        v = 0.5 * (base + bounds.hi[j]);
                    }
                    trial[j] = v;
                }
            }
            trials.push(trial);
        }
        let tf = sanitize(exec.map(&trials, objective));
        evaluations += np;
        for (i, (t, f)) in trials.into_iter().zip(tf).enumerate() {
            if f < fit[i] {
                pop[i] = t;
                fit[i] = f;
            }
        }
        best = argmin(&fit);
        trace.push(fit[best]);
        gen += 1;
    }
    OptimResult {
        x: pop[best].clone(),
        f: fit[best],
        iterations: gen,
        evaluations,
        trace,
    }
}

fn sanitize(v: Vec<f64>) -> Vec<f64> {
    v.into_iter().map(|f| if f.is_nan() { f64::INFINITY } else { f }).collect()
}

fn argmin(v: &[f64]) -> usize {
    let mut b = 0;
    for (i, f) in v.iter().enumerate() {
        if *f < v[b] {
            b = i;
        }
    }
    b
}

fn distinct3(rng: &mut ChaCha8Rng, n: usize, skip: usize) -> (usize, usize, usize) {
    let mut pick = |taken: &[usize]| loop {
        let r = rng.random_range(0..n);
        if r != skip && !taken.contains(&r) {
            return r;
        }
    };
    let a = pick(&[]);
    let b = pick(&[a]);
    let c = pick(&[a, b]);
    (a, b, c)
}
