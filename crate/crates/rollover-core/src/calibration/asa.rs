//! Adaptive simulated annealing with per-parameter temperatures and
//! re-annealing, following Ingber's very fast reannealing scheme.
//!
//! Each parameter carries its own temperature
//! `Tᵢ(kᵢ) = T₀ᵢ exp(−c kᵢ^{1/D})` with `c = m·exp(−n/D)`, and candidate
//! steps are drawn from
//!
//! ```text
//! yᵢ = sgn(u − ½)·Tᵢ·[(1 + 1/Tᵢ)^{|2u − 1|} − 1],   u ~ U(0, 1)
//! ```
//!
//! scaled by the width of the box. Moves are accepted with the Metropolis
//! rule at a separate cost temperature. Every `reanneal_every` accepted
//! moves the parameter temperatures are rescaled by the sensitivities of
//! the objective at the best point.

use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::de::OptimResult;
use super::objective::{Bounds, ObjectiveFn};
use crate::math;

/// Settings of [`adaptive_simulated_annealing`].
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct AsaConfig {
    /// Initial parameter temperature.
    pub t0: f64,
    /// Ratio scale `exp(−m)` of the temperature schedule.
    pub temperature_ratio_scale: f64,
    /// Anneal scale `exp(n)` of the temperature schedule.
    pub anneal_scale: f64,
    /// Ratio of cost to parameter schedule speed.
    pub cost_scale_ratio: f64,
    /// Maximum objective evaluations.
    pub max_evals: usize,
    /// Accepted moves between re-annealing.
    pub reanneal_every: usize,
    /// Stop once the best objective is at or below this value.
    pub tol: f64,
    /// RNG seed.
    pub seed: u64,
}

impl Default for AsaConfig {
    fn default() -> Self {
        AsaConfig {
            t0: 1.0,
            temperature_ratio_scale: 1e-5,
            anneal_scale: 100.0,
            cost_scale_ratio: 1.0,
            max_evals: 50_000,
            reanneal_every: 100,
            tol: 0.0,
            seed: 1,
        }
    }
}

/// Minimizes `objective` over `bounds`; deterministic given the seed.
pub fn adaptive_simulated_annealing(objective: &ObjectiveFn<'_>, bounds: &Bounds, cfg: &AsaConfig) -> OptimResult {
    let dim = bounds.dim();
    let d = dim as f64;
    let m = -math::ln(cfg.temperature_ratio_scale);
    let n = math::ln(cfg.anneal_scale);
    let c = m * math::exp(-n / d);
    let c_cost = c * cfg.cost_scale_ratio;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let width: Vec<f64> = bounds.lo.iter().zip(&bounds.hi).map(|(l, h)| h - l).collect();

    let eval = |x: &[f64]| {
        let f = objective(x);
        if f.is_nan() {
            f64::INFINITY
        } else {
            f
        }
    };
    let mut x: Vec<f64> = (0..dim).map(|j| rng.random_range(bounds.lo[j]..bounds.hi[j])).collect();
    let mut fx = eval(&x);
    let mut evaluations = 1;

    // initial cost temperature from a few random samples
    let mut cost_t0 = math::abs(fx);
    for _ in 0..5 {
        let y: Vec<f64> = (0..dim).map(|j| rng.random_range(bounds.lo[j]..bounds.hi[j])).collect();
        let fy = eval(&y);
        evaluations += 1;
        if fy.is_finite() {
            cost_t0 = cost_t0.max(math::abs(fy));
        }
        if fy < fx {
            x = y;
            fx = fy;
        }
    }
    if !(cost_t0 > 0.0) || !cost_t0.is_finite() {
        cost_t0 = 1.0;
    }

    let mut best = x.clone();
    let mut fbest = fx;
    let mut t0_par = alloc::vec![cfg.t0; dim];
    let mut k_par = alloc::vec![0.0f64; dim];
    let mut t_par = t0_par.clone();
    let mut k_cost = 0.0f64;
    let mut accepted = 0;
    let mut trace = alloc::vec![fbest];

    while evaluations < cfg.max_evals && !(fbest <= cfg.tol) {
        let mut y = x.clone();
        for j in 0..dim {
            let mut tries = 0;
            loop {
                let u: f64 = rng.random();
                let tj = t_par[j].max(1e-300);
                let step = math::powf(1.0 + 1.0 / tj, math::abs(2.0 * u - 1.0)) - 1.0;
                let s = if u < 0.5 { -tj * step } else { tj * step };
                let v = x[j] + s * width[j];
                if v >= bounds.lo[j] && v <= bounds.hi[j] {
                    y[j] = v;
                    break;
                }
                tries += 1;
                if tries >= 100 {
                    y[j] = v.clamp(bounds.lo[j], bounds.hi[j]);
                    break;
                }
            }
        }
        let fy = eval(&y);
        evaluations += 1;
        for j in 0..dim {
            k_par[j] += 1.0;
            t_par[j] = t0_par[j] * math::exp(-c * math::powf(k_par[j], 1.0 / d));
        }
        k_cost += 1.0;
        let t_cost = cost_t0 * math::exp(-c_cost * math::powf(k_cost, 1.0 / d));

        let accept = fy <= fx || {
            let p = math::exp(-(fy - fx) / t_cost.max(1e-300));
            rng.random::<f64>() < p
        };
        if accept && fy.is_finite() {
            x = y;
            fx = fy;
            accepted += 1;
            if fx < fbest {
                fbest = fx;
                best = x.clone();
            }
            if accepted % cfg.reanneal_every == 0 {
                evaluations += reanneal(
                    &eval,
                    bounds,
                    &best,
                    fbest,
                    &width,
                    c,
                    d,
                    &mut t0_par,
                    &mut t_par,
                    &mut k_par,
                );
                // restart the cost schedule from the current cost scale
                let scale = math::abs(fbest).max(1e-300);
                if scale < cost_t0 {
                    cost_t0 = scale;
                    k_cost = 0.0;
                }
                trace.push(fbest);
            }
        }
    }
    OptimResult {
        x: best,
        f: fbest,
        iterations: accepted,
        evaluations,
        trace,
    }
}

#[allow(clippy::too_many_arguments)]
fn reanneal(
    eval: &dyn Fn(&[f64]) -> f64,
    bounds: &Bounds,
    best: &[f64],
    fbest: f64,
    width: &[f64],
    c: f64,
    d: f64,
    t0_par: &mut [f64],
    t_par: &mut [f64],
    k_par: &mut [f64],
) -> usize {
    let dim = best.len();
    let mut sens = alloc::vec![0.0; dim];
    let mut z = best.to_vec();
    for j in 0..dim {
        let h = 1e-3 * width[j];
        let v = if best[j] + h <= bounds.hi[j] { best[j] + h } else { best[j] - h };
        z[j] = v;
        let f = eval(&z);
        z[j] = best[j];
        sens[j] = if f.is_finite() { math::abs(f - fbest) / h } else { 0.0 };
    }
    let smax = sens.iter().cloned().fold(0.0, f64::max);
    if smax > 0.0 {
        for j in 0..dim {
            if sens[j] > 0.0 && t_par[j] > 0.0 {
                let tj = (t_par[j] * smax / sens[j]).min(t0_par[j]);
                t_par[j] = tj;
                let ratio = math::ln(t0_par[j] / tj);
                k_par[j] = math::powf((ratio / c).max(0.0), d);
            }
        }
    }
    dim
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sphere_5d() {
        let b = Bounds::uniform(5, -5.0, 5.0).unwrap();
        let f = |x: &[f64]| x.iter().map(|v| v * v).sum::<f64>();
        let r = adaptive_simulated_annealing(&f, &b, &AsaConfig { seed: 5, ..AsaConfig::default() });
        assert!(r.f <= 1e-4, "{}", r.f);
        assert!(r.evaluations <= 50_000 + 5);
    }

    #[test]
    fn quadratic_1d() {
        let b = Bounds::uniform(1, -10.0, 10.0).unwrap();
        let f = |x: &[f64]| (x[0] - 1.234).powi(2);
        let r = adaptive_simulated_annealing(
            &f,
            &b,
            &AsaConfig {
                max_evals: 20_000,
                ..AsaConfig::default()
            },
        );
        assert!(math::abs(r.x[0] - 1.234) < 1e-6, "{:?}", r.x);
    }

    #[test]
    fn deterministic_given_seed() {
        let b = Bounds::uniform(3, -1.0, 1.0).unwrap();
        let f = |x: &[f64]| x.iter().map(|v| (v - 0.3).powi(2)).sum::<f64>();
        let cfg = AsaConfig {
            max_evals: 3000,
            ..AsaConfig::default()
        };
        assert_eq!(adaptive_simulated_annealing(&f, &b, &cfg), adaptive_simulated_annealing(&f, &b, &cfg));
    }
}
