//! Levenberg–Marquardt for small dense least-squares problems.

use alloc::vec::Vec;

use crate::math;
use crate::Result;

/// Residuals and row-major Jacobian (`residuals × parameters`) at a point.
pub type ResidualFn<'a> = dyn Fn(&[f64]) -> Result<(Vec<f64>, Vec<f64>)> + 'a;

/// Settings of [`levenberg_marquardt`].
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct LmConfig {
    /// Maximum accepted or rejected steps.
    pub max_iter: usize,
    /// Initial damping relative to the Gauss–Newton diagonal.
    pub lambda0: f64,
    /// Stop once `Σ r²` is at or below this value.
    pub ftol: f64,
    /// Stop once a step lowers `Σ r²` by less than this relative amount.
    pub rtol: f64,
}

impl Default for LmConfig {
    fn default() -> Self {
        LmConfig {
            max_iter: 200,
            lambda0: 1e-3,
            ftol: 0.0,
            rtol: 1e-15,
        }
    }
}

/// Outcome of [`levenberg_marquardt`].
#[derive(Debug, Clone, PartialEq)]
pub struct LmResult {
    /// Final parameters.
    pub x: Vec<f64>,
    /// `Σ r²` at `x`.
    pub cost: f64,
    /// Iterations used.
    pub iterations: usize,
}

/// Minimizes `Σ rᵢ(x)²` from `x0`.
pub fn levenberg_marquardt(f: &ResidualFn<'_>, x0: Vec<f64>, cfg: &LmConfig) -> Result<LmResult> {
    let n = x0.len();
    let mut x = x0;
    let (mut r, mut jac) = f(&x)?;
    let mut cost = sum_sq(&r);
    let mut lambda = cfg.lambda0;
    let mut it = 0;
    let mut stalls = 0;
    while it < cfg.max_iter && cost > cfg.ftol {
        it += 1;
        let (a, g) = normal_equations(&jac, &r, n);
        let mut damped = a.clone();
        for i in 0..n {
            damped[i * n + i] += lambda * (a[i * n + i] + 1e-12);
        }
        let mut step: Vec<f64> = g.iter().map(|v| -v).collect();
        if !cholesky_solve(&mut damped, n, &mut step) {
            lambda *= 4.0;
            continue;
        }
        let trial: Vec<f64> = x.iter().zip(&step).map(|(a, b)| a + b).collect();
        match f(&trial) {
            Ok((rt, jt)) if sum_sq(&rt) < cost => {
                let new_cost = sum_sq(&rt);
                let gain = (cost - new_cost) / cost;
                x = trial;
                r = rt;
                jac = jt;
                cost = new_cost;
                lambda = (lambda / 3.0).max(1e-12);
                stalls = if gain < cfg.rtol { stalls + 1 } else { 0 };
                if stalls >= 3 {
                    break;
                }
            }
            _ => {
                lambda *= 4.0;
                if lambda > 1e16 {
                    break;
                }
            }
        }
    }
    Ok(LmResult {
        x,
        cost,
        iterations: it,
    })
}

fn sum_sq(r: &[f64]) -> f64 {
    r.iter().map(|v| v * v).sum()
}

/// `(JᵀJ, Jᵀr)` for a row-major Jacobian with `n` columns.
pub(crate) fn normal_equations(jac: &[f64], r: &[f64], n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut a = alloc::vec![0.0; n * n];
    let mut g = alloc::vec![0.0; n];
    for (row, ri) in jac.chunks_exact(n).zip(r) {
        for i in 0..n {
            let ji = row[i];
            if ji == 0.0 {
                continue;
            }
            g[i] += ji * ri;
            for k in i..n {
                a[i * n + k] += ji * row[k];
            }
        }
    }
    for i in 0..n {
        for k in 0..i {
            a[i * n + k] = a[k * n + i];
        }
    }
    (a, g)
}

/// Solves `A z = b` in place for symmetric positive definite `A` (row-major,
/// overwritten by its Cholesky factor); `false` if `A` is not positive definite.
pub(crate) fn cholesky_solve(a: &mut [f64], n: usize, b: &mut [f64]) -> bool {
    if !cholesky_factor(a, n) {
        return false;
    }
    cholesky_apply(a, n, b);
    true
}

/// Overwrites the lower triangle of `a` with `L`, `A = LLᵀ`.
pub(crate) fn cholesky_factor(a: &mut [f64], n: usize) -> bool {
    for j in 0..n {
        let mut s = a[j * n + j];
        for k in 0..j {
            s -= a[j * n + k] * a[j * n + k];
        }
        if !(s > 0.0) {
            return false;
        }
        let d = math::sqrt(s);
        a[j * n + j] = d;
        for i in j + 1..n {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= a[i * n + k] * a[j * n + k];
            }
            a[i * n + j] = s / d;
        }
    }
    true
}

/// Solves `LLᵀ z = b` in place with a factor from [`cholesky_factor`].
pub(crate) fn cholesky_apply(l: &[f64], n: usize, b: &mut [f64]) {
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= l[i * n + k] * b[k];
        }
        b[i] = s / l[i * n + i];
    }
    for i in (0..n).rev() {
        let mut s = b[i];
        for k in i + 1..n {
            s -= l[k * n + i] * b[k];
        }
        b[i] = s / l[i * n + i];
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cholesky_solves_spd_system() {
        let mut a = alloc::vec![4.0, 2.0, 0.6, 2.0, 5.0, 1.0, 0.6, 1.0, 3.0];
        let orig = a.clone();
        let mut b = alloc::vec![1.0, 2.0, 3.0];
        assert!(cholesky_solve(&mut a, 3, &mut b));
        for i in 0..3 {
            let row: f64 = (0..3).map(|k| orig[i * 3 + k] * b[k]).sum();
            assert!(math::abs(row - [1.0, 2.0, 3.0][i]) < 1e-14);
        }
        let mut bad = alloc::vec![1.0, 2.0, 2.0, 1.0];
        assert!(!cholesky_solve(&mut bad, 2, &mut [1.0, 1.0]));
    }

    #[test]
    fn fits_exponential_decay() {
        let ts: Vec<f64> = (0..20).map(|i| i as f64 * 0.25).collect();
        let ys: Vec<f64> = ts.iter().map(|t| 2.0 * libm::exp(-0.7 * t)).collect();
        let f = |p: &[f64]| -> Result<(Vec<f64>, Vec<f64>)> {
            let mut r = Vec::new();
            let mut j = Vec::new();
            for (t, y) in ts.iter().zip(&ys) {
                let e = libm::exp(-p[1] * t);
                r.push(p[0] * e - y);
                j.push(e);
                j.push(-p[0] * t * e);
            }
            Ok((r, j))
        };
        let res = levenberg_marquardt(&f, alloc::vec![1.0, 0.1], &LmConfig::default()).unwrap();
        assert!(math::abs(res.x[0] - 2.0) < 1e-10 && math::abs(res.x[1] - 0.7) < 1e-10, "{:?}", res);
    }
}
