//! Generalized Riccati transforms for independent CIR factors.
//!
//! For a factor `dy = κ(θ − y)dt + σ√y dW` and scalars `u`, `w = v·γ`, the
//! coefficients solve
//!
//! ```text
//! ψ' = w − κψ + ½σ²ψ²,   ψ(0) = u
//! Φ' = κθψ,              Φ(0) = 0
//! ```
//!
//! and `E[exp(∫₀^τ γ y ds + u y(τ))] = exp(Φ(τ) + ψ(τ) y(0))` when `v = 1`.
//! Independent factors decouple, so a factor set is handled one component at
//! a time and the `Φ` contributions are summed.
//!
//! Branches of the closed form, with `s = σ²` and `disc = κ² − 2sw`:
//!
//! - `|σ| < 1e-8`: linear ODE, `ψ = r + (u − r)e^{−κτ}` with `r = w/κ`.
//! - `disc > 0`: with `β = √disc`, stable root `r₋ = 2w/(κ + β)` and
//!   `h = (1 − e^{−βτ})/β`, `E = 1 − ½s(u − r₋)h`,
//!   `ψ = r₋ + (u − r₋)e^{−βτ}/E`, `Φ = κθ[r₋τ − (2/s)ln E]`.
//! - `disc ≤ 0`: with `ω = √(−disc)`, `S = sin(ωτ/2)/ω`,
//!   `D = cos(ωτ/2) − (su − κ)S`,
//!   `ψ = κ/s + [ω²S + (su − κ)cos(ωτ/2)]/(sD)`, `Φ = κθ[κτ/s − (2/s)ln D]`.
//!
//! The transform explodes when `E` or `D` reaches zero; [`explosion_time`]
//! returns that horizon in closed form.

use alloc::vec::Vec;

use num_complex::Complex64;

use crate::math::{self, Scalar};
use crate::{Error, Result};

/// Volatility below which a factor is treated as deterministic.
pub const SIGMA_EPS: f64 = 1e-8;
/// Running-integral weights below this magnitude are snapped to zero.
pub const RATE_EPS: f64 = 1e-14;

/// One square-root diffusion `dy = κ(θ − y)dt + σ√y dW`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CirFactor {
    /// Mean-reversion speed (1/year).
    pub kappa: f64,
    /// Long-run level.
    pub theta: f64,
    /// Volatility of the square root.
    pub sigma: f64,
    /// Initial value.
    pub y0: f64,
}

impl CirFactor {
    /// Builds a factor. `σ = 0` is accepted and yields a deterministic factor.
    pub fn new(kappa: f64, theta: f64, sigma: f64, y0: f64) -> Result<Self> {
        let f = CirFactor {
            kappa,
            theta,
            sigma,
            y0,
        };
        f.validate()?;
        Ok(f)
    }

    /// Checks `κ > 0`, `θ ≥ 0`, `σ ≥ 0`, `y₀ ≥ 0` and finiteness.
    pub fn validate(&self) -> Result<()> {
        let finite = self.kappa.is_finite()
            && self.theta.is_finite()
            && self.sigma.is_finite()
            && self.y0.is_finite();
        if !finite || self.kappa <= 0.0 || self.theta < 0.0 || self.sigma < 0.0 || self.y0 < 0.0 {
            return Err(Error::InvalidParameter(alloc::format!(
                "CIR factor requires kappa > 0 and theta, sigma, y0 >= 0; got {self:?}"
            )));
        }
        Ok(())
    }

    /// Whether `2κθ ≥ σ²`.
    pub fn feller_ok(&self) -> bool {
        2.0 * self.kappa * self.theta >= self.sigma * self.sigma
    }

    /// `max(0, σ² − 2κθ)`, the amount by which the Feller condition fails.
    pub fn feller_gap(&self) -> f64 {
        (self.sigma * self.sigma - 2.0 * self.kappa * self.theta).max(0.0)
    }

    /// `E[y(t) | y(0) = y0]`.
    pub fn mean(&self, t: f64) -> f64 {
        self.theta + (self.y0 - self.theta) * math::exp(-self.kappa * t)
    }

    /// `Var[y(t) | y(0) = y0]`.
    pub fn variance(&self, t: f64) -> f64 {
        let e = math::exp(-self.kappa * t);
        let s2 = self.sigma * self.sigma;
        self.y0 * s2 / self.kappa * (e - e * e) + self.theta * s2 / (2.0 * self.kappa) * (1.0 - e) * (1.0 - e)
    }
}

/// Ordered, mutually independent CIR factors.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(transparent))]
pub struct FactorSet {
    factors: Vec<CirFactor>,
}

impl FactorSet {
    /// Builds a non-empty set, validating every factor.
    pub fn new(factors: Vec<CirFactor>) -> Result<Self> {
        if factors.is_empty() {
            return Err(Error::Dimension {
                expected: 1,
                got: 0,
            });
        }
        for f in &factors {
            f.validate()?;
        }
        Ok(FactorSet { factors })
    }

    /// Number of factors `d`.
    pub fn len(&self) -> usize {
        self.factors.len()
    }

    /// Always false; kept for API symmetry.
    pub fn is_empty(&self) -> bool {
        self.factors.is_empty()
    }

    /// The factors in order.
    pub fn factors(&self) -> &[CirFactor] {
        &self.factors
    }

    /// Mutable access for calibration.
    pub fn factors_mut(&mut self) -> &mut [CirFactor] {
        &mut self.factors
    }

    /// Initial state vector `(y₀ᵢ)`.
    pub fn initial_state(&self) -> Vec<f64> {
        self.factors.iter().map(|f| f.y0).collect()
    }

    /// Appends a factor.
    pub fn push(&mut self, f: CirFactor) -> Result<()> {
        f.validate()?;
        self.factors.push(f);
        Ok(())
    }

    pub(crate) fn check_len(&self, got: usize) -> Result<()> {
        if got != self.factors.len() {
            return Err(Error::Dimension {
                expected: self.factors.len(),
                got,
            });
        }
        Ok(())
    }
}

/// Riccati coefficients `(Φ, Ψ)` at a horizon.
#[derive(Debug, Clone, PartialEq)]
pub struct TransformCoeffs {
    /// Scalar exponent.
    pub phi: f64,
    /// Per-factor loadings.
    pub psi: Vec<f64>,
}

impl TransformCoeffs {
    /// `exp(Φ + ⟨Ψ, x⟩)`.
    pub fn evaluate(&self, x: &[f64]) -> f64 {
        let mut e = self.phi;
        for (p, xi) in self.psi.iter().zip(x) {
            e += p * xi;
        }
        math::exp(e)
    }
}

fn snap(w: f64) -> f64 {
    if math::abs(w) < RATE_EPS {
        0.0
    } else {
        w
    }
}

/// Horizon at which the one-factor transform with terminal loading `u` and
/// running weight `w` stops being finite (`f64::INFINITY` if never).
pub fn explosion_time(f: &CirFactor, u: f64, w: f64) -> f64 {
    let w = snap(w);
    if f.sigma.abs() < SIGMA_EPS {
        return f64::INFINITY;
    }
    let s = f.sigma * f.sigma;
    let disc = f.kappa * f.kappa - 2.0 * s * w;
    if disc > 0.0 {
        let beta = math::sqrt(disc);
        let rm = 2.0 * w / (f.kappa + beta);
        let p = 0.5 * s * (u - rm) / beta;
        if p > 1.0 {
            -math::ln1p(-1.0 / p) / beta
        } else {
            f64::INFINITY
        }
    } else {
        let omega = math::sqrt(-disc);
        let a = s * u - f.kappa;
        if omega == 0.0 {
            if a > 0.0 {
                2.0 / a
            } else {
                f64::INFINITY
            }
        } else {
            2.0 * math::atan2(omega, a) / omega
        }
    }
}

/// Closed-form `(Φ, ψ)` for one factor over a real terminal loading.
pub fn factor_transform(f: &CirFactor, tau: f64, u: f64, w: f64) -> Result<(f64, f64)> {
    if !(tau >= 0.0) || !u.is_finite() || !w.is_finite() {
        return Err(Error::Domain(alloc::format!(
            "transform needs tau >= 0 and finite loadings (tau = {tau}, u = {u}, w = {w})"
        )));
    }
    if tau == 0.0 {
        return Ok((0.0, u));
    }
    let w = snap(w);
    let limit = explosion_time(f, u, w);
    if tau >= limit {
        return Err(Error::Explosion { tau, limit });
    }
    if f.sigma.abs() < SIGMA_EPS {
        return Ok(linear_branch(f, tau, u, w));
    }
    let s = f.sigma * f.sigma;
    let disc = f.kappa * f.kappa - 2.0 * s * w;
    if disc > 0.0 {
        return Ok(hyperbolic_branch(f, tau, u, w, disc));
    }
    let omega = math::sqrt(-disc);
    let half = 0.5 * omega * tau;
    let sn = if omega == 0.0 {
        0.5 * tau
    } else {
        math::sin(half) / omega
    };
    let cs = math::cos(half);
    let a = s * u - f.kappa;
    let den = cs - a * sn;
    let psi = f.kappa / s + (omega * omega * sn + a * cs) / (s * den);
    let phi = f.kappa * f.theta * (f.kappa * tau / s - 2.0 / s * math::ln(den));
    Ok((phi, psi))
}

fn linear_branch<T: Scalar>(f: &CirFactor, tau: f64, u: T, w: f64) -> (T, T) {
    let r = w / f.kappa;
    let e = math::exp(-f.kappa * tau);
    let one_minus = -math::expm1(-f.kappa * tau);
    let ur = u - T::from(r);
    let psi = T::from(r) + ur * T::from(e);
    let phi = T::from(f.kappa * f.theta) * (T::from(r * tau) + ur * T::from(one_minus / f.kappa));
    (phi, psi)
}

fn hyperbolic_branch<T: Scalar>(f: &CirFactor, tau: f64, u: T, w: f64, disc: f64) -> (T, T) {
    let s = f.sigma * f.sigma;
    let beta = math::sqrt(disc);
    let rm = 2.0 * w / (f.kappa + beta);
    let h = -math::expm1(-beta * tau) / beta;
    let e0 = u - T::from(rm);
    let x = T::from(-0.5 * s * h) * e0;
    let psi = T::from(rm) + e0 * T::from(math::exp(-beta * tau)) / (T::from(1.0) + x);
    let phi = T::from(f.kappa * f.theta) * (T::from(rm * tau) - T::from(2.0 / s) * x.ln1p());
    (phi, psi)
}

/// Closed-form `(Φ, ψ)` for one factor with a complex terminal loading.
///
/// Only the `κ² > 2σ²w` regime is supported; finiteness is checked on the
/// real part of `u`, which bounds the modulus of the complex transform.
pub fn factor_transform_complex(
    f: &CirFactor,
    tau: f64,
    u: Complex64,
    w: f64,
) -> Result<(Complex64, Complex64)> {
    if !(tau >= 0.0) || !u.re.is_finite() || !u.im.is_finite() || !w.is_finite() {
        return Err(Error::Domain(alloc::format!(
            "complex transform needs tau >= 0 and finite loadings (tau = {tau})"
        )));
    }
    if tau == 0.0 {
        return Ok((Complex64::new(0.0, 0.0), u));
    }
    let w = snap(w);
    let limit = explosion_time(f, u.re, w);
    if tau >= limit {
        return Err(Error::Explosion { tau, limit });
    }
    if f.sigma.abs() < SIGMA_EPS {
        return Ok(linear_branch(f, tau, u, w));
    }
    let s = f.sigma * f.sigma;
    let disc = f.kappa * f.kappa - 2.0 * s * w;
    if disc <= 0.0 {
        return Err(Error::Domain(alloc::format!(
            "complex transform requires kappa^2 > 2 sigma^2 w (disc = {disc})"
        )));
    }
    Ok(hyperbolic_branch(f, tau, u, w, disc))
}

/// `(Φ_{(u,v)}(τ, γ), Ψ_{(u,v)}(τ, γ))` for a factor set, in closed form.
pub fn riccati_transform(
    factors: &FactorSet,
    tau: f64,
    u: &[f64],
    v: f64,
    gamma: &[f64],
) -> Result<TransformCoeffs> {
    factors.check_len(u.len())?;
    factors.check_len(gamma.len())?;
    let mut phi = 0.0;
    let mut psi = Vec::with_capacity(u.len());
    for ((f, &ui), &gi) in factors.factors().iter().zip(u).zip(gamma) {
        let (p, s) = factor_transform(f, tau, ui, v * gi)?;
        phi += p;
        psi.push(s);
    }
    Ok(TransformCoeffs { phi, psi })
}

/// `E[exp(∫₀^τ ⟨γ, X⟩ ds + ⟨u, X(τ)⟩) | X(0) = x0]`.
pub fn extended_expectation(
    factors: &FactorSet,
    x0: &[f64],
    tau: f64,
    gamma: &[f64],
    u: &[f64],
) -> Result<f64> {
    factors.check_len(x0.len())?;
    let c = riccati_transform(factors, tau, u, 1.0, gamma)?;
    Ok(c.evaluate(x0))
}

/// Default relative tolerance of the numeric transform.
pub const NUMERIC_TOL: f64 = 1e-12;

/// Same contract as [`riccati_transform`], integrated by adaptive RK4.
pub fn riccati_transform_numeric(
    factors: &FactorSet,
    tau: f64,
    u: &[f64],
    v: f64,
    gamma: &[f64],
    tol: f64,
) -> Result<TransformCoeffs> {
    factors.check_len(u.len())?;
    factors.check_len(gamma.len())?;
    let mut phi = 0.0;
    let mut psi = Vec::with_capacity(u.len());
    for ((f, &ui), &gi) in factors.factors().iter().zip(u).zip(gamma) {
        let (p, s) = factor_transform_numeric(f, tau, ui, v * gi, tol)?;
        phi += p;
        psi.push(s);
    }
    Ok(TransformCoeffs { phi, psi })
}

/// One-factor RK4 integration with step doubling and Richardson extrapolation.
pub fn factor_transform_numeric(
    f: &CirFactor,
    tau: f64,
    u: f64,
    w: f64,
    tol: f64,
) -> Result<(f64, f64)> {
    if !(tau >= 0.0) || !(tol > 0.0) {
        return Err(Error::Domain(alloc::format!(
            "numeric transform needs tau >= 0 and tol > 0 (tau = {tau}, tol = {tol})"
        )));
    }
    if tau == 0.0 {
        return Ok((0.0, u));
    }
    let half_s = 0.5 * f.sigma * f.sigma;
    let kt = f.kappa * f.theta;
    let rhs = |y: [f64; 2]| -> [f64; 2] { [w - f.kappa * y[0] + half_s * y[0] * y[0], kt * y[0]] };
    let step = |y: [f64; 2], h: f64| -> [f64; 2] {
        let k1 = rhs(y);
        let k2 = rhs([y[0] + 0.5 * h * k1[0], y[1] + 0.5 * h * k1[1]]);
        let k3 = rhs([y[0] + 0.5 * h * k2[0], y[1] + 0.5 * h * k2[1]]);
        let k4 = rhs([y[0] + h * k3[0], y[1] + h * k3[1]]);
        [
            y[0] + h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
            y[1] + h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
        ]
    };

    let atol = tol * 1e-6;
    let h_min = 1e-13 * tau.max(1.0);
    let mut t = 0.0;
    let mut y = [u, 0.0];
    let mut h = (tau / 64.0).min(0.05);
    while t < tau {
        if t + h > tau {
            h = tau - t;
        }
        let full = step(y, h);
        let mid = step(y, 0.5 * h);
        let two = step(mid, 0.5 * h);
        let mut err: f64 = 0.0;
        for i in 0..2 {
            let scale = tol * math::abs(two[i]).max(math::abs(y[i])) + atol;
            err = err.max(math::abs(two[i] - full[i]) / 15.0 / scale);
        }
        if !err.is_finite() || !two[0].is_finite() || !two[1].is_finite() {
            return Err(Error::StepFailure { t });
        }
        if err <= 1.0 {
            t += h;
            for i in 0..2 {
                y[i] = two[i] + (two[i] - full[i]) / 15.0;
            }
            let grow = if err == 0.0 {
                4.0
            } else {
                (0.9 * math::powf(err, -0.2)).clamp(0.2, 4.0)
            };
            h *= grow;
        } else {
            h *= (0.9 * math::powf(err, -0.2)).clamp(0.1, 0.9);
            if h < h_min {
                return Err(Error::StepFailure { t });
            }
        }
    }
    Ok((y[1], y[0]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn close(a: f64, b: f64, rel: f64) -> bool {
        math::abs(a - b) <= rel * math::abs(a).max(math::abs(b)) + 1e-15
    }

    fn table8_one_factor() -> FactorSet {
        FactorSet::new(vec![CirFactor::new(0.455794, 0.134384, 0.052677, 0.000000).unwrap()]).unwrap()
    }

    #[test]
    fn zero_horizon_returns_terminal_loading() {
        let fs = table8_one_factor();
        let c = riccati_transform(&fs, 0.0, &[0.37], 1.0, &[-2.0]).unwrap();
        assert_eq!(c.phi, 0.0);
        assert_eq!(c.psi, vec![0.37]);
        let n = riccati_transform_numeric(&fs, 0.0, &[0.37], 1.0, &[-2.0], NUMERIC_TOL).unwrap();
        assert_eq!(n.phi, 0.0);
        assert_eq!(n.psi, vec![0.37]);
    }

    #[test]
    fn zero_is_a_fixed_point() {
        let fs = table8_one_factor();
        for tau in [0.1, 1.0, 10.0, 30.0] {
            let c = riccati_transform(&fs, tau, &[0.0], 0.0, &[-0.3]).unwrap();
            assert_eq!(c.phi, 0.0);
            assert_eq!(c.psi, vec![0.0]);
        }
    }

    #[test]
    fn table8_one_factor_matches_rk4() {
        let fs = table8_one_factor();
        let a = 0.000699;
        let c = riccati_transform(&fs, 5.0, &[0.0], 1.0, &[-a]).unwrap();
        let n = riccati_transform_numeric(&fs, 5.0, &[0.0], 1.0, &[-a], NUMERIC_TOL).unwrap();
        assert!(close(c.phi, n.phi, 1e-9), "{} vs {}", c.phi, n.phi);
        assert!(close(c.psi[0], n.psi[0], 1e-9), "{} vs {}", c.psi[0], n.psi[0]);
    }

    #[test]
    fn sigma_limit_matches_linear_solution() {
        let w = -0.8;
        let u = 0.3;
        let kappa = 0.7;
        let tau = 3.0;
        let exact = w / kappa * (1.0 - math::exp(-kappa * tau)) + u * math::exp(-kappa * tau);
        for sigma in [1e-9, 1e-8, 1e-7, 1e-6] {
            let f = CirFactor::new(kappa, 0.05, sigma, 0.02).unwrap();
            let (_, psi) = factor_transform(&f, tau, u, w).unwrap();
            assert!(close(psi, exact, 1e-10), "sigma {sigma}: {psi} vs {exact}");
        }
        let f = CirFactor::new(kappa, 0.05, 0.0, 0.02).unwrap();
        let (phi_n, psi_n) = factor_transform_numeric(&f, tau, u, w, NUMERIC_TOL).unwrap();
        assert!(close(psi_n, exact, 1e-10));
        let (phi_c, _) = factor_transform(&f, tau, u, w).unwrap();
        assert!(close(phi_n, phi_c, 1e-10));
    }

    #[test]
    fn trigonometric_branch_matches_rk4() {
        let f = CirFactor::new(0.3, 0.1, 0.5, 0.05).unwrap();
        let w = 0.6;
        assert!(f.kappa * f.kappa - 2.0 * f.sigma * f.sigma * w < 0.0);
        let limit = explosion_time(&f, 0.1, w);
        let tau = 0.8 * limit;
        let c = factor_transform(&f, tau, 0.1, w).unwrap();
        let n = factor_transform_numeric(&f, tau, 0.1, w, NUMERIC_TOL).unwrap();
        assert!(close(c.0, n.0, 1e-9) && close(c.1, n.1, 1e-9), "{c:?} vs {n:?}");
    }

    fn bisect_denominator(f: &CirFactor, u: f64, w: f64, hi: f64) -> f64 {
        let s = f.sigma * f.sigma;
        let disc = f.kappa * f.kappa - 2.0 * s * w;
        let den = |tau: f64| -> f64 {
            if disc > 0.0 {
                let beta = math::sqrt(disc);
                let rm = 2.0 * w / (f.kappa + beta);
                1.0 - 0.5 * s * (u - rm) * (1.0 - math::exp(-beta * tau)) / beta
            } else {
                let om = math::sqrt(-disc);
                math::cos(0.5 * om * tau) - (s * u - f.kappa) * math::sin(0.5 * om * tau) / om
            }
        };
        let (mut lo, mut hi) = (0.0, hi);
        assert!(den(lo) > 0.0 && den(hi) < 0.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if den(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn explosion_time_matches_bisection() {
        let f = CirFactor::new(0.5, 0.1, 0.4, 0.05).unwrap();
        // hyperbolic regime with large terminal loading
        let t1 = explosion_time(&f, 20.0, 0.1);
        assert!(t1.is_finite());
        assert!(close(t1, bisect_denominator(&f, 20.0, 0.1, 2.0 * t1), 1e-12));
        // trigonometric regime
        let t2 = explosion_time(&f, 0.0, 5.0);
        assert!(t2.is_finite());
        let b = bisect_denominator(&f, 0.0, 5.0, t2 * 1.2);
        assert!(close(t2, b, 1e-12), "{t2} vs {b}");
    }

    #[test]
    fn positive_gamma_past_explosion_errors() {
        let fs = FactorSet::new(vec![CirFactor::new(0.5, 0.1, 0.4, 0.05).unwrap()]).unwrap();
        let limit = explosion_time(&fs.factors()[0], 0.0, 5.0);
        let err = extended_expectation(&fs, &[0.05], limit * 1.01, &[5.0], &[0.0]).unwrap_err();
        assert!(matches!(err, Error::Explosion { .. }));
        assert!(extended_expectation(&fs, &[0.05], limit * 0.99, &[5.0], &[0.0]).is_ok());
        let num = factor_transform_numeric(&fs.factors()[0], limit * 1.01, 0.0, 5.0, NUMERIC_TOL);
        assert!(matches!(num, Err(Error::StepFailure { .. })));
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let fs = table8_one_factor();
        let err = riccati_transform(&fs, 1.0, &[0.0, 0.0], 1.0, &[0.0]).unwrap_err();
        assert_eq!(err, Error::Dimension { expected: 1, got: 2 });
    }

    #[test]
    fn complex_path_specializes_to_real() {
        let f = CirFactor::new(0.45, 0.13, 0.3, 0.02).unwrap();
        let (p, s) = factor_transform(&f, 4.0, -0.4, -0.02).unwrap();
        let (pc, sc) = factor_transform_complex(&f, 4.0, Complex64::new(-0.4, 0.0), -0.02).unwrap();
        assert!(close(p, pc.re, 1e-14) && close(s, sc.re, 1e-14));
        assert_eq!(pc.im, 0.0);
    }

    #[test]
    fn complex_path_matches_complex_rk4() {
        // integrate the complex ODE pair by fixed-step RK4 as an oracle
        let f = CirFactor::new(0.45, 0.13, 0.3, 0.02).unwrap();
        let u = Complex64::new(0.2, 1.5);
        let w = -0.05;
        let tau = 3.0;
        let s = f.sigma * f.sigma;
        let rhs = |y: [Complex64; 2]| [y[0] * y[0] * (0.5 * s) - y[0] * f.kappa + w, y[0] * (f.kappa * f.theta)];
        let mut y = [u, Complex64::new(0.0, 0.0)];
        let n = 20000;
        let h = tau / n as f64;
        for _ in 0..n {
            let k1 = rhs(y);
            let k2 = rhs([y[0] + k1[0] * (0.5 * h), y[1] + k1[1] * (0.5 * h)]);
            let k3 = rhs([y[0] + k2[0] * (0.5 * h), y[1] + k2[1] * (0.5 * h)]);
            let k4 = rhs([y[0] + k3[0] * h, y[1] + k3[1] * h]);
            for i in 0..2 {
                y[i] += (k1[i] + k2[i] * 2.0 + k3[i] * 2.0 + k4[i]) * (h / 6.0);
            }
        }
        let (phi, psi) = factor_transform_complex(&f, tau, u, w).unwrap();
        assert!((phi - y[1]).norm() < 1e-11 && (psi - y[0]).norm() < 1e-11);
    }

    #[test]
    fn nesting_identity() {
        let fs = FactorSet::new(vec![
            CirFactor::new(0.4, 0.1, 0.2, 0.05).unwrap(),
            CirFactor::new(0.9, 0.03, 0.15, 0.01).unwrap(),
        ])
        .unwrap();
        let gamma = [-0.7, -1.3];
        let x0 = fs.initial_state();
        let one = extended_expectation(&fs, &x0, 7.0, &gamma, &[0.0, 0.0]).unwrap();
        let inner = riccati_transform(&fs, 4.5, &[0.0, 0.0], 1.0, &gamma).unwrap();
        let outer = riccati_transform(&fs, 2.5, &inner.psi, 1.0, &gamma).unwrap();
        let two = math::exp(inner.phi + outer.phi + outer.psi[0] * x0[0] + outer.psi[1] * x0[1]);
        assert!(close(one, two, 1e-12), "{one} vs {two}");
    }
}
