//! Caplets on LIBOR by damped Fourier inversion.
//!
//! At `T_{j−1}` the caplet payoff is `K(1 + δR)(e^Z − 1)⁺` with
//! `Z = f + ⟨g, X(T_{j−1})⟩`, where
//!
//! ```text
//! f = −ln(1 + δR) + ∫(c₀ + a₀ + qb₀) + Φ(δ, c) − Φ(δ, −(a + qb))
//! g = Ψ(δ, c) − Ψ(δ, −(a + qb))
//! ```
//!
//! The characteristic function of `Z` under the `T_j`-forward measure is a
//! nested transform with a complex terminal loading, and the expectation
//! `E[(e^Z − 1)⁺]` follows from the Carr–Madan representation at log-strike 0.

use alloc::vec::Vec;

use num_complex::Complex64;

use crate::affine::{factor_transform, factor_transform_complex};
use crate::curve::ModelSpec;
use crate::math;
use crate::{Error, Result};

/// Numerical settings of the Fourier inversion.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FourierConfig {
    /// Damping exponent `α`.
    pub alpha: f64,
    /// Truncation of the frequency integral, in units of `1/sd(Z)`.
    pub w_max: f64,
    /// Absolute tolerance of adaptive Simpson.
    pub tol: f64,
    /// Tail tolerance relative to the integral.
    pub tail_rel: f64,
}

impl Default for FourierConfig {
    fn default() -> Self {
        FourierConfig {
            alpha: 0.75,
            w_max: 200.0,
            tol: 1e-10,
            tail_rel: 1e-6,
        }
    }
}

struct ZCoeffs {
    f: f64,
    g: Vec<f64>,
    /// `Ψ(δ, −a)` per factor
    psi_a: Vec<f64>,
    /// `−∫₀^{T_j} a₀ + Σ Φ(δ, −a)`
    base: f64,
    d_next: f64,
}

fn z_coeffs(model: &ModelSpec, t_prev: f64, t_next: f64, strike: f64) -> Result<ZCoeffs> {
    let delta = t_next - t_prev;
    if !(t_prev >= 0.0) || !(delta > 0.0) {
        return Err(Error::Domain(alloc::format!(
            "caplet needs 0 <= T_prev < T_next, got [{t_prev}, {t_next}]"
        )));
    }
    if !(1.0 + delta * strike > 0.0) {
        return Err(Error::Domain(alloc::format!("caplet strike {strike} needs 1 + delta R > 0")));
    }
    let d = model.dim();
    let q = model.q;
    let mut f = -math::ln1p(delta * strike)
        + model.phi.shift.integral(t_prev, t_next)
        + model.rc.shift.integral(t_prev, t_next)
        + q * model.lambda.shift.integral(t_prev, t_next);
    let mut base = -model.rc.shift.integral(0.0, t_next);
    let mut g = Vec::with_capacity(d);
    let mut psi_a = Vec::with_capacity(d);
    for (i, fac) in model.factors.factors().iter().enumerate() {
        let a = model.rc.loading[i];
        let b = model.lambda.loading[i];
        let c = model.phi.loading[i];
        let (pc, sc) = factor_transform(fac, delta, 0.0, c)?;
        let (pr, sr) = factor_transform(fac, delta, 0.0, -(a + q * b))?;
        let (pa, sa) = factor_transform(fac, delta, 0.0, -a)?;
        f += pc - pr;
        g.push(sc - sr);
        psi_a.push(sa);
        base += pa;
    }
    Ok(ZCoeffs {
        f,
        g,
        psi_a,
        base,
        d_next: model.ois_discount(0.0, t_next)?,
    })
}

fn char_fn(model: &ModelSpec, t_prev: f64, z: &ZCoeffs, u: Complex64) -> Result<Complex64> {
    let iu = Complex64::new(0.0, 1.0) * u;
    let mut e = iu * z.f + z.base;
    for (i, fac) in model.factors.factors().iter().enumerate() {
        let load = iu * z.g[i] + z.psi_a[i];
        let (p, s) = factor_transform_complex(fac, t_prev, load, -model.rc.loading[i])?;
        e += p + s * fac.y0;
    }
    Ok(e.exp() / z.d_next)
}

/// `E^{T_j}[e^{iuZ}]` at the valuation date for the caplet on `[T_prev, T_next]`
/// struck at `strike`.
pub fn caplet_char_fn(model: &ModelSpec, t_prev: f64, t_next: f64, strike: f64, u: Complex64) -> Result<Complex64> {
    let z = z_coeffs(model, t_prev, t_next, strike)?;
    char_fn(model, t_prev, &z, u)
}

/// Caplet price with default Fourier settings and damping `alpha`.
pub fn caplet_price(model: &ModelSpec, t_prev: f64, t_next: f64, strike: f64, notional: f64, alpha: f64) -> Result<f64> {
    let cfg = FourierConfig {
        alpha,
        ..FourierConfig::default()
    };
    caplet_price_with(model, t_prev, t_next, strike, notional, &cfg)
}

/// Caplet price `D^OIS(0, T_j)·K·(1 + δR)·E^{T_j}[(e^Z − 1)⁺]`.
pub fn caplet_price_with(
    model: &ModelSpec,
    t_prev: f64,
    t_next: f64,
    strike: f64,
    notional: f64,
    cfg: &FourierConfig,
) -> Result<f64> {
    if !(cfg.alpha > 0.0) || !(cfg.w_max > 0.0) || !(cfg.tol > 0.0) {
        return Err(Error::InvalidParameter(alloc::format!("invalid Fourier settings {cfg:?}")));
    }
    let z = z_coeffs(model, t_prev, t_next, strike)?;
    let scale = z.d_next * notional * (1.0 + (t_next - t_prev) * strike);
    if z.g.iter().all(|&g| g == 0.0) {
        return Ok(scale * math::expm1(z.f).max(0.0));
    }
    let k_plus = char_fn(model, t_prev, &z, Complex64::new(0.0, -1.0))?.re;
    let k_minus = char_fn(model, t_prev, &z, Complex64::new(0.0, 1.0))?.re;
    let var = math::ln(k_plus) + math::ln(k_minus);
    if !(var > 0.0) || !var.is_finite() {
        return Err(Error::Quadrature(alloc::format!("degenerate variance estimate {var}")));
    }
    let sd = math::sqrt(var);
    let a = cfg.alpha;
    let integrand = |w: f64| -> Result<Complex64> {
        let v = w / sd;
        let phi = char_fn(model, t_prev, &z, Complex64::new(v, -(a + 1.0)))?;
        let den = Complex64::new(a * a + a - v * v, (2.0 * a + 1.0) * v);
        Ok(phi / den / sd)
    };
    // quarter-period panels for the e^{iv·E[Z]} oscillation
    let mean = 0.5 * (math::ln(k_plus) - math::ln(k_minus));
    let omega = math::abs(mean) / sd;
    let panels = ((cfg.w_max * omega / core::f64::consts::FRAC_PI_2) as usize).max(64);
    if panels > MAX_PANELS {
        return Err(Error::Quadrature(alloc::format!(
            "log-moneyness {mean:e} is {omega:.0} standard deviations from the strike"
        )));
    }
    let width = cfg.w_max / panels as f64;
    let mut total = 0.0;
    for k in 0..panels {
        let lo = k as f64 * width;
        let hi = lo + width;
        total += simpson_panel(&|w| Ok(integrand(w)?.re), lo, hi, cfg.tol / panels as f64)?;
    }
    let tail = integrand(cfg.w_max)?.norm() * cfg.w_max;
    if tail > cfg.tol + cfg.tail_rel * math::abs(total) {
        return Err(Error::Quadrature(alloc::format!(
            "integrand tail {tail:e} exceeds tolerance at truncation {}",
            cfg.w_max
        )));
    }
    let expectation = total / core::f64::consts::PI;
    Ok(scale * expectation)
}

const MAX_PANELS: usize = 2_000_000;

fn simpson_panel(f: &dyn Fn(f64) -> Result<f64>, a: f64, b: f64, tol: f64) -> Result<f64> {
    let fa = f(a)?;
    let fb = f(b)?;
    let m = 0.5 * (a + b);
    let fm = f(m)?;
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_rec(f, a, b, fa, fm, fb, whole, tol, 48)
}

#[allow(clippy::too_many_arguments)]
fn simpson_rec(
    f: &dyn Fn(f64) -> Result<f64>,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> Result<f64> {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm)?;
    let frm = f(rm)?;
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let diff = left + right - whole;
    if math::abs(diff) <= 15.0 * tol {
        return Ok(left + right + diff / 15.0);
    }
    if depth == 0 || !diff.is_finite() {
        return Err(Error::Quadrature(alloc::format!("adaptive Simpson did not converge on [{a}, {b}]")));
    }
    Ok(simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)?
        + simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)?)
}
