use twofloat::TwoFloat;

use super::{ModelParams, Regime};
use crate::{Error, Result};

type T = TwoFloat;

fn tf(x: f64) -> T {
    T::from(x)
}

/// Real cube root in double-double.
fn cbrt(x: T) -> T {
    if x == 0.0 {
        tf(0.0)
    } else {
        x.cbrt()
    }
}

fn cubic_only(params: &ModelParams) -> Result<()> {
    params.validate()?;
    let a2 = params.a * params.a;
    if params.a == 0.0 || params.nu <= a2 {
        return Err(Error::Dispatch(format!(
            "explicit density needs 0 < a^2 < nu (got a = {}, nu = {}); use the semicircle or Marchenko–Pastur evaluators",
            params.a, params.nu
        )));
    }
    Ok(())
}

/// `(Q, R)` of the depressed monic cubic at real `u`, in double-double.
fn q_r(params: &ModelParams, u: f64) -> (T, T) {
    let (a, nu, g, u) = (tf(params.a), tf(params.nu), tf(params.gamma), tf(u));
    let den = a * (nu - a * a);
    let a2 = (nu + a * u) * g / den;
    let a1 = (a + g * u) * g / den;
    let a0 = g * g / den;
    let q = (3.0 * a1 - a2 * a2) / 9.0;
    let r = (9.0 * a2 * a1 - 27.0 * a0 - 2.0 * a2 * a2 * a2) / 54.0;
    (q, r)
}

/// `D = Q^3 + R^2` of the cubic at real `u`; positive exactly on the
/// interior of the support.
pub fn discriminant(params: &ModelParams, u: f64) -> Result<f64> {
    cubic_only(params)?;
    let (q, r) = q_r(params, u);
    Ok((q * q * q + r * r).hi())
}

/// Density of the cubic regime at `u` from Cardano's closed form, evaluated
/// in double-double arithmetic to absorb the cancellation in `D` when `nu`
/// is close to `a^2`.
pub fn density_explicit(params: &ModelParams, u: f64) -> Result<f64> {
    cubic_only(params)?;
    let (q, r) = q_r(params, u);
    let d = q * q * q + r * r;
    if d <= 0.0 {
        return Ok(0.0);
    }
    let sd = d.sqrt();
    let y = (3f64.sqrt() / 2.0) * (cbrt(sd + r) + cbrt(sd - r));
    Ok((y.hi() / std::f64::consts::PI).max(0.0))
}

/// `(1 - sqrt y)^2` and `(1 + sqrt y)^2`.
pub fn mp_edges(y: f64) -> (f64, f64) {
    let s = y.sqrt();
    ((1.0 - s).powi(2), (1.0 + s).powi(2))
}

/// Marchenko–Pastur law with ratio `y`: continuous density at `t` and the
/// mass of the atom at zero.
pub fn density_mp(t: f64, y: f64) -> Result<(f64, f64)> {
    if !(y > 0.0 && y.is_finite()) {
        return Err(Error::invalid(format!("ratio y must be positive, got {y}")));
    }
    let (lo, hi) = mp_edges(y);
    let atom = (1.0 - 1.0 / y).max(0.0);
    if t == 0.0 {
        return Ok((0.0, atom));
    }
    let v = ((hi - t).max(0.0) * (t - lo).max(0.0)).sqrt() / (2.0 * std::f64::consts::PI * y * t);
    Ok((v.max(0.0), atom))
}

/// Law of the linear kernel `k(x) = a x`: density at `t` and the mass of the
/// atom at `-a`.
pub fn density_linear_kernel(t: f64, a: f64, gamma: f64) -> Result<(f64, f64)> {
    if a == 0.0 || !a.is_finite() {
        return Err(Error::invalid("linear-kernel law needs a != 0"));
    }
    if !(gamma > 0.0) {
        return Err(Error::invalid(format!("gamma must be positive, got {gamma}")));
    }
    let (rho, _) = density_mp((t + a) / a, 1.0 / gamma)?;
    Ok((rho / a.abs(), (1.0 - gamma).max(0.0)))
}

pub fn density_semicircle(t: f64, nu: f64, gamma: f64) -> Result<f64> {
    if !(nu > 0.0) || !(gamma > 0.0) {
        return Err(Error::invalid("semicircle needs nu > 0 and gamma > 0"));
    }
    let s = nu / gamma;
    Ok((4.0 * s - t * t).max(0.0).sqrt() / (2.0 * std::f64::consts::PI * s))
}

/// Continuous part of the limit density at `t`, whatever the regime.
pub(crate) fn density_any(params: &ModelParams, t: f64) -> Result<f64> {
    match params.regime() {
        Regime::Null => Ok(0.0),
        Regime::Semicircle => density_semicircle(t, params.nu, params.gamma),
        Regime::MarchenkoPastur => Ok(density_linear_kernel(t, params.a, params.gamma)?.0),
        Regime::Cubic => density_explicit(params, t),
    }
}
