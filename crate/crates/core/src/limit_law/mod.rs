//! The limiting spectral law of a kernel matrix.
//!
//! Its Stieltjes transform `m(z)` is the unique root with `Im m > 0` of
//!
//! ```text
//! (a (nu - a^2) / gamma) m^3 + (nu + a z) m^2 + (a + gamma z) m + gamma = 0
//! ```
//!
//! which degenerates to the semicircle equation for `a = 0` and to the
//! shifted Marchenko–Pastur equation for `nu = a^2`. The density is
//! `Im m(u + i0) / pi`, available in closed form through Cardano's formula.

mod curve;
mod density;
mod roots;
mod support;

pub use curve::{auto_grid, continuous_support, density_curve, Atom, DensityCurve, DEFAULT_CURVE_TOLERANCE};
pub use density::{
    density_explicit, density_linear_kernel, density_mp, density_semicircle, discriminant, mp_edges,
};
pub use roots::{cubic_roots, relative_residual, solve_m, stieltjes_coefficients};
pub use support::{support_intervals, support_scan_range};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Below this the cubic's leading coefficient `|a| (nu - a^2) / gamma` is
/// treated as zero and the nearest degenerate law is used.
pub const CUBIC_LEADING_CUTOFF: f64 = 1e-10;
/// `|nu - a^2|` at or below this selects the Marchenko–Pastur equation.
pub const MP_CUTOFF: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub a: f64,
    pub nu: f64,
    pub gamma: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    /// `a = nu = 0`: all mass at zero.
    Null,
    /// `a = 0`: semicircle of radius `2 sqrt(nu / gamma)`.
    Semicircle,
    /// `nu = a^2`: shifted and scaled Marchenko–Pastur law.
    MarchenkoPastur,
    Cubic,
}

impl ModelParams {
    pub fn new(a: f64, nu: f64, gamma: f64) -> Result<Self> {
        if !(a.is_finite() && nu.is_finite() && gamma.is_finite()) {
            return Err(Error::invalid("a, nu and gamma must be finite"));
        }
        if gamma <= 0.0 {
            return Err(Error::invalid(format!("gamma must be positive, got {gamma}")));
        }
        if nu < 0.0 {
            return Err(Error::invalid(format!("nu must be non-negative, got {nu}")));
        }
        if nu < a * a - 1e-9 * (a * a).max(1.0) {
            return Err(Error::invalid(format!("nu = {nu} is below a^2 = {}", a * a)));
        }
        Ok(Self { a, nu, gamma })
    }

    pub fn validate(&self) -> Result<()> {
        Self::new(self.a, self.nu, self.gamma).map(|_| ())
    }

    /// `nu - a^2`, clamped at zero.
    pub fn excess(&self) -> f64 {
        (self.nu - self.a * self.a).max(0.0)
    }

    pub fn regime(&self) -> Regime {
        let (a, nu, gamma) = (self.a, self.nu, self.gamma);
        if a == 0.0 {
            return if nu == 0.0 { Regime::Null } else { Regime::Semicircle };
        }
        let excess = nu - a * a;
        if excess <= MP_CUTOFF {
            return Regime::MarchenkoPastur;
        }
        if a.abs() * excess / gamma < CUBIC_LEADING_CUTOFF {
            return if a * a <= nu / 2.0 {
                Regime::Semicircle
            } else {
                Regime::MarchenkoPastur
            };
        }
        Regime::Cubic
    }

    /// `(c a, c^2 nu, gamma)`; the law scales by `c`.
    pub fn scaled(&self, c: f64) -> Self {
        Self {
            a: self.a * c,
            nu: self.nu * c * c,
            gamma: self.gamma,
        }
    }
}

/// A point `u + i v` of the open upper half plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComplexUpper {
    re: f64,
    im: f64,
}

impl ComplexUpper {
    pub fn new(re: f64, im: f64) -> Result<Self> {
        if !(re.is_finite() && im.is_finite()) || im <= 0.0 {
            return Err(Error::invalid(format!("z = {re} + {im}i is not in the upper half plane")));
        }
        Ok(Self { re, im })
    }

    pub fn re(&self) -> f64 {
        self.re
    }

    pub fn im(&self) -> f64 {
        self.im
    }

    pub fn to_complex(&self) -> Complex64 {
        Complex64::new(self.re, self.im)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation() {
        assert!(ModelParams::new(1.0, 0.5, 1.0).is_err());
        assert!(ModelParams::new(0.0, 1.0, 0.0).is_err());
        assert!(ModelParams::new(0.0, -1.0, 1.0).is_err());
        assert!(ModelParams::new(1.0, 1.0 - 1e-12, 1.0).is_ok());
        assert!(ComplexUpper::new(0.0, 0.0).is_err());
        assert!(ComplexUpper::new(0.0, 1e-12).is_ok());
    }

    #[test]
    fn regimes() {
        let r = |a, nu| ModelParams::new(a, nu, 1.0).unwrap().regime();
        assert_eq!(r(0.0, 0.0), Regime::Null);
        assert_eq!(r(0.0, 1.0), Regime::Semicircle);
        assert_eq!(r(1.0, 1.0), Regime::MarchenkoPastur);
        assert_eq!(r(0.5, 1.0), Regime::Cubic);
        assert_eq!(r(1e-11, 1.0), Regime::Semicircle);
        assert_eq!(r(1.0, 1.0 + 1e-11), Regime::MarchenkoPastur);
    }
}
