//! Exact raw moments of the three inner-product weights.
//!
//! For `X, Y ~ N(0, I_p / p)` the scaled inner product `xi_p = sqrt(p) X^T Y`
//! equals `|X| zeta` in law with `zeta ~ N(0, 1)` independent of `|X|`, and
//! `|X|^2 = chi^2_p / p`. Hence
//! `E xi_p^{2m} = (2m-1)!! * prod_{j<m} (1 + 2j/p)`.
//! For `X, Y` uniform on the sphere the same identity, divided by
//! `(E|X|^{2m})^2`, gives `(2m-1)!! / prod_{j<m} (1 + 2j/p)`.
//! Odd moments vanish for all three weights.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use super::MAX_MOMENT_ORDER;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "kebab-case")]
pub enum MomentModel {
    UnitGaussian,
    GaussianInner { p: usize },
    SphereInner { p: usize },
}

impl MomentModel {
    pub fn dimension(&self) -> Option<usize> {
        match *self {
            MomentModel::UnitGaussian => None,
            MomentModel::GaussianInner { p } | MomentModel::SphereInner { p } => Some(p),
        }
    }
}

/// Moments `mu_0 ..= mu_K` of a symmetric weight, kept both as exact
/// rationals and as `f64`.
#[derive(Debug, Clone)]
pub struct MomentSequence {
    model: MomentModel,
    exact: Vec<BigRational>,
    moments: Vec<f64>,
}

impl MomentSequence {
    pub fn model(&self) -> MomentModel {
        self.model
    }

    pub fn max_order(&self) -> usize {
        self.moments.len() - 1
    }

    pub fn moments(&self) -> &[f64] {
        &self.moments
    }

    pub fn moment(&self, k: usize) -> f64 {
        self.moments[k]
    }

    pub fn exact(&self) -> &[BigRational] {
        &self.exact
    }

    /// Builds a sequence from arbitrary floating moments; each `f64` is an
    /// exact dyadic rational so nothing is lost in the conversion.
    pub fn from_f64(model: MomentModel, moments: Vec<f64>) -> Result<Self> {
        if moments.is_empty() {
            return Err(Error::invalid("moment sequence must contain mu_0"));
        }
        let exact = moments
            .iter()
            .map(|&m| {
                BigRational::from_float(m)
                    .ok_or_else(|| Error::invalid(format!("non-finite moment {m}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            model,
            exact,
            moments,
        })
    }

    fn from_exact(model: MomentModel, exact: Vec<BigRational>) -> Self {
        let moments = exact.iter().map(rational_to_f64).collect();
        Self {
            model,
            exact,
            moments,
        }
    }
}

fn check_order(k: usize) -> Result<()> {
    if k > MAX_MOMENT_ORDER {
        return Err(Error::DegreeCap {
            degree: k,
            cap: MAX_MOMENT_ORDER,
        });
    }
    Ok(())
}

fn rat(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

/// `(2m-1)!!` for every even order and the per-order product factor.
fn even_moments(k: usize, factor: impl Fn(usize) -> BigRational) -> Vec<BigRational> {
    let mut out = Vec::with_capacity(k + 1);
    let mut even = BigRational::one();
    for order in 0..=k {
        if order % 2 == 1 {
            out.push(BigRational::zero());
            continue;
        }
        let m = order / 2;
        if m > 0 {
            // mu_{2m} = mu_{2m-2} * (2m-1) * factor(m-1)
            even = even * rat(2 * m as i64 - 1) * factor(m - 1);
        }
        out.push(even.clone());
    }
    out
}

/// Moments of the standard normal.
pub fn unit_gaussian_moments(k: usize) -> Result<MomentSequence> {
    check_order(k)?;
    Ok(MomentSequence::from_exact(
        MomentModel::UnitGaussian,
        even_moments(k, |_| BigRational::one()),
    ))
}

/// Moments of `xi_p = sqrt(p) X^T Y` with `X, Y ~ N(0, I_p / p)`.
pub fn gaussian_inner_moments(p: usize, k: usize) -> Result<MomentSequence> {
    if p < 1 {
        return Err(Error::invalid("gaussian inner-product moments need p >= 1"));
    }
    check_order(k)?;
    let pr = p as i64;
    Ok(MomentSequence::from_exact(
        MomentModel::GaussianInner { p },
        even_moments(k, |j| BigRational::new(BigInt::from(pr + 2 * j as i64), BigInt::from(pr))),
    ))
}

/// Moments of `sqrt(p) X^T Y` with `X, Y` uniform on `S^{p-1}`.
pub fn sphere_inner_moments(p: usize, k: usize) -> Result<MomentSequence> {
    if p < 2 {
        return Err(Error::invalid("sphere inner-product moments need p >= 2"));
    }
    check_order(k)?;
    let pr = p as i64;
    Ok(MomentSequence::from_exact(
        MomentModel::SphereInner { p },
        even_moments(k, |j| BigRational::new(BigInt::from(pr), BigInt::from(pr + 2 * j as i64))),
    ))
}

/// `E |X|^{2m}` for `X ~ N(0, I_p / p)`: `prod_{j<m} (1 + 2j/p)`.
pub fn chi_norm_moment(p: usize, m: usize) -> BigRational {
    let pr = p as i64;
    (0..m).fold(BigRational::one(), |acc, j| {
        acc * BigRational::new(BigInt::from(pr + 2 * j as i64), BigInt::from(pr))
    })
}

pub(crate) fn rational_to_f64(r: &BigRational) -> f64 {
    if let Some(v) = r.to_f64() {
        if v.is_finite() {
            return v;
        }
    }
    // numerator or denominator too wide for a direct conversion
    let shift = r.numer().bits().max(r.denom().bits()) as i64 - 1000;
    let (n, d) = if shift > 0 {
        (r.numer() >> shift as usize, r.denom() >> shift as usize)
    } else {
        (r.numer().clone(), r.denom().clone())
    };
    n.to_f64().unwrap_or(f64::NAN) / d.to_f64().unwrap_or(f64::NAN)
}
