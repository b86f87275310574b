//! Probabilists' Hermite polynomials `H_l` and their orthonormal versions
//! `h_l = H_l / sqrt(l!)`, orthonormal against the standard Gaussian density.

use num_bigint::BigInt;
use num_traits::{ToPrimitive, Zero};

use super::polynomial::PolynomialCoeffs;
use super::MAX_DEGREE;
use crate::{Error, Result};

/// Integer monomial coefficients of `H_l` from `H_{l+1} = x H_l - l H_{l-1}`.
pub fn hermite_integer(l: usize) -> Vec<BigInt> {
    let mut prev: Vec<BigInt> = vec![BigInt::from(1)];
    if l == 0 {
        return prev;
    }
    let mut cur: Vec<BigInt> = vec![BigInt::zero(), BigInt::from(1)];
    for k in 1..l {
        let mut next = vec![BigInt::zero(); k + 2];
        for (j, c) in cur.iter().enumerate() {
            next[j + 1] += c;
        }
        for (j, c) in prev.iter().enumerate() {
            next[j] -= c * BigInt::from(k);
        }
        prev = cur;
        cur = next;
    }
    cur
}

/// Coefficients of `h_l`. The recurrence runs in exact integers, so the only
/// rounding is the final division by `sqrt(l!)`.
pub fn hermite_orthonormal(l: usize) -> Result<PolynomialCoeffs> {
    if l > MAX_DEGREE {
        return Err(Error::DegreeCap {
            degree: l,
            cap: MAX_DEGREE,
        });
    }
    let norm = log_factorial(l) * 0.5;
    let coeffs = hermite_integer(l)
        .iter()
        .map(|c| {
            if c.is_zero() {
                0.0
            } else {
                // c / sqrt(l!) through logs keeps l = 64 away from overflow
                let mag = c.magnitude().to_f64().unwrap();
                let signed = if c.sign() == num_bigint::Sign::Minus { -1.0 } else { 1.0 };
                signed * (mag.ln() - norm).exp()
            }
        })
        .collect();
    Ok(PolynomialCoeffs::new(coeffs))
}

/// Values `h_0(x), ..., h_max(x)` from the stable orthonormal recurrence
/// `sqrt(k+1) h_{k+1} = x h_k - sqrt(k) h_{k-1}`.
pub fn hermite_values(max: usize, x: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(max + 1);
    out.push(1.0);
    if max == 0 {
        return out;
    }
    out.push(x);
    for k in 1..max {
        let next = (x * out[k] - (k as f64).sqrt() * out[k - 1]) / ((k + 1) as f64).sqrt();
        out.push(next);
    }
    out
}

pub(crate) fn log_factorial(l: usize) -> f64 {
    (1..=l).map(|k| (k as f64).ln()).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly_basis::quadrature::QuadratureRule;

    #[test]
    fn low_degree_examples() {
        assert_eq!(hermite_orthonormal(0).unwrap().coeffs(), &[1.0]);
        assert_eq!(hermite_orthonormal(1).unwrap().coeffs(), &[0.0, 1.0]);
        let h2 = hermite_orthonormal(2).unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert!((h2.coeff(0) + s).abs() < 1e-15);
        assert_eq!(h2.coeff(1), 0.0);
        assert!((h2.coeff(2) - s).abs() < 1e-15);
    }

    #[test]
    fn eval_examples() {
        assert_eq!(hermite_orthonormal(1).unwrap().eval(2.5), 2.5);
        assert!(hermite_orthonormal(2).unwrap().eval(1.0).abs() < 1e-15);
        assert_eq!(hermite_orthonormal(3).unwrap().eval(0.0), 0.0);
    }

    #[test]
    fn integer_recurrence_matches_explicit_sum() {
        // H_l = l! sum_k (-1/2)^k x^{l-2k} / (k! (l-2k)!)
        for l in 0..=20usize {
            let h = hermite_integer(l);
            let fact = |n: usize| (1..=n).fold(BigInt::from(1), |a, k| a * BigInt::from(k));
            for k in 0..=l / 2 {
                let num = fact(l) * if k % 2 == 0 { 1 } else { -1 };
                let den = fact(k) * fact(l - 2 * k) * BigInt::from(2).pow(k as u32);
                assert_eq!(&num % &den, BigInt::zero());
                assert_eq!(h[l - 2 * k], num / den, "l={l} k={k}");
            }
        }
    }

    #[test]
    fn derivative_identity_exact() {
        // H_l' = l H_{l-1} in integers, hence h_l' = sqrt(l) h_{l-1}
        for l in 1..=40usize {
            let h = hermite_integer(l);
            let lower = hermite_integer(l - 1);
            for j in 1..h.len() {
                assert_eq!(&h[j] * BigInt::from(j), &lower[j - 1] * BigInt::from(l));
            }
        }
    }

    #[test]
    fn derivative_identity_float() {
        for l in 1..=30usize {
            let d = hermite_orthonormal(l).unwrap().derivative();
            let lower = hermite_orthonormal(l - 1).unwrap().scale((l as f64).sqrt());
            for j in 0..=l - 1 {
                let scale = lower.coeff(j).abs().max(1.0);
                assert!((d.coeff(j) - lower.coeff(j)).abs() <= 1e-12 * scale, "l={l} j={j}");
            }
        }
    }

    #[test]
    fn recurrence_values_match_coefficients() {
        for &x in &[-3.1, -0.4, 0.0, 1.3, 4.2] {
            let vals = hermite_values(12, x);
            for (l, v) in vals.iter().enumerate() {
                let c = hermite_orthonormal(l).unwrap().eval(x);
                assert!((v - c).abs() < 1e-9 * c.abs().max(1.0));
            }
        }
    }

    #[test]
    fn orthonormal_under_gauss_hermite() {
        let rule = QuadratureRule::gauss_hermite(200).unwrap();
        for l1 in 0..=12 {
            let p1 = hermite_orthonormal(l1).unwrap();
            for l2 in 0..=12 {
                let p2 = hermite_orthonormal(l2).unwrap();
                let ip = rule.integrate(|x| p1.eval(x) * p2.eval(x));
                let target = if l1 == l2 { 1.0 } else { 0.0 };
                assert!((ip - target).abs() <= 1e-10, "l1={l1} l2={l2} ip={ip}");
            }
        }
    }

    #[test]
    fn cap_enforced() {
        assert!(matches!(
            hermite_orthonormal(MAX_DEGREE + 1),
            Err(Error::DegreeCap { .. })
        ));
        assert_eq!(hermite_orthonormal(MAX_DEGREE).unwrap().degree(), MAX_DEGREE);
    }
}
