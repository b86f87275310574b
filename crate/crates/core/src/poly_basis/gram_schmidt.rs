//! Orthonormal polynomials of a moment functional.
//!
//! Gram–Schmidt on `1, x, x^2, ...` is the root-free Cholesky factorization
//! `H = L D L^T` of the Hankel matrix `H_ij = mu_{i+j}`: the rows of `L^{-1}`
//! are the monic orthogonal polynomials and `D_k` their squared norms. The
//! factorization runs in exact rational arithmetic; cancellation in the
//! Hankel system is therefore not an issue, only the final `1/sqrt(D_k)`
//! scaling is rounded.

use num_rational::BigRational;
use num_traits::{Signed, Zero};

use super::moments::{rational_to_f64, MomentSequence};
use super::polynomial::PolynomialCoeffs;
use super::MAX_DEGREE;
use crate::{Error, Result};

/// Largest admissible `H_kk / D_k`, a lower bound on the Hankel condition number.
pub const HANKEL_CONDITION_LIMIT: f64 = 1e12;

/// `P_0, ..., P_l`, orthonormal under the moment functional with positive
/// leading coefficients.
pub fn orthonormal_basis_from_moments(m: &MomentSequence, l: usize) -> Result<Vec<PolynomialCoeffs>> {
    if l > MAX_DEGREE {
        return Err(Error::DegreeCap {
            degree: l,
            cap: MAX_DEGREE,
        });
    }
    if m.max_order() < 2 * l {
        return Err(Error::invalid(format!(
            "degree {l} needs moments through order {}, got {}",
            2 * l,
            m.max_order()
        )));
    }
    let mu = m.exact();
    let size = l + 1;
    let h = |i: usize, j: usize| &mu[i + j];

    let mut lower: Vec<Vec<BigRational>> = vec![Vec::new(); size];
    let mut pivots: Vec<BigRational> = Vec::with_capacity(size);
    for k in 0..size {
        // row k of L
        let mut row = Vec::with_capacity(k + 1);
        for j in 0..k {
            let mut s = h(k, j).clone();
            for i in 0..j {
                s -= &row[i] * &lower[j][i] * &pivots[i];
            }
            row.push(s / &pivots[j]);
        }
        let mut d = h(k, k).clone();
        for (j, lkj) in row.iter().enumerate() {
            d -= lkj * lkj * &pivots[j];
        }
        if !d.is_positive() {
            return Err(Error::DegenerateMoments(format!(
                "Hankel pivot {k} is not positive; moment functional is not positive definite"
            )));
        }
        let ratio = rational_to_f64(&(h(k, k) / &d));
        if ratio > HANKEL_CONDITION_LIMIT {
            return Err(Error::DegenerateMoments(format!(
                "Hankel condition number exceeds {HANKEL_CONDITION_LIMIT:e} at degree {k} (H_kk/D_k = {ratio:.3e})"
            )));
        }
        row.push(BigRational::from_integer(1.into()));
        lower[k] = row;
        pivots.push(d);
    }

    // M = L^{-1}, unit lower triangular
    let mut inv: Vec<Vec<BigRational>> = vec![Vec::new(); size];
    for k in 0..size {
        let mut row = vec![BigRational::zero(); k + 1];
        row[k] = BigRational::from_integer(1.into());
        for j in (0..k).rev() {
            let mut s = BigRational::zero();
            for i in j..k {
                if !lower[k][i].is_zero() && !inv[i][j].is_zero() {
                    s += &lower[k][i] * &inv[i][j];
                }
            }
            row[j] = -s;
        }
        inv[k] = row;
    }

    Ok(inv
        .iter()
        .zip(&pivots)
        .map(|(row, d)| {
            let scale = rational_to_f64(d).sqrt();
            PolynomialCoeffs::new(row.iter().map(|c| rational_to_f64(c) / scale).collect())
        })
        .collect())
}

/// `P_l` alone.
pub fn orthonormal_from_moments(m: &MomentSequence, l: usize) -> Result<PolynomialCoeffs> {
    Ok(orthonormal_basis_from_moments(m, l)?.pop().unwrap())
}

/// `<f, g>` under the moment functional, for checking orthonormality.
pub fn moment_inner_product(m: &MomentSequence, f: &PolynomialCoeffs, g: &PolynomialCoeffs) -> f64 {
    let mu = m.moments();
    let mut s = 0.0;
    for (i, a) in f.coeffs().iter().enumerate() {
        for (j, b) in g.coeffs().iter().enumerate() {
            s += a * b * mu[i + j];
        }
    }
    s
}
