//! Orthonormal polynomial machinery: Hermite polynomials, exact moments of
//! the inner-product laws, moment-based orthonormal polynomials, quadrature
//! and kernel expansion coefficients.

pub mod gram_schmidt;
pub mod harmonics;
pub mod hermite;
pub mod moments;
pub mod polynomial;
pub mod quadrature;

pub use gram_schmidt::{orthonormal_basis_from_moments, orthonormal_from_moments};
pub use harmonics::jl_dimension;
pub use hermite::{hermite_orthonormal, hermite_values};
pub use moments::{
    gaussian_inner_moments, sphere_inner_moments, unit_gaussian_moments, MomentModel, MomentSequence,
};
pub use polynomial::{eval_poly, PolynomialCoeffs};
pub use quadrature::{AdaptiveOptions, QuadratureRule, Singularity, Weight};

use crate::{Error, Result};

/// Default polynomial degree cap.
pub const MAX_DEGREE: usize = 64;
/// Moments are needed through twice the degree.
pub const MAX_MOMENT_ORDER: usize = 2 * MAX_DEGREE;

/// What the expansion machinery needs to know about a scalar kernel.
pub trait KernelFunction {
    fn value(&self, x: f64) -> f64;

    /// Points where the kernel jumps or diverges.
    fn singularities(&self) -> Vec<Singularity>;

    /// `Some(d)` when the kernel is a polynomial of degree `d`, in which case
    /// Gauss–Hermite quadrature is exact.
    fn polynomial_degree(&self) -> Option<usize> {
        None
    }
}

/// Basis for [`expansion_coefficients`].
#[derive(Debug, Clone)]
pub enum Basis {
    /// `h_l` under the standard Gaussian weight.
    Hermite,
    /// `P_{l,p}` orthonormal under the weight the moments come from; the
    /// coefficients are integrated against that same weight.
    FromMoments(MomentSequence),
}

impl Basis {
    fn weight(&self) -> Result<Weight> {
        Ok(match self {
            Basis::Hermite => Weight::StandardGaussian,
            Basis::FromMoments(m) => match m.model() {
                MomentModel::UnitGaussian => Weight::StandardGaussian,
                MomentModel::GaussianInner { p } => Weight::GaussianInner { p },
                MomentModel::SphereInner { p } => Weight::SphereInner { p },
            },
        })
    }
}

/// Evaluates `P_0(x), ..., P_L(x)` of a basis without going through
/// monomials where a stable recurrence exists.
#[derive(Debug, Clone)]
pub struct BasisEvaluator {
    kind: EvalKind,
}

#[derive(Debug, Clone)]
enum EvalKind {
    Hermite(usize),
    /// Symmetric weight: `b_{k+1} P_{k+1} = x P_k - b_k P_{k-1}`.
    Symmetric(Vec<f64>),
    Monomial(Vec<PolynomialCoeffs>),
}

impl BasisEvaluator {
    pub fn new(basis: &Basis, max_degree: usize) -> Result<Self> {
        if max_degree > MAX_DEGREE {
            return Err(Error::DegreeCap {
                degree: max_degree,
                cap: MAX_DEGREE,
            });
        }
        let kind = match basis {
            Basis::Hermite => EvalKind::Hermite(max_degree),
            Basis::FromMoments(m) => {
                let polys = orthonormal_basis_from_moments(m, max_degree)?;
                let symmetric = m.moments().iter().skip(1).step_by(2).all(|&v| v == 0.0);
                if symmetric {
                    // b_k = lead(P_{k-1}) / lead(P_k)
                    let b = std::iter::once(0.0)
                        .chain(polys.windows(2).map(|w| w[0].leading() / w[1].leading()))
                        .collect();
                    EvalKind::Symmetric(b)
                } else {
                    EvalKind::Monomial(polys)
                }
            }
        };
        Ok(Self { kind })
    }

    pub fn max_degree(&self) -> usize {
        match &self.kind {
            EvalKind::Hermite(l) => *l,
            EvalKind::Symmetric(b) => b.len() - 1,
            EvalKind::Monomial(p) => p.len() - 1,
        }
    }

    pub fn eval_into(&self, x: f64, out: &mut [f64]) {
        match &self.kind {
            EvalKind::Hermite(l) => out[..=*l].copy_from_slice(&hermite_values(*l, x)),
            EvalKind::Symmetric(b) => {
                out[0] = 1.0;
                if b.len() > 1 {
                    out[1] = x / b[1];
                }
                for k in 1..b.len() - 1 {
                    out[k + 1] = (x * out[k] - b[k] * out[k - 1]) / b[k + 1];
                }
            }
            EvalKind::Monomial(polys) => {
                for (o, p) in out.iter_mut().zip(polys) {
                    *o = p.eval(x);
                }
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct Expansion {
    pub coeffs: Vec<f64>,
    /// Quadrature refinement disagreement; zero for exact Gauss–Hermite use.
    pub achieved: f64,
}

/// `c_l = E[k(W) basis_l(W)]` for `l = 0..=max_degree`.
///
/// Polynomial kernels under the standard Gaussian weight use the supplied
/// Gauss–Hermite rule when it is exact for the product; everything else goes
/// through the singularity-splitting integrator.
pub fn expansion_coefficients<K: KernelFunction + ?Sized>(
    kernel: &K,
    basis: &Basis,
    max_degree: usize,
    rule: &QuadratureRule,
) -> Result<Expansion> {
    let eval = BasisEvaluator::new(basis, max_degree)?;
    let weight = basis.weight()?;
    let dim = max_degree + 1;

    if let (Some(d), Weight::StandardGaussian) = (kernel.polynomial_degree(), weight) {
        if d + max_degree < 2 * rule.len() {
            let mut buf = vec![0.0; dim];
            let mut coeffs = vec![0.0; dim];
            for (&x, &w) in rule.nodes().iter().zip(rule.weights()) {
                eval.eval_into(x, &mut buf);
                let kx = kernel.value(x);
                for (c, b) in coeffs.iter_mut().zip(&buf) {
                    *c += w * kx * b;
                }
            }
            return Ok(Expansion {
                coeffs,
                achieved: 0.0,
            });
        }
    }

    let f = |x: f64, out: &mut [f64]| {
        eval.eval_into(x, out);
        let kx = kernel.value(x);
        out.iter_mut().for_each(|v| *v *= kx);
    };
    let res = quadrature::expectation_vec(
        weight,
        &f,
        dim,
        &kernel.singularities(),
        &AdaptiveOptions::default(),
    )?;
    Ok(Expansion {
        coeffs: res.values,
        achieved: res.achieved,
    })
}
