use serde::{Deserialize, Serialize};

/// Polynomial in the monomial basis; `coeffs[j]` multiplies `x^j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolynomialCoeffs {
    coeffs: Vec<f64>,
}

impl PolynomialCoeffs {
    /// Trailing zeros above degree 0 are trimmed so that the leading
    /// coefficient is nonzero.
    pub fn new(mut coeffs: Vec<f64>) -> Self {
        while coeffs.len() > 1 && *coeffs.last().unwrap() == 0.0 {
            coeffs.pop();
        }
        if coeffs.is_empty() {
            coeffs.push(0.0);
        }
        Self { coeffs }
    }

    pub fn constant(c: f64) -> Self {
        Self::new(vec![c])
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn leading(&self) -> f64 {
        *self.coeffs.last().unwrap()
    }

    /// Coefficient of `x^j`, zero above the degree.
    pub fn coeff(&self, j: usize) -> f64 {
        self.coeffs.get(j).copied().unwrap_or(0.0)
    }

    pub fn eval(&self, x: f64) -> f64 {
        eval_poly(self, x)
    }

    pub fn derivative(&self) -> Self {
        if self.coeffs.len() == 1 {
            return Self::constant(0.0);
        }
        Self::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(j, c)| j as f64 * c)
                .collect(),
        )
    }

    pub fn scale(&self, s: f64) -> Self {
        Self::new(self.coeffs.iter().map(|c| c * s).collect())
    }

    /// Largest absolute coefficient difference, padding the shorter one with zeros.
    pub fn max_coeff_diff(&self, other: &Self) -> f64 {
        let len = self.coeffs.len().max(other.coeffs.len());
        (0..len)
            .map(|j| (self.coeff(j) - other.coeff(j)).abs())
            .fold(0.0, f64::max)
    }
}

/// Horner evaluation.
pub fn eval_poly(c: &PolynomialCoeffs, x: f64) -> f64 {
    c.coeffs.iter().rev().fold(0.0, |acc, &a| acc * x + a)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trims_leading_zeros() {
        let p = PolynomialCoeffs::new(vec![1.0, 2.0, 0.0, 0.0]);
        assert_eq!(p.degree(), 1);
        assert_eq!(PolynomialCoeffs::new(vec![]).degree(), 0);
    }

    #[test]
    fn horner_matches_direct_sum() {
        let p = PolynomialCoeffs::new(vec![0.5, -1.0, 3.0, 2.0]);
        let x = 1.7_f64;
        let direct = 0.5 - x + 3.0 * x * x + 2.0 * x.powi(3);
        assert!((p.eval(x) - direct).abs() < 1e-12);
    }

    #[test]
    fn derivative_of_cubic() {
        let p = PolynomialCoeffs::new(vec![1.0, 1.0, 1.0, 1.0]);
        assert_eq!(p.derivative().coeffs(), &[1.0, 2.0, 3.0]);
        assert_eq!(PolynomialCoeffs::constant(4.0).derivative().coeffs(), &[0.0]);
    }
}
