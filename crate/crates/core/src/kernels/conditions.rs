use serde::Serialize;

use super::{limit_constants, KernelDescriptor, LimitConstants};
use crate::poly_basis::{
    expansion_coefficients, gaussian_inner_moments, quadrature::expectation_vec, AdaptiveOptions, Basis,
    KernelFunction, QuadratureRule, Singularity, Weight,
};
use crate::{Error, Result};

/// Finite-`p` expansion data for one dimension.
#[derive(Debug, Clone, Serialize)]
pub struct ConditionEntry {
    pub p: usize,
    /// `a_{l,p}` for `l = 0..=L` against the Gaussian inner-product law.
    pub coeffs: Vec<f64>,
    pub a1: f64,
    /// `Var k(xi_p)`.
    pub nu_p: f64,
    /// `nu_p - sum_{1 <= l <= L'} a_{l,p}^2` for `L' = 0..=L`.
    pub tail_by_degree: Vec<f64>,
    pub tail: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConditionReport {
    pub kernel: String,
    pub degree: usize,
    pub limit: LimitConstants,
    pub entries: Vec<ConditionEntry>,
    pub max_tail: f64,
    /// `|a_{1,p} - a|` does not increase along the sorted dimensions.
    pub a1_trend_ok: bool,
    /// `|nu_p - nu|` does not increase along the sorted dimensions.
    pub nu_trend_ok: bool,
    pub flags: Vec<String>,
}

const TREND_SLACK: f64 = 1e-9;

fn nonincreasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] <= w[0] + TREND_SLACK)
}

/// Checks the variance, uniformity and linear-coefficient conditions on a
/// list of dimensions, expanding `k(xi_p)` in the polynomials orthonormal
/// under the Gaussian inner-product law. Violations are flagged rather than
/// returned as errors.
pub fn check_conditions(k: &KernelDescriptor, p_list: &[usize], degree: usize) -> Result<ConditionReport> {
    if p_list.is_empty() {
        return Err(Error::invalid("check_conditions needs at least one dimension"));
    }
    let mut ps = p_list.to_vec();
    ps.sort_unstable();
    ps.dedup();
    let limit = limit_constants(k)?;
    let rule = QuadratureRule::gauss_hermite(64)?;
    let squared: Vec<Singularity> = k
        .singularities()
        .iter()
        .map(|s| Singularity::algebraic(s.at, 2.0 * s.order))
        .collect();

    let mut entries = Vec::with_capacity(ps.len());
    let mut flags = Vec::new();
    for &p in &ps {
        let moments = gaussian_inner_moments(p, 2 * degree.max(1))?;
        let exp = expansion_coefficients(k, &Basis::FromMoments(moments), degree.max(1), &rule)?;
        let f = |x: f64, out: &mut [f64]| {
            let v = k.value(x);
            out[0] = v;
            out[1] = v * v;
        };
        let m = expectation_vec(Weight::GaussianInner { p }, &f, 2, &squared, &AdaptiveOptions::default())?;
        let nu_p = m.values[1] - m.values[0] * m.values[0];
        let mut coeffs = exp.coeffs;
        coeffs.truncate(degree + 1);
        let mut tail_by_degree = Vec::with_capacity(degree + 1);
        let mut partial = 0.0;
        for (l, c) in coeffs.iter().enumerate() {
            if l >= 1 {
                partial += c * c;
            }
            tail_by_degree.push(nu_p - partial);
        }
        let tail = *tail_by_degree.last().unwrap();
        if tail < -1e-8 {
            flags.push(format!("p={p}: expansion exceeds variance by {:.3e}", -tail));
        }
        entries.push(ConditionEntry {
            p,
            a1: exp_a1(&coeffs),
            coeffs,
            nu_p,
            tail_by_degree,
            tail,
        });
    }

    let a_dev: Vec<f64> = entries.iter().map(|e| (e.a1 - limit.a).abs()).collect();
    let nu_dev: Vec<f64> = entries.iter().map(|e| (e.nu_p - limit.nu).abs()).collect();
    let a1_trend_ok = nonincreasing(&a_dev);
    let nu_trend_ok = nonincreasing(&nu_dev);
    if !a1_trend_ok {
        flags.push(format!("a_1,p does not approach a = {}: deviations {a_dev:?}", limit.a));
    }
    if !nu_trend_ok {
        flags.push(format!("nu_p does not approach nu = {}: deviations {nu_dev:?}", limit.nu));
    }
    let max_tail = entries.iter().map(|e| e.tail).fold(f64::NEG_INFINITY, f64::max);
    Ok(ConditionReport {
        kernel: k.to_string(),
        degree,
        limit,
        entries,
        max_tail,
        a1_trend_ok,
        nu_trend_ok,
        flags,
    })
}

fn exp_a1(coeffs: &[f64]) -> f64 {
    coeffs.get(1).copied().unwrap_or(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sign_kernel_has_unit_variance_at_every_p() {
        let k: KernelDescriptor = "sign".parse().unwrap();
        let r = check_conditions(&k, &[100, 400, 1600], 20).unwrap();
        for e in &r.entries {
            assert!((e.nu_p - 1.0).abs() < 1e-9, "p={}", e.p);
            assert!(e.tail_by_degree.windows(2).all(|w| w[1] <= w[0] + 1e-12));
            assert!(e.tail >= -1e-8);
        }
        assert!(r.a1_trend_ok);
        assert!(r.flags.is_empty(), "{:?}", r.flags);
    }

    #[test]
    fn linear_kernel_is_exact() {
        let k: KernelDescriptor = "linear:c=1.5".parse().unwrap();
        let r = check_conditions(&k, &[10, 50], 6).unwrap();
        for e in &r.entries {
            assert!((e.a1 - 1.5).abs() < 1e-10);
            assert!(e.tail.abs() < 1e-9);
        }
    }

    #[test]
    fn power_odd_first_coefficient_approaches_limit() {
        let k: KernelDescriptor = "power_odd:r=0.25".parse().unwrap();
        let r = check_conditions(&k, &[100, 400], 8).unwrap();
        for e in &r.entries {
            assert!((e.a1 - 0.79726).abs() < 0.05, "p={} a1={}", e.p, e.a1);
        }
        assert!(r.a1_trend_ok);
    }

    #[test]
    fn a1_for_sign_is_mean_abs_inner_product() {
        // a_{1,p} = E|xi_p| = E|X| sqrt(2/pi) with E|X| = sqrt(2/p) Gamma((p+1)/2) / Gamma(p/2)
        use statrs::function::gamma::ln_gamma;
        let k: KernelDescriptor = "sign".parse().unwrap();
        let r = check_conditions(&k, &[7, 30], 3).unwrap();
        for e in &r.entries {
            let pf = e.p as f64;
            let mean_norm = (0.5 * (2.0 / pf).ln() + ln_gamma((pf + 1.0) / 2.0) - ln_gamma(pf / 2.0)).exp();
            let expected = mean_norm * (2.0 / std::f64::consts::PI).sqrt();
            assert!((e.a1 - expected).abs() < 1e-9);
        }
    }

    #[test]
    fn empty_dimension_list_is_invalid() {
        assert!(check_conditions(&KernelDescriptor::sign(), &[], 4).is_err());
    }
}
