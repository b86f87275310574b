//! Kernel catalog and extraction of the limit constants `(a, nu)`.
//!
//! A kernel `k` acts on the rescaled inner product through
//! `f(xi; p) = k(sqrt(p) xi) / sqrt(p)`. The constants entering the limit law
//! are `a = E[k(zeta) zeta]` and `nu = Var k(zeta)` for `zeta ~ N(0, 1)`.

mod conditions;
mod grammar;

pub use conditions::{check_conditions, ConditionEntry, ConditionReport};

use std::fmt;
use std::sync::{Arc, OnceLock};

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::poly_basis::{
    self, expansion_coefficients, hermite_values, AdaptiveOptions, Basis, KernelFunction, QuadratureRule,
    Singularity, Weight,
};
use crate::{Error, Result};

/// Evaluator of a user-supplied kernel.
pub type KernelFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
pub struct CustomKernel {
    pub name: String,
    pub eval: KernelFn,
    /// Points where the kernel jumps or diverges; quadrature splits there.
    pub singular: Vec<Singularity>,
    /// Set when the kernel is a polynomial of this degree.
    pub polynomial_degree: Option<usize>,
}

impl fmt::Debug for CustomKernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomKernel")
            .field("name", &self.name)
            .field("singular", &self.singular)
            .field("polynomial_degree", &self.polynomial_degree)
            .finish_non_exhaustive()
    }
}

#[derive(Debug, Clone)]
pub enum KernelVariant {
    /// `sign(x)`.
    Sign,
    /// `|x|^{-r}`.
    PowerEven { r: f64 },
    /// `sign(x) |x|^{-r}`.
    PowerOdd { r: f64 },
    /// `c x`.
    Linear { c: f64 },
    /// Orthonormal Hermite polynomial `h_l`.
    HermiteUnit { degree: usize },
    /// `sum_l c_l h_l(x)`; index is the Hermite degree.
    Series { coeffs: Vec<f64> },
    Custom(CustomKernel),
}

#[derive(Debug, Clone)]
pub struct KernelDescriptor {
    variant: KernelVariant,
    centering_offset: f64,
    value_at_zero: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    ClosedForm,
    Quadrature,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LimitConstants {
    pub a: f64,
    pub nu: f64,
    pub provenance: Provenance,
}

/// `E|zeta|^{-s}` for `s < 1`.
pub fn abs_gaussian_moment(s: f64) -> f64 {
    let log = 0.5 * (2.0 / std::f64::consts::PI).ln() - 0.5 * (s + 1.0) * std::f64::consts::LN_2
        + ln_gamma(0.5 * (1.0 - s));
    log.exp()
}

fn check_power(r: f64) -> Result<()> {
    if !(r > 0.0 && r < 0.5) {
        return Err(Error::invalid(format!(
            "power kernels need 0 < r < 1/2 for square-integrability, got r = {r}"
        )));
    }
    Ok(())
}

fn shared_rule() -> &'static QuadratureRule {
    static RULE: OnceLock<QuadratureRule> = OnceLock::new();
    RULE.get_or_init(|| QuadratureRule::gauss_hermite(96).expect("96-node rule"))
}

impl KernelDescriptor {
    fn raw(variant: KernelVariant) -> Self {
        Self {
            variant,
            centering_offset: 0.0,
            value_at_zero: 0.0,
        }
    }

    pub fn sign() -> Self {
        Self::raw(KernelVariant::Sign)
    }

    pub fn power_even(r: f64) -> Result<Self> {
        check_power(r)?;
        Ok(Self::raw(KernelVariant::PowerEven { r }))
    }

    pub fn power_odd(r: f64) -> Result<Self> {
        check_power(r)?;
        Ok(Self::raw(KernelVariant::PowerOdd { r }))
    }

    pub fn linear(c: f64) -> Result<Self> {
        if !c.is_finite() {
            return Err(Error::invalid("linear coefficient must be finite"));
        }
        Ok(Self::raw(KernelVariant::Linear { c }))
    }

    pub fn hermite(degree: usize) -> Result<Self> {
        if degree > poly_basis::MAX_DEGREE {
            return Err(Error::DegreeCap {
                degree,
                cap: poly_basis::MAX_DEGREE,
            });
        }
        Ok(Self::raw(KernelVariant::HermiteUnit { degree }))
    }

    pub fn series(coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() > poly_basis::MAX_DEGREE + 1 {
            return Err(Error::DegreeCap {
                degree: coeffs.len() - 1,
                cap: poly_basis::MAX_DEGREE,
            });
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::invalid("series coefficients must be finite"));
        }
        Ok(Self::raw(KernelVariant::Series { coeffs }))
    }

    pub fn custom(kernel: CustomKernel) -> Self {
        Self::raw(KernelVariant::Custom(kernel))
    }

    /// Custom kernel `k(x) = poly(x)`.
    pub fn polynomial(name: impl Into<String>, poly: poly_basis::PolynomialCoeffs) -> Self {
        let degree = poly.degree();
        Self::custom(CustomKernel {
            name: name.into(),
            eval: Arc::new(move |x| poly.eval(x)),
            singular: vec![],
            polynomial_degree: Some(degree),
        })
    }

    pub fn with_value_at_zero(mut self, v: f64) -> Self {
        self.value_at_zero = v;
        self
    }

    pub fn variant(&self) -> &KernelVariant {
        &self.variant
    }

    pub fn centering_offset(&self) -> f64 {
        self.centering_offset
    }

    pub fn value_at_zero(&self) -> f64 {
        self.value_at_zero
    }

    fn singular_at(&self, x: f64) -> bool {
        match &self.variant {
            KernelVariant::Sign | KernelVariant::PowerEven { .. } | KernelVariant::PowerOdd { .. } => x == 0.0,
            KernelVariant::Custom(c) => c.singular.iter().any(|s| s.at == x),
            _ => false,
        }
    }

    /// Kernel value before centering.
    fn raw_eval(&self, x: f64) -> f64 {
        if self.singular_at(x) {
            return self.value_at_zero;
        }
        match &self.variant {
            KernelVariant::Sign => x.signum(),
            KernelVariant::PowerEven { r } => x.abs().powf(-r),
            KernelVariant::PowerOdd { r } => x.signum() * x.abs().powf(-r),
            KernelVariant::Linear { c } => c * x,
            KernelVariant::HermiteUnit { degree } => hermite_values(*degree, x)[*degree],
            KernelVariant::Series { coeffs } => {
                if coeffs.is_empty() {
                    return 0.0;
                }
                let h = hermite_values(coeffs.len() - 1, x);
                coeffs.iter().zip(&h).map(|(c, v)| c * v).sum()
            }
            KernelVariant::Custom(c) => (c.eval)(x),
        }
    }

    /// `E k(zeta)` of the uncentered kernel.
    pub fn raw_mean(&self) -> Result<f64> {
        Ok(match &self.variant {
            KernelVariant::Sign | KernelVariant::PowerOdd { .. } | KernelVariant::Linear { .. } => 0.0,
            KernelVariant::PowerEven { r } => abs_gaussian_moment(*r),
            KernelVariant::HermiteUnit { degree } => {
                if *degree == 0 {
                    1.0
                } else {
                    0.0
                }
            }
            KernelVariant::Series { coeffs } => coeffs.first().copied().unwrap_or(0.0),
            KernelVariant::Custom(_) => self.quadrature_raw_moments()?.0,
        })
    }

    /// `(E k, E k^2)` of the uncentered kernel by quadrature.
    fn quadrature_raw_moments(&self) -> Result<(f64, f64)> {
        let sing: Vec<Singularity> = self
            .singularities()
            .iter()
            .map(|s| Singularity::algebraic(s.at, 2.0 * s.order))
            .collect();
        if sing.iter().any(|s| s.order >= 1.0) {
            return Err(Error::NotSquareIntegrable(format!("{self}: singularity of order >= 1/2")));
        }
        let f = |x: f64, out: &mut [f64]| {
            let v = self.raw_eval(x);
            out[0] = v;
            out[1] = v * v;
        };
        let res = poly_basis::quadrature::expectation_vec(
            Weight::StandardGaussian,
            &f,
            2,
            &sing,
            &AdaptiveOptions::default(),
        )
        .map_err(|e| match e {
            Error::QuadratureNonConvergence { achieved, .. } => Error::NotSquareIntegrable(format!(
                "{self}: quadrature of k^2 does not settle under refinement (achieved {achieved:.3e})"
            )),
            other => other,
        })?;
        if !res.values.iter().all(|v| v.is_finite()) {
            return Err(Error::NotSquareIntegrable(format!("{self}: non-finite moments")));
        }
        Ok((res.values[0], res.values[1]))
    }
}

/// `k(x)` minus the centering offset; singular kernels take `value_at_zero`
/// at their singular points.
pub fn kernel_eval(k: &KernelDescriptor, x: f64) -> f64 {
    k.raw_eval(x) - k.centering_offset
}

/// `f(xi; p) = k(sqrt(p) xi) / sqrt(p)`.
pub fn rescaled_f(k: &KernelDescriptor, p: usize, xi: f64) -> f64 {
    let s = (p as f64).sqrt();
    kernel_eval(k, s * xi) / s
}

/// Returns `k` with the offset set so that `E k(zeta) = 0`.
pub fn center(k: &KernelDescriptor) -> Result<KernelDescriptor> {
    let mean = k.raw_mean()?;
    if !mean.is_finite() {
        return Err(Error::invalid(format!("{k}: mean is not finite")));
    }
    Ok(KernelDescriptor {
        centering_offset: mean,
        ..k.clone()
    })
}

/// Closed-form `(a, nu)` for built-ins, quadrature for custom kernels.
pub fn limit_constants(k: &KernelDescriptor) -> Result<LimitConstants> {
    let closed = |a: f64, nu: f64| LimitConstants {
        a,
        nu,
        provenance: Provenance::ClosedForm,
    };
    Ok(match &k.variant {
        KernelVariant::Sign => closed((2.0 / std::f64::consts::PI).sqrt(), 1.0),
        KernelVariant::Linear { c } => closed(*c, c * c),
        KernelVariant::HermiteUnit { degree } => match degree {
            0 => closed(0.0, 0.0),
            1 => closed(1.0, 1.0),
            _ => closed(0.0, 1.0),
        },
        KernelVariant::PowerOdd { r } => {
            let a = abs_gaussian_moment(r - 1.0);
            closed(a, abs_gaussian_moment(2.0 * r))
        }
        KernelVariant::PowerEven { r } => {
            let m = abs_gaussian_moment(*r);
            closed(0.0, abs_gaussian_moment(2.0 * r) - m * m)
        }
        KernelVariant::Series { coeffs } => closed(
            coeffs.get(1).copied().unwrap_or(0.0),
            coeffs.iter().skip(1).map(|c| c * c).sum(),
        ),
        KernelVariant::Custom(_) => limit_constants_by_quadrature(k)?,
    })
}

/// `(a, nu)` computed numerically: `a` is the first Hermite coefficient and
/// `nu = E k^2 - (E k)^2` of the uncentered kernel.
pub fn limit_constants_by_quadrature(k: &KernelDescriptor) -> Result<LimitConstants> {
    let (mean, second) = k.quadrature_raw_moments()?;
    let exp = expansion_coefficients(k, &Basis::Hermite, 1, shared_rule())?;
    Ok(LimitConstants {
        a: exp.coeffs[1],
        nu: (second - mean * mean).max(0.0),
        provenance: Provenance::Quadrature,
    })
}

impl KernelFunction for KernelDescriptor {
    fn value(&self, x: f64) -> f64 {
        kernel_eval(self, x)
    }

    fn singularities(&self) -> Vec<Singularity> {
        match &self.variant {
            KernelVariant::Sign => vec![Singularity::jump(0.0)],
            KernelVariant::PowerEven { r } | KernelVariant::PowerOdd { r } => vec![Singularity::algebraic(0.0, *r)],
            KernelVariant::Custom(c) => c.singular.clone(),
            _ => vec![],
        }
    }

    fn polynomial_degree(&self) -> Option<usize> {
        match &self.variant {
            KernelVariant::Linear { .. } => Some(1),
            KernelVariant::HermiteUnit { degree } => Some(*degree),
            KernelVariant::Series { coeffs } => Some(coeffs.len().saturating_sub(1)),
            KernelVariant::Custom(c) => c.polynomial_degree,
            _ => None,
        }
    }
}

impl Serialize for KernelDescriptor {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for KernelDescriptor {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    /// `E|zeta|^{-s}` by a plain midpoint rule after `x = u^{1/(1-s)}`, which
    /// turns `x^{-s} dx` into a constant times `du`.
    fn abs_moment_oracle(s: f64) -> f64 {
        let beta = 1.0 / (1.0 - s);
        let upper = 12f64.powf(1.0 / beta);
        let n = 2_000_000;
        let du = upper / n as f64;
        let mut acc = 0.0;
        for i in 0..n {
            let u = (i as f64 + 0.5) * du;
            let x = u.powf(beta);
            acc += beta * (-0.5 * x * x).exp();
        }
        2.0 * acc * du / (2.0 * std::f64::consts::PI).sqrt()
    }

    #[test]
    fn sign_values() {
        let k = KernelDescriptor::sign();
        assert_eq!(kernel_eval(&k, 3.2), 1.0);
        assert_eq!(kernel_eval(&k, -0.5), -1.0);
        assert_eq!(kernel_eval(&k, 0.0), 0.0);
        assert_eq!(center(&k).unwrap().centering_offset(), 0.0);
    }

    #[test]
    fn power_odd_zero_value() {
        let k = KernelDescriptor::power_odd(0.25).unwrap();
        assert_eq!(kernel_eval(&k, 0.0), 0.0);
        let k = k.with_value_at_zero(7.0);
        assert_eq!(kernel_eval(&k, 0.0), 7.0);
    }

    #[test]
    fn power_even_centering() {
        let k = center(&KernelDescriptor::power_even(0.25).unwrap()).unwrap();
        let oracle = abs_moment_oracle(0.25);
        assert!((k.centering_offset() - oracle).abs() < 1e-8);
        assert_abs_diff_eq!(k.centering_offset(), 1.22637, epsilon = 1e-5);
        assert_abs_diff_eq!(kernel_eval(&k, 1.0), -0.22637, epsilon = 1e-5);
    }

    #[test]
    fn gamma_formula_against_oracle() {
        for s in [-1.0, -0.75, 0.0, 0.3, 0.5, 0.8] {
            assert!((abs_gaussian_moment(s) - abs_moment_oracle(s)).abs() < 1e-7, "s={s}");
        }
        assert!((abs_gaussian_moment(-1.0) - (2.0 / std::f64::consts::PI).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn rescaling() {
        let lin = KernelDescriptor::linear(1.0).unwrap();
        for (p, xi) in [(1usize, 0.7), (50, -1.3), (400, 2.2)] {
            assert!((rescaled_f(&lin, p, xi) - xi).abs() < 1e-15);
        }
        let s = KernelDescriptor::sign();
        assert!((rescaled_f(&s, 100, 0.3) - 0.1).abs() < 1e-15);
        assert!((rescaled_f(&s, 100, -0.3) + 0.1).abs() < 1e-15);
    }

    #[test]
    fn closed_forms() {
        let c = limit_constants(&KernelDescriptor::sign()).unwrap();
        assert_abs_diff_eq!(c.a, 0.7978846, epsilon = 1e-7);
        assert_eq!(c.nu, 1.0);
        let c = limit_constants(&KernelDescriptor::linear(2.0).unwrap()).unwrap();
        assert_eq!((c.a, c.nu), (2.0, 4.0));
        let c = limit_constants(&KernelDescriptor::power_odd(0.25).unwrap()).unwrap();
        assert_abs_diff_eq!(c.a, 0.79726, epsilon = 1e-5);
        assert_abs_diff_eq!(c.nu, 1.72008, epsilon = 1e-5);
        assert_eq!(c.provenance, Provenance::ClosedForm);
        let c = limit_constants(&KernelDescriptor::hermite(3).unwrap()).unwrap();
        assert_eq!((c.a, c.nu), (0.0, 1.0));
    }

    #[test]
    fn power_odd_constants_match_midpoint_oracle() {
        // a = E|zeta|^{1-r}, nu = E|zeta|^{-2r}
        let c = limit_constants(&KernelDescriptor::power_odd(0.25).unwrap()).unwrap();
        assert!((c.a - abs_moment_oracle(-0.75)).abs() < 1e-7);
        assert!((c.nu - abs_moment_oracle(0.5)).abs() < 1e-7);
    }

    #[test]
    fn quadrature_matches_closed_forms() {
        let kernels = [
            KernelDescriptor::sign(),
            KernelDescriptor::power_odd(0.25).unwrap(),
            KernelDescriptor::power_odd(0.4).unwrap(),
            center(&KernelDescriptor::power_even(0.25).unwrap()).unwrap(),
            KernelDescriptor::power_even(0.1).unwrap(),
            KernelDescriptor::linear(-1.5).unwrap(),
            KernelDescriptor::hermite(4).unwrap(),
            KernelDescriptor::series(vec![0.3, 0.5, -0.2, 0.1]).unwrap(),
        ];
        for k in &kernels {
            let closed = limit_constants(k).unwrap();
            let quad = limit_constants_by_quadrature(k).unwrap();
            assert!((closed.a - quad.a).abs() < 1e-6, "{k}: a {} vs {}", closed.a, quad.a);
            assert!((closed.nu - quad.nu).abs() < 1e-6, "{k}: nu {} vs {}", closed.nu, quad.nu);
        }
    }

    #[test]
    fn custom_kernel_via_quadrature() {
        let k = KernelDescriptor::custom(CustomKernel {
            name: "tanh".into(),
            eval: Arc::new(f64::tanh),
            singular: vec![],
            polynomial_degree: None,
        });
        let c = limit_constants(&k).unwrap();
        assert_eq!(c.provenance, Provenance::Quadrature);
        // E[tanh(zeta) zeta] = E[sech^2(zeta)] by Stein's identity
        let rule = QuadratureRule::gauss_hermite(200).unwrap();
        let stein = rule.integrate(|x| 1.0 / x.cosh().powi(2));
        assert!((c.a - stein).abs() < 1e-8);
        assert!(c.nu >= c.a * c.a);
        assert!(center(&k).unwrap().centering_offset().abs() < 1e-12);
    }

    #[test]
    fn custom_kernel_not_square_integrable() {
        let k = KernelDescriptor::custom(CustomKernel {
            name: "inv-sqrt".into(),
            eval: Arc::new(|x: f64| x.abs().powf(-0.6)),
            singular: vec![Singularity::algebraic(0.0, 0.6)],
            polynomial_degree: None,
        });
        assert!(matches!(limit_constants(&k), Err(Error::NotSquareIntegrable(_))));
    }

    #[test]
    fn power_range_enforced() {
        assert!(KernelDescriptor::power_even(0.5).is_err());
        assert!(KernelDescriptor::power_odd(0.0).is_err());
        assert!(KernelDescriptor::power_odd(0.49).is_ok());
    }

    #[test]
    fn centered_means_vanish() {
        let kernels = [
            KernelDescriptor::power_even(0.25).unwrap(),
            KernelDescriptor::hermite(0).unwrap(),
            KernelDescriptor::series(vec![2.0, 1.0]).unwrap(),
            KernelDescriptor::custom(CustomKernel {
                name: "cosh-ish".into(),
                eval: Arc::new(|x: f64| (0.3 * x).cosh()),
                singular: vec![],
                polynomial_degree: None,
            }),
        ];
        for k in &kernels {
            let c = center(k).unwrap();
            let rule = shared_rule();
            let mean = match k.variant() {
                KernelVariant::PowerEven { .. } => {
                    poly_basis::quadrature::expectation(
                        Weight::StandardGaussian,
                        |x| kernel_eval(&c, x),
                        &c.singularities(),
                        &AdaptiveOptions::default(),
                    )
                    .unwrap()
                }
                _ => rule.integrate(|x| kernel_eval(&c, x)),
            };
            assert!(mean.abs() <= 1e-9, "{k}: {mean}");
        }
    }

    #[test]
    fn linear_kernel_saturates_bound() {
        for c in [-3.0, 0.5, 1.0, 2.0] {
            let lc = limit_constants(&KernelDescriptor::linear(c).unwrap()).unwrap();
            assert_eq!(lc.nu, lc.a * lc.a);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]
        #[test]
        fn series_kernels_respect_variance_bound(coeffs in proptest::collection::vec(-3.0f64..3.0, 1..12)) {
            let k = KernelDescriptor::series(coeffs).unwrap();
            let lc = limit_constants(&k).unwrap();
            prop_assert!(lc.nu >= lc.a * lc.a - 1e-9);
            prop_assert!(lc.nu >= 0.0);
        }
    }
}
