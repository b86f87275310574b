//! Quadrature against the standard Gaussian and the finite-`p` inner-product
//! densities.
//!
//! Two tools live here. [`QuadratureRule`] is a Gauss–Hermite rule for the
//! standard normal density, exact for polynomials of degree `2N - 1`.
//! [`expectation_vec`] is a piecewise Gauss–Legendre integrator for kernels
//! with jumps or integrable algebraic singularities: the line is split at
//! every declared singular point and at `s ± 1`, and a piece whose endpoint
//! carries `|x - s|^{-r}` is mapped through `x = s + h t^beta` with
//! `beta = 4 / (1 - r)`, which leaves only `t^{>= 3}` behaviour at the
//! endpoint for both the singular part and any smooth remainder. Panels are
//! doubled until two successive totals agree.

use std::sync::OnceLock;

use faer::{Mat, Side};
use gauss_quad::GaussLegendre;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use super::hermite::hermite_values;
use crate::{Error, Result};

/// Largest supported Gauss–Hermite rule; beyond it `h_k(x)^2` at the outer
/// nodes approaches the `f64` range.
pub const MAX_HERMITE_NODES: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TargetWeight {
    StandardGaussian,
}

/// Nodes and positive weights with `sum(w_i f(x_i)) ≈ E f(zeta)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QuadratureRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    target_weight: TargetWeight,
}

impl QuadratureRule {
    /// `n`-point Gauss–Hermite rule for the standard normal density.
    ///
    /// Nodes start from the eigenvalues of the Jacobi matrix (Golub–Welsch)
    /// and are polished by Newton steps on `h_n`; weights are the Christoffel
    /// numbers `1 / sum_{k<n} h_k(x)^2`, which keep full relative accuracy in
    /// the tails where eigenvector-based weights lose it.
    pub fn gauss_hermite(n: usize) -> Result<Self> {
        if n == 0 || n > MAX_HERMITE_NODES {
            return Err(Error::invalid(format!(
                "Gauss-Hermite node count must be in 1..={MAX_HERMITE_NODES}, got {n}"
            )));
        }
        let jacobi = Mat::<f64>::from_fn(n, n, |i, j| {
            if i == j + 1 || j == i + 1 {
                (i.max(j) as f64).sqrt()
            } else {
                0.0
            }
        });
        let mut nodes = jacobi
            .self_adjoint_eigenvalues(Side::Lower)
            .map_err(|_| Error::NoConvergence { n, cap: 0 })?;

        for x in nodes.iter_mut() {
            for _ in 0..8 {
                let vals = hermite_values(n, *x);
                let f = vals[n];
                let df = (n as f64).sqrt() * vals[n - 1];
                if df == 0.0 {
                    break;
                }
                let step = f / df;
                *x -= step;
                if step.abs() <= 1e-16 * x.abs().max(1.0) {
                    break;
                }
            }
        }
        // exact symmetry about the origin
        for i in 0..n / 2 {
            let m = 0.5 * (nodes[n - 1 - i] - nodes[i]);
            nodes[i] = -m;
            nodes[n - 1 - i] = m;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        let weights = nodes
            .iter()
            .map(|&x| {
                let vals = hermite_values(n - 1, x);
                1.0 / vals.iter().map(|v| v * v).sum::<f64>()
            })
            .collect();
        Ok(Self {
            nodes,
            weights,
            target_weight: TargetWeight::StandardGaussian,
        })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn target_weight(&self) -> TargetWeight {
        self.target_weight
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }
}

/// A point where the integrand jumps (`order == 0`) or behaves like
/// `|x - at|^{-order}` with `order < 1`; negative orders describe
/// non-smooth vanishing such as a square-root edge.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Singularity {
    pub at: f64,
    pub order: f64,
}

impl Singularity {
    pub fn jump(at: f64) -> Self {
        Self { at, order: 0.0 }
    }

    pub fn algebraic(at: f64, order: f64) -> Self {
        Self { at, order }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct AdaptiveOptions {
    /// Target agreement between successive panel doublings.
    pub tol: f64,
    /// Agreement below which the result is still accepted when the panel
    /// budget runs out.
    pub accept: f64,
    pub max_doublings: u32,
    /// Half-width of the truncated Gaussian domain.
    pub truncation: f64,
}

impl Default for AdaptiveOptions {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            accept: 1e-6,
            max_doublings: 11,
            truncation: 40.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Integral {
    pub values: Vec<f64>,
    /// Largest disagreement between the last two refinements.
    pub achieved: f64,
}

/// Weight functions the adaptive integrator knows how to take expectations under.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "weight", rename_all = "kebab-case")]
pub enum Weight {
    StandardGaussian,
    /// Law of `sqrt(p) X^T Y` with `X, Y ~ N(0, I_p / p)`.
    GaussianInner { p: usize },
    /// Law of `sqrt(p) X^T Y` with `X, Y` uniform on the unit sphere.
    SphereInner { p: usize },
}

fn legendre20() -> &'static [(f64, f64)] {
    static RULE: OnceLock<GaussLegendre> = OnceLock::new();
    RULE.get_or_init(|| GaussLegendre::new(20).expect("20-point rule"))
        .as_node_weight_pairs()
}

/// Composite 20-point Gauss–Legendre on `[0, 1]` with `panels` equal panels.
fn panel_sum<F: Fn(f64, &mut [f64])>(g: &F, dim: usize, panels: usize, out: &mut [f64], buf: &mut [f64]) {
    out.iter_mut().for_each(|v| *v = 0.0);
    let h = 1.0 / panels as f64;
    for k in 0..panels {
        let mid = (k as f64 + 0.5) * h;
        for &(node, weight) in legendre20() {
            let t = mid + 0.5 * h * node;
            g(t, buf);
            for d in 0..dim {
                out[d] += 0.5 * h * weight * buf[d];
            }
        }
    }
}

/// Integrates a vector-valued `f` over `[lo, hi]`, removing algebraic
/// endpoint singularities of the given orders by substitution.
pub fn integrate_piece<F: Fn(f64, &mut [f64])>(
    f: &F,
    dim: usize,
    lo: f64,
    hi: f64,
    left_order: f64,
    right_order: f64,
    opts: &AdaptiveOptions,
) -> Result<Integral> {
    if hi <= lo {
        return Ok(Integral {
            values: vec![0.0; dim],
            achieved: 0.0,
        });
    }
    if left_order != 0.0 && right_order != 0.0 {
        let mid = 0.5 * (lo + hi);
        let a = integrate_piece(f, dim, lo, mid, left_order, 0.0, opts)?;
        let b = integrate_piece(f, dim, mid, hi, 0.0, right_order, opts)?;
        return Ok(Integral {
            values: a.values.iter().zip(&b.values).map(|(x, y)| x + y).collect(),
            achieved: a.achieved + b.achieved,
        });
    }
    for order in [left_order, right_order] {
        if order >= 1.0 || order.is_nan() {
            return Err(Error::invalid(format!(
                "singularity order {order} is not integrable"
            )));
        }
    }
    let width = hi - lo;
    // x = lo + w t^beta (left) or x = hi - w t^beta (right). Both the
    // singular part |x|^{-order} dx and any smooth remainder dx become
    // t^{>= 3} terms, so composite Gauss–Legendre converges quickly.
    let grade = |order: f64| (4.0 / (1.0 - order)).max(4.0);
    let (beta, from_left) = if left_order != 0.0 {
        (grade(left_order), true)
    } else if right_order != 0.0 {
        (grade(right_order), false)
    } else {
        (1.0, true)
    };
    let g = |t: f64, out: &mut [f64]| {
        let tb = t.powf(beta);
        let x = if from_left { lo + width * tb } else { hi - width * tb };
        let jac = if beta == 1.0 { width } else { width * beta * t.powf(beta - 1.0) };
        f(x, out);
        out.iter_mut().for_each(|v| *v *= jac);
    };

    let mut buf = vec![0.0; dim];
    let mut prev = vec![0.0; dim];
    let mut cur = vec![0.0; dim];
    panel_sum(&g, dim, 1, &mut prev, &mut buf);
    let mut achieved = f64::INFINITY;
    let mut panels = 1;
    for _ in 0..opts.max_doublings {
        panels *= 2;
        panel_sum(&g, dim, panels, &mut cur, &mut buf);
        achieved = cur
            .iter()
            .zip(&prev)
            .map(|(a, b)| (a - b).abs() / (1.0 + a.abs()))
            .fold(0.0, f64::max);
        std::mem::swap(&mut prev, &mut cur);
        if achieved <= opts.tol {
            break;
        }
    }
    if !achieved.is_finite() || achieved > opts.accept {
        return Err(Error::QuadratureNonConvergence {
            achieved,
            requested: opts.tol,
        });
    }
    Ok(Integral {
        values: prev,
        achieved,
    })
}

/// Integrates over `[lo, hi]` split at the singular points and at `s ± 1`.
pub fn integrate_split<F: Fn(f64, &mut [f64])>(
    f: &F,
    dim: usize,
    lo: f64,
    hi: f64,
    singular: &[Singularity],
    opts: &AdaptiveOptions,
) -> Result<Integral> {
    let mut points = vec![lo, hi];
    for s in singular {
        for x in [s.at - 1.0, s.at, s.at + 1.0] {
            if x > lo && x < hi {
                points.push(x);
            }
        }
    }
    integrate_on_points(f, dim, points, singular, opts)
}

/// Sums [`integrate_piece`] over consecutive breakpoints; the first and last
/// points bound the domain.
fn integrate_on_points<F: Fn(f64, &mut [f64])>(
    f: &F,
    dim: usize,
    mut points: Vec<f64>,
    singular: &[Singularity],
    opts: &AdaptiveOptions,
) -> Result<Integral> {
    points.sort_by(|a, b| a.partial_cmp(b).unwrap());
    points.dedup_by(|a, b| (*a - *b).abs() <= 1e-14 * (1.0 + b.abs()));
    let order_at = |x: f64| {
        singular
            .iter()
            .filter(|s| (s.at - x).abs() <= 1e-14 * (1.0 + x.abs()))
            .map(|s| s.order)
            .fold(0.0, |acc: f64, o| if o.abs() > acc.abs() { o } else { acc })
    };
    let mut values = vec![0.0; dim];
    let mut achieved = 0.0;
    for w in points.windows(2) {
        let piece = integrate_piece(f, dim, w[0], w[1], order_at(w[0]), order_at(w[1]), opts)?;
        values.iter_mut().zip(&piece.values).for_each(|(v, p)| *v += p);
        achieved += piece.achieved;
    }
    Ok(Integral { values, achieved })
}

fn std_normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// `E f(W)` for each component of `f`, with `W` drawn from `weight`.
/// `singular` lists singular points of `f` itself.
pub fn expectation_vec<F: Fn(f64, &mut [f64])>(
    weight: Weight,
    f: &F,
    dim: usize,
    singular: &[Singularity],
    opts: &AdaptiveOptions,
) -> Result<Integral> {
    let t = opts.truncation;
    match weight {
        Weight::StandardGaussian => {
            let g = |x: f64, out: &mut [f64]| {
                f(x, out);
                let q = std_normal_pdf(x);
                out.iter_mut().for_each(|v| *v *= q);
            };
            integrate_split(&g, dim, -t, t, singular, opts)
        }
        Weight::SphereInner { p } => {
            if p < 2 {
                return Err(Error::invalid("sphere weight needs p >= 2"));
            }
            // x = sqrt(p) sin(theta) turns c_p (1 - x^2/p)^{(p-3)/2} dx into
            // c (cos theta)^{p-2} d theta, smooth up to the edges for p >= 2
            let pf = p as f64;
            let sp = pf.sqrt();
            let log_c = ln_gamma(pf / 2.0) - ln_gamma((pf - 1.0) / 2.0) - 0.5 * std::f64::consts::PI.ln();
            let g = |theta: f64, out: &mut [f64]| {
                f(sp * theta.sin(), out);
                let c = theta.cos().max(0.0);
                let w = if p == 2 {
                    log_c.exp()
                } else if c == 0.0 {
                    0.0
                } else {
                    (log_c + (pf - 2.0) * c.ln()).exp()
                };
                out.iter_mut().for_each(|v| *v *= w);
            };
            let to_theta = |x: f64| (x / sp).clamp(-1.0, 1.0).asin();
            let half_pi = std::f64::consts::FRAC_PI_2;
            let mut points = vec![-half_pi, half_pi];
            // unit-scale breakpoints for the bulk of the law
            points.extend((-8..=8).map(|k| k as f64).filter(|x| x.abs() < sp).map(to_theta));
            let mut sing = Vec::with_capacity(singular.len());
            for s in singular {
                for x in [s.at - 1.0, s.at, s.at + 1.0] {
                    if x.abs() < sp {
                        points.push(to_theta(x));
                    }
                }
                if s.at.abs() < sp {
                    sing.push(Singularity::algebraic(to_theta(s.at), s.order));
                }
            }
            integrate_on_points(&g, dim, points, &sing, opts)
        }
        Weight::GaussianInner { p } => {
            if p < 1 {
                return Err(Error::invalid("gaussian inner weight needs p >= 1"));
            }
            // xi_p = R zeta with R = |X|, R^2 ~ chi^2_p / p
            let pf = p as f64;
            let log_c = std::f64::consts::LN_2 + 0.5 * pf * (0.5 * pf).ln() - ln_gamma(0.5 * pf);
            let spread = 12.0 / (2.0 * pf).sqrt();
            let r_lo = (1.0 - spread).max(0.0);
            let r_hi = 1.0 + spread.max(0.5);
            let err: std::cell::RefCell<Option<Error>> = std::cell::RefCell::new(None);
            let inner_achieved = std::cell::Cell::new(0.0f64);
            let outer = |r: f64, out: &mut [f64]| {
                out.iter_mut().for_each(|v| *v = 0.0);
                if r <= 0.0 {
                    return;
                }
                let dens = (log_c + (pf - 1.0) * r.ln() - 0.5 * pf * r * r).exp();
                if dens == 0.0 {
                    return;
                }
                let scaled: Vec<Singularity> = singular
                    .iter()
                    .map(|s| Singularity::algebraic(s.at / r, s.order))
                    .collect();
                let h = |x: f64, o: &mut [f64]| {
                    f(r * x, o);
                    let q = std_normal_pdf(x);
                    o.iter_mut().for_each(|v| *v *= q);
                };
                match integrate_split(&h, dim, -t, t, &scaled, opts) {
                    Ok(inner) => {
                        inner_achieved.set(inner_achieved.get().max(inner.achieved));
                        for (o, v) in out.iter_mut().zip(&inner.values) {
                            *o = dens * v;
                        }
                    }
                    Err(e) => {
                        err.borrow_mut().get_or_insert(e);
                    }
                }
            };
            let res = integrate_piece(&outer, dim, r_lo, r_hi, 0.0, 0.0, opts);
            if let Some(e) = err.into_inner() {
                return Err(e);
            }
            let mut res = res?;
            res.achieved = res.achieved.max(inner_achieved.get());
            Ok(res)
        }
    }
}

/// Scalar form of [`expectation_vec`].
pub fn expectation(
    weight: Weight,
    f: impl Fn(f64) -> f64,
    singular: &[Singularity],
    opts: &AdaptiveOptions,
) -> Result<f64> {
    let g = |x: f64, out: &mut [f64]| out[0] = f(x);
    Ok(expectation_vec(weight, &g, 1, singular, opts)?.values[0])
}
