use num_complex::Complex64;

use super::{ComplexUpper, ModelParams, Regime};
use crate::{Error, Result};

type C = Complex64;

/// Above this, a second root counts as lying in the upper half plane.
const UNIQUENESS_TOL: f64 = 1e-9;
const RESIDUAL_TOL: f64 = 1e-10;

/// Coefficients `[c0, c1, c2, c3]` (ascending) of the Stieltjes equation at
/// `z`. The leading coefficient vanishes for `a = 0` or `nu = a^2`.
pub fn stieltjes_coefficients(params: &ModelParams, z: C) -> [C; 4] {
    let ModelParams { a, nu, gamma } = *params;
    match params.regime() {
        Regime::Null => [C::new(1.0, 0.0), z, C::new(0.0, 0.0), C::new(0.0, 0.0)],
        Regime::Semicircle => [C::new(1.0, 0.0), z, C::new(nu / gamma, 0.0), C::new(0.0, 0.0)],
        // a (a + z) m^2 + (a + gamma z) m + gamma = 0
        Regime::MarchenkoPastur => [C::new(gamma, 0.0), a + gamma * z, a * (a + z), C::new(0.0, 0.0)],
        Regime::Cubic => [
            C::new(gamma, 0.0),
            a + gamma * z,
            nu + a * z,
            C::new(a * (nu - a * a) / gamma, 0.0),
        ],
    }
}

fn horner(c: &[C], z: C) -> (C, C) {
    let mut p = C::new(0.0, 0.0);
    let mut dp = C::new(0.0, 0.0);
    for &ck in c.iter().rev() {
        dp = dp * z + p;
        p = p * z + ck;
    }
    (p, dp)
}

/// `|P(m)| / sum_k |c_k| |m|^k`.
pub fn relative_residual(c: &[C], m: C) -> f64 {
    let (p, _) = horner(c, m);
    let scale: f64 = c.iter().enumerate().map(|(k, ck)| ck.norm() * m.norm().powi(k as i32)).sum();
    if scale == 0.0 {
        p.norm()
    } else {
        p.norm() / scale
    }
}

fn quadratic_roots(c0: C, c1: C, c2: C) -> [C; 2] {
    let sq = (c1 * c1 - 4.0 * c2 * c0).sqrt();
    // pick the sign that avoids cancellation
    let q = if (c1.conj() * sq).re >= 0.0 {
        -0.5 * (c1 + sq)
    } else {
        -0.5 * (c1 - sq)
    };
    if q == C::new(0.0, 0.0) {
        return [q, q];
    }
    [q / c2, c0 / q]
}

fn cardano(c: &[C; 4]) -> [C; 3] {
    let b = c[2] / c[3];
    let cc = c[1] / c[3];
    let d = c[0] / c[3];
    // x = t - b/3: t^3 + p t + q = 0
    let p = cc - b * b / 3.0;
    let q = 2.0 * b * b * b / 27.0 - b * cc / 3.0 + d;
    let disc = (q * q / 4.0 + p * p * p / 27.0).sqrt();
    let w = if (-q / 2.0 + disc).norm() >= (-q / 2.0 - disc).norm() {
        -q / 2.0 + disc
    } else {
        -q / 2.0 - disc
    };
    let omega = C::new(-0.5, 3f64.sqrt() / 2.0);
    let u = w.powf(1.0 / 3.0);
    let mut out = [C::new(0.0, 0.0); 3];
    let mut uk = u;
    for o in out.iter_mut() {
        let t = if uk.norm() == 0.0 { C::new(0.0, 0.0) } else { uk - p / (3.0 * uk) };
        *o = t - b / 3.0;
        uk *= omega;
    }
    out
}

/// Simultaneous Newton iteration with Aberth's repulsion term.
fn aberth<const N: usize>(c: &[C], mut z: [C; N], iters: usize) -> [C; N] {
    for _ in 0..iters {
        let mut biggest = 0.0f64;
        for k in 0..N {
            let (p, dp) = horner(c, z[k]);
            if p == C::new(0.0, 0.0) {
                continue;
            }
            let ratio = p / dp;
            let repulsion: C = (0..N).filter(|&j| j != k).map(|j| 1.0 / (z[k] - z[j])).sum();
            let w = ratio / (1.0 - ratio * repulsion);
            if w.is_finite() {
                z[k] -= w;
                biggest = biggest.max(w.norm() / z[k].norm().max(1.0));
            }
        }
        if biggest <= 1e-16 {
            break;
        }
    }
    z
}

fn circle_start<const N: usize>(c: &[C]) -> [C; N] {
    // Fujiwara-style radius bound
    let lead = c[N];
    let radius = (0..N)
        .map(|k| (c[k] / lead).norm().powf(1.0 / (N - k) as f64))
        .fold(0.0f64, f64::max)
        * 2.0;
    let mut z = [C::new(0.0, 0.0); N];
    for (k, zk) in z.iter_mut().enumerate() {
        let angle = 0.4 + 2.0 * std::f64::consts::PI * k as f64 / N as f64;
        *zk = C::from_polar(radius.max(1e-3), angle);
    }
    z
}

fn polished<const N: usize>(c: &[C], start: [C; N]) -> [C; N] {
    let first = aberth(c, start, 60);
    let ok = first.iter().all(|z| z.is_finite() && relative_residual(c, *z) <= RESIDUAL_TOL);
    if ok {
        return first;
    }
    let second = aberth(c, circle_start::<N>(c), 500);
    let worst = |r: &[C; N]| {
        r.iter()
            .map(|z| if z.is_finite() { relative_residual(c, *z) } else { f64::INFINITY })
            .fold(0.0, f64::max)
    };
    if worst(&second) < worst(&first) {
        second
    } else {
        first
    }
}

/// The three roots of the cubic regime's equation at `z`: Cardano's formula
/// polished by Aberth iteration, with a cold-start fallback.
pub fn cubic_roots(params: &ModelParams, z: C) -> Result<[C; 3]> {
    if params.regime() != Regime::Cubic {
        return Err(Error::Dispatch(format!(
            "cubic_roots needs 0 < a^2 < nu away from the degenerate cutoffs, got {params:?}"
        )));
    }
    let c = stieltjes_coefficients(params, z);
    Ok(polished(&c, cardano(&c)))
}

/// Roots of the cubic at `z` from a cold start, independent of Cardano.
pub(crate) fn cubic_roots_cold(params: &ModelParams, z: C) -> [C; 3] {
    let c = stieltjes_coefficients(params, z);
    aberth(&c, circle_start::<3>(&c), 500)
}

fn select(roots: [C; 3], z: C) -> Result<C> {
    let mut sorted = roots;
    sorted.sort_by(|x, y| y.im.partial_cmp(&x.im).unwrap_or(std::cmp::Ordering::Equal));
    let count = roots.iter().filter(|r| r.im > UNIQUENESS_TOL).count();
    if !(sorted[0].im > 0.0) || sorted[1].im > UNIQUENESS_TOL {
        return Err(Error::RootSelection { count, z, roots });
    }
    Ok(sorted[0])
}

/// Stieltjes transform of the limit law at `z`.
pub fn solve_m(params: &ModelParams, z: ComplexUpper) -> Result<C> {
    params.validate()?;
    let zc = z.to_complex();
    let c = stieltjes_coefficients(params, zc);
    let nan = C::new(f64::NAN, f64::NAN);
    let m = match params.regime() {
        Regime::Null => -1.0 / zc,
        Regime::Semicircle | Regime::MarchenkoPastur => {
            let r = polished(&c[..3], quadratic_roots(c[0], c[1], c[2]));
            select([r[0], r[1], nan], zc)?
        }
        Regime::Cubic => select(cubic_roots(params, zc)?, zc)?,
    };
    let res = relative_residual(&c, m);
    if !(res <= RESIDUAL_TOL) {
        return Err(Error::RootSelection {
            count: 1,
            z: zc,
            roots: [m, nan, nan],
        });
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn z(u: f64, v: f64) -> ComplexUpper {
        ComplexUpper::new(u, v).unwrap()
    }

    #[test]
    fn semicircle_at_i() {
        let p = ModelParams::new(0.0, 1.0, 1.0).unwrap();
        let m = solve_m(&p, z(0.0, 1.0)).unwrap();
        assert!(m.re.abs() < 1e-14);
        assert!((m.im - (5f64.sqrt() - 1.0) / 2.0).abs() < 1e-14);
        assert!((m.im - 0.6180).abs() < 1e-4);
    }

    #[test]
    fn uniqueness_example() {
        for a in [0.5, -0.5] {
            let p = ModelParams::new(a, 1.0, 1.0).unwrap();
            let roots = cubic_roots(&p, C::new(0.0, 1.0)).unwrap();
            assert_eq!(roots.iter().filter(|r| r.im > 0.0).count(), 1);
            assert!(solve_m(&p, z(0.0, 1.0)).is_ok());
        }
    }

    /// Companion-matrix eigenvalues as an independent root oracle.
    fn companion_roots(c: &[C]) -> Vec<C> {
        let n = c.len() - 1;
        let lead = c[n];
        let m = faer::Mat::<faer::c64>::from_fn(n, n, |i, j| {
            if i == 0 {
                let v = -c[n - 1 - j] / lead;
                faer::c64::new(v.re, v.im)
            } else if i == j + 1 {
                faer::c64::new(1.0, 0.0)
            } else {
                faer::c64::new(0.0, 0.0)
            }
        });
        m.eigenvalues()
            .unwrap()
            .into_iter()
            .map(|e| C::new(e.re, e.im))
            .collect()
    }

    #[test]
    fn marchenko_pastur_at_i() {
        let p = ModelParams::new(1.0, 1.0, 1.0).unwrap();
        let m = solve_m(&p, z(0.0, 1.0)).unwrap();
        let c = stieltjes_coefficients(&p, C::new(0.0, 1.0));
        assert!(relative_residual(&c, m) <= 1e-10);
        let oracle = companion_roots(&c[..3]);
        let best = oracle.iter().map(|r| (r - m).norm()).fold(f64::INFINITY, f64::min);
        assert!(best < 1e-12);
        assert!(m.im > 0.0);
    }

    #[test]
    fn cubic_matches_companion_oracle() {
        for (a, nu, g) in [(0.5, 1.0, 1.0), (0.797, 1.0, 0.1), (-1.2, 2.0, 5.0), (0.01, 1.0, 0.3)] {
            let p = ModelParams::new(a, nu, g).unwrap();
            for zz in [C::new(0.3, 0.01), C::new(-2.0, 0.5), C::new(4.0, 1e-3)] {
                let roots = cubic_roots(&p, zz).unwrap();
                let oracle = companion_roots(&stieltjes_coefficients(&p, zz));
                for r in roots {
                    let best = oracle.iter().map(|o| (o - r).norm() / o.norm().max(1.0)).fold(f64::INFINITY, f64::min);
                    assert!(best < 1e-9, "{p:?} {zz} {r} {oracle:?}");
                }
            }
        }
    }

    #[test]
    fn null_kernel() {
        let p = ModelParams::new(0.0, 0.0, 2.0).unwrap();
        let m = solve_m(&p, z(1.0, 2.0)).unwrap();
        assert!((m + 1.0 / C::new(1.0, 2.0)).norm() < 1e-15);
    }

    #[test]
    fn cubic_roots_refuse_degenerate_params() {
        let p = ModelParams::new(0.0, 1.0, 1.0).unwrap();
        assert!(matches!(cubic_roots(&p, C::new(0.0, 1.0)), Err(Error::Dispatch(_))));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(300))]
        #[test]
        fn bounded_by_inverse_height(
            a in -2.0f64..2.0, extra in 0.0f64..3.0, g in 0.05f64..20.0,
            u in -6.0f64..6.0, logv in -3.0f64..1.0,
        ) {
            let p = ModelParams::new(a, a * a + extra, g).unwrap();
            let v = 10f64.powf(logv);
            let m = solve_m(&p, z(u, v)).unwrap();
            prop_assert!(m.norm() <= 1.0 / v * (1.0 + 1e-9));
            prop_assert!(m.im > 0.0);
        }

        #[test]
        fn unique_upper_root(
            a in 0.01f64..2.0, sign in proptest::bool::ANY, extra in 0.0f64..1.0,
            g in 0.05f64..20.0, ui in 0usize..10, vi in 0usize..10,
        ) {
            let a = if sign { a } else { -a };
            let nu = (a * a + extra * (4.0 - a * a).max(0.0)).min(4.0);
            prop_assume!(nu > a * a + 1e-9);
            let p = ModelParams::new(a, nu, g).unwrap();
            prop_assume!(p.regime() == Regime::Cubic);
            let u = -5.0 + 10.0 * ui as f64 / 9.0;
            let v = 10f64.powf(-3.0 + 3.0 * vi as f64 / 9.0);
            let roots = cubic_roots(&p, C::new(u, v)).unwrap();
            prop_assert_eq!(roots.iter().filter(|r| r.im > 1e-9).count(), 1);
            let m = solve_m(&p, z(u, v)).unwrap();
            prop_assert!(relative_residual(&stieltjes_coefficients(&p, C::new(u, v)), m) <= 1e-10);
        }
    }
}
