use super::{density::discriminant, density::mp_edges, ModelParams};
use crate::Result;

const BASE_POINTS: usize = 8001;
const EDGE_TOL: f64 = 1e-9;

/// Half-width of the scanned window: the shifted Marchenko–Pastur support
/// bound plus the semicircle radius plus a margin, so every degeneration of
/// the law lies inside.
pub fn support_scan_range(params: &ModelParams) -> f64 {
    let (_, b) = mp_edges(1.0 / params.gamma);
    params.a.abs() * b + 2.0 * (params.nu / params.gamma).sqrt() + 4.0 * params.nu.sqrt()
}

fn scan_grid(params: &ModelParams) -> Vec<f64> {
    let s = support_scan_range(params);
    let mut grid: Vec<f64> = (0..BASE_POINTS)
        .map(|i| -s + 2.0 * s * i as f64 / (BASE_POINTS - 1) as f64)
        .collect();
    // When nu is close to a^2 and gamma < 1, a narrow bump replaces the
    // atom at -a; resolve it with a log-spaced local grid.
    let centre = -params.a;
    for k in 0..=250 {
        let off = 10f64.powf(-10.0 + k as f64 / 25.0);
        grid.push(centre - off);
        grid.push(centre + off);
    }
    grid.push(centre);
    grid.retain(|u| u.abs() <= s);
    grid.sort_by(|x, y| x.partial_cmp(y).unwrap());
    grid.dedup();
    grid
}

/// Maximal intervals where `D(u) > 0`, i.e. the support of the cubic-regime
/// density, with edges refined by bisection to `1e-9`.
pub fn support_intervals(params: &ModelParams) -> Result<Vec<(f64, f64)>> {
    let positive = |u: f64| discriminant(params, u).map(|d| d > 0.0);
    positive(0.0)?;
    let grid = scan_grid(params);
    let flags: Vec<bool> = grid.iter().map(|&u| positive(u)).collect::<Result<_>>()?;

    let refine = |mut lo: f64, mut hi: f64, lo_positive: bool| -> Result<f64> {
        while hi - lo > EDGE_TOL * hi.abs().max(lo.abs()).max(1.0) {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if positive(mid)? == lo_positive {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    };

    let mut out = Vec::new();
    let mut start = if flags[0] { Some(grid[0]) } else { None };
    for i in 1..grid.len() {
        match (flags[i - 1], flags[i]) {
            (false, true) => start = Some(refine(grid[i - 1], grid[i], false)?),
            (true, false) => {
                let end = refine(grid[i - 1], grid[i], true)?;
                out.push((start.take().unwrap_or(grid[i - 1]), end));
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        out.push((s, *grid.last().unwrap()));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::limit_law::density_explicit;

    fn integral(params: &ModelParams, intervals: &[(f64, f64)]) -> f64 {
        // Chebyshev-clustered trapezoid, independent of the curve grid code
        let n = 40_000;
        intervals
            .iter()
            .map(|&(lo, hi)| {
                let x = |k: usize| lo + (hi - lo) * 0.5 * (1.0 - (std::f64::consts::PI * k as f64 / n as f64).cos());
                (0..n)
                    .map(|k| {
                        let (x0, x1) = (x(k), x(k + 1));
                        0.5 * (x1 - x0)
                            * (density_explicit(params, x0).unwrap() + density_explicit(params, x1).unwrap())
                    })
                    .sum::<f64>()
            })
            .sum()
    }

    #[test]
    fn midpoints_carry_density() {
        let p = ModelParams::new(0.5, 1.0, 1.0).unwrap();
        let iv = support_intervals(&p).unwrap();
        assert!(!iv.is_empty());
        for (lo, hi) in &iv {
            assert!(density_explicit(&p, 0.5 * (lo + hi)).unwrap() > 0.0);
        }
        assert!((integral(&p, &iv) - 1.0).abs() < 1e-3);
    }

    #[test]
    fn small_a_approaches_semicircle_support() {
        let p = ModelParams::new(1e-4, 1.0, 1.0).unwrap();
        let iv = support_intervals(&p).unwrap();
        assert_eq!(iv.len(), 1);
        assert!((iv[0].0 + 2.0).abs() < 1e-2, "{iv:?}");
        assert!((iv[0].1 - 2.0).abs() < 1e-2, "{iv:?}");
    }

    #[test]
    fn sign_kernel_small_gamma_fits_in_window() {
        let p = ModelParams::new((2.0 / std::f64::consts::PI).sqrt(), 1.0, 0.1).unwrap();
        let iv = support_intervals(&p).unwrap();
        let s = support_scan_range(&p);
        for (lo, hi) in &iv {
            assert!(*lo > -s && *hi < s);
        }
        assert!((integral(&p, &iv) - 1.0).abs() < 1e-3);
    }

    #[test]
    fn near_mp_with_small_gamma_has_two_pieces() {
        // the atom of the linear law turns into a thin bump around -a
        let p = ModelParams::new(1.0, 1.0 + 1e-3, 0.5).unwrap();
        let iv = support_intervals(&p).unwrap();
        assert!(iv.len() >= 2, "{iv:?}");
        assert!(iv.iter().any(|(lo, hi)| *lo < -1.0 && *hi > -1.0));
        assert!((integral(&p, &iv) - 1.0).abs() < 1e-3);
    }

    #[test]
    fn edges_are_sign_changes() {
        let p = ModelParams::new(-0.8, 1.3, 2.5).unwrap();
        for (lo, hi) in support_intervals(&p).unwrap() {
            for (e, inside) in [(lo, lo + 1e-6), (hi, hi - 1e-6)] {
                let outside = e + (e - inside);
                assert!(discriminant(&p, inside).unwrap() > 0.0);
                assert!(discriminant(&p, outside).unwrap() <= 0.0);
            }
        }
    }
}
