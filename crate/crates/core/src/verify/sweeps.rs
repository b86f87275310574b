use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::ensemble::{child_seed, empirical_stieltjes, simulate, EnsembleConfig, VectorModel};
use crate::kernels::KernelDescriptor;
use crate::limit_law::{mp_edges, ComplexUpper};
use crate::poly_basis::{gaussian_inner_moments, orthonormal_from_moments, sphere_inner_moments};
use crate::{Error, Result};

pub const BOOTSTRAP_REPLICATES: usize = 400;
const MIN_TRIALS: usize = 20;

#[derive(Debug, Clone, Serialize)]
pub struct ConcentrationRow {
    pub n: usize,
    pub p: usize,
    /// Sample standard deviation of `m_A(z)` (complex modulus) across trials.
    pub std: f64,
    pub values: Vec<[f64; 2]>,
    pub seeds: Vec<u64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConcentrationSweep {
    pub z: [f64; 2],
    pub gamma: f64,
    pub trials: usize,
    pub rows: Vec<ConcentrationRow>,
    /// Least-squares slope of `log std` against `log n`; absent when some
    /// standard deviation is zero.
    pub slope: Option<f64>,
    /// 95% percentile bootstrap interval, resampling trials within sizes.
    pub slope_ci: Option<(f64, f64)>,
}

fn complex_std(values: &[[f64; 2]]) -> f64 {
    // shifted by the first value so identical inputs give exactly zero
    let k = values.len() as f64;
    let o = values[0];
    let d: Vec<[f64; 2]> = values.iter().map(|v| [v[0] - o[0], v[1] - o[1]]).collect();
    let (mr, mi) = d.iter().fold((0.0, 0.0), |(r, i), v| (r + v[0] / k, i + v[1] / k));
    let ss: f64 = d.iter().map(|v| (v[0] - mr).powi(2) + (v[1] - mi).powi(2)).sum();
    (ss / (k - 1.0)).sqrt()
}

fn ls_slope(x: &[f64], y: &[f64]) -> f64 {
    let k = x.len() as f64;
    let mx = x.iter().sum::<f64>() / k;
    let my = y.iter().sum::<f64>() / k;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

fn log_slope(sizes: &[usize], stds: &[f64]) -> Option<f64> {
    if stds.iter().any(|s| !(*s > 0.0)) {
        return None;
    }
    let x: Vec<f64> = sizes.iter().map(|&n| (n as f64).ln()).collect();
    let y: Vec<f64> = stds.iter().map(|s| s.ln()).collect();
    Some(ls_slope(&x, &y))
}

fn size_config(base: &EnsembleConfig, n: usize) -> Result<EnsembleConfig> {
    let p = ((base.gamma() * n as f64).round() as usize).max(1);
    EnsembleConfig::new(p, n, base.vector_model, base.kernel.clone(), base.seed)
}

/// Fluctuation of `m_A(z)` across independent trials as `n` grows at fixed
/// `gamma = p / n` (taken from `base`). Trial `t` uses seed
/// `child_seed(base.seed, t)` at every size.
pub fn concentration_sweep(
    base: &EnsembleConfig,
    z: ComplexUpper,
    sizes: &[usize],
    trials: usize,
) -> Result<ConcentrationSweep> {
    if trials < MIN_TRIALS {
        return Err(Error::invalid(format!("concentration sweeps need at least {MIN_TRIALS} trials")));
    }
    if sizes.len() < 2 {
        return Err(Error::invalid("concentration sweeps need at least two sizes"));
    }
    let mut rows = Vec::with_capacity(sizes.len());
    for &n in sizes {
        let cfg = size_config(base, n)?;
        let values = (0..trials as u64)
            .into_par_iter()
            .map(|t| {
                let s = simulate(&cfg.for_trial(t))?;
                let m = empirical_stieltjes(&s.eigenvalues, z);
                Ok([m.re, m.im])
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(ConcentrationRow {
            n,
            p: cfg.p,
            std: complex_std(&values),
            values,
            seeds: (0..trials as u64).map(|t| child_seed(base.seed, t)).collect(),
        });
    }
    let stds: Vec<f64> = rows.iter().map(|r| r.std).collect();
    let slope = log_slope(sizes, &stds);
    let slope_ci = slope.and_then(|_| {
        let mut rng = ChaCha8Rng::seed_from_u64(child_seed(base.seed, u64::MAX));
        let mut reps: Vec<f64> = (0..BOOTSTRAP_REPLICATES)
            .filter_map(|_| {
                let stds: Vec<f64> = rows
                    .iter()
                    .map(|r| {
                        let pick: Vec<[f64; 2]> = (0..trials).map(|_| r.values[rng.gen_range(0..trials)]).collect();
                        complex_std(&pick)
                    })
                    .collect();
                log_slope(sizes, &stds)
            })
            .collect();
        if reps.is_empty() {
            return None;
        }
        reps.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let at = |q: f64| reps[((q * (reps.len() - 1) as f64).round() as usize).min(reps.len() - 1)];
        Some((at(0.025), at(0.975)))
    });
    Ok(ConcentrationSweep {
        z: [z.re(), z.im()],
        gamma: base.gamma(),
        trials,
        rows,
        slope,
        slope_ci,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct NormGrowthRow {
    pub n: usize,
    pub p: usize,
    pub norms: Vec<f64>,
    pub max_eigenvalues: Vec<f64>,
    pub mean_norm: f64,
    /// `mean_norm / n^{1/4}`.
    pub ratio: f64,
    pub seeds: Vec<u64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct NormGrowthSweep {
    pub degree: usize,
    pub gamma: f64,
    pub model: VectorModel,
    pub trials: usize,
    pub rows: Vec<NormGrowthRow>,
    /// `ratio` never increases from one size to the next.
    pub ratio_non_increasing: bool,
    /// Same, ignoring the two smallest sizes.
    pub ratio_non_increasing_tail: bool,
    /// Informational: the largest mean norm is within 25% of the smallest.
    pub norm_appears_bounded: bool,
    /// `2 sqrt(1 / gamma)`, the edge of the semicircle the kernel tends to.
    pub semicircle_edge: f64,
    /// `b(1/gamma) + 1` with `b(y) = (1 + sqrt y)^2`.
    pub linear_bound: f64,
    /// For degree 1: every observed norm is below `linear_bound`.
    pub below_linear_bound: Option<bool>,
}

/// The degree-`l` orthonormal polynomial of the inner-product law at
/// dimension `p`, as a kernel.
pub fn finite_p_polynomial_kernel(l: usize, p: usize, model: VectorModel) -> Result<KernelDescriptor> {
    let m = match model {
        VectorModel::Sphere => sphere_inner_moments(p, 2 * l)?,
        VectorModel::Gaussian | VectorModel::Hypercube => gaussian_inner_moments(p, 2 * l)?,
    };
    let poly = orthonormal_from_moments(&m, l)?;
    Ok(KernelDescriptor::polynomial(format!("P{l}_p{p}"), poly))
}

fn non_increasing(r: &[f64]) -> bool {
    r.windows(2).all(|w| w[1] <= w[0])
}

/// Mean spectral norm of the `P_{l,p}` kernel matrix against `n`.
pub fn norm_growth_sweep(
    l: usize,
    gamma: f64,
    sizes: &[usize],
    trials: usize,
    seed: u64,
    model: VectorModel,
) -> Result<NormGrowthSweep> {
    if l < 1 {
        return Err(Error::invalid("norm growth needs degree >= 1"));
    }
    if !(gamma > 0.0) || trials == 0 || sizes.is_empty() {
        return Err(Error::invalid("norm growth needs gamma > 0, trials >= 1 and at least one size"));
    }
    let mut rows = Vec::with_capacity(sizes.len());
    for &n in sizes {
        let p = ((gamma * n as f64).round() as usize).max(2);
        let cfg = EnsembleConfig::new(p, n, model, finite_p_polynomial_kernel(l, p, model)?, seed)?;
        let samples = (0..trials as u64)
            .into_par_iter()
            .map(|t| simulate(&cfg.for_trial(t)))
            .collect::<Result<Vec<_>>>()?;
        let norms: Vec<f64> = samples.iter().map(|s| s.spectral_norm).collect();
        let mean_norm = norms.iter().sum::<f64>() / trials as f64;
        rows.push(NormGrowthRow {
            n,
            p,
            max_eigenvalues: samples.iter().map(|s| *s.eigenvalues.last().unwrap()).collect(),
            mean_norm,
            ratio: mean_norm / (n as f64).powf(0.25),
            norms,
            seeds: (0..trials as u64).map(|t| child_seed(seed, t)).collect(),
        });
    }
    let ratios: Vec<f64> = rows.iter().map(|r| r.ratio).collect();
    let means: Vec<f64> = rows.iter().map(|r| r.mean_norm).collect();
    let (lo, hi) = means.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &m| (a.min(m), b.max(m)));
    let linear_bound = mp_edges(1.0 / gamma).1 + 1.0;
    Ok(NormGrowthSweep {
        degree: l,
        gamma,
        model,
        trials,
        ratio_non_increasing: non_increasing(&ratios),
        ratio_non_increasing_tail: non_increasing(&ratios[ratios.len().min(2)..]),
        norm_appears_bounded: hi <= 1.25 * lo,
        semicircle_edge: 2.0 / gamma.sqrt(),
        linear_bound,
        below_linear_bound: (l == 1).then(|| rows.iter().all(|r| r.norms.iter().all(|&s| s < linear_bound))),
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base(kernel: &str, gamma_n: (usize, usize), seed: u64) -> EnsembleConfig {
        EnsembleConfig::new(gamma_n.0, gamma_n.1, VectorModel::Gaussian, kernel.parse().unwrap(), seed).unwrap()
    }

    #[test]
    fn slope_of_exact_power_law() {
        let sizes = [100, 200, 400, 800];
        let stds: Vec<f64> = sizes.iter().map(|&n| 3.0 * (n as f64).powf(-0.5)).collect();
        assert!((log_slope(&sizes, &stds).unwrap() + 0.5).abs() < 1e-12);
        assert!(log_slope(&sizes, &[1.0, 0.0, 1.0, 1.0]).is_none());
    }

    #[test]
    fn complex_std_oracle() {
        let v = [[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]];
        assert!((complex_std(&v) - (4.0f64 / 3.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn zero_kernel_has_no_fluctuation() {
        let z = ComplexUpper::new(0.0, 1.0).unwrap();
        let s = concentration_sweep(&base("linear:c=0", (20, 20), 3), z, &[20, 40], 20).unwrap();
        assert!(s.rows.iter().all(|r| r.std == 0.0));
        assert!(s.slope.is_none());
    }

    #[test]
    fn concentration_needs_trials() {
        let z = ComplexUpper::new(0.0, 1.0).unwrap();
        assert!(concentration_sweep(&base("sign", (20, 20), 3), z, &[20, 40], 5).is_err());
    }

    #[test]
    fn doubling_trials_stays_in_ci() {
        let z = ComplexUpper::new(0.0, 1.0).unwrap();
        let b = base("sign", (50, 50), 11);
        let sizes = [50, 100, 200];
        let s20 = concentration_sweep(&b, z, &sizes, 20).unwrap();
        let s40 = concentration_sweep(&b, z, &sizes, 40).unwrap();
        let (lo, hi) = s20.slope_ci.unwrap();
        let slope = s40.slope.unwrap();
        assert!(lo <= slope && slope <= hi, "{slope} not in ({lo}, {hi})");
        assert_eq!(s20.rows[0].seeds[..], s40.rows[0].seeds[..20]);
    }

    #[test]
    fn degree_one_polynomial_kernel_is_identity() {
        let k = finite_p_polynomial_kernel(1, 100, VectorModel::Gaussian).unwrap();
        for x in [-2.0, 0.3, 1.7] {
            assert!((crate::kernels::kernel_eval(&k, x) - x).abs() < 1e-12);
        }
    }

    #[test]
    fn small_norm_sweep() {
        let s = norm_growth_sweep(2, 1.0, &[60, 120], 3, 5, VectorModel::Gaussian).unwrap();
        assert_eq!(s.rows.len(), 2);
        assert!(s.below_linear_bound.is_none());
        for r in &s.rows {
            assert_eq!(r.norms.len(), 3);
            assert!((r.ratio - r.mean_norm / (r.n as f64).powf(0.25)).abs() < 1e-15);
        }
        let lin = norm_growth_sweep(1, 1.0, &[200], 3, 5, VectorModel::Gaussian).unwrap();
        assert!((lin.linear_bound - 5.0).abs() < 1e-12);
        assert_eq!(lin.below_linear_bound, Some(true));
    }
}
