//! Empirical spectra against the limit law: distribution distances,
//! Stieltjes point checks and the scaling sweeps.

mod sweeps;

pub use sweeps::{
    concentration_sweep, finite_p_polynomial_kernel, norm_growth_sweep, ConcentrationRow, ConcentrationSweep, NormGrowthRow, NormGrowthSweep,
    BOOTSTRAP_REPLICATES,
};

use std::collections::BTreeMap;
use std::time::Instant;

use serde::Serialize;

use crate::ensemble::{empirical_stieltjes, SpectrumSample};
use crate::limit_law::{solve_m, Atom, ComplexUpper, DensityCurve, ModelParams};
use crate::{Error, Result};

/// Smallest imaginary part accepted by [`stieltjes_point_check`].
pub const MIN_STIELTJES_HEIGHT: f64 = 0.1;

/// Distribution function of a density curve: the continuous part is the
/// exact integral of the piecewise-linear interpolant, atoms are jumps.
#[derive(Debug, Clone)]
pub struct TheoryCdf {
    grid: Vec<f64>,
    values: Vec<f64>,
    cumulative: Vec<f64>,
    atoms: Vec<Atom>,
}

impl TheoryCdf {
    pub fn new(curve: &DensityCurve) -> Self {
        let mut cumulative = Vec::with_capacity(curve.grid.len());
        let mut acc = 0.0;
        for i in 0..curve.grid.len() {
            if i > 0 {
                acc += 0.5 * (curve.grid[i] - curve.grid[i - 1]) * (curve.values[i] + curve.values[i - 1]);
            }
            cumulative.push(acc);
        }
        let mut atoms = curve.atoms.clone();
        atoms.sort_by(|a, b| a.location.partial_cmp(&b.location).unwrap());
        Self {
            grid: curve.grid.clone(),
            values: curve.values.clone(),
            cumulative,
            atoms,
        }
    }

    fn continuous(&self, x: f64) -> f64 {
        let g = &self.grid;
        if g.is_empty() || x <= g[0] {
            return 0.0;
        }
        if x >= g[g.len() - 1] {
            return self.cumulative[g.len() - 1];
        }
        let i = g.partition_point(|&t| t <= x) - 1;
        let h = g[i + 1] - g[i];
        let t = x - g[i];
        let (r0, r1) = (self.values[i], self.values[i + 1]);
        self.cumulative[i] + r0 * t + (r1 - r0) * t * t / (2.0 * h)
    }

    /// `F(x)`, right-continuous.
    pub fn at(&self, x: f64) -> f64 {
        self.continuous(x) + self.atoms.iter().filter(|a| a.location <= x).map(|a| a.mass).sum::<f64>()
    }

    /// `F(x-)`.
    pub fn left(&self, x: f64) -> f64 {
        self.continuous(x) + self.atoms.iter().filter(|a| a.location < x).map(|a| a.mass).sum::<f64>()
    }

    pub fn lower(&self) -> f64 {
        let g = self.grid.first().copied().unwrap_or(0.0);
        self.atoms.iter().map(|a| a.location).fold(g, f64::min)
    }

    pub fn upper(&self) -> f64 {
        let g = self.grid.last().copied().unwrap_or(0.0);
        self.atoms.iter().map(|a| a.location).fold(g, f64::max)
    }

    /// Smallest `x` with `F(x) >= q`, by bisection.
    pub fn quantile(&self, q: f64) -> f64 {
        let (mut lo, mut hi) = (self.lower(), self.upper());
        if self.at(lo) >= q {
            return lo;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.at(mid) >= q {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        hi
    }
}

/// The `n` mid-quantiles `F^{-1}((i + 1/2) / n)` of a curve; a sample every
/// metric should place at distance `O(1/n)` from the curve.
pub fn quantile_sample(curve: &DensityCurve, n: usize) -> Vec<f64> {
    let f = TheoryCdf::new(curve);
    (0..n).map(|i| f.quantile((i as f64 + 0.5) / n as f64)).collect()
}

fn sorted(eigenvalues: &[f64]) -> Vec<f64> {
    let mut v = eigenvalues.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    v
}

/// Kolmogorov–Smirnov statistic `sup |F_n - F|` between the eigenvalues and
/// the curve, evaluated on both sides of every jump of `F_n`.
pub fn cdf_sup_distance(eigenvalues: &[f64], curve: &DensityCurve) -> f64 {
    if eigenvalues.is_empty() {
        return 0.0;
    }
    let f = TheoryCdf::new(curve);
    let lam = sorted(eigenvalues);
    let n = lam.len() as f64;
    let mut d = 0.0f64;
    let mut i = 0;
    while i < lam.len() {
        let mut j = i;
        while j < lam.len() && lam[j] == lam[i] {
            j += 1;
        }
        let x = lam[i];
        d = d.max((i as f64 / n - f.left(x)).abs());
        d = d.max((j as f64 / n - f.at(x)).abs());
        i = j;
    }
    d.min(1.0)
}

/// `sum_b |count_b / n - mu(bin_b)|` over equal-width bins spanning the
/// curve's support and the sample range; atoms count towards their bin.
pub fn hist_l1(eigenvalues: &[f64], curve: &DensityCurve, bins: usize) -> Result<f64> {
    if bins == 0 {
        return Err(Error::invalid("bins must be at least 1"));
    }
    if eigenvalues.is_empty() {
        return Err(Error::invalid("empty sample"));
    }
    let f = TheoryCdf::new(curve);
    let lam = sorted(eigenvalues);
    let lo = f.lower().min(lam[0]);
    let hi = f.upper().max(lam[lam.len() - 1]);
    if !(hi > lo) {
        return Ok(0.0);
    }
    let width = (hi - lo) / bins as f64;
    let mut counts = vec![0usize; bins];
    for &l in &lam {
        counts[(((l - lo) / width) as usize).min(bins - 1)] += 1;
    }
    let n = lam.len() as f64;
    let edge = |b: usize| if b == bins { hi } else { lo + width * b as f64 };
    Ok((0..bins)
        .map(|b| {
            let start = if b == 0 { f.left(lo) } else { f.at(edge(b)) };
            let mass = f.at(edge(b + 1)) - start;
            (counts[b] as f64 / n - mass).abs()
        })
        .sum())
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct StieltjesPointError {
    pub re: f64,
    pub im: f64,
    pub error: f64,
}

/// `|m_emp(z) - m(z)|` for each `z`; every `z` must satisfy
/// `Im z >= 0.1`.
pub fn stieltjes_point_check(
    eigenvalues: &[f64],
    params: &ModelParams,
    z_list: &[ComplexUpper],
) -> Result<Vec<StieltjesPointError>> {
    z_list
        .iter()
        .map(|z| {
            if z.im() < MIN_STIELTJES_HEIGHT {
                return Err(Error::invalid(format!(
                    "Stieltjes checks need Im z >= {MIN_STIELTJES_HEIGHT}, got {}",
                    z.im()
                )));
            }
            let theory = solve_m(params, *z)?;
            Ok(StieltjesPointError {
                re: z.re(),
                im: z.im(),
                error: (empirical_stieltjes(eigenvalues, *z) - theory).norm(),
            })
        })
        .collect()
}

/// Default evaluation points for Stieltjes checks.
pub fn default_z_list() -> Vec<ComplexUpper> {
    [(0.0, 1.0), (0.0, 2.0), (1.0, 0.5), (-1.0, 0.5)]
        .iter()
        .map(|&(u, v)| ComplexUpper::new(u, v).unwrap())
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct MomentErrors {
    /// `|mean of eigenvalues|`.
    pub mean: f64,
    /// `|second moment - nu / gamma|`.
    pub second_moment: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ComparisonReport {
    pub cdf_sup_distance: f64,
    pub hist_l1: f64,
    pub moment_errors: MomentErrors,
    pub stieltjes_point_errors: Vec<StieltjesPointError>,
    pub seeds_used: Vec<u64>,
    pub wall_time: f64,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct Tolerances {
    pub cdf_sup_distance: Option<f64>,
    pub hist_l1: Option<f64>,
    pub stieltjes: Option<f64>,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            cdf_sup_distance: Some(0.05),
            hist_l1: None,
            stieltjes: None,
        }
    }
}

impl ComparisonReport {
    /// Whether every enabled tolerance holds.
    pub fn passes(&self, tol: &Tolerances) -> bool {
        let ok = |v: f64, t: Option<f64>| t.is_none_or(|t| v <= t);
        ok(self.cdf_sup_distance, tol.cdf_sup_distance)
            && ok(self.hist_l1, tol.hist_l1)
            && self
                .stieltjes_point_errors
                .iter()
                .all(|e| ok(e.error, tol.stieltjes))
    }
}

fn compare_eigenvalues(
    eigenvalues: &[f64],
    params: &ModelParams,
    curve: &DensityCurve,
    z_list: &[ComplexUpper],
    bins: usize,
    seeds: Vec<u64>,
    started: Instant,
) -> Result<ComparisonReport> {
    let n = eigenvalues.len().max(1) as f64;
    let mean = eigenvalues.iter().sum::<f64>() / n;
    let m2 = eigenvalues.iter().map(|l| l * l).sum::<f64>() / n;
    Ok(ComparisonReport {
        cdf_sup_distance: cdf_sup_distance(eigenvalues, curve),
        hist_l1: hist_l1(eigenvalues, curve, bins)?,
        moment_errors: MomentErrors {
            mean: mean.abs(),
            second_moment: (m2 - params.nu / params.gamma).abs(),
        },
        stieltjes_point_errors: stieltjes_point_check(eigenvalues, params, z_list)?,
        seeds_used: seeds,
        wall_time: started.elapsed().as_secs_f64(),
    })
}

/// Pooled report over all samples plus one report per sample.
pub fn compare_samples(
    samples: &[SpectrumSample],
    params: &ModelParams,
    curve: &DensityCurve,
    z_list: &[ComplexUpper],
    bins: usize,
) -> Result<(ComparisonReport, Vec<ComparisonReport>)> {
    if samples.is_empty() {
        return Err(Error::invalid("no samples to compare"));
    }
    if !curve.is_normalized() {
        return Err(Error::invalid(format!(
            "curve normalization error {:.3e} exceeds its tolerance {:.1e}",
            curve.normalization_error, curve.tolerance
        )));
    }
    let start = Instant::now();
    let per_seed = samples
        .iter()
        .map(|s| compare_eigenvalues(&s.eigenvalues, params, curve, z_list, bins, vec![s.config.seed], Instant::now()))
        .collect::<Result<Vec<_>>>()?;
    let pooled: Vec<f64> = samples.iter().flat_map(|s| s.eigenvalues.iter().copied()).collect();
    let seeds = samples.iter().map(|s| s.config.seed).collect();
    let report = compare_eigenvalues(&pooled, params, curve, z_list, bins, seeds, start)?;
    Ok((report, per_seed))
}

/// `{config, metrics, per_seed, tolerances, pass}`.
pub fn report_json(
    config: &impl Serialize,
    report: &ComparisonReport,
    per_seed: &[ComparisonReport],
    tolerances: &Tolerances,
) -> Result<serde_json::Value> {
    let mut out = BTreeMap::new();
    out.insert("config", serde_json::to_value(config)?);
    out.insert("metrics", serde_json::to_value(report)?);
    out.insert("per_seed", serde_json::to_value(per_seed)?);
    out.insert("tolerances", serde_json::to_value(tolerances)?);
    out.insert("pass", serde_json::Value::Bool(report.passes(tolerances)));
    Ok(serde_json::to_value(out)?)
}
