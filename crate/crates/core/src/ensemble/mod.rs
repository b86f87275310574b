//! Seeded Monte Carlo kernel matrices and their spectra.
//!
//! Every column of the data matrix has its own ChaCha stream keyed by the
//! config seed, so sampling parallelizes over columns and the result does
//! not depend on the number of worker threads. Trials derive child seeds
//! from `(seed, trial)`.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use faer::dyn_stack::{MemBuffer, MemStack};
use faer::linalg::evd::{self, ComputeEigenvectors};
use faer::diag::Diag;
use faer::{Accum, Mat, MatRef, Par};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::kernels::{rescaled_f, KernelDescriptor};
use crate::limit_law::ComplexUpper;
use crate::{Error, Result};

/// Default largest matrix dimension (an `n x n` f64 matrix at this size
/// takes 512 MiB).
pub const DEFAULT_MAX_N: usize = 8192;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VectorModel {
    /// Entries i.i.d. `N(0, 1/p)`.
    Gaussian,
    /// The Gaussian column divided by its norm.
    Sphere,
    /// Entries i.i.d. uniform on `{-1/sqrt(p), 1/sqrt(p)}`.
    Hypercube,
}

impl fmt::Display for VectorModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            VectorModel::Gaussian => "gaussian",
            VectorModel::Sphere => "sphere",
            VectorModel::Hypercube => "hypercube",
        })
    }
}

impl FromStr for VectorModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "gaussian" => Ok(VectorModel::Gaussian),
            "sphere" => Ok(VectorModel::Sphere),
            "hypercube" => Ok(VectorModel::Hypercube),
            other => Err(Error::invalid(format!("unknown vector model '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EnsembleConfig {
    pub p: usize,
    pub n: usize,
    pub vector_model: VectorModel,
    pub kernel: KernelDescriptor,
    pub seed: u64,
}

impl EnsembleConfig {
    pub fn new(p: usize, n: usize, vector_model: VectorModel, kernel: KernelDescriptor, seed: u64) -> Result<Self> {
        let cfg = Self {
            p,
            n,
            vector_model,
            kernel,
            seed,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.p < 1 {
            return Err(Error::invalid("p must be at least 1"));
        }
        if self.n < 2 {
            return Err(Error::invalid("n must be at least 2"));
        }
        Ok(())
    }

    pub fn gamma(&self) -> f64 {
        self.p as f64 / self.n as f64
    }

    /// Same config with the seed of trial `trial`.
    pub fn for_trial(&self, trial: u64) -> Self {
        Self {
            seed: child_seed(self.seed, trial),
            ..self.clone()
        }
    }
}

/// SplitMix64 finalizer over `(seed, trial)`; distinct trials get
/// decorrelated seeds regardless of execution order.
pub fn child_seed(seed: u64, trial: u64) -> u64 {
    let mut z = seed ^ trial.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn column_rng(seed: u64, column: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(column as u64);
    rng
}

/// The `p x n` data matrix, column-major.
pub fn sample_vectors(cfg: &EnsembleConfig) -> Result<Mat<f64>> {
    cfg.validate()?;
    let (p, n) = (cfg.p, cfg.n);
    let scale = 1.0 / (p as f64).sqrt();
    let mut data = vec![0.0f64; p * n];
    data.par_chunks_mut(p).enumerate().for_each(|(j, col)| {
        let mut rng = column_rng(cfg.seed, j);
        match cfg.vector_model {
            VectorModel::Gaussian | VectorModel::Sphere => {
                for x in col.iter_mut() {
                    let g: f64 = rng.sample(StandardNormal);
                    *x = g * scale;
                }
                if cfg.vector_model == VectorModel::Sphere {
                    let norm = col.iter().map(|x| x * x).sum::<f64>().sqrt();
                    col.iter_mut().for_each(|x| *x /= norm);
                }
            }
            VectorModel::Hypercube => {
                for x in col.iter_mut() {
                    *x = if rng.gen::<bool>() { scale } else { -scale };
                }
            }
        }
    });
    Ok(MatRef::from_column_major_slice(&data, p, n).to_owned())
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct KernelDiagnostics {
    /// Off-diagonal pairs with an inner product of exactly zero.
    pub exact_zero_inner_products: usize,
    /// Non-finite kernel values replaced by the kernel's value at zero.
    pub non_finite_replaced: usize,
}

#[derive(Debug, Clone)]
pub struct KernelMatrix {
    pub matrix: Mat<f64>,
    pub diagnostics: KernelDiagnostics,
}

/// `A_ij = f(X_i^T X_j; p)` for `i != j` and `A_ii = 0`. Each unordered
/// pair is evaluated from the same Gram entry, so `A` is exactly symmetric.
pub fn build_kernel_matrix(x: MatRef<'_, f64>, k: &KernelDescriptor) -> Result<KernelMatrix> {
    if x.col_iter().any(|c| c.iter().any(|v| !v.is_finite())) {
        return Err(Error::invalid("data matrix has non-finite entries"));
    }
    let (p, n) = (x.nrows(), x.ncols());
    let mut gram = Mat::<f64>::zeros(n, n);
    faer::linalg::matmul::matmul(gram.as_mut(), Accum::Replace, x.transpose(), x, 1.0, Par::Seq);

    let fallback = (k.value_at_zero() - k.centering_offset()) / (p as f64).sqrt();
    let gram = gram.as_ref();
    let mut data = vec![0.0f64; n * n];
    let tallies: Vec<(usize, usize)> = data
        .par_chunks_mut(n)
        .enumerate()
        .map(|(j, col)| {
            let (mut zeros, mut replaced) = (0, 0);
            for (i, out) in col.iter_mut().enumerate() {
                if i == j {
                    continue;
                }
                let g = if i < j { gram[(i, j)] } else { gram[(j, i)] };
                let mut v = rescaled_f(k, p, g);
                if !v.is_finite() {
                    v = fallback;
                    if i < j {
                        replaced += 1;
                    }
                }
                if g == 0.0 && i < j {
                    zeros += 1;
                }
                *out = v;
            }
            (zeros, replaced)
        })
        .collect();
    let diagnostics = tallies.iter().fold(KernelDiagnostics::default(), |acc, (z, r)| KernelDiagnostics {
        exact_zero_inner_products: acc.exact_zero_inner_products + z,
        non_finite_replaced: acc.non_finite_replaced + r,
    });
    Ok(KernelMatrix {
        matrix: MatRef::from_column_major_slice(&data, n, n).to_owned(),
        diagnostics,
    })
}

/// Eigenvalues in ascending order, computed sequentially so that the output
/// does not depend on the thread pool.
pub fn eigenvalues(a: MatRef<'_, f64>) -> Result<Vec<f64>> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::invalid("matrix is not square"));
    }
    let mut max_abs = 0.0f64;
    let mut asym = 0.0f64;
    for j in 0..n {
        for i in 0..n {
            let v = a[(i, j)];
            if !v.is_finite() {
                return Err(Error::invalid("matrix has non-finite entries"));
            }
            max_abs = max_abs.max(v.abs());
            if i > j {
                asym = asym.max((v - a[(j, i)]).abs());
            }
        }
    }
    if asym > 1e-12 * max_abs.max(1.0) {
        return Err(Error::invalid(format!("matrix is not symmetric (max |A - A^T| = {asym:e})")));
    }
    let par = Par::Seq;
    let mut s = Diag::<f64>::zeros(n);
    let mut mem = MemBuffer::new(evd::self_adjoint_evd_scratch::<f64>(
        n,
        ComputeEigenvectors::No,
        par,
        Default::default(),
    ));
    evd::self_adjoint_evd(a, s.as_mut(), None, par, MemStack::new(&mut mem), Default::default())
        .map_err(|_| Error::NoConvergence { n, cap: 30 * n.max(1) })?;
    let mut out: Vec<f64> = s.column_vector().iter().copied().collect();
    out.sort_by(|x, y| x.partial_cmp(y).unwrap());
    Ok(out)
}

#[derive(Debug, Clone, Serialize)]
pub struct SpectrumSample {
    pub eigenvalues: Vec<f64>,
    pub config: EnsembleConfig,
    pub spectral_norm: f64,
    pub diagnostics: KernelDiagnostics,
}

impl SpectrumSample {
    pub fn from_eigenvalues(mut eigenvalues: Vec<f64>, config: EnsembleConfig) -> Self {
        eigenvalues.sort_by(|x, y| x.partial_cmp(y).unwrap());
        let spectral_norm = match (eigenvalues.first(), eigenvalues.last()) {
            (Some(a), Some(b)) => a.abs().max(b.abs()),
            _ => 0.0,
        };
        Self {
            eigenvalues,
            config,
            spectral_norm,
            diagnostics: KernelDiagnostics::default(),
        }
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// `lambda` CSV preceded by `# key=value` metadata and the
    /// `# p,n,model,kernel,seed` line.
    pub fn write_csv<W: Write>(&self, mut w: W, meta: &[(String, String)]) -> Result<()> {
        for (k, v) in meta {
            writeln!(w, "# {k}={v}")?;
        }
        let c = &self.config;
        writeln!(w, "# p,n,model,kernel,seed")?;
        writeln!(w, "# {},{},{},\"{}\",{}", c.p, c.n, c.vector_model, c.kernel, c.seed)?;
        writeln!(w, "lambda")?;
        for l in &self.eigenvalues {
            writeln!(w, "{l}")?;
        }
        Ok(())
    }
}

pub fn check_memory(n: usize, ceiling: usize) -> Result<()> {
    if n > ceiling {
        return Err(Error::Resource { n, ceiling });
    }
    Ok(())
}

/// One draw: sample, build the kernel matrix, diagonalize.
pub fn simulate(cfg: &EnsembleConfig) -> Result<SpectrumSample> {
    simulate_with_ceiling(cfg, DEFAULT_MAX_N)
}

pub fn simulate_with_ceiling(cfg: &EnsembleConfig, ceiling: usize) -> Result<SpectrumSample> {
    cfg.validate()?;
    check_memory(cfg.n, ceiling)?;
    let x = sample_vectors(cfg)?;
    let km = build_kernel_matrix(x.as_ref(), &cfg.kernel)?;
    let eig = eigenvalues(km.matrix.as_ref())?;
    let mut s = SpectrumSample::from_eigenvalues(eig, cfg.clone());
    s.diagnostics = km.diagnostics;
    Ok(s)
}

/// `(1/n) sum_i 1 / (lambda_i - z)`.
pub fn empirical_stieltjes(eigenvalues: &[f64], z: ComplexUpper) -> Complex64 {
    let zc = z.to_complex();
    let sum: Complex64 = eigenvalues.iter().map(|&l| 1.0 / (l - zc)).sum();
    sum / eigenvalues.len() as f64
}

#[derive(Debug, Clone, Serialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    /// Density heights: `count / (n * width)`.
    pub heights: Vec<f64>,
}

impl Histogram {
    pub fn width(&self) -> f64 {
        self.edges[1] - self.edges[0]
    }

    pub fn mass(&self) -> f64 {
        self.heights.iter().sum::<f64>() * self.width()
    }
}

/// Equal-width histogram normalized by the full sample size, so bars
/// integrate to the fraction of eigenvalues inside `[lo, hi]`.
pub fn esd_histogram(eigenvalues: &[f64], bins: usize, lo: f64, hi: f64) -> Result<Histogram> {
    if bins == 0 || !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::invalid("histogram needs bins >= 1 and lo < hi"));
    }
    let width = (hi - lo) / bins as f64;
    let mut counts = vec![0usize; bins];
    for &l in eigenvalues {
        if l < lo || l > hi {
            continue;
        }
        let b = (((l - lo) / width) as usize).min(bins - 1);
        counts[b] += 1;
    }
    let n = eigenvalues.len().max(1) as f64;
    Ok(Histogram {
        edges: (0..=bins).map(|i| lo + width * i as f64).collect(),
        heights: counts.iter().map(|&c| c as f64 / (n * width)).collect(),
    })
}
