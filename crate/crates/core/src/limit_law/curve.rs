use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::density::{density_any, density_explicit, mp_edges};
use super::roots::cubic_roots_cold;
use super::support::{support_intervals, support_scan_range};
use super::{ModelParams, Regime};
use crate::{Error, Result};

/// Normalization tolerance declared with curves on automatic grids.
pub const DEFAULT_CURVE_TOLERANCE: f64 = 1e-3;
/// Largest allowed gap between the closed-form density and the root-based one.
const CROSS_CHECK_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub location: f64,
    pub mass: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct DensityCurve {
    pub params: ModelParams,
    pub regime: Regime,
    pub grid: Vec<f64>,
    #[serde(rename = "rho")]
    pub values: Vec<f64>,
    pub atoms: Vec<Atom>,
    /// `|trapezoid(values) + sum(atom masses) - 1|`.
    pub normalization_error: f64,
    pub tolerance: f64,
}

fn trapezoid(x: &[f64], y: &[f64]) -> f64 {
    x.windows(2).zip(y.windows(2)).map(|(x, y)| 0.5 * (x[1] - x[0]) * (y[0] + y[1])).sum()
}

impl DensityCurve {
    pub fn atom_mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.mass).sum()
    }

    /// Trapezoid mass of the continuous part plus the atoms.
    pub fn total_mass(&self) -> f64 {
        trapezoid(&self.grid, &self.values) + self.atom_mass()
    }

    pub fn second_moment(&self) -> f64 {
        let w: Vec<f64> = self.grid.iter().zip(&self.values).map(|(t, r)| t * t * r).collect();
        trapezoid(&self.grid, &w) + self.atoms.iter().map(|a| a.mass * a.location * a.location).sum::<f64>()
    }

    pub fn is_normalized(&self) -> bool {
        self.normalization_error <= self.tolerance
    }

    /// Cumulative distribution on the grid, atoms included; `cdf[i]` is the
    /// mass at or below `grid[i]`.
    pub fn cdf(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.grid.len());
        let mut acc = 0.0;
        let mut atoms: Vec<Atom> = self.atoms.clone();
        atoms.sort_by(|a, b| a.location.partial_cmp(&b.location).unwrap());
        let mut next_atom = 0;
        for i in 0..self.grid.len() {
            if i > 0 {
                acc += 0.5 * (self.grid[i] - self.grid[i - 1]) * (self.values[i] + self.values[i - 1]);
            }
            while next_atom < atoms.len() && atoms[next_atom].location <= self.grid[i] {
                acc += atoms[next_atom].mass;
                next_atom += 1;
            }
            out.push(acc);
        }
        out
    }

    /// `t,rho` CSV; `meta` goes into leading `# key=value` lines and atoms
    /// into trailing `# atom,<location>,<mass>` lines.
    pub fn write_csv<W: Write>(&self, mut w: W, meta: &[(String, String)]) -> Result<()> {
        for (k, v) in meta {
            writeln!(w, "# {k}={v}")?;
        }
        writeln!(w, "t,rho")?;
        for (t, r) in self.grid.iter().zip(&self.values) {
            writeln!(w, "{t},{r}")?;
        }
        for a in &self.atoms {
            writeln!(w, "# atom,{},{}", a.location, a.mass)?;
        }
        Ok(())
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("curve serializes")
    }
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::invalid("grid is empty"));
    }
    if grid.iter().any(|t| !t.is_finite()) || grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid("grid must be finite and strictly increasing"));
    }
    Ok(())
}

fn atoms_for(params: &ModelParams) -> Vec<Atom> {
    match params.regime() {
        Regime::Null => vec![Atom {
            location: 0.0,
            mass: 1.0,
        }],
        Regime::MarchenkoPastur if params.gamma < 1.0 => vec![Atom {
            location: -params.a,
            mass: 1.0 - params.gamma,
        }],
        _ => vec![],
    }
}

fn cubic_value(params: &ModelParams, u: f64) -> Result<f64> {
    let explicit = density_explicit(params, u)?;
    let roots = cubic_roots_cold(params, Complex64::new(u, 0.0));
    let from_roots = roots.iter().map(|r| r.im).fold(f64::NEG_INFINITY, f64::max).max(0.0) / std::f64::consts::PI;
    if !((explicit - from_roots).abs() <= CROSS_CHECK_TOL) {
        return Err(Error::CurveRejected {
            u,
            explicit,
            from_roots,
        });
    }
    Ok(explicit)
}

/// Limit density on `grid`, dispatched by regime. Cubic-regime values are
/// cross-checked against the upper root of the equation on the real axis.
pub fn density_curve(params: &ModelParams, grid: &[f64]) -> Result<DensityCurve> {
    params.validate()?;
    check_grid(grid)?;
    let regime = params.regime();
    let values: Vec<f64> = grid
        .par_iter()
        .map(|&t| match regime {
            Regime::Cubic => cubic_value(params, t),
            _ => density_any(params, t),
        })
        .collect::<Result<_>>()?;
    let mut curve = DensityCurve {
        params: *params,
        regime,
        grid: grid.to_vec(),
        values,
        atoms: atoms_for(params),
        normalization_error: 0.0,
        tolerance: DEFAULT_CURVE_TOLERANCE,
    };
    curve.normalization_error = (curve.total_mass() - 1.0).abs();
    Ok(curve)
}

/// `[0, 1] -> [0, 1]` with quartic clustering at both ends, so that square
/// root edges and inverse square root edges are both resolved.
fn cluster(s: f64) -> f64 {
    let c = |x: f64| 0.5 * (1.0 - (std::f64::consts::PI * x).cos());
    c(c(s))
}

/// Intervals carrying the continuous part of the law.
pub fn continuous_support(params: &ModelParams) -> Result<Vec<(f64, f64)>> {
    params.validate()?;
    Ok(match params.regime() {
        Regime::Null => vec![],
        Regime::Semicircle => {
            let r = 2.0 * (params.nu / params.gamma).sqrt();
            vec![(-r, r)]
        }
        Regime::MarchenkoPastur => {
            let (lo, hi) = mp_edges(1.0 / params.gamma);
            let (x, y) = (params.a * lo - params.a, params.a * hi - params.a);
            vec![(x.min(y), x.max(y))]
        }
        Regime::Cubic => support_intervals(params)?,
    })
}

/// A grid of about `points` abscissae covering the support, clustered
/// towards every edge.
pub fn auto_grid(params: &ModelParams, points: usize) -> Result<Vec<f64>> {
    let points = points.max(16);
    let intervals = continuous_support(params)?;
    if intervals.is_empty() {
        let s = if params.regime() == Regime::Null { 1.0 } else { support_scan_range(params) };
        return Ok((0..points).map(|i| -s + 2.0 * s * i as f64 / (points - 1) as f64).collect());
    }
    let total: f64 = intervals.iter().map(|(lo, hi)| hi - lo).sum();
    let mut grid = Vec::with_capacity(points + 64 * intervals.len());
    for (lo, hi) in intervals {
        let n = ((points as f64 * (hi - lo) / total).round() as usize).max(64);
        for k in 0..n {
            grid.push(lo + (hi - lo) * cluster(k as f64 / (n - 1) as f64));
        }
    }
    grid.sort_by(|a, b| a.partial_cmp(b).unwrap());
    grid.dedup_by(|a, b| *a <= *b);
    Ok(grid)
}
