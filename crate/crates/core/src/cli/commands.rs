use std::io::Write;

use serde_json::json;

use super::{config_json, config_pairs, Command, Format, Opts, SweepKind, EXIT_COMPARE_FAILED, EXIT_OK};
use crate::ensemble::{child_seed, simulate_with_ceiling, EnsembleConfig, VectorModel, DEFAULT_MAX_N};
use crate::kernels::{check_conditions, limit_constants, KernelDescriptor};
use crate::limit_law::{auto_grid, density_curve, ComplexUpper, ModelParams};
use crate::poly_basis::{expansion_coefficients, Basis, QuadratureRule};
use crate::verify::{
    compare_samples, concentration_sweep, default_z_list, norm_growth_sweep, report_json, Tolerances,
};
use crate::{Error, Result};

const DEFAULT_DEGREE: usize = 10;
const DEFAULT_POINTS: usize = 2001;
const DEFAULT_BINS: usize = 50;
const DEFAULT_SIZES: [usize; 4] = [250, 500, 1000, 2000];
const DEFAULT_SWEEP_TRIALS: usize = 20;
const DEFAULT_TOL_CDF: f64 = 0.05;
const COEFF_RULE_NODES: usize = 96;

pub(super) fn dispatch(cmd: &Command, w: &mut dyn Write) -> Result<i32> {
    let opts = resolve(cmd)?;
    let name = cmd.name();
    match cmd {
        Command::Coeffs(_) => coeffs(name, &opts, w),
        Command::Density(_) => density(name, &opts, w),
        Command::Simulate(_) => simulate(name, &opts, w),
        Command::Compare(_) => compare(name, &opts, w),
        Command::Sweep(_) => sweep(name, &opts, w),
    }
}

/// Fills in `p`, `n`, `gamma` from any two of them and the per-command
/// defaults, so the embedded config is complete.
fn resolve(cmd: &Command) -> Result<Opts> {
    let mut o = cmd.opts().clone();
    o.config = None;
    match (o.p, o.n, o.gamma) {
        (Some(p), Some(n), Some(g)) => {
            if ((p as f64 / n as f64) - g).abs() > 1e-12 * g {
                return Err(Error::invalid(format!("p = {p}, n = {n} and gamma = {g} disagree; give any two")));
            }
        }
        (Some(p), Some(n), None) => {
            if n == 0 {
                return Err(Error::invalid("n must be positive"));
            }
            o.gamma = Some(p as f64 / n as f64);
        }
        (Some(p), None, Some(g)) => {
            positive_gamma(g)?;
            o.n = Some((p as f64 / g).round() as usize);
        }
        (None, Some(n), Some(g)) => {
            positive_gamma(g)?;
            o.p = Some(((g * n as f64).round() as usize).max(1));
        }
        _ => {}
    }
    if let Some(g) = o.gamma {
        positive_gamma(g)?;
    }
    if let Some(spec) = &o.kernel {
        // canonical form, so re-runs parse the same kernel
        o.kernel = Some(spec.parse::<KernelDescriptor>()?.to_string());
    }
    o.format.get_or_insert(Format::Csv);
    let needs_draws = matches!(cmd, Command::Simulate(_) | Command::Compare(_) | Command::Sweep(_));
    if needs_draws {
        o.model.get_or_insert(VectorModel::Gaussian);
        o.seed.get_or_insert(0);
        o.max_n.get_or_insert(DEFAULT_MAX_N);
    }
    match cmd {
        Command::Coeffs(_) => {
            o.degree.get_or_insert(DEFAULT_DEGREE);
        }
        Command::Density(_) => {
            if o.grid.is_none() {
                o.points.get_or_insert(DEFAULT_POINTS);
            }
        }
        Command::Compare(_) => {
            o.points.get_or_insert(DEFAULT_POINTS);
            o.bins.get_or_insert(DEFAULT_BINS);
            o.trials.get_or_insert(1);
            o.tol_cdf.get_or_insert(DEFAULT_TOL_CDF);
        }
        Command::Sweep(_) => {
            let kind = *o.kind.get_or_insert(SweepKind::Concentration);
            o.sizes.get_or_insert(DEFAULT_SIZES.to_vec());
            o.trials.get_or_insert(DEFAULT_SWEEP_TRIALS);
            o.gamma.get_or_insert(1.0);
            match kind {
                SweepKind::Concentration => {
                    o.kernel.get_or_insert("sign".into());
                    o.z.get_or_insert("0,1".into());
                }
                SweepKind::NormGrowth => {
                    o.degree.get_or_insert(2);
                }
            }
        }
        Command::Simulate(_) => {}
    }
    Ok(o)
}

fn positive_gamma(g: f64) -> Result<()> {
    if !(g > 0.0 && g.is_finite()) {
        return Err(Error::invalid(format!("gamma must be positive, got {g}")));
    }
    Ok(())
}

fn kernel(o: &Opts) -> Result<KernelDescriptor> {
    o.kernel
        .as_deref()
        .ok_or_else(|| Error::invalid("--kernel is required"))?
        .parse()
}

fn require<T: Copy>(v: Option<T>, what: &str) -> Result<T> {
    v.ok_or_else(|| Error::invalid(format!("{what} is required")))
}

/// `(a, nu)` from `--a/--nu` if given, otherwise from the kernel.
fn law_constants(o: &Opts) -> Result<(f64, f64)> {
    match (o.a, o.nu) {
        (Some(a), Some(nu)) => Ok((a, nu)),
        (None, None) => {
            let lc = limit_constants(&kernel(o).map_err(|_| Error::invalid("give --kernel, or both --a and --nu"))?)?;
            Ok((lc.a, lc.nu))
        }
        _ => Err(Error::invalid("--a and --nu go together")),
    }
}

fn ensemble(o: &Opts) -> Result<EnsembleConfig> {
    EnsembleConfig::new(
        require(o.p, "two of --p, --n, --gamma")?,
        require(o.n, "two of --p, --n, --gamma")?,
        o.model.unwrap_or(VectorModel::Gaussian),
        kernel(o)?,
        o.seed.unwrap_or(0),
    )
}

fn parse_grid(spec: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = spec.split(',').map(str::trim).collect();
    let bad = || Error::invalid(format!("--grid expects lo,hi,points, got '{spec}'"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let lo: f64 = parts[0].parse().map_err(|_| bad())?;
    let hi: f64 = parts[1].parse().map_err(|_| bad())?;
    let points: usize = parts[2].parse().map_err(|_| bad())?;
    if !(lo < hi) || points < 2 {
        return Err(Error::invalid("--grid needs lo < hi and at least 2 points"));
    }
    Ok((0..points).map(|i| lo + (hi - lo) * i as f64 / (points - 1) as f64).collect())
}

fn parse_z(spec: &str) -> Result<ComplexUpper> {
    let bad = || Error::invalid(format!("--z expects re,im with im > 0, got '{spec}'"));
    let (re, im) = spec.split_once(',').ok_or_else(bad)?;
    ComplexUpper::new(re.trim().parse().map_err(|_| bad())?, im.trim().parse().map_err(|_| bad())?)
}

fn write_meta(w: &mut dyn Write, pairs: &[(String, String)]) -> Result<()> {
    for (k, v) in pairs {
        writeln!(w, "# {k}={v}")?;
    }
    Ok(())
}

fn write_json(w: &mut dyn Write, v: &serde_json::Value) -> Result<()> {
    serde_json::to_writer_pretty(&mut *w, v)?;
    writeln!(w)?;
    Ok(())
}

fn coeffs(name: &str, o: &Opts, w: &mut dyn Write) -> Result<i32> {
    let k = kernel(o)?;
    let degree = o.degree.unwrap_or(DEFAULT_DEGREE);
    let lc = limit_constants(&k)?;
    let rule = QuadratureRule::gauss_hermite(COEFF_RULE_NODES)?;
    let c = expansion_coefficients(&k, &Basis::Hermite, degree, &rule)?.coeffs;
    let mut running = Vec::with_capacity(c.len());
    let mut acc = 0.0;
    for (l, v) in c.iter().enumerate() {
        if l >= 1 {
            acc += v * v;
        }
        running.push(acc);
    }
    let ps: Vec<usize> = match (&o.p_list, o.p) {
        (Some(list), _) => list.clone(),
        (None, Some(p)) => vec![p],
        _ => vec![],
    };
    let conditions = if ps.is_empty() {
        None
    } else {
        Some(check_conditions(&k, &ps, degree)?)
    };
    match o.format.unwrap_or(Format::Csv) {
        Format::Csv => {
            write_meta(w, &config_pairs(name, o))?;
            writeln!(w, "# limit-a={}", lc.a)?;
            writeln!(w, "# limit-nu={}", lc.nu)?;
            let mut header = "l,c_l,sum_c2".to_string();
            if let Some(r) = &conditions {
                for e in &r.entries {
                    header.push_str(&format!(",a_p{}", e.p));
                }
            }
            writeln!(w, "{header}")?;
            for l in 0..c.len() {
                write!(w, "{l},{},{}", c[l], running[l])?;
                if let Some(r) = &conditions {
                    for e in &r.entries {
                        write!(w, ",{}", e.coeffs.get(l).copied().unwrap_or(f64::NAN))?;
                    }
                }
                writeln!(w)?;
            }
            if let Some(r) = &conditions {
                for e in &r.entries {
                    writeln!(w, "# finite-p {}: nu_p={} tail={}", e.p, e.nu_p, e.tail)?;
                }
                for f in &r.flags {
                    writeln!(w, "# flag: {f}")?;
                }
            }
        }
        Format::Json => write_json(
            w,
            &json!({
                "config": config_json(name, o),
                "a": lc.a,
                "nu": lc.nu,
                "provenance": lc.provenance,
                "coefficients": c,
                "sum_c2": running,
                "conditions": conditions,
            }),
        )?,
    }
    Ok(EXIT_OK)
}

fn density(name: &str, o: &Opts, w: &mut dyn Write) -> Result<i32> {
    let (a, nu) = law_constants(o)?;
    let params = ModelParams::new(a, nu, require(o.gamma, "--gamma (or --p and --n)")?)?;
    let grid = match &o.grid {
        Some(g) => parse_grid(g)?,
        None => auto_grid(&params, o.points.unwrap_or(DEFAULT_POINTS))?,
    };
    let curve = density_curve(&params, &grid)?;
    match o.format.unwrap_or(Format::Csv) {
        Format::Csv => {
            let mut meta = config_pairs(name, o);
            meta.push(("law".into(), format!("a={a};nu={nu};gamma={}", params.gamma)));
            meta.push(("normalization-error".into(), curve.normalization_error.to_string()));
            curve.write_csv(w, &meta)?;
        }
        Format::Json => write_json(
            w,
            &json!({
                "config": config_json(name, o),
                "curve": curve.to_json(),
            }),
        )?,
    }
    Ok(EXIT_OK)
}

fn simulate(name: &str, o: &Opts, w: &mut dyn Write) -> Result<i32> {
    let cfg = ensemble(o)?;
    let s = simulate_with_ceiling(&cfg, o.max_n.unwrap_or(DEFAULT_MAX_N))?;
    match o.format.unwrap_or(Format::Csv) {
        Format::Csv => s.write_csv(w, &config_pairs(name, o))?,
        Format::Json => write_json(
            w,
            &json!({
                "config": config_json(name, o),
                "spectral_norm": s.spectral_norm,
                "diagnostics": s.diagnostics,
                "eigenvalues": s.eigenvalues,
            }),
        )?,
    }
    Ok(EXIT_OK)
}

fn compare(name: &str, o: &Opts, w: &mut dyn Write) -> Result<i32> {
    let cfg = ensemble(o)?;
    let (a, nu) = law_constants(o)?;
    let params = ModelParams::new(a, nu, o.theory_gamma.unwrap_or(cfg.gamma()))?;
    let curve = density_curve(&params, &auto_grid(&params, o.points.unwrap_or(DEFAULT_POINTS))?)?;
    let trials = o.trials.unwrap_or(1).max(1);
    let ceiling = o.max_n.unwrap_or(DEFAULT_MAX_N);
    let samples = (0..trials as u64)
        .map(|t| {
            let c = if trials == 1 { cfg.clone() } else { cfg.for_trial(t) };
            simulate_with_ceiling(&c, ceiling)
        })
        .collect::<Result<Vec<_>>>()?;
    let (report, per_seed) =
        compare_samples(&samples, &params, &curve, &default_z_list(), o.bins.unwrap_or(DEFAULT_BINS))?;
    let tol = Tolerances {
        cdf_sup_distance: o.tol_cdf,
        hist_l1: o.tol_hist,
        stieltjes: o.tol_stieltjes,
    };
    let pass = report.passes(&tol);
    match o.format.unwrap_or(Format::Csv) {
        Format::Json => write_json(w, &report_json(&config_json(name, o), &report, &per_seed, &tol)?)?,
        Format::Csv => {
            write_meta(w, &config_pairs(name, o))?;
            writeln!(w, "metric,value")?;
            writeln!(w, "cdf_sup_distance,{}", report.cdf_sup_distance)?;
            writeln!(w, "hist_l1,{}", report.hist_l1)?;
            writeln!(w, "mean_error,{}", report.moment_errors.mean)?;
            writeln!(w, "second_moment_error,{}", report.moment_errors.second_moment)?;
            for e in &report.stieltjes_point_errors {
                writeln!(w, "stieltjes_error[{}+{}i],{}", e.re, e.im, e.error)?;
            }
            writeln!(w, "wall_time,{}", report.wall_time)?;
            writeln!(w, "pass,{pass}")?;
            writeln!(w, "# seeds={}", join(&report.seeds_used))?;
        }
    }
    Ok(if pass { EXIT_OK } else { EXIT_COMPARE_FAILED })
}

fn join<T: ToString>(v: &[T]) -> String {
    v.iter().map(ToString::to_string).collect::<Vec<_>>().join(",")
}

fn sweep(name: &str, o: &Opts, w: &mut dyn Write) -> Result<i32> {
    let sizes = o.sizes.clone().unwrap_or_else(|| DEFAULT_SIZES.to_vec());
    let trials = o.trials.unwrap_or(DEFAULT_SWEEP_TRIALS);
    let gamma = require(o.gamma, "--gamma")?;
    let seed = o.seed.unwrap_or(0);
    let model = o.model.unwrap_or(VectorModel::Gaussian);
    let ceiling = o.max_n.unwrap_or(DEFAULT_MAX_N);
    if let Some(&n) = sizes.iter().find(|&&n| n > ceiling) {
        return Err(Error::Resource { n, ceiling });
    }
    let format = o.format.unwrap_or(Format::Csv);
    match o.kind.unwrap_or(SweepKind::Concentration) {
        SweepKind::Concentration => {
            let n0 = *sizes.first().ok_or_else(|| Error::invalid("--sizes is empty"))?;
            let p0 = ((gamma * n0 as f64).round() as usize).max(1);
            let base = EnsembleConfig::new(p0, n0, model, kernel(o)?, seed)?;
            let z = parse_z(o.z.as_deref().unwrap_or("0,1"))?;
            let s = concentration_sweep(&base, z, &sizes, trials)?;
            match format {
                Format::Json => write_json(w, &json!({ "config": config_json(name, o), "sweep": s }))?,
                Format::Csv => {
                    write_meta(w, &config_pairs(name, o))?;
                    let fmt = |v: Option<f64>| v.map_or("none".to_string(), |x| x.to_string());
                    writeln!(w, "# slope={}", fmt(s.slope))?;
                    writeln!(w, "# slope-ci-low={}", fmt(s.slope_ci.map(|c| c.0)))?;
                    writeln!(w, "# slope-ci-high={}", fmt(s.slope_ci.map(|c| c.1)))?;
                    writeln!(w, "# child-seeds={}", join(&s.rows[0].seeds))?;
                    writeln!(w, "n,p,std")?;
                    for r in &s.rows {
                        writeln!(w, "{},{},{}", r.n, r.p, r.std)?;
                    }
                }
            }
        }
        SweepKind::NormGrowth => {
            let degree = o.degree.unwrap_or(2);
            let s = norm_growth_sweep(degree, gamma, &sizes, trials, seed, model)?;
            match format {
                Format::Json => write_json(w, &json!({ "config": config_json(name, o), "sweep": s }))?,
                Format::Csv => {
                    write_meta(w, &config_pairs(name, o))?;
                    writeln!(w, "# ratio-non-increasing={}", s.ratio_non_increasing)?;
                    writeln!(w, "# ratio-non-increasing-tail={}", s.ratio_non_increasing_tail)?;
                    writeln!(w, "# norm-appears-bounded={}", s.norm_appears_bounded)?;
                    writeln!(w, "# semicircle-edge={}", s.semicircle_edge)?;
                    if let Some(b) = s.below_linear_bound {
                        writeln!(w, "# linear-bound={},all-below={b}", s.linear_bound)?;
                    }
                    writeln!(w, "# child-seeds={}", join(&(0..trials as u64).map(|t| child_seed(seed, t)).collect::<Vec<_>>()))?;
                    writeln!(w, "n,p,mean_norm,ratio,max_norm")?;
                    for r in &s.rows {
                        let max = r.norms.iter().copied().fold(0.0, f64::max);
                        writeln!(w, "{},{},{},{},{}", r.n, r.p, r.mean_norm, r.ratio, max)?;
                    }
                }
            }
        }
    }
    Ok(EXIT_OK)
}
