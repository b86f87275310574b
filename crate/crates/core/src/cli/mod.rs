//! Command-line front end.
//!
//! Every subcommand accepts the same flat set of options. A `--config` file
//! holds `key=value` lines mirroring the long flag names; values from the
//! command line win over the file, which wins over built-in defaults.
//! Output files embed the resolved options as `# key=value` comments (CSV)
//! or a `config` object (JSON), and such a CSV can be passed back as
//! `--config` to reproduce it.

mod commands;

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::ensemble::VectorModel;
use crate::{Error, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
pub const THREADS_ENV: &str = "KERNEL_SPECTRA_THREADS";

pub const EXIT_OK: i32 = 0;
pub const EXIT_COMPARE_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_RESOURCE: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "kernel-spectra", version, about = "Spectra of random inner-product kernel matrices")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Hermite coefficients of a kernel, its (a, nu) and finite-p coefficients.
    Coeffs(Opts),
    /// Limit density on a grid.
    Density(Opts),
    /// One Monte Carlo spectrum.
    Simulate(Opts),
    /// Empirical spectrum against the limit law; exit 1 on failure.
    Compare(Opts),
    /// Concentration or spectral-norm growth sweep.
    Sweep(Opts),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Coeffs(_) => "coeffs",
            Command::Density(_) => "density",
            Command::Simulate(_) => "simulate",
            Command::Compare(_) => "compare",
            Command::Sweep(_) => "sweep",
        }
    }

    pub fn opts(&self) -> &Opts {
        match self {
            Command::Coeffs(o) | Command::Density(o) | Command::Simulate(o) | Command::Compare(o) | Command::Sweep(o) => o,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepKind {
    Concentration,
    NormGrowth,
}

#[derive(Debug, Clone, Default, Args, Serialize)]
#[command(args_override_self = true)]
pub struct Opts {
    /// key=value file mirroring the long flag names.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// Kernel spec, e.g. `sign`, `power_odd:r=0.25`, `series:c1=0.5,c3=0.1`.
    #[arg(long)]
    pub kernel: Option<String>,
    /// Linear coefficient of the law (overrides the kernel's).
    #[arg(long, allow_hyphen_values = true)]
    pub a: Option<f64>,
    /// Variance of the law (overrides the kernel's).
    #[arg(long)]
    pub nu: Option<f64>,
    #[arg(long)]
    pub p: Option<usize>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub gamma: Option<f64>,
    /// gaussian, sphere or hypercube.
    #[arg(long)]
    pub model: Option<VectorModel>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Uniform density grid `lo,hi,points` (default: automatic, edge-clustered).
    #[arg(long, allow_hyphen_values = true)]
    pub grid: Option<String>,
    /// Points of the automatic grid.
    #[arg(long)]
    pub points: Option<usize>,
    #[arg(long)]
    pub bins: Option<usize>,
    /// Worker threads (default: $KERNEL_SPECTRA_THREADS, then all cores).
    #[arg(long)]
    pub threads: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub format: Option<Format>,
    /// Largest polynomial degree.
    #[arg(short = 'L', long)]
    pub degree: Option<usize>,
    /// Dimensions for finite-p coefficients.
    #[arg(long, value_delimiter = ',')]
    pub p_list: Option<Vec<usize>>,
    #[arg(long)]
    pub trials: Option<usize>,
    /// Matrix sizes `n` for sweeps.
    #[arg(long, value_delimiter = ',')]
    pub sizes: Option<Vec<usize>>,
    #[arg(long)]
    pub kind: Option<SweepKind>,
    /// Stieltjes evaluation point `re,im`.
    #[arg(long, allow_hyphen_values = true)]
    pub z: Option<String>,
    /// Largest accepted CDF sup distance.
    #[arg(long)]
    pub tol_cdf: Option<f64>,
    #[arg(long)]
    pub tol_hist: Option<f64>,
    #[arg(long)]
    pub tol_stieltjes: Option<f64>,
    /// Aspect ratio of the theoretical law in `compare` (default: p / n).
    #[arg(long)]
    pub theory_gamma: Option<f64>,
    /// Largest matrix dimension `n` allowed.
    #[arg(long)]
    pub max_n: Option<usize>,
}

/// Exit status of a finished command.
#[derive(Debug)]
pub struct Outcome {
    pub status: i32,
}

/// Reads a config file into `(flag, value)` pairs: plain `key=value` lines
/// plus `# key=value` comment lines. A file starting with a comment is read
/// as an output file, keeping only its comment header. `command` and
/// `version` keys are skipped.
pub fn read_config(path: &Path) -> Result<Vec<(String, String)>> {
    let text = std::fs::read_to_string(path)?;
    parse_config(&text)
}

fn parse_config(text: &str) -> Result<Vec<(String, String)>> {
    // an output file: only its `# key=value` header counts
    let embedded = text.lines().find(|l| !l.trim().is_empty()).is_some_and(|l| l.trim_start().starts_with('#'));
    let mut out = Vec::new();
    for line in text.lines() {
        let line = line.trim();
        let (commented, body) = match line.strip_prefix('#') {
            Some(rest) => (true, rest.trim()),
            None if embedded => continue,
            None => (false, line),
        };
        if body.is_empty() {
            continue;
        }
        let Some((k, v)) = body.split_once('=') else {
            if commented {
                continue;
            }
            return Err(Error::invalid(format!("config line '{line}' is not key=value")));
        };
        let key = k.trim().replace('_', "-");
        if commented && !option_keys().contains(&key) {
            continue;
        }
        if matches!(key.as_str(), "command" | "version" | "config") {
            continue;
        }
        out.push((key, v.trim().to_string()));
    }
    Ok(out)
}

/// Long flag names of [`Opts`].
fn option_keys() -> Vec<String> {
    match serde_json::to_value(Opts::default()) {
        Ok(serde_json::Value::Object(map)) => map.keys().map(|k| k.replace('_', "-")).collect(),
        _ => Vec::new(),
    }
}

fn flag_for(key: &str) -> String {
    if key == "L" {
        "-L".into()
    } else {
        format!("--{key}")
    }
}

/// Parses `args`, merging a config file underneath the command line.
pub fn parse_args<I, T>(args: I) -> std::result::Result<Cli, clap::Error>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let first = Cli::try_parse_from(&argv)?;
    let Some(path) = first.command.opts().config.clone() else {
        return Ok(first);
    };
    let entries = read_config(&path)
        .map_err(|e| clap::Error::raw(clap::error::ErrorKind::Io, format!("config {}: {e}\n", path.display())))?;
    let mut merged: Vec<OsString> = argv[..2.min(argv.len())].to_vec();
    for (k, v) in entries {
        merged.push(flag_for(&k).into());
        merged.push(v.into());
    }
    merged.extend(argv.iter().skip(2).cloned());
    Cli::try_parse_from(merged)
}

/// `(key, value)` pairs of the resolved options, lists comma-joined.
pub(crate) fn config_pairs(command: &str, opts: &Opts) -> Vec<(String, String)> {
    let mut out = vec![("version".to_string(), VERSION.to_string()), ("command".to_string(), command.to_string())];
    if let Ok(serde_json::Value::Object(map)) = serde_json::to_value(opts) {
        for (k, v) in map {
            let s = match v {
                serde_json::Value::Null => continue,
                serde_json::Value::String(s) => s,
                serde_json::Value::Array(a) => a.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(","),
                other => other.to_string(),
            };
            out.push((k.replace('_', "-"), s));
        }
    }
    out
}

pub(crate) fn config_json(command: &str, opts: &Opts) -> serde_json::Value {
    let map: BTreeMap<String, String> = config_pairs(command, opts).into_iter().collect();
    serde_json::to_value(map).expect("string map serializes")
}

fn threads(opts: &Opts) -> Result<Option<usize>> {
    let t = match opts.threads {
        Some(t) => Some(t),
        None => match std::env::var(THREADS_ENV) {
            Ok(s) if !s.trim().is_empty() => Some(
                s.trim()
                    .parse::<usize>()
                    .map_err(|_| Error::invalid(format!("{THREADS_ENV} must be a positive integer, got '{s}'")))?,
            ),
            _ => None,
        },
    };
    if t == Some(0) {
        return Err(Error::invalid("threads must be at least 1"));
    }
    Ok(t)
}

pub(crate) fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Resource { .. } => EXIT_RESOURCE,
        Error::InvalidParameter(_) | Error::KernelSpec(_) | Error::Dispatch(_) | Error::DegreeCap { .. } => EXIT_USAGE,
        Error::NotSquareIntegrable(_) => EXIT_USAGE,
        _ => EXIT_COMPARE_FAILED,
    }
}

/// Runs a parsed command, writing to `--out` or to `stdout`.
pub fn execute(cli: &Cli, stdout: &mut dyn Write) -> Result<Outcome> {
    let opts = cli.command.opts();
    let pool = match threads(opts)? {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| Error::invalid(format!("thread pool: {e}")))?,
        None => rayon::ThreadPoolBuilder::new()
            .build()
            .map_err(|e| Error::invalid(format!("thread pool: {e}")))?,
    };
    let mut file;
    let sink: &mut dyn Write = match &opts.out {
        Some(path) => {
            file = BufWriter::new(File::create(path)?);
            &mut file
        }
        None => stdout,
    };
    let mut buf = Vec::new();
    let status = pool.install(|| commands::dispatch(&cli.command, &mut buf))?;
    sink.write_all(&buf)?;
    sink.flush()?;
    Ok(Outcome { status })
}

/// Entry point used by the binary: returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match parse_args(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
        }
    };
    let stdout = io::stdout();
    let mut lock = stdout.lock();
    match execute(&cli, &mut lock) {
        Ok(o) => o.status,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_lines() {
        let text = "kernel=sign\n# p=40\n# p,n,model,kernel,seed\n# 1,2,gaussian,\"sign\",3\n# version=0.1.0\n# slope=-0.5\n\nn = 80\n";
        let c = parse_config(text).unwrap();
        assert_eq!(
            c,
            vec![("kernel".into(), "sign".into()), ("p".into(), "40".into()), ("n".into(), "80".into())]
        );
        assert!(parse_config("kernel sign").is_err());
        let csv = "# seed=3\n# n=10\nlambda\n-0.5\n0.5\n";
        assert_eq!(parse_config(csv).unwrap(), vec![("seed".into(), "3".into()), ("n".into(), "10".into())]);
    }

    #[test]
    fn command_line_beats_config_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.cfg");
        std::fs::write(&path, "kernel=sign\nseed=5\np=30\nn=60\np_list=10,20\n").unwrap();
        let cli = parse_args(["ks", "simulate", "--config", path.to_str().unwrap(), "--seed", "9"]).unwrap();
        let o = cli.command.opts();
        assert_eq!(o.seed, Some(9));
        assert_eq!(o.p, Some(30));
        assert_eq!(o.kernel.as_deref(), Some("sign"));
        assert_eq!(o.p_list, Some(vec![10, 20]));
    }

    #[test]
    fn pairs_round_trip_through_config() {
        let cli = parse_args(["ks", "density", "--a", "-0.5", "--nu", "1", "--gamma", "2", "--sizes", "1,2"]).unwrap();
        let pairs = config_pairs("density", cli.command.opts());
        let text: String = pairs.iter().map(|(k, v)| format!("# {k}={v}\n")).collect();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c");
        std::fs::write(&path, text).unwrap();
        let again = parse_args(["ks", "density", "--config", path.to_str().unwrap()]).unwrap();
        assert_eq!(config_pairs("density", again.command.opts()), pairs);
    }

    #[test]
    fn usage_errors_exit_two() {
        assert_eq!(run(["ks", "density", "--bogus"]), EXIT_USAGE);
        assert_eq!(run(["ks"]), EXIT_USAGE);
    }
}
