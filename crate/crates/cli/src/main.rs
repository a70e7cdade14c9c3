//! `rgg`: calculators, integral checks and the Monte Carlo harness.

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use rgg_core::experiments::{self, ExperimentConfig};
use rgg_core::theory::{self, IntegralReport};
use rgg_core::{ConvexRegion, ProcessKind, TheoryParams};

#[derive(Parser, Debug)]
#[command(
    name = "rgg",
    version,
    about = "Critical radii of random geometric graphs in 3D convex regions"
)]
#[command(args_override_self = true)]
struct Cli {
    /// File of `flag=value` lines applied before the command-line flags.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve for ξ given the tail parameter c.
    Xi(XiArgs),
    /// Evaluate the theoretical radius r_n.
    Radius(RadiusArgs),
    /// Evaluate the ψ-integral or the boundary-layer integral.
    Integral(IntegralArgs),
    /// Run a Monte Carlo experiment and write CSV and summary JSON.
    Simulate(SimulateArgs),
    /// Recompute aggregates from a results CSV and check its invariants.
    Analyze(AnalyzeArgs),
}

#[derive(Args, Debug)]
struct XiArgs {
    #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u8).range(2..=3))]
    dim: u8,
    #[arg(long)]
    k: usize,
    #[arg(long, allow_hyphen_values = true)]
    c: f64,
    /// Boundary surface area (3D).
    #[arg(long)]
    area: Option<f64>,
    /// Boundary length (2D).
    #[arg(long)]
    perimeter: Option<f64>,
}

#[derive(Args, Debug)]
struct RadiusArgs {
    #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u8).range(2..=3))]
    dim: u8,
    /// Point count; scientific notation is accepted and truncated.
    #[arg(long, value_parser = parse_size)]
    n: f64,
    #[arg(long)]
    k: usize,
    #[arg(long, allow_hyphen_values = true)]
    xi: Option<f64>,
    /// Tail parameter; needs --area (3D) or --perimeter (2D, k ≥ 1).
    #[arg(long, allow_hyphen_values = true)]
    c: Option<f64>,
    #[arg(long)]
    area: Option<f64>,
    #[arg(long)]
    perimeter: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum EstimatorArg {
    /// Interior closed form plus boundary-layer quadrature.
    Layer,
    /// Plain Monte Carlo over the region.
    Mc,
    /// One-dimensional boundary-layer integral against its asymptote.
    #[value(name = "1d")]
    OneD,
}

#[derive(Args, Debug)]
struct IntegralArgs {
    #[arg(long, default_value = "cube")]
    region: String,
    #[arg(long, value_parser = parse_size)]
    n: f64,
    #[arg(long)]
    k: usize,
    #[arg(long, allow_hyphen_values = true, default_value_t = 0.0)]
    c: f64,
    #[arg(long, value_enum, default_value = "layer")]
    estimator: EstimatorArg,
    /// Monte Carlo sample count.
    #[arg(long, value_parser = parse_count, default_value = "1000000")]
    samples: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum ProcessArg {
    Binomial,
    Poisson,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[arg(long, default_value = "cube")]
    region: String,
    #[arg(long, value_parser = parse_count)]
    n: f64,
    #[arg(long)]
    k: usize,
    #[arg(long, allow_hyphen_values = true, default_value_t = 0.0)]
    c: f64,
    #[arg(long, value_enum, default_value = "binomial")]
    process: ProcessArg,
    #[arg(long, value_parser = parse_count)]
    trials: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Worker threads (0 = one per core).
    #[arg(long, env = "RGG_WORKERS", default_value_t = 0)]
    workers: usize,
    /// Results CSV; the summary goes to `<stem>.summary.json` beside it.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct AnalyzeArgs {
    /// Results CSV written by `simulate`.
    path: PathBuf,
}

/// Parses a nonnegative count that may be written in scientific notation,
/// truncating any fractional part.
fn parse_count(s: &str) -> std::result::Result<f64, String> {
    let v = parse_size(s)?;
    if v > 9.007_199_254_740_992e15 {
        return Err(format!("`{s}` exceeds the largest exact count 2^53"));
    }
    Ok(v)
}

/// Like [`parse_count`] but without the exact-integer limit, for the
/// calculators, which take `n` as a real number.
fn parse_size(s: &str) -> std::result::Result<f64, String> {
    let v: f64 = s
        .trim()
        .parse()
        .map_err(|_| format!("`{s}` is not a number"))?;
    if !(v.is_finite() && v >= 0.0) {
        return Err(format!("`{s}` is not a finite nonnegative count"));
    }
    Ok(v.trunc())
}

/// Formats `x` with 12 significant digits, switching to scientific notation
/// for very large or small magnitudes.
fn sig12(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{x:.11e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..12).contains(&exp) {
        let decimals = (11 - exp).max(0) as usize;
        trim_zeros(format!("{x:.decimals$}"))
    } else {
        format!("{}e{exp}", trim_zeros(mantissa.to_string()))
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

fn cmd_xi(a: &XiArgs) -> Result<()> {
    let xi = match a.dim {
        3 => {
            if a.k == 0 {
                bail!("k ≥ 1 required in 3D");
            }
            let area = a.area.context("--area is required for --dim 3")?;
            theory::solve_xi_3d(a.c, a.k, area)?
        }
        _ => {
            let l = a.perimeter.context("--perimeter is required for --dim 2")?;
            theory::solve_xi_2d(a.c, a.k, l)?
        }
    };
    println!("{}", sig12(xi));
    Ok(())
}

fn cmd_radius(a: &RadiusArgs) -> Result<()> {
    let r = match a.dim {
        3 => {
            if a.k == 0 {
                bail!("k ≥ 1 required in 3D");
            }
            let xi = match (a.xi, a.c) {
                (Some(xi), None) => xi,
                (None, Some(c)) => {
                    let area = a.area.context("--c needs --area in 3D")?;
                    theory::solve_xi_3d(c, a.k, area)?
                }
                _ => bail!("give exactly one of --xi and --c"),
            };
            theory::radius_3d(a.n, a.k, xi)?
        }
        _ => {
            let param = match (a.k, a.xi, a.c) {
                (0, None, Some(c)) => c,
                (0, _, _) => bail!("k = 0 in 2D takes --c (and no --xi)"),
                (_, Some(xi), None) => xi,
                (k, None, Some(c)) => {
                    let l = a.perimeter.context("--c needs --perimeter in 2D")?;
                    theory::solve_xi_2d(c, k, l)?
                }
                _ => bail!("give exactly one of --xi and --c"),
            };
            theory::radius_2d(a.n, a.k, param)?
        }
    };
    println!("{}", sig12(r));
    Ok(())
}

fn print_report(rep: &IntegralReport) {
    println!("estimator: {}", rep.estimator);
    println!("value: {}", sig12(rep.value));
    println!("error: {}", sig12(rep.error));
    println!("nodes: {}", rep.nodes);
}

fn cmd_integral(a: &IntegralArgs) -> Result<()> {
    let region = ConvexRegion::from_token(&a.region)?;
    let params = TheoryParams::for_region(&region, a.n, a.k, a.c)?;
    let target = (-a.c).exp();
    println!("region: {region}");
    println!("r_n: {}", sig12(params.r_n));
    println!("xi: {}", sig12(params.xi));
    let (rep, compare) = match a.estimator {
        EstimatorArg::Layer => (theory::psi_integral_over_region(&region, &params)?, target),
        EstimatorArg::Mc => (
            theory::psi_integral_monte_carlo(&region, &params, a.samples as usize, a.seed)?,
            target,
        ),
        EstimatorArg::OneD => {
            let rep = theory::boundary_layer_integral(a.n, a.k, params.xi)?;
            let asym = theory::boundary_layer_asymptote(a.k, params.xi);
            (rep, asym)
        }
    };
    print_report(&rep);
    if a.estimator == EstimatorArg::OneD {
        println!("asymptote: {}", sig12(compare));
        println!("ratio: {}", sig12(rep.value / compare));
        println!("area_times_value: {}", sig12(params.area * rep.value));
    } else {
        println!("target: {}", sig12(target));
        println!("abs_deviation: {}", sig12((rep.value - target).abs()));
    }
    println!("csv: region,n,k,c,estimator,value,error,nodes,reference");
    println!(
        "csv: {},{},{},{},{},{},{},{},{}",
        a.region, a.n, a.k, a.c, rep.estimator, rep.value, rep.error, rep.nodes, compare
    );
    Ok(())
}

fn cmd_simulate(a: &SimulateArgs) -> Result<()> {
    let config = ExperimentConfig {
        region: a.region.clone(),
        n: a.n as u64,
        k: a.k,
        c: a.c,
        process: match a.process {
            ProcessArg::Binomial => ProcessKind::Binomial,
            ProcessArg::Poisson => ProcessKind::Poisson,
        },
        trials: a.trials as u64,
        master_seed: a.seed,
        workers: a.workers,
        output: Some(a.out.clone()),
    };
    let result = experiments::run_experiment(&config)?;
    let summary_path = result.write(&a.out)?;
    let s = result.summary();
    println!(
        "trials={} r_n={} p_hat_delta={} (se {}) p_hat_kappa={} (se {}) equality_rate={} theory_limit={}",
        config.trials,
        sig12(s.r_n),
        sig12(s.p_hat_delta),
        sig12(s.se_delta),
        sig12(s.p_hat_kappa),
        sig12(s.se_kappa),
        sig12(s.equality_rate),
        sig12(s.theory_limit),
    );
    println!("wrote {} and {}", a.out.display(), summary_path.display());
    Ok(())
}

fn cmd_analyze(a: &AnalyzeArgs) -> Result<()> {
    let analysis = experiments::analyze(&a.path)?;
    let g = &analysis.aggregates;
    println!("trials: {}", g.trials);
    println!("p_hat_delta: {}", sig12(g.p_hat_delta));
    println!("p_hat_kappa: {}", sig12(g.p_hat_kappa));
    println!("se_delta: {}", sig12(g.se_delta));
    println!("se_kappa: {}", sig12(g.se_kappa));
    println!("equality_rate: {}", sig12(g.equality_rate));
    let mut problems = analysis.violations.len();
    for v in &analysis.violations {
        eprintln!(
            "violation at line {} (trial {}): {}",
            v.line, v.trial, v.reason
        );
    }
    let json = experiments::summary_path(&a.path);
    if json.exists() {
        problems += compare_summary(&json, g)?;
    }
    if problems > 0 {
        bail!("{problems} data error(s) in {}", a.path.display());
    }
    Ok(())
}

fn compare_summary(path: &Path, g: &experiments::Aggregates) -> Result<usize> {
    let s = experiments::read_summary_json(path)?;
    let pairs = [
        ("p_hat_delta", s.p_hat_delta, g.p_hat_delta),
        ("p_hat_kappa", s.p_hat_kappa, g.p_hat_kappa),
        ("se_delta", s.se_delta, g.se_delta),
        ("se_kappa", s.se_kappa, g.se_kappa),
        ("equality_rate", s.equality_rate, g.equality_rate),
    ];
    let mut bad = 0;
    for (name, stored, recomputed) in pairs {
        if stored != recomputed {
            eprintln!(
                "summary mismatch: {name} is {stored} in {} but {recomputed} from rows",
                path.display()
            );
            bad += 1;
        }
    }
    if s.config.trials != g.trials {
        eprintln!(
            "summary mismatch: {} trials declared, {} rows",
            s.config.trials, g.trials
        );
        bad += 1;
    }
    if bad == 0 {
        println!("summary: matches {}", path.display());
    }
    Ok(bad)
}

/// Splices `--flag value` pairs from a config file in front of the
/// explicit arguments, right after the subcommand, so explicit flags win.
fn expand_config(args: Vec<OsString>) -> Result<Vec<OsString>> {
    let mut rest = Vec::with_capacity(args.len());
    let mut config = None;
    let mut iter = args.into_iter();
    while let Some(arg) = iter.next() {
        let s = arg.to_string_lossy();
        if s == "--config" {
            config = Some(PathBuf::from(iter.next().context("--config needs a path")?));
        } else if let Some(p) = s.strip_prefix("--config=") {
            config = Some(PathBuf::from(p));
        } else {
            rest.push(arg);
        }
    }
    let Some(path) = config else {
        return Ok(rest);
    };
    let text = std::fs::read_to_string(&path)
        .with_context(|| format!("reading config {}", path.display()))?;
    let mut injected = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .with_context(|| format!("{}:{}: expected key=value", path.display(), i + 1))?;
        let key = key.trim();
        if key.is_empty() {
            bail!("{}:{}: empty key", path.display(), i + 1);
        }
        injected.push(OsString::from(format!("--{key}")));
        injected.push(OsString::from(value.trim()));
    }
    let names = ["xi", "radius", "integral", "simulate", "analyze"];
    let at = rest
        .iter()
        .position(|a| names.contains(&a.to_string_lossy().as_ref()))
        .map_or(rest.len(), |i| i + 1);
    rest.splice(at..at, injected);
    Ok(rest)
}

fn run() -> Result<()> {
    let args = expand_config(std::env::args_os().collect())?;
    let cli = Cli::parse_from(args);
    match &cli.command {
        Command::Xi(a) => cmd_xi(a),
        Command::Radius(a) => cmd_radius(a),
        Command::Integral(a) => cmd_integral(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Analyze(a) => cmd_analyze(a),
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
