use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use chainrisk::bounds::{erm_bound, BoundReport, ConditionConstants};
use chainrisk::covering::{entropy_ball, euclidean, greedy_cover};
use chainrisk::harness::{
    dominance_check, rate_fit_from_records, read_results_csv, run_experiment_with_workers, write_results_csv,
    write_summary_json, ExperimentConfig,
};
use chainrisk::orlicz::{orlicz_norm_empirical, orlicz_norm_scalar, DEFAULT_TOL};
use chainrisk::presets;
use chainrisk::rng::stream;
use chainrisk::verify::{run_verify, uniform_ball_points, VerifyConfig};
use chainrisk::Error;
use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::Rng;
use rand_distr::{Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

#[derive(Parser, Debug)]
#[command(name = "chainrisk", version, about = "Excess-risk bounds for least squares and Monte-Carlo checks")]
struct Cli {
    /// Print progress to stderr; repeat for more detail.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Evaluate a bound and print the report as JSON.
    Bound(BoundArgs),
    /// Run a Monte-Carlo sweep and check the bound against it.
    Simulate(SimulateArgs),
    /// Run the validator suite.
    Verify(VerifyArgs),
    /// Refit the log-log rate from a results CSV.
    Rates(RatesArgs),
    /// Estimate an Orlicz norm from samples.
    Orlicz(OrliczArgs),
    /// Greedy internal cover of sampled points.
    Cover(CoverArgs),
}

#[derive(Args, Debug)]
struct Source {
    /// JSON config file.
    #[arg(long, value_name = "PATH", conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Built-in configuration: constrained-gaussian, ridge-dn, ridge-sqrt, mbg-skew.
    #[arg(long, value_name = "NAME")]
    preset: Option<String>,
}

#[derive(Args, Debug)]
struct BoundArgs {
    #[command(flatten)]
    source: Source,
    /// Sample size; defaults to every point of the config's grid.
    #[arg(long)]
    n: Option<usize>,
    /// Confidence parameter override.
    #[arg(long)]
    gamma: Option<f64>,
    /// Write the JSON here instead of stdout.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[command(flatten)]
    source: Source,
    /// Master seed override.
    #[arg(long)]
    seed: Option<u64>,
    /// Replace the sample-size grid with a single value.
    #[arg(long)]
    n: Option<usize>,
    /// Confidence parameter override.
    #[arg(long)]
    gamma: Option<f64>,
    /// Trials per sample size.
    #[arg(long)]
    trials: Option<usize>,
    /// Worker threads; results do not depend on this.
    #[arg(long, env = "CHAINRISK_WORKERS")]
    workers: Option<usize>,
    /// Directory for results.csv and summary.json.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    /// JSON file with verify settings.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Random seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Monte-Carlo repetitions per validator.
    #[arg(long)]
    reps: Option<usize>,
    /// Confidence parameter override.
    #[arg(long)]
    gamma: Option<f64>,
    /// Write the JSON summary here instead of stdout.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct RatesArgs {
    /// Results CSV written by `simulate`.
    #[arg(value_name = "RESULTS")]
    results: PathBuf,
    /// Write the JSON here instead of stdout.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum Dist {
    Gaussian,
    Laplace,
    Uniform,
}

#[derive(Args, Debug)]
struct OrliczArgs {
    /// Sampling distribution, ignored with --input.
    #[arg(long, value_enum, default_value = "gaussian")]
    dist: Dist,
    /// Orlicz exponent.
    #[arg(long, default_value_t = 2.0)]
    q: f64,
    /// Number of samples.
    #[arg(long, default_value_t = 100_000)]
    n: usize,
    /// Random seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// CSV of sample vectors, one per row, no header.
    #[arg(long, value_name = "PATH")]
    input: Option<PathBuf>,
    /// Write the JSON here instead of stdout.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct CoverArgs {
    /// Sample uniform points from the unit ball of this dimension.
    #[arg(long, value_name = "D", required_unless_present = "input")]
    ball: Option<usize>,
    /// Cover radius.
    #[arg(long)]
    eps: f64,
    /// Ball radius.
    #[arg(long, default_value_t = 1.0)]
    radius: f64,
    /// Number of sampled points.
    #[arg(long, default_value_t = 4000)]
    points: usize,
    /// Random seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// CSV of points, one per row, no header.
    #[arg(long, value_name = "PATH", conflicts_with = "ball")]
    input: Option<PathBuf>,
    /// Write the JSON here instead of stdout.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

/// Outcome of a subcommand that ran to completion.
enum Status {
    Ok,
    CheckFailed,
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> chainrisk::Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

fn emit<T: Serialize>(value: &T, out: Option<&Path>) -> chainrisk::Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    match out {
        Some(p) => fs::write(p, text + "\n")?,
        None => {
            let mut stdout = std::io::stdout().lock();
            match writeln!(stdout, "{text}") {
                Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => {}
                other => other?,
            }
        }
    }
    Ok(())
}

/// Raw chaining constants, as opposed to an experiment config.
#[derive(Deserialize)]
struct GenericBound {
    constants: ConditionConstants,
    n: usize,
}

fn load_experiment(source: &Source) -> chainrisk::Result<ExperimentConfig> {
    match (&source.config, &source.preset) {
        (Some(path), _) => read_json(path),
        (None, Some(name)) => presets::by_name(name),
        (None, None) => Err(Error::Config("pass --config PATH or --preset NAME".into())),
    }
}

fn cmd_bound(a: &BoundArgs) -> chainrisk::Result<Status> {
    if let Some(path) = &a.source.config {
        let raw: serde_json::Value = read_json(path)?;
        if raw.get("constants").is_some() {
            let GenericBound { constants, n } =
                serde_json::from_value(raw).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
            let mut c = constants;
            if let Some(g) = a.gamma {
                c.gamma = g;
            }
            emit(&erm_bound(&c, a.n.unwrap_or(n))?, a.out.as_deref())?;
            return Ok(Status::Ok);
        }
    }
    let mut cfg = load_experiment(&a.source)?;
    if let Some(g) = a.gamma {
        cfg.gamma = g;
    }
    let report = |n: usize| -> chainrisk::Result<BoundReport> {
        cfg.bound_at(n)?.ok_or_else(|| Error::Config("config has no bound".into()))
    };
    match a.n {
        Some(n) => emit(&report(n)?, a.out.as_deref())?,
        None => {
            let all: Vec<BoundReport> = cfg.n_grid.iter().map(|&n| report(n)).collect::<chainrisk::Result<_>>()?;
            emit(&all, a.out.as_deref())?
        }
    }
    Ok(Status::Ok)
}

fn cmd_simulate(a: &SimulateArgs, verbose: u8) -> chainrisk::Result<Status> {
    let mut cfg = load_experiment(&a.source)?;
    if let Some(s) = a.seed {
        cfg.master_seed = s;
    }
    if let Some(n) = a.n {
        cfg.n_grid = vec![n];
    }
    if let Some(g) = a.gamma {
        cfg.gamma = g;
    }
    if let Some(t) = a.trials {
        cfg.trials = t;
    }
    if verbose > 0 {
        eprintln!("running {} trials at n = {:?}", cfg.trials, cfg.n_grid);
    }
    let result = run_experiment_with_workers(&cfg, a.workers)?;
    if let Some(dir) = &a.out {
        fs::create_dir_all(dir)?;
        write_results_csv(&result.trials, dir.join("results.csv"))?;
        write_summary_json(&result, dir.join("summary.json"))?;
    }
    emit(&result, None)?;
    let dominated = match dominance_check(&result) {
        Ok(report) => {
            for w in &report.warnings {
                eprintln!("warning: {w}");
            }
            if verbose > 0 {
                eprintln!("{}", report.note);
            }
            report.passed
        }
        Err(e) => {
            if verbose > 0 {
                eprintln!("dominance check skipped: {e}");
            }
            true
        }
    };
    Ok(if dominated { Status::Ok } else { Status::CheckFailed })
}

fn cmd_verify(a: &VerifyArgs) -> chainrisk::Result<Status> {
    let mut cfg: VerifyConfig = match &a.config {
        Some(p) => read_json(p)?,
        None => VerifyConfig::default(),
    };
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    if let Some(r) = a.reps {
        cfg.reps = r;
    }
    if let Some(g) = a.gamma {
        cfg.gamma = g;
    }
    let summary = run_verify(&cfg)?;
    for c in &summary.checks {
        eprintln!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    emit(&summary, a.out.as_deref())?;
    Ok(if summary.passed { Status::Ok } else { Status::CheckFailed })
}

fn cmd_rates(a: &RatesArgs) -> chainrisk::Result<Status> {
    let records = read_results_csv(&a.results)?;
    emit(&rate_fit_from_records(&records)?, a.out.as_deref())?;
    Ok(Status::Ok)
}

fn read_rows(path: &Path) -> chainrisk::Result<Vec<Vec<f64>>> {
    let mut reader = csv::ReaderBuilder::new().has_headers(false).from_path(path)?;
    let mut rows = Vec::new();
    for rec in reader.records() {
        let rec = rec?;
        let row = rec
            .iter()
            .map(|s| s.trim().parse::<f64>().map_err(|_| Error::Input(format!("not a number: {s:?}"))))
            .collect::<chainrisk::Result<Vec<f64>>>()?;
        rows.push(row);
    }
    Ok(rows)
}

fn cmd_orlicz(a: &OrliczArgs) -> chainrisk::Result<Status> {
    let estimate = match &a.input {
        Some(path) => orlicz_norm_empirical(&read_rows(path)?, a.q, DEFAULT_TOL)?,
        None => {
            if a.n == 0 {
                return Err(Error::Config("--n must be positive".into()));
            }
            let mut rng = stream(a.seed, &[]);
            let xs: Vec<f64> = (0..a.n)
                .map(|_| match a.dist {
                    Dist::Gaussian => rng.sample(StandardNormal),
                    Dist::Laplace => {
                        let e: f64 = rng.sample(Exp1);
                        if rng.random::<bool>() { e } else { -e }
                    }
                    Dist::Uniform => 2.0 * rng.random::<f64>() - 1.0,
                })
                .collect();
            orlicz_norm_scalar(&xs, a.q, DEFAULT_TOL)?
        }
    };
    emit(&estimate, a.out.as_deref())?;
    Ok(Status::Ok)
}

#[derive(Serialize)]
struct CoverReport {
    points: usize,
    eps: f64,
    size: usize,
    ln_size: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    entropy_ball: Option<f64>,
    centers: Vec<usize>,
}

fn cmd_cover(a: &CoverArgs) -> chainrisk::Result<Status> {
    if a.eps.is_nan() || a.eps <= 0.0 {
        return Err(Error::Config("--eps must be positive".into()));
    }
    let (points, reference) = match (&a.input, a.ball) {
        (Some(path), _) => (read_rows(path)?, None),
        (None, Some(d)) => {
            if d == 0 || a.points == 0 {
                return Err(Error::Config("--ball and --points must be positive".into()));
            }
            let pts = uniform_ball_points(d, a.points, &mut stream(a.seed, &[]));
            let pts = pts.into_iter().map(|p| p.into_iter().map(|v| v * a.radius).collect()).collect();
            (pts, Some(entropy_ball(a.eps, a.radius, d)?))
        }
        (None, None) => return Err(Error::Config("pass --ball D or --input PATH".into())),
    };
    if points.is_empty() {
        return Err(Error::Input("no points".into()));
    }
    let centers = greedy_cover(&points, a.eps, euclidean);
    let report = CoverReport {
        points: points.len(),
        eps: a.eps,
        size: centers.len(),
        ln_size: (centers.len() as f64).ln(),
        entropy_ball: reference,
        centers,
    };
    emit(&report, a.out.as_deref())?;
    Ok(Status::Ok)
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::Input(_) | Error::Domain(_) | Error::Io(_) | Error::Json(_) | Error::Csv(_) => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Bound(a) => cmd_bound(a),
        Command::Simulate(a) => cmd_simulate(a, cli.verbose),
        Command::Verify(a) => cmd_verify(a),
        Command::Rates(a) => cmd_rates(a),
        Command::Orlicz(a) => cmd_orlicz(a),
        Command::Cover(a) => cmd_cover(a),
    };
    match outcome {
        Ok(Status::Ok) => ExitCode::SUCCESS,
        Ok(Status::CheckFailed) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
