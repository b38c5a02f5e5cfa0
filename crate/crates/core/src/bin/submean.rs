//! Command-line front end.
//!
//! Exit codes: 0 success, 2 data error, 64 usage error.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use submean::bench::{self, ExperimentConfig};
use submean::distributions::{DistributionSpec, Family};
use submean::estimators::{estimate, EstimatorConfig, KRule, Method};
use submean::io::{parse_samples, BenchFile, DataFormat};
use submean::rng::Stream;
use submean::Error;

const EXIT_DATA: u8 = 2;
const EXIT_USAGE: u8 = 64;

#[derive(Debug, Parser)]
#[command(name = "submean", version, about = "Robust multivariate mean estimation and Monte Carlo checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Estimate the mean of a CSV or JSONL sample file.
    Estimate(EstimateArgs),
    /// Error quantiles of several estimators over Monte Carlo trials.
    Bench(BenchArgs),
    /// Check how often the true mean defeats every probe at multiples of the radius.
    VerifyGeometry(GeometryArgs),
    /// Error quantiles across a grid of sample sizes.
    RateSweep(SweepArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum InputFormat {
    Csv,
    Jsonl,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ReportFormat {
    Csv,
    Json,
    Jsonl,
}

#[derive(Debug, Args)]
struct EstimatorArgs {
    /// Confidence parameter in (0, 1).
    #[arg(long)]
    delta: Option<f64>,
    /// paper | practical | fixed:<k>
    #[arg(long)]
    k_rule: Option<String>,
    /// Keep an even k instead of rounding it up to the next odd value.
    #[arg(long)]
    no_odd_k: bool,
    #[arg(long)]
    seed: Option<u64>,
    /// Shuffle samples before partitioning into blocks.
    #[arg(long)]
    shuffle: bool,
}

#[derive(Debug, Args)]
struct EstimateArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value = "lm")]
    method: String,
    /// Input format; guessed from the extension when omitted.
    #[arg(long, value_enum)]
    format: Option<InputFormat>,
    #[command(flatten)]
    estimator: EstimatorArgs,
}

#[derive(Debug, Args)]
struct ExperimentArgs {
    /// TOML file with [distribution] and [experiment] tables.
    #[arg(long)]
    config: Option<PathBuf>,
    /// gaussian | point-mass | student-t:<nu> | pareto:<alpha> | lognormal:<sigma> | mixture:<eps>:<scale>
    #[arg(long)]
    dist: Option<String>,
    /// Dimension for --dist (zero mean, identity scale).
    #[arg(long)]
    d: Option<usize>,
    #[arg(long)]
    trials: Option<usize>,
    /// Comma-separated estimators; repeatable.
    #[arg(long = "method", value_delimiter = ',')]
    methods: Vec<String>,
    #[arg(long, value_enum, default_value = "json")]
    format: ReportFormat,
    /// Report path; stdout when omitted.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Worker threads (0 = all cores).
    #[arg(long)]
    threads: Option<usize>,
    #[command(flatten)]
    estimator: EstimatorArgs,
}

#[derive(Debug, Args)]
struct BenchArgs {
    #[arg(long)]
    n: Option<usize>,
    #[command(flatten)]
    common: ExperimentArgs,
}

#[derive(Debug, Args)]
struct GeometryArgs {
    #[arg(long)]
    n: Option<usize>,
    /// Comma-separated multiples of the practical radius.
    #[arg(long, value_delimiter = ',')]
    multipliers: Vec<f64>,
    /// Random probe directions per trial (the 2d axis points are always added).
    #[arg(long)]
    probes: Option<usize>,
    #[command(flatten)]
    common: ExperimentArgs,
}

#[derive(Debug, Args)]
struct SweepArgs {
    /// Comma-separated ascending sample sizes.
    #[arg(long, value_delimiter = ',')]
    n_grid: Vec<usize>,
    #[command(flatten)]
    common: ExperimentArgs,
}

/// A failure and the exit code it maps to.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }

    fn data(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_DATA,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidParameter(_) => Failure::usage(e.to_string()),
            _ => Failure::data(e.to_string()),
        }
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match cli.command {
        Command::Estimate(args) => cmd_estimate(args),
        Command::Bench(args) => cmd_bench(args),
        Command::VerifyGeometry(args) => cmd_verify_geometry(args),
        Command::RateSweep(args) => cmd_rate_sweep(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn estimator_config(args: &EstimatorArgs, file: &BenchFile) -> CliResult<EstimatorConfig> {
    let defaults = EstimatorConfig::default();
    let k_rule = match args.k_rule.as_deref().or(file.experiment.k_rule.as_deref()) {
        Some(s) => s.parse::<KRule>()?,
        None => defaults.k_rule,
    };
    let config = EstimatorConfig {
        delta: args.delta.or(file.experiment.delta).unwrap_or(defaults.delta),
        k_rule,
        odd_k: !args.no_odd_k && file.experiment.odd_k.unwrap_or(true),
        seed: args.seed.or(file.experiment.seed).unwrap_or(0),
        ..defaults
    };
    config.validate()?;
    Ok(config)
}

fn cmd_estimate(args: EstimateArgs) -> CliResult<()> {
    let method: Method = args.method.parse()?;
    let config = estimator_config(&args.estimator, &BenchFile::default())?;
    let text = fs::read_to_string(&args.input)
        .map_err(|e| Failure::data(format!("cannot read {}: {e}", args.input.display())))?;
    let format = match args.format {
        Some(InputFormat::Csv) => DataFormat::Csv,
        Some(InputFormat::Jsonl) => DataFormat::Jsonl,
        None => DataFormat::from_path(&args.input),
    };
    let mut samples = parse_samples(&text, format)
        .map_err(|e| Failure::data(format!("{}: {e}", args.input.display())))?;
    if args.estimator.shuffle {
        let mut order: Vec<usize> = (0..samples.len()).collect();
        Stream::new(config.seed).split(0).shuffle(&mut order);
        samples = samples.permuted(&order);
    }

    let start = Instant::now();
    let est = estimate(method, &samples, &config)?;
    let elapsed_ms = start.elapsed().as_secs_f64() * 1e3;
    if est.k.clamped {
        eprintln!(
            "WARN: k-rule requested k={} but N={}; using k={}",
            est.k.requested,
            samples.len(),
            est.k.k
        );
    }
    let out = json!({
        "schema_version": bench::SCHEMA_VERSION,
        "estimate": est.point,
        "method": method.name(),
        "k": est.k.k,
        "n": samples.len(),
        "d": samples.dim(),
        "seed": config.seed,
        "elapsed_ms": elapsed_ms,
    });
    println!("{out}");
    Ok(())
}

fn parse_dist(text: &str, d: usize) -> CliResult<DistributionSpec> {
    let parts: Vec<&str> = text.split(':').collect();
    let num = |i: usize| -> CliResult<f64> {
        parts
            .get(i)
            .and_then(|v| v.parse::<f64>().ok())
            .ok_or_else(|| Failure::usage(format!("--dist {text:?}: expected a number in position {i}")))
    };
    let family = match parts[0] {
        "point-mass" => return Ok(DistributionSpec::point_mass(vec![0.0; d])),
        "gaussian" => Family::Gaussian,
        "student-t" => Family::StudentT { nu: num(1)? },
        "pareto" => Family::ParetoMarginals { alpha: num(1)? },
        "lognormal" => Family::Lognormal { sigma: num(1)? },
        "mixture" => Family::GaussianWithOutlierMixture {
            epsilon: num(1)?,
            outlier_scale: num(2)?,
        },
        other => return Err(Failure::usage(format!("unknown distribution {other:?}"))),
    };
    let spec = DistributionSpec::standard(family, d);
    spec.validate()?;
    Ok(spec)
}

/// Everything a harness subcommand needs after merging flags over the config file.
struct Experiment {
    spec: DistributionSpec,
    methods: Vec<Method>,
    config: ExperimentConfig,
    file: BenchFile,
}

fn load_experiment(args: &ExperimentArgs) -> CliResult<Experiment> {
    let file = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| Failure::data(format!("cannot read {}: {e}", path.display())))?;
            BenchFile::parse(&text).map_err(|e| Failure::data(format!("{}: {e}", path.display())))?
        }
        None => BenchFile::default(),
    };
    let spec = match (&args.dist, &file.distribution) {
        (Some(dist), _) => parse_dist(dist, args.d.unwrap_or(1))?,
        (None, Some(spec)) => spec.clone(),
        (None, None) => return Err(Failure::usage("a distribution is required (--dist or --config)")),
    };
    if spec.dim == 0 {
        return Err(Failure::usage("--d must be at least 1"));
    }
    let method_names: Vec<String> = if !args.methods.is_empty() {
        args.methods.clone()
    } else if let Some(m) = &file.experiment.methods {
        m.clone()
    } else {
        let mut m = vec!["sample-mean", "geomedian-mom", "lm"];
        if spec.dim == 1 {
            m.insert(1, "mom");
        }
        m.into_iter().map(String::from).collect()
    };
    let methods = method_names
        .iter()
        .map(|m| m.parse::<Method>())
        .collect::<submean::Result<Vec<_>>>()?;
    let estimator = estimator_config(&args.estimator, &file)?;
    let config = ExperimentConfig {
        estimator,
        trials: args.trials.or(file.experiment.trials).unwrap_or(100),
        seed: estimator.seed,
        threads: args.threads.or(file.experiment.threads).unwrap_or(0),
        shuffle: args.estimator.shuffle || file.experiment.shuffle.unwrap_or(false),
    };
    if config.trials == 0 {
        return Err(Failure::usage("--trials must be at least 1"));
    }
    Ok(Experiment {
        spec,
        methods,
        config,
        file,
    })
}

fn write_report(args: &ExperimentArgs, json: String, csv: String) -> CliResult<()> {
    let body = match args.format {
        ReportFormat::Csv => csv,
        ReportFormat::Json => json + "\n",
        ReportFormat::Jsonl => {
            let value: serde_json::Value = serde_json::from_str(&json).expect("valid json");
            value.to_string() + "\n"
        }
    };
    match &args.output {
        Some(path) => write_file(path, &body),
        None => {
            print!("{body}");
            Ok(())
        }
    }
}

fn write_file(path: &Path, body: &str) -> CliResult<()> {
    fs::write(path, body).map_err(|e| Failure::data(format!("cannot write {}: {e}", path.display())))
}

/// Summary and warnings go to stdout when the report goes to a file.
fn note(args: &ExperimentArgs, line: &str) {
    if args.output.is_some() {
        println!("{line}");
    } else {
        eprintln!("{line}");
    }
}

fn require_n(n: Option<usize>, file: &BenchFile) -> CliResult<usize> {
    n.or(file.experiment.n)
        .filter(|&n| n >= 1)
        .ok_or_else(|| Failure::usage("--n is required and must be at least 1"))
}

fn cmd_bench(args: BenchArgs) -> CliResult<()> {
    let exp = load_experiment(&args.common)?;
    let n = require_n(args.n, &exp.file)?;
    let report = bench::run_error_experiment(&exp.spec, n, &exp.methods, &exp.config)?;
    for w in &report.warnings {
        note(&args.common, &format!("WARN: {w}"));
    }
    write_report(&args.common, report.to_json(), report.to_csv())?;
    let medians: Vec<String> = report
        .methods
        .iter()
        .map(|m| format!("{}={:.6}", m.method, m.quantile(0.5).unwrap_or(f64::NAN)))
        .collect();
    note(
        &args.common,
        &format!(
            "bench: n={} d={} k={} trials={} median errors: {}",
            report.n,
            report.d,
            report.k,
            report.n_trials,
            medians.join(" ")
        ),
    );
    Ok(())
}

fn cmd_verify_geometry(args: GeometryArgs) -> CliResult<()> {
    let exp = load_experiment(&args.common)?;
    let n = require_n(args.n, &exp.file)?;
    let multipliers = if !args.multipliers.is_empty() {
        args.multipliers.clone()
    } else {
        exp.file
            .experiment
            .multipliers
            .clone()
            .unwrap_or_else(|| vec![0.5, 1.0, 2.0, 4.0])
    };
    let probes = args.probes.or(exp.file.experiment.probes).unwrap_or(100);
    let report = bench::verify_geometry(&exp.spec, n, &multipliers, probes, &exp.config)?;
    for w in &report.warnings {
        note(&args.common, &format!("WARN: {w}"));
    }
    write_report(&args.common, report.to_json(), report.to_csv())?;
    let fractions: Vec<String> = report
        .points
        .iter()
        .map(|p| format!("{}x={}", p.multiplier, p.fraction_all_defeated))
        .collect();
    note(
        &args.common,
        &format!(
            "verify-geometry: n={} k={} r_hat={:.6} trials={} fraction all defeated: {}",
            report.n,
            report.k,
            report.r_hat,
            report.n_trials,
            fractions.join(" ")
        ),
    );
    Ok(())
}

fn cmd_rate_sweep(args: SweepArgs) -> CliResult<()> {
    let exp = load_experiment(&args.common)?;
    let grid = if !args.n_grid.is_empty() {
        args.n_grid.clone()
    } else {
        exp.file
            .experiment
            .n_grid
            .clone()
            .ok_or_else(|| Failure::usage("--n-grid is required"))?
    };
    let report = bench::rate_sweep(&exp.spec, &grid, &exp.methods, &exp.config)?;
    for w in report.reports.iter().flat_map(|r| &r.warnings) {
        note(&args.common, &format!("WARN: {w}"));
    }
    write_report(&args.common, report.to_json(), report.to_csv())?;
    let lm_medians: Vec<String> = report
        .reports
        .iter()
        .map(|r| {
            let m = r.method(Method::Lm).or_else(|| r.methods.first());
            format!("n={}:{:.6}", r.n, m.and_then(|m| m.quantile(0.5)).unwrap_or(f64::NAN))
        })
        .collect();
    note(
        &args.common,
        &format!("rate-sweep: median errors {}", lm_medians.join(" ")),
    );
    Ok(())
}
