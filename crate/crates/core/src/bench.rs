//! Monte Carlo harness: error quantiles per estimator, an empirical check that
//! the true mean defeats every far-away point, and sample-size sweeps.
//!
//! Trial `t` draws everything from `Stream::substream(seed, t)`, so reports are
//! identical for any worker count.

use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::make_partition;
use crate::distributions::{moments, sample_with, DistributionSpec, MomentSummary};
use crate::error::{invalid, Result};
use crate::estimators::{estimate, radius_bound, ConstantsProfile, EstimatorConfig, KChoice, KRule, Method, RadiusBound};
use crate::linalg::dist;
use crate::rng::Stream;
use crate::tournament::defeats_blockform;

pub const SCHEMA_VERSION: u32 = 1;

/// Quantile levels always reported; `1 − δ` is added per run.
pub const BASE_LEVELS: [f64; 3] = [0.5, 0.9, 0.99];

/// Settings shared by all experiments.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub estimator: EstimatorConfig,
    pub trials: usize,
    /// Master seed; trial `t` uses substream `t`.
    pub seed: u64,
    /// Worker threads; 0 lets the pool decide.
    pub threads: usize,
    /// Shuffle each trial's samples before partitioning.
    pub shuffle: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            estimator: EstimatorConfig::default(),
            trials: 100,
            seed: 0,
            threads: 0,
            shuffle: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialResult {
    pub trial_index: usize,
    /// `‖μ̂ − μ‖` per method, in the order requested.
    pub errors: Vec<(Method, f64)>,
    pub k: KChoice,
    pub elapsed: Vec<Duration>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantilePoint {
    pub level: f64,
    pub error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub method: Method,
    pub mean_error: f64,
    pub quantiles: Vec<QuantilePoint>,
}

impl MethodSummary {
    pub fn quantile(&self, level: f64) -> Option<f64> {
        self.quantiles
            .iter()
            .find(|q| (q.level - level).abs() < 1e-12)
            .map(|q| q.error)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadiusPair {
    pub paper: RadiusBound,
    pub practical: RadiusBound,
}

/// Whether the LM `(1−δ)`-quantile stayed within twice the paper-constant radius.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PaperBoundCheck {
    /// True only when the paper k-rule was used and did not need clamping.
    pub applicable: bool,
    pub two_r: f64,
    pub lm_quantile: f64,
    pub satisfied: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorQuantileReport {
    pub schema_version: u32,
    pub kind: String,
    pub distribution: DistributionSpec,
    pub n: usize,
    pub d: usize,
    pub n_trials: usize,
    pub seed: u64,
    pub delta: f64,
    pub k_rule: String,
    pub odd_k: bool,
    pub k: usize,
    pub k_requested: usize,
    pub k_clamped: bool,
    pub trace: f64,
    pub lambda_max: f64,
    pub radius: RadiusPair,
    pub methods: Vec<MethodSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub paper_bound_check: Option<PaperBoundCheck>,
    pub warnings: Vec<String>,
}

impl ErrorQuantileReport {
    pub fn method(&self, method: Method) -> Option<&MethodSummary> {
        self.methods.iter().find(|m| m.method == method)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub const CSV_HEADER: &'static str = "n,method,level,error";

    fn csv_rows(&self, out: &mut String) {
        for m in &self.methods {
            for q in &m.quantiles {
                out.push_str(&format!("{},{},{},{}\n", self.n, m.method, q.level, q.error));
            }
        }
    }

    /// One row per method and quantile level.
    pub fn to_csv(&self) -> String {
        let mut out = format!("{}\n", Self::CSV_HEADER);
        self.csv_rows(&mut out);
        out
    }
}

/// Fraction of trials in which the true mean defeated every probe, per radius.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeometryPoint {
    pub multiplier: f64,
    pub radius: f64,
    pub fraction_all_defeated: f64,
    /// Average share of probes defeated, over all trials.
    pub mean_probe_defeat_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeometryReport {
    pub schema_version: u32,
    pub kind: String,
    pub distribution: DistributionSpec,
    pub n: usize,
    pub n_trials: usize,
    pub seed: u64,
    pub delta: f64,
    pub k: usize,
    pub k_clamped: bool,
    /// Practical-profile radius from the true moments.
    pub r_hat: f64,
    pub probes_per_trial: usize,
    pub points: Vec<GeometryPoint>,
    pub warnings: Vec<String>,
}

impl GeometryReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("multiplier,radius,fraction_all_defeated,mean_probe_defeat_rate\n");
        for p in &self.points {
            out.push_str(&format!(
                "{},{},{},{}\n",
                p.multiplier, p.radius, p.fraction_all_defeated, p.mean_probe_defeat_rate
            ));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateSweepReport {
    pub schema_version: u32,
    pub kind: String,
    pub reports: Vec<ErrorQuantileReport>,
}

impl RateSweepReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn to_csv(&self) -> String {
        let mut out = format!("{}\n", ErrorQuantileReport::CSV_HEADER);
        for r in &self.reports {
            r.csv_rows(&mut out);
        }
        out
    }
}

/// Lower empirical quantile: the order statistic of rank `ceil(level·T)`.
pub fn lower_quantile(sorted: &[f64], level: f64) -> f64 {
    let t = sorted.len();
    let rank = ((level * t as f64) - 1e-9).ceil().max(1.0) as usize;
    sorted[rank.min(t) - 1]
}

fn quantile_levels(delta: f64) -> Vec<f64> {
    let mut levels = BASE_LEVELS.to_vec();
    let extra = 1.0 - delta;
    if levels.iter().all(|l| (l - extra).abs() > 1e-12) {
        levels.push(extra);
    }
    levels.sort_by(f64::total_cmp);
    levels
}

fn run_parallel<T, F>(threads: usize, trials: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync + Send,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| invalid(format!("cannot build worker pool: {e}")))?;
    pool.install(|| (0..trials).into_par_iter().map(&f).collect())
}

fn k_warning(k: &KChoice, n: usize) -> Option<String> {
    k.clamped.then(|| {
        format!(
            "k-rule requested k={} but N={n}; clamped to k={}",
            k.requested, k.k
        )
    })
}

fn radius_pair(m: &MomentSummary, n: usize, delta: f64) -> Result<RadiusPair> {
    Ok(RadiusPair {
        paper: radius_bound(m.trace, m.lambda_max, n, delta, ConstantsProfile::Paper)?,
        practical: radius_bound(m.trace, m.lambda_max, n, delta, ConstantsProfile::Practical)?,
    })
}

fn trial_samples(
    spec: &DistributionSpec,
    n: usize,
    trial: &Stream,
    shuffle: bool,
) -> Result<crate::data::SampleSet> {
    let mut rng = trial.split(0);
    let samples = sample_with(spec, n, &mut rng)?;
    if shuffle {
        let mut order: Vec<usize> = (0..n).collect();
        rng.shuffle(&mut order);
        return Ok(samples.permuted(&order));
    }
    Ok(samples)
}

/// Runs every trial and returns the raw per-trial results in trial order.
pub fn run_trials(
    spec: &DistributionSpec,
    n: usize,
    methods: &[Method],
    config: &ExperimentConfig,
) -> Result<Vec<TrialResult>> {
    spec.validate()?;
    config.estimator.validate()?;
    if config.trials < 1 {
        return Err(invalid("trials must be at least 1"));
    }
    if methods.is_empty() {
        return Err(invalid("at least one method is required"));
    }
    let k = config.estimator.resolve_k(n)?;
    run_parallel(config.threads, config.trials, |t| {
        let trial = Stream::substream(config.seed, t as u64);
        let samples = trial_samples(spec, n, &trial, config.shuffle)?;
        let mut errors = Vec::with_capacity(methods.len());
        let mut elapsed = Vec::with_capacity(methods.len());
        for (i, &method) in methods.iter().enumerate() {
            let est_config = EstimatorConfig {
                seed: trial.split(1 + i as u64).key(),
                ..config.estimator
            };
            let start = Instant::now();
            let est = estimate(method, &samples, &est_config)?;
            elapsed.push(start.elapsed());
            errors.push((method, dist(&est.point, &spec.mean)));
        }
        Ok(TrialResult {
            trial_index: t,
            errors,
            k,
            elapsed,
        })
    })
}

/// Error quantiles of each method over `config.trials` independent samples of size `n`.
pub fn run_error_experiment(
    spec: &DistributionSpec,
    n: usize,
    methods: &[Method],
    config: &ExperimentConfig,
) -> Result<ErrorQuantileReport> {
    let trials = run_trials(spec, n, methods, config)?;
    let m = moments(spec)?;
    let delta = config.estimator.delta;
    let k = config.estimator.resolve_k(n)?;
    let radius = radius_pair(&m, n, delta)?;
    let levels = quantile_levels(delta);

    let summaries: Vec<MethodSummary> = methods
        .iter()
        .enumerate()
        .map(|(i, &method)| {
            let mut errs: Vec<f64> = trials.iter().map(|t| t.errors[i].1).collect();
            let mean_error = errs.iter().sum::<f64>() / errs.len() as f64;
            errs.sort_by(f64::total_cmp);
            MethodSummary {
                method,
                mean_error,
                quantiles: levels
                    .iter()
                    .map(|&level| QuantilePoint {
                        level,
                        error: lower_quantile(&errs, level),
                    })
                    .collect(),
            }
        })
        .collect();

    let mut warnings: Vec<String> = k_warning(&k, n).into_iter().collect();
    let paper_bound_check = summaries.iter().find(|s| s.method == Method::Lm).map(|lm| {
        let two_r = 2.0 * radius.paper.r;
        let lm_quantile = lm.quantile(1.0 - delta).unwrap_or(f64::NAN);
        let applicable = config.estimator.k_rule == KRule::Paper && !k.clamped;
        let satisfied = lm_quantile <= two_r;
        if applicable && !satisfied {
            warnings.push(format!(
                "LM (1-delta)-quantile {lm_quantile} exceeds the paper bound 2r = {two_r}"
            ));
        }
        PaperBoundCheck {
            applicable,
            two_r,
            lm_quantile,
            satisfied,
        }
    });

    Ok(ErrorQuantileReport {
        schema_version: SCHEMA_VERSION,
        kind: "error_quantiles".into(),
        distribution: spec.clone(),
        n,
        d: spec.dim,
        n_trials: config.trials,
        seed: config.seed,
        delta,
        k_rule: config.estimator.k_rule.to_string(),
        odd_k: config.estimator.odd_k,
        k: k.k,
        k_requested: k.requested,
        k_clamped: k.clamped,
        trace: m.trace,
        lambda_max: m.lambda_max,
        radius,
        methods: summaries,
        paper_bound_check,
        warnings,
    })
}

/// Probes whether the true mean defeats points at `c·r̂` for each multiplier `c`.
///
/// Each trial tests `probes` uniformly random directions plus the `2d` axis
/// directions; the same directions are reused for every multiplier.
pub fn verify_geometry(
    spec: &DistributionSpec,
    n: usize,
    multipliers: &[f64],
    probes: usize,
    config: &ExperimentConfig,
) -> Result<GeometryReport> {
    spec.validate()?;
    config.estimator.validate()?;
    if probes < 1 {
        return Err(invalid("probes must be at least 1"));
    }
    if config.trials < 1 {
        return Err(invalid("trials must be at least 1"));
    }
    if multipliers.is_empty() || multipliers.iter().any(|&c| !(c > 0.0) || !c.is_finite()) {
        return Err(invalid("radius multipliers must be positive"));
    }
    let delta = config.estimator.delta;
    let k = config.estimator.resolve_k(n)?;
    let m = moments(spec)?;
    let r_hat = radius_bound(m.trace, m.lambda_max, n, delta, ConstantsProfile::Practical)?.r;
    let d = spec.dim;
    let mu = &spec.mean;

    // Per trial, per multiplier: (all defeated, number defeated).
    let per_trial = run_parallel(config.threads, config.trials, |t| {
        let trial = Stream::substream(config.seed, t as u64);
        let samples = trial_samples(spec, n, &trial, config.shuffle)?;
        let partition = make_partition(&samples, k.k)?;
        let mut dir_rng = trial.split(1);
        let mut directions: Vec<Vec<f64>> = (0..probes).map(|_| dir_rng.unit_vector(d)).collect();
        for i in 0..d {
            for sign in [1.0, -1.0] {
                let mut e = vec![0.0; d];
                e[i] = sign;
                directions.push(e);
            }
        }
        multipliers
            .iter()
            .map(|&c| {
                let radius = c * r_hat;
                let mut defeated = 0usize;
                for u in &directions {
                    let a: Vec<f64> = mu.iter().zip(u).map(|(m, x)| m + radius * x).collect();
                    if defeats_blockform(mu, &a, &partition)?.a_defeats_b() {
                        defeated += 1;
                    }
                }
                Ok((defeated == directions.len(), defeated))
            })
            .collect::<Result<Vec<_>>>()
    })?;

    let total_probes = probes + 2 * d;
    let trials = config.trials as f64;
    let points = multipliers
        .iter()
        .enumerate()
        .map(|(j, &c)| {
            let all = per_trial.iter().filter(|r| r[j].0).count() as f64;
            let rate = per_trial.iter().map(|r| r[j].1 as f64).sum::<f64>() / (trials * total_probes as f64);
            GeometryPoint {
                multiplier: c,
                radius: c * r_hat,
                fraction_all_defeated: all / trials,
                mean_probe_defeat_rate: rate,
            }
        })
        .collect();

    Ok(GeometryReport {
        schema_version: SCHEMA_VERSION,
        kind: "geometry".into(),
        distribution: spec.clone(),
        n,
        n_trials: config.trials,
        seed: config.seed,
        delta,
        k: k.k,
        k_clamped: k.clamped,
        r_hat,
        probes_per_trial: total_probes,
        points,
        warnings: k_warning(&k, n).into_iter().collect(),
    })
}

/// One error experiment per sample size; `n_grid` must be strictly ascending.
pub fn rate_sweep(
    spec: &DistributionSpec,
    n_grid: &[usize],
    methods: &[Method],
    config: &ExperimentConfig,
) -> Result<RateSweepReport> {
    if n_grid.is_empty() {
        return Err(invalid("sample-size grid is empty"));
    }
    if n_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(invalid("sample-size grid must be strictly ascending"));
    }
    let reports = n_grid
        .iter()
        .map(|&n| run_error_experiment(spec, n, methods, config))
        .collect::<Result<Vec<_>>>()?;
    Ok(RateSweepReport {
        schema_version: SCHEMA_VERSION,
        kind: "rate_sweep".into(),
        reports,
    })
}
