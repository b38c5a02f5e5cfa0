//! Mean estimators behind a common entry point, block-count selection and the
//! theoretical error radius.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::data::{make_partition, SampleSet};
use crate::error::{invalid, Result};
use crate::linalg::dist;
use crate::tournament::{self, lower_median, DescentConfig};

/// How the number of blocks is derived from the confidence level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KRule {
    /// `ceil(360 ln(2/δ))`.
    Paper,
    /// `ceil(8 ln(1/δ))`.
    Practical,
    Fixed(usize),
}

impl fmt::Display for KRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KRule::Paper => f.write_str("paper"),
            KRule::Practical => f.write_str("practical"),
            KRule::Fixed(k) => write!(f, "fixed:{k}"),
        }
    }
}

impl FromStr for KRule {
    type Err = crate::error::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "paper" => Ok(KRule::Paper),
            "practical" => Ok(KRule::Practical),
            other => {
                let k = other
                    .strip_prefix("fixed:")
                    .and_then(|v| v.parse::<usize>().ok())
                    .filter(|&k| k >= 1)
                    .ok_or_else(|| invalid(format!("unknown k-rule {other:?}")))?;
                Ok(KRule::Fixed(k))
            }
        }
    }
}

/// A resolved block count and whether it had to be clamped to `N`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct KChoice {
    pub k: usize,
    /// Value of the rule before clamping (after odd rounding).
    pub requested: usize,
    pub clamped: bool,
}

fn check_delta(delta: f64) -> Result<()> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(invalid(format!("delta must lie in (0, 1), got {delta}")));
    }
    Ok(())
}

/// Block count before clamping to the sample size.
pub fn raw_k(delta: f64, rule: KRule, odd_k: bool) -> Result<usize> {
    check_delta(delta)?;
    let k = match rule {
        KRule::Paper => (360.0 * (2.0 / delta).ln()).ceil() as usize,
        KRule::Practical => (8.0 * (1.0 / delta).ln()).ceil() as usize,
        KRule::Fixed(0) => return Err(invalid("fixed k must be at least 1")),
        KRule::Fixed(k) => return Ok(k),
    }
    .max(1);
    Ok(if odd_k && k % 2 == 0 { k + 1 } else { k })
}

/// Resolves the block count for `n` samples. Values above `n` clamp to the
/// largest admissible (odd, when `odd_k`) value not exceeding `n`.
pub fn resolve_k(delta: f64, n: usize, rule: KRule, odd_k: bool) -> Result<KChoice> {
    if n < 1 {
        return Err(invalid("sample count must be at least 1"));
    }
    let requested = raw_k(delta, rule, odd_k)?;
    if requested <= n {
        return Ok(KChoice {
            k: requested,
            requested,
            clamped: false,
        });
    }
    let odd = odd_k && !matches!(rule, KRule::Fixed(_));
    let k = if odd && n % 2 == 0 { n - 1 } else { n };
    Ok(KChoice {
        k,
        requested,
        clamped: true,
    })
}

pub fn choose_k(delta: f64, n: usize, rule: KRule, odd_k: bool) -> Result<usize> {
    resolve_k(delta, n, rule, odd_k).map(|c| c.k)
}

/// Which constants the radius formula uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConstantsProfile {
    /// `(400, 240)`.
    Paper,
    /// `(2, 2)`, a harness yardstick for desk-scale experiments.
    Practical,
}

impl ConstantsProfile {
    fn constants(self) -> (f64, f64) {
        match self {
            ConstantsProfile::Paper => (400.0, 240.0),
            ConstantsProfile::Practical => (2.0, 2.0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadiusBound {
    pub r: f64,
    pub trace_term: f64,
    pub eig_term: f64,
    pub constants_profile: ConstantsProfile,
}

/// `r = max(c1·sqrt(Tr(Σ)/N), c2·sqrt(λ_max·ln(2/δ)/N))`.
pub fn radius_bound(
    trace: f64,
    lambda_max: f64,
    n: usize,
    delta: f64,
    profile: ConstantsProfile,
) -> Result<RadiusBound> {
    check_delta(delta)?;
    if n < 1 {
        return Err(invalid("sample count must be at least 1"));
    }
    if !(lambda_max >= 0.0) || !(trace >= 0.0) {
        return Err(invalid("trace and lambda_max must be nonnegative"));
    }
    if lambda_max > trace * (1.0 + 1e-12) {
        return Err(invalid(format!(
            "lambda_max {lambda_max} exceeds trace {trace}"
        )));
    }
    let (c_trace, c_eig) = profile.constants();
    let n = n as f64;
    let trace_term = c_trace * (trace / n).sqrt();
    let eig_term = c_eig * (lambda_max * (2.0 / delta).ln() / n).sqrt();
    Ok(RadiusBound {
        r: trace_term.max(eig_term),
        trace_term,
        eig_term,
        constants_profile: profile,
    })
}

pub fn sample_mean(samples: &SampleSet) -> Vec<f64> {
    let mut sum = vec![0.0; samples.dim()];
    for p in samples.points() {
        for (s, x) in sum.iter_mut().zip(p) {
            *s += x;
        }
    }
    let n = samples.len() as f64;
    sum.into_iter().map(|s| s / n).collect()
}

/// Lower median of the `k` block means of one-dimensional data.
pub fn median_of_means_1d(samples: &SampleSet, k: usize) -> Result<f64> {
    if samples.dim() != 1 {
        return Err(invalid(format!(
            "univariate median-of-means needs d = 1, got d = {}",
            samples.dim()
        )));
    }
    let partition = make_partition(samples, k)?;
    let means: Vec<f64> = partition.means().iter().map(|z| z[0]).collect();
    Ok(lower_median(&means))
}

/// Median-of-means applied to every coordinate separately.
pub fn coordinatewise_median_of_means(samples: &SampleSet, k: usize) -> Result<Vec<f64>> {
    let partition = make_partition(samples, k)?;
    Ok((0..samples.dim())
        .map(|i| {
            let col: Vec<f64> = partition.means().iter().map(|z| z[i]).collect();
            lower_median(&col)
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeiszfeldOptions {
    /// Iteration stops once a step is shorter than `tol` times the mean
    /// distance from the iterate to the points.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for WeiszfeldOptions {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            max_iter: 10_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeiszfeldTrace {
    pub point: Vec<f64>,
    /// Objective `Σ‖p − x_i‖` at the start point and after every iteration.
    pub objective: Vec<f64>,
    pub iterations: usize,
}

fn distance_sum(p: &[f64], points: &[Vec<f64>]) -> f64 {
    points.iter().map(|x| dist(p, x)).sum()
}

/// Geometric median by Weiszfeld iteration started at the coordinatewise
/// mean.
pub fn geometric_median(points: &[Vec<f64>], options: WeiszfeldOptions) -> Result<Vec<f64>> {
    geometric_median_traced(points, options).map(|t| t.point)
}

/// Weiszfeld iteration with the Vardi–Zhang step at data points.
///
/// At an iterate `y` that coincides with `η` data points, the plain update
/// `T(y)` over the remaining points is damped by `(1 − η/‖R(y)‖)^+`, where
/// `R(y) = Σ_{x_i ≠ y} (x_i − y)/‖x_i − y‖`; if `‖R(y)‖ ≤ η` then `y` is
/// optimal. Returns the last iterate.
pub fn geometric_median_traced(points: &[Vec<f64>], options: WeiszfeldOptions) -> Result<WeiszfeldTrace> {
    let first = points.first().ok_or_else(|| invalid("geometric median of an empty set"))?;
    let d = first.len();
    if points.iter().any(|p| p.len() != d) {
        return Err(invalid("points have inconsistent dimensions"));
    }
    let n = points.len() as f64;
    let mut y: Vec<f64> = (0..d)
        .map(|i| points.iter().map(|p| p[i]).sum::<f64>() / n)
        .collect();
    let mut objective = vec![distance_sum(&y, points)];
    let mut iterations = 0;

    for _ in 0..options.max_iter {
        let mut weighted = vec![0.0; d];
        let mut weight_sum = 0.0;
        let mut pull = vec![0.0; d];
        let mut coincident = 0.0;
        for x in points {
            let r = dist(x, &y);
            if r == 0.0 {
                coincident += 1.0;
                continue;
            }
            let w = 1.0 / r;
            weight_sum += w;
            for i in 0..d {
                weighted[i] += w * x[i];
                pull[i] += w * (x[i] - y[i]);
            }
        }
        if weight_sum == 0.0 {
            break;
        }
        let t: Vec<f64> = weighted.iter().map(|v| v / weight_sum).collect();
        let next = if coincident > 0.0 {
            let r = crate::linalg::norm(&pull);
            if r <= coincident {
                break;
            }
            let keep = coincident / r;
            t.iter().zip(&y).map(|(ti, yi)| (1.0 - keep) * ti + keep * yi).collect()
        } else {
            t
        };

        let f = distance_sum(&next, points);
        iterations += 1;
        objective.push(f);
        let step = dist(&next, &y);
        y = next;
        if step <= options.tol * f / n {
            break;
        }
    }
    Ok(WeiszfeldTrace {
        point: y,
        objective,
        iterations,
    })
}

/// Geometric median of the `k` block means.
pub fn geomedian_of_means(samples: &SampleSet, k: usize) -> Result<Vec<f64>> {
    let partition = make_partition(samples, k)?;
    geometric_median(partition.means(), WeiszfeldOptions::default())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimatorConfig {
    pub delta: f64,
    pub k_rule: KRule,
    pub odd_k: bool,
    pub descent: DescentConfig,
    /// Seeds the descent's direction stream.
    pub seed: u64,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        Self {
            delta: 0.05,
            k_rule: KRule::Practical,
            odd_k: true,
            descent: DescentConfig::default(),
            seed: 0,
        }
    }
}

impl EstimatorConfig {
    pub fn validate(&self) -> Result<()> {
        check_delta(self.delta)?;
        self.descent.validate()
    }

    pub fn resolve_k(&self, n: usize) -> Result<KChoice> {
        resolve_k(self.delta, n, self.k_rule, self.odd_k)
    }
}

/// Output of an estimator together with the block count it used.
#[derive(Debug, Clone, PartialEq)]
pub struct Estimate {
    pub point: Vec<f64>,
    pub k: KChoice,
}

/// Tournament median-of-means estimator: resolve `k`, form block means,
/// start at their geometric median and run the line-tournament descent.
pub fn lm_estimator(samples: &SampleSet, config: &EstimatorConfig) -> Result<Estimate> {
    config.validate()?;
    let k = config.resolve_k(samples.len())?;
    let partition = make_partition(samples, k.k)?;
    if k.k == 1 {
        return Ok(Estimate {
            point: partition.means()[0].clone(),
            k,
        });
    }
    let init = geometric_median(partition.means(), WeiszfeldOptions::default())?;
    let descent = DescentConfig {
        seed: config.seed,
        ..config.descent
    };
    let point = tournament::lm_estimate(samples, &partition, &descent, &init)?;
    Ok(Estimate { point, k })
}

/// Estimator selector shared by the CLI, the harness and the C interface.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    SampleMean,
    /// Median-of-means; coordinatewise when `d > 1`.
    Mom,
    GeomedianMom,
    Lm,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::SampleMean, Method::Mom, Method::GeomedianMom, Method::Lm];

    pub fn name(self) -> &'static str {
        match self {
            Method::SampleMean => "sample-mean",
            Method::Mom => "mom",
            Method::GeomedianMom => "geomedian-mom",
            Method::Lm => "lm",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = crate::error::Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| invalid(format!("unknown method {s:?}")))
    }
}

/// Runs `method` on `samples`.
pub fn estimate(method: Method, samples: &SampleSet, config: &EstimatorConfig) -> Result<Estimate> {
    config.validate()?;
    match method {
        Method::SampleMean => Ok(Estimate {
            point: sample_mean(samples),
            k: KChoice {
                k: 1,
                requested: 1,
                clamped: false,
            },
        }),
        Method::Mom => {
            let k = config.resolve_k(samples.len())?;
            let point = if samples.dim() == 1 {
                vec![median_of_means_1d(samples, k.k)?]
            } else {
                coordinatewise_median_of_means(samples, k.k)?
            };
            Ok(Estimate { point, k })
        }
        Method::GeomedianMom => {
            let k = config.resolve_k(samples.len())?;
            Ok(Estimate {
                point: geomedian_of_means(samples, k.k)?,
                k,
            })
        }
        Method::Lm => lm_estimator(samples, config),
    }
}
