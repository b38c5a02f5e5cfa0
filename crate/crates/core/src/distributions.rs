//! Seeded samplers with closed-form mean and covariance.
//!
//! Every family draws a centered, unit-scale vector `W` coordinate by
//! coordinate and returns `μ + L·W`, so `Σ = c·L·Lᵀ` where `c` is the
//! per-coordinate variance of `W`.

use serde::{Deserialize, Serialize};

use crate::data::SampleSet;
use crate::error::{invalid, Error, Result};
use crate::linalg::lambda_max_psd;
use crate::rng::Stream;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Family {
    Gaussian,
    /// Multivariate t: a Gaussian divided by `sqrt(χ²(ν)/ν)`, shared across coordinates.
    StudentT { nu: f64 },
    /// Independent Pareto(α, x_m = 1) coordinates, centered.
    ParetoMarginals { alpha: f64 },
    /// Independent `exp(σ·g)` coordinates, centered.
    Lognormal { sigma: f64 },
    /// Gaussian whose scale is multiplied by `outlier_scale` with probability `epsilon`.
    GaussianWithOutlierMixture { epsilon: f64, outlier_scale: f64 },
}

impl Family {
    /// Variance of one coordinate of the centered, unit-scale draw.
    fn unit_variance(&self) -> f64 {
        match *self {
            Family::Gaussian => 1.0,
            Family::StudentT { nu } => nu / (nu - 2.0),
            Family::ParetoMarginals { alpha } => alpha / ((alpha - 1.0).powi(2) * (alpha - 2.0)),
            Family::Lognormal { sigma } => {
                let s2 = sigma * sigma;
                (s2.exp() - 1.0) * s2.exp()
            }
            Family::GaussianWithOutlierMixture {
                epsilon,
                outlier_scale,
            } => 1.0 - epsilon + epsilon * outlier_scale * outlier_scale,
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            Family::Gaussian => Ok(()),
            Family::StudentT { nu } if !(nu > 2.0) || !nu.is_finite() => Err(invalid(format!(
                "student_t needs nu > 2 for a finite covariance, got {nu}"
            ))),
            Family::ParetoMarginals { alpha } if !(alpha > 2.0) || !alpha.is_finite() => {
                Err(invalid(format!(
                    "pareto_marginals needs alpha > 2 for a finite covariance, got {alpha}"
                )))
            }
            Family::Lognormal { sigma } if !(sigma >= 0.0) || !sigma.is_finite() => {
                Err(invalid(format!("lognormal needs sigma >= 0, got {sigma}")))
            }
            Family::GaussianWithOutlierMixture {
                epsilon,
                outlier_scale,
            } if !(0.0..=1.0).contains(&epsilon) || !(outlier_scale >= 0.0) || !outlier_scale.is_finite() => {
                Err(invalid("mixture needs epsilon in [0, 1] and outlier_scale >= 0"))
            }
            _ => Ok(()),
        }
    }
}

/// A distribution family together with its location and linear map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributionSpec {
    #[serde(flatten)]
    pub family: Family,
    pub dim: usize,
    pub mean: Vec<f64>,
    /// Rows of the linear map `L` applied to the centered draw.
    pub scale: Vec<Vec<f64>>,
    #[serde(default)]
    pub seed: u64,
}

/// Exact first and second moments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentSummary {
    pub mean: Vec<f64>,
    pub covariance: Vec<Vec<f64>>,
    pub trace: f64,
    pub lambda_max: f64,
}

impl DistributionSpec {
    /// Zero mean and identity scale.
    pub fn standard(family: Family, dim: usize) -> Self {
        let scale = (0..dim)
            .map(|i| (0..dim).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect();
        Self {
            family,
            dim,
            mean: vec![0.0; dim],
            scale,
            seed: 0,
        }
    }

    /// Every draw equals `mean`.
    pub fn point_mass(mean: Vec<f64>) -> Self {
        let dim = mean.len();
        Self {
            family: Family::Gaussian,
            dim,
            mean,
            scale: vec![vec![0.0; dim]; dim],
            seed: 0,
        }
    }

    pub fn with_mean(mut self, mean: Vec<f64>) -> Self {
        self.mean = mean;
        self
    }

    pub fn with_diagonal_scale(mut self, diag: &[f64]) -> Self {
        self.scale = (0..diag.len())
            .map(|i| (0..diag.len()).map(|j| if i == j { diag[i] } else { 0.0 }).collect())
            .collect();
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(invalid("dimension must be at least 1"));
        }
        if self.mean.len() != self.dim {
            return Err(invalid(format!(
                "mean has length {}, expected {}",
                self.mean.len(),
                self.dim
            )));
        }
        if self.scale.len() != self.dim || self.scale.iter().any(|r| r.len() != self.dim) {
            return Err(invalid(format!("scale must be a {0}x{0} matrix", self.dim)));
        }
        if self
            .mean
            .iter()
            .chain(self.scale.iter().flatten())
            .any(|x| !x.is_finite())
        {
            return Err(invalid("mean and scale must be finite"));
        }
        self.family.validate()
    }

    /// Parses the `[distribution]` table of a bench config file.
    pub fn from_config_str(text: &str) -> Result<Self> {
        #[derive(Deserialize)]
        struct File {
            distribution: DistributionSpec,
        }
        let file: File = toml::from_str(text).map_err(|e| Error::Parse {
            line: e
                .span()
                .map(|s| text[..s.start].matches('\n').count() + 1)
                .unwrap_or(0),
            message: e.message().to_string(),
        })?;
        file.distribution.validate()?;
        Ok(file.distribution)
    }

    /// Renders this spec as a `[distribution]` table.
    pub fn to_config_string(&self) -> String {
        #[derive(Serialize)]
        struct File<'a> {
            distribution: &'a DistributionSpec,
        }
        toml::to_string(&File { distribution: self }).expect("spec serializes to TOML")
    }
}

fn draw_unit(family: &Family, rng: &mut Stream, out: &mut [f64]) {
    match *family {
        Family::Gaussian => out.iter_mut().for_each(|x| *x = rng.normal()),
        Family::StudentT { nu } => {
            out.iter_mut().for_each(|x| *x = rng.normal());
            let w = (rng.chi_squared(nu) / nu).sqrt();
            out.iter_mut().for_each(|x| *x /= w);
        }
        Family::ParetoMarginals { alpha } => {
            let mean = alpha / (alpha - 1.0);
            // Inverse CDF of Pareto(α, 1): U^{-1/α}.
            out.iter_mut()
                .for_each(|x| *x = rng.uniform_open().powf(-1.0 / alpha) - mean);
        }
        Family::Lognormal { sigma } => {
            let mean = (0.5 * sigma * sigma).exp();
            out.iter_mut().for_each(|x| *x = (sigma * rng.normal()).exp() - mean);
        }
        Family::GaussianWithOutlierMixture {
            epsilon,
            outlier_scale,
        } => {
            let s = if rng.uniform() < epsilon { outlier_scale } else { 1.0 };
            out.iter_mut().for_each(|x| *x = s * rng.normal());
        }
    }
}

/// `n` i.i.d. draws using the spec's own seed.
pub fn sample(spec: &DistributionSpec, n: usize) -> Result<SampleSet> {
    sample_with(spec, n, &mut Stream::new(spec.seed))
}

/// `n` i.i.d. draws from an explicit stream.
pub fn sample_with(spec: &DistributionSpec, n: usize, rng: &mut Stream) -> Result<SampleSet> {
    spec.validate()?;
    if n < 1 {
        return Err(invalid("sample count must be at least 1"));
    }
    let d = spec.dim;
    let mut unit = vec![0.0; d];
    let mut data = Vec::with_capacity(n * d);
    for _ in 0..n {
        draw_unit(&spec.family, rng, &mut unit);
        for (row, m) in spec.scale.iter().zip(&spec.mean) {
            data.push(m + crate::linalg::dot(row, &unit));
        }
    }
    SampleSet::from_flat(data, d)
}

/// Closed-form mean and covariance; `λ_max` by power iteration (tolerance 1e-10).
pub fn moments(spec: &DistributionSpec) -> Result<MomentSummary> {
    spec.validate()?;
    let c = spec.family.unit_variance();
    let d = spec.dim;
    let covariance: Vec<Vec<f64>> = (0..d)
        .map(|i| {
            (0..d)
                .map(|j| c * crate::linalg::dot(&spec.scale[i], &spec.scale[j]))
                .collect()
        })
        .collect();
    let trace = (0..d).map(|i| covariance[i][i]).sum();
    let lambda_max = lambda_max_psd(&covariance, 1e-10, 100_000);
    Ok(MomentSummary {
        mean: spec.mean.clone(),
        covariance,
        trace,
        lambda_max,
    })
}

/// Empirical mean and (biased) covariance of a sample set.
pub fn empirical_moments(samples: &SampleSet) -> (Vec<f64>, Vec<Vec<f64>>) {
    let mean = crate::estimators::sample_mean(samples);
    let d = samples.dim();
    let mut cov = vec![vec![0.0; d]; d];
    for p in samples.points() {
        for i in 0..d {
            let di = p[i] - mean[i];
            for j in 0..d {
                cov[i][j] += di * (p[j] - mean[j]);
            }
        }
    }
    let n = samples.len() as f64;
    cov.iter_mut().flatten().for_each(|x| *x /= n);
    (mean, cov)
}
