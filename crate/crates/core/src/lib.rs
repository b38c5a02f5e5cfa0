//! Sub-Gaussian estimation of the mean of a random vector.
//!
//! The data are split into `k` blocks and averaged within each block. The
//! estimator returns a multivariate median of those block means chosen by a
//! pairwise tournament: candidate `a` defeats `b` when a strict majority of
//! block means lies closer to `a`. Baselines (sample mean, median-of-means,
//! geometric median-of-means) share the same entry point, and [`bench`]
//! measures all of them against distributions with known moments.
//!
//! ```
//! use submean::{data::SampleSet, estimators::{estimate, EstimatorConfig, KRule, Method}};
//!
//! let samples = SampleSet::from_scalars(&[1.0, 3.0, 2.0, 4.0, 99.0, 101.0]).unwrap();
//! let config = EstimatorConfig { k_rule: KRule::Fixed(3), ..EstimatorConfig::default() };
//! let est = estimate(Method::Lm, &samples, &config).unwrap();
//! assert_eq!(est.point, vec![3.0]);
//! ```

pub mod bench;
pub mod data;
pub mod distributions;
pub mod error;
pub mod estimators;
pub mod io;
pub mod linalg;
pub mod rng;
pub mod tournament;

pub use error::{Error, Result};
