use submean::distributions::{empirical_moments, moments, sample, DistributionSpec, Family};

/// Per-coordinate variance of the unit draw, from raw moments.
fn unit_variance(family: Family) -> f64 {
    match family {
        Family::Gaussian => 1.0,
        Family::StudentT { nu } => nu / (nu - 2.0),
        Family::ParetoMarginals { alpha } => alpha / (alpha - 2.0) - (alpha / (alpha - 1.0)).powi(2),
        Family::Lognormal { sigma } => (2.0 * sigma * sigma).exp() - (sigma * sigma).exp(),
        Family::GaussianWithOutlierMixture { epsilon, outlier_scale } => {
            (1.0 - epsilon) + epsilon * outlier_scale * outlier_scale
        }
    }
}

fn scale_matrix() -> Vec<Vec<f64>> {
    vec![vec![1.0, 0.0, 0.0], vec![0.5, 2.0, 0.0], vec![-0.3, 0.4, 0.7]]
}

fn spec(family: Family, seed: u64) -> DistributionSpec {
    DistributionSpec {
        scale: scale_matrix(),
        ..DistributionSpec::standard(family, 3).with_mean(vec![1.0, -2.0, 0.5]).with_seed(seed)
    }
}

fn expected_covariance(family: Family) -> Vec<Vec<f64>> {
    let l = scale_matrix();
    let c = unit_variance(family);
    (0..3)
        .map(|i| (0..3).map(|j| c * (0..3).map(|t| l[i][t] * l[j][t]).sum::<f64>()).collect())
        .collect()
}

fn check_family(family: Family, n: usize, rel: f64, seed: u64) {
    let s = spec(family, seed);
    let samples = sample(&s, n).unwrap();
    let (mean, cov) = empirical_moments(&samples);
    let expected = expected_covariance(family);
    let norm = (0..3).map(|i| expected[i][i]).fold(0.0, f64::max);
    for i in 0..3 {
        let se = (expected[i][i] / n as f64).sqrt();
        assert!((mean[i] - s.mean[i]).abs() < 6.0 * se, "{family:?} mean[{i}] = {}", mean[i]);
        for j in 0..3 {
            let err = (cov[i][j] - expected[i][j]).abs();
            assert!(err <= rel * norm, "{family:?} cov[{i}][{j}] = {} vs {}", cov[i][j], expected[i][j]);
        }
    }
    let closed = moments(&s).unwrap();
    for i in 0..3 {
        for j in 0..3 {
            assert!((closed.covariance[i][j] - expected[i][j]).abs() < 1e-12);
        }
    }
}

#[test]
fn light_tailed_families_match_covariance() {
    check_family(Family::Gaussian, 1_000_000, 0.02, 1);
    check_family(Family::StudentT { nu: 10.0 }, 1_000_000, 0.02, 2);
    check_family(Family::ParetoMarginals { alpha: 6.0 }, 1_000_000, 0.02, 3);
    check_family(Family::Lognormal { sigma: 0.4 }, 1_000_000, 0.02, 4);
    check_family(
        Family::GaussianWithOutlierMixture {
            epsilon: 0.05,
            outlier_scale: 3.0,
        },
        1_000_000,
        0.02,
        5,
    );
}

#[test]
fn heavier_tails_match_covariance_at_large_n() {
    // Finite fourth moments keep the sampling error of the covariance bounded.
    check_family(Family::StudentT { nu: 5.0 }, 10_000_000, 0.05, 6);
    check_family(Family::ParetoMarginals { alpha: 4.5 }, 10_000_000, 0.05, 7);
}

#[test]
fn lambda_max_of_two_by_two() {
    let s = DistributionSpec {
        scale: vec![vec![1.0, 0.0], vec![1.0, 1.0]],
        ..DistributionSpec::standard(Family::Gaussian, 2)
    };
    // Σ = [[1, 1], [1, 2]]; eigenvalues (3 ± √5)/2.
    let m = moments(&s).unwrap();
    assert!((m.lambda_max - (3.0 + 5f64.sqrt()) / 2.0).abs() < 1e-8);
    assert!((m.trace - 3.0).abs() < 1e-15);
}

#[test]
fn point_mass_is_exact() {
    let s = DistributionSpec::point_mass(vec![4.0, -1.0]);
    let samples = sample(&s, 100).unwrap();
    assert!(samples.points().all(|p| p == [4.0, -1.0]));
    let m = moments(&s).unwrap();
    assert_eq!(m.trace, 0.0);
    assert_eq!(m.lambda_max, 0.0);
}

#[test]
fn config_text_round_trip() {
    let s = spec(Family::ParetoMarginals { alpha: 3.0 }, 11);
    let back = DistributionSpec::from_config_str(&s.to_config_string()).unwrap();
    assert_eq!(back, s);
    assert!(DistributionSpec::from_config_str("[distribution]\nfamily = \"student_t\"\nnu = 2.0\ndim = 1\nmean = [0.0]\nscale = [[1.0]]\n").is_err());
}
