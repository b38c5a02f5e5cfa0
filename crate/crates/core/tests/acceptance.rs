//! Acceptance criteria. Each test prints one PASS/FAIL line.
//!
//! Run with `cargo test -p submean --test acceptance -- --test-threads 1` to
//! see the lines in order.

use std::io::Write;
use std::process::Command;
use std::time::{Duration, Instant};

use submean::bench::{self, ExperimentConfig};
use submean::data::{make_partition, BlockPartition, SampleSet};
use submean::distributions::{DistributionSpec, Family};
use submean::estimators::{
    geometric_median, geometric_median_traced, geomedian_of_means, lm_estimator, median_of_means_1d, EstimatorConfig,
    KRule, Method, WeiszfeldOptions,
};
use submean::linalg::{dist, dist_sq};
use submean::rng::Stream;
use submean::tournament::{
    defeats_blockform, defeats_raw, lm_estimate, sac_diameter_oracle, DescentConfig, GridBox,
};

/// Writes straight to stdout so the line shows even when output is captured.
fn report(id: u32, name: &str, pass: bool, detail: &str) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "[acceptance] criterion {id:>2} {name}: {verdict} ({detail})");
}

fn normal_vec(rng: &mut Stream, d: usize, scale: f64) -> Vec<f64> {
    (0..d).map(|_| scale * rng.normal()).collect()
}

/// Random orthogonal matrix by Gram–Schmidt on a Gaussian matrix.
fn random_orthogonal(rng: &mut Stream, d: usize) -> Vec<Vec<f64>> {
    let mut q: Vec<Vec<f64>> = Vec::with_capacity(d);
    while q.len() < d {
        let mut v = normal_vec(rng, d, 1.0);
        for b in &q {
            let proj: f64 = v.iter().zip(b).map(|(x, y)| x * y).sum();
            v.iter_mut().zip(b).for_each(|(x, y)| *x -= proj * y);
        }
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-6 {
            q.push(v.into_iter().map(|x| x / n).collect());
        }
    }
    q
}

fn affine(q: &[Vec<f64>], s: f64, c: &[f64], x: &[f64]) -> Vec<f64> {
    q.iter()
        .zip(c)
        .map(|(row, ci)| s * row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + ci)
        .collect()
}

#[test]
fn criterion_01_defeat_equivalence() {
    let start = Instant::now();
    let mut rng = Stream::new(0xacc_0001);
    let (mut checked, mut guarded, mut mismatches) = (0usize, 0usize, 0usize);
    for instance in 0..1000 {
        let d = 1 + rng.below(5) as usize;
        let k = 1 + rng.below(9) as usize;
        let m = 1 + rng.below(20) as usize;
        let extra = if m < 20 { rng.below(k as u64) as usize } else { 0 };
        let n = k * m + extra;
        let spread = 0.1 + 10.0 * rng.uniform();
        let center = normal_vec(&mut rng, d, 5.0);
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| normal_vec(&mut rng, d, spread).iter().zip(&center).map(|(x, c)| x + c).collect())
            .collect();
        let samples = SampleSet::from_rows(&rows).unwrap();
        let partition = make_partition(&samples, k).unwrap();
        let a: Vec<f64> = center.iter().map(|c| c + spread * rng.normal()).collect();
        let b: Vec<f64> = if instance % 50 == 0 {
            a.clone()
        } else {
            center.iter().map(|c| c + spread * rng.normal()).collect()
        };

        // Guard: skip instances with a block whose margin sits within 1e-9 of a tie.
        if a != b {
            let scale = partition
                .means()
                .iter()
                .map(|z| dist_sq(z, &a) + dist_sq(z, &b))
                .fold(0.0, f64::max);
            let near_tie = partition
                .means()
                .iter()
                .any(|z| (dist_sq(z, &b) - dist_sq(z, &a)).abs() <= 1e-9 * scale);
            if near_tie {
                guarded += 1;
                continue;
            }
        }
        checked += 1;
        let raw = defeats_raw(&a, &b, &samples, &partition).unwrap();
        let block = defeats_blockform(&a, &b, &partition).unwrap();
        if raw != block {
            mismatches += 1;
        }
        assert_eq!(raw.blocks_for_a + raw.blocks_for_b + raw.ties, k);
        assert!(!(raw.a_defeats_b() && raw.b_defeats_a()));
    }
    let elapsed = start.elapsed();
    let pass = mismatches == 0 && guarded <= 10 && elapsed < Duration::from_secs(10);
    report(
        1,
        "defeat equivalence",
        pass,
        &format!("{checked} compared, {guarded} guarded, {mismatches} mismatches, {elapsed:.2?}"),
    );
    assert!(pass);
}

#[test]
fn criterion_02_one_dimensional_coincidence() {
    let start = Instant::now();
    let mut rng = Stream::new(0xacc_0002);
    let mut mismatches = 0;
    for trial in 0..500 {
        let k = 2 * rng.below(26) as usize + 1;
        let n = k + rng.below(300) as usize;
        let heavy = trial % 2 == 1;
        let values: Vec<f64> = (0..n)
            .map(|_| {
                let g = rng.normal();
                if heavy {
                    g / (rng.chi_squared(2.5) / 2.5).sqrt()
                } else {
                    3.0 * g + 1.0
                }
            })
            .collect();
        let samples = SampleSet::from_scalars(&values).unwrap();
        let config = EstimatorConfig {
            k_rule: KRule::Fixed(k),
            seed: trial,
            ..EstimatorConfig::default()
        };
        let lm = lm_estimator(&samples, &config).unwrap().point[0];
        let mom = median_of_means_1d(&samples, k).unwrap();
        if lm.to_bits() != mom.to_bits() {
            mismatches += 1;
        }
    }
    let elapsed = start.elapsed();
    let pass = mismatches == 0 && elapsed < Duration::from_secs(5);
    report(
        2,
        "1D coincidence with median-of-means",
        pass,
        &format!("500 datasets, {mismatches} bitwise mismatches, {elapsed:.2?}"),
    );
    assert!(pass);
}

#[test]
fn criterion_03_isometry_and_scale_invariance() {
    let mut rng = Stream::new(0xacc_0003);
    let (mut verdict_failures, mut worst_equivariance) = (0usize, 0.0f64);
    for _ in 0..200 {
        let d = 2 + rng.below(4) as usize;
        let k = 1 + rng.below(9) as usize;
        let n = k * (1 + rng.below(10) as usize);
        let rows: Vec<Vec<f64>> = (0..n).map(|_| normal_vec(&mut rng, d, 1.0)).collect();
        let q = random_orthogonal(&mut rng, d);
        let c = normal_vec(&mut rng, d, 10.0);
        let s = (rng.uniform() * 4.0 - 2.0).exp();

        let samples = SampleSet::from_rows(&rows).unwrap();
        let moved = samples.map_points(d, |x| affine(&q, s, &c, x)).unwrap();
        let p0 = make_partition(&samples, k).unwrap();
        let p1 = make_partition(&moved, k).unwrap();

        for _ in 0..5 {
            let a = normal_vec(&mut rng, d, 1.0);
            let b = normal_vec(&mut rng, d, 1.0);
            let (ta, tb) = (affine(&q, s, &c, &a), affine(&q, s, &c, &b));
            let before = defeats_blockform(&a, &b, &p0).unwrap();
            let after = defeats_blockform(&ta, &tb, &p1).unwrap();
            let before_raw = defeats_raw(&a, &b, &samples, &p0).unwrap();
            let after_raw = defeats_raw(&ta, &tb, &moved, &p1).unwrap();
            if before != after || before_raw != after_raw {
                verdict_failures += 1;
            }
        }

        let gm = geometric_median(p0.means(), WeiszfeldOptions::default()).unwrap();
        let gm_moved = geometric_median(p1.means(), WeiszfeldOptions::default()).unwrap();
        worst_equivariance = worst_equivariance.max(dist(&affine(&q, s, &c, &gm), &gm_moved));
        let gmom = geomedian_of_means(&samples, k).unwrap();
        let gmom_moved = geomedian_of_means(&moved, k).unwrap();
        worst_equivariance = worst_equivariance.max(dist(&affine(&q, s, &c, &gmom), &gmom_moved));
    }
    let pass = verdict_failures == 0 && worst_equivariance <= 1e-7;
    report(
        3,
        "isometry and scale invariance",
        pass,
        &format!("{verdict_failures} verdict changes, worst equivariance gap {worst_equivariance:.3e}"),
    );
    assert!(pass);
}

#[test]
fn criterion_04_geometry_at_desk_scale() {
    let start = Instant::now();
    let spec = DistributionSpec::standard(Family::Gaussian, 3);
    let config = ExperimentConfig {
        estimator: EstimatorConfig {
            delta: 0.1,
            k_rule: KRule::Practical,
            ..EstimatorConfig::default()
        },
        trials: 500,
        seed: 4,
        threads: 0,
        shuffle: false,
    };
    let report_ = bench::verify_geometry(&spec, 1800, &[1.0, 2.0, 3.0, 4.0], 100, &config).unwrap();
    let elapsed = start.elapsed();
    let at_one = report_.points[0].fraction_all_defeated;
    let context: Vec<String> = report_
        .points
        .iter()
        .map(|p| format!("{}x:{}", p.multiplier, p.fraction_all_defeated))
        .collect();
    let pass = at_one >= 0.9 && elapsed < Duration::from_secs(120);
    report(
        4,
        "mean defeats all probes at 1.0 r_hat",
        pass,
        &format!(
            "k={} r_hat={:.5} fraction={at_one} (need >= 0.9); by multiplier {}; {elapsed:.2?}",
            report_.k,
            report_.r_hat,
            context.join(" ")
        ),
    );
    assert!(pass, "fraction {at_one} < 0.9");
}

fn heavy_tail_check(id_suffix: &str, family: Family, seed: u64) -> (bool, String) {
    let start = Instant::now();
    let spec = DistributionSpec::standard(family, 5);
    let config = ExperimentConfig {
        estimator: EstimatorConfig {
            delta: 0.01,
            k_rule: KRule::Practical,
            ..EstimatorConfig::default()
        },
        trials: 300,
        seed,
        threads: 0,
        shuffle: false,
    };
    let r = bench::run_error_experiment(&spec, 5000, &[Method::SampleMean, Method::Lm], &config).unwrap();
    let elapsed = start.elapsed();
    let sm = r.method(Method::SampleMean).unwrap().quantile(0.99).unwrap();
    let lm = r.method(Method::Lm).unwrap().quantile(0.99).unwrap();
    let pass = lm <= sm && elapsed < Duration::from_secs(300);
    (
        pass,
        format!("{id_suffix}: k={} q0.99 lm={lm:.5} sample-mean={sm:.5}, {elapsed:.2?}", r.k),
    )
}

#[test]
fn criterion_05_heavy_tail_advantage() {
    let (t_pass, t_detail) = heavy_tail_check("student-t 2.5", Family::StudentT { nu: 2.5 }, 5);
    let (p_pass, p_detail) = heavy_tail_check("pareto 2.5", Family::ParetoMarginals { alpha: 2.5 }, 55);
    let pass = t_pass && p_pass;
    report(5, "heavy-tail advantage", pass, &format!("{t_detail}; {p_detail}"));
    assert!(pass);
}

#[test]
fn criterion_06_gaussian_non_degradation() {
    let spec = DistributionSpec::standard(Family::Gaussian, 3);
    let config = ExperimentConfig {
        trials: 300,
        seed: 6,
        ..ExperimentConfig::default()
    };
    let r = bench::run_error_experiment(&spec, 900, &[Method::SampleMean, Method::Lm], &config).unwrap();
    let sm = r.method(Method::SampleMean).unwrap().quantile(0.5).unwrap();
    let lm = r.method(Method::Lm).unwrap().quantile(0.5).unwrap();
    let pass = lm <= 3.0 * sm;
    report(
        6,
        "gaussian non-degradation",
        pass,
        &format!("k={} median lm={lm:.5} sample-mean={sm:.5} ratio={:.3}", r.k, lm / sm),
    );
    assert!(pass);
}

#[test]
fn criterion_07_rate_check() {
    let spec = DistributionSpec::standard(Family::Gaussian, 4);
    let config = ExperimentConfig {
        trials: 300,
        seed: 7,
        ..ExperimentConfig::default()
    };
    let sweep = bench::rate_sweep(&spec, &[1000, 4000], &[Method::Lm], &config).unwrap();
    let med = |i: usize| sweep.reports[i].method(Method::Lm).unwrap().quantile(0.5).unwrap();
    let ratio = med(0) / med(1);
    let pass = (1.6..=2.6).contains(&ratio);
    report(
        7,
        "sqrt(N) rate",
        pass,
        &format!("median lm N=1000: {:.5}, N=4000: {:.5}, ratio {ratio:.3}", med(0), med(1)),
    );
    assert!(pass);
}

/// Smallest grid-oracle diameter over candidate points: a coarse pass at
/// spacing `diam/50` over the bounding box of the block means, then a pass at
/// the oracle mesh around the five best coarse candidates.
fn grid_minimum(partition: &BlockPartition, region: &GridBox, mesh: f64) -> f64 {
    let diam = partition.diameter();
    let coarse = diam / 50.0;
    let candidates = GridBox::bounding(partition.means());
    let mut scored: Vec<(f64, Vec<f64>)> = candidates
        .nodes(coarse)
        .into_iter()
        .map(|a| (sac_diameter_oracle(&a, partition, region, mesh).unwrap(), a))
        .collect();
    scored.sort_by(|x, y| x.0.total_cmp(&y.0));
    let mut best = scored[0].0;
    for (_, center) in scored.iter().take(5) {
        let local = GridBox {
            lo: center.iter().map(|x| x - 2.0 * coarse).collect(),
            hi: center.iter().map(|x| x + 2.0 * coarse).collect(),
        };
        for a in local.nodes(mesh) {
            best = best.min(sac_diameter_oracle(&a, partition, region, mesh).unwrap());
        }
    }
    best
}

#[test]
fn criterion_08_grid_oracle_consistency() {
    let start = Instant::now();
    let mut rng = Stream::new(0xacc_0008);
    let mut failures = Vec::new();
    let mut worst_gap = f64::NEG_INFINITY;
    for instance in 0..20u64 {
        let n = 5 * (4 + rng.below(20) as usize);
        let spec = DistributionSpec::standard(Family::StudentT { nu: 3.0 }, 2);
        let samples = submean::distributions::sample_with(&spec, n, &mut rng).unwrap();
        let partition = make_partition(&samples, 5).unwrap();
        let region = GridBox::around_means(&partition);
        let mesh = partition.diameter() / 100.0;
        let init = geometric_median(partition.means(), WeiszfeldOptions::default()).unwrap();
        let config = DescentConfig {
            seed: instance,
            ..DescentConfig::default()
        };
        let lm = lm_estimate(&samples, &partition, &config, &init).unwrap();
        let lm_diam = sac_diameter_oracle(&lm, &partition, &region, mesh).unwrap();
        let best = grid_minimum(&partition, &region, mesh);
        let slack = 4.0 * mesh * 2f64.sqrt();
        let gap = (lm_diam - best) / slack;
        worst_gap = worst_gap.max(gap);
        if lm_diam > best + slack {
            failures.push(format!("#{instance}: lm {lm_diam:.4} vs grid min {best:.4} (+{slack:.4})"));
        }
    }
    let elapsed = start.elapsed();
    let pass = failures.is_empty() && elapsed < Duration::from_secs(120);
    report(
        8,
        "grid-oracle consistency",
        pass,
        &format!(
            "20 instances, worst (lm - min)/slack = {worst_gap:.3}, {} failures {failures:?}, {elapsed:.2?}",
            failures.len()
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_09_weiszfeld_correctness() {
    let h = 3f64.sqrt() / 2.0;
    let fixtures: Vec<(&str, Vec<Vec<f64>>, Vec<f64>)> = vec![
        (
            "triangle",
            vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.5, h]],
            vec![0.5, h / 3.0],
        ),
        (
            "square",
            vec![vec![0.0, 0.0], vec![0.0, 2.0], vec![2.0, 0.0], vec![2.0, 2.0]],
            vec![1.0, 1.0],
        ),
        ("collinear", vec![vec![-1.0], vec![0.0], vec![4.0]], vec![0.0]),
    ];
    let mut details = Vec::new();
    let mut pass = true;
    for (name, points, expected) in &fixtures {
        let trace = geometric_median_traced(points, WeiszfeldOptions::default()).unwrap();
        let err = dist(&trace.point, expected);
        let monotone = trace.objective.windows(2).all(|w| w[1] <= w[0]);
        pass &= err <= 1e-6 && monotone;
        details.push(format!("{name}: err {err:.2e}, {} iters, monotone {monotone}", trace.iterations));
    }
    // Generic inputs: monotone up to rounding in the objective sum.
    let mut rng = Stream::new(0xacc_0009);
    let mut generic_ok = true;
    for _ in 0..100 {
        let pts: Vec<Vec<f64>> = (0..15).map(|_| normal_vec(&mut rng, 3, 1.0)).collect();
        let trace = geometric_median_traced(&pts, WeiszfeldOptions::default()).unwrap();
        generic_ok &= trace.objective.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-14));
    }
    pass &= generic_ok;
    details.push(format!("100 random sets monotone up to rounding: {generic_ok}"));
    report(9, "Weiszfeld correctness", pass, &details.join("; "));
    assert!(pass);
}

#[test]
fn criterion_10_reproducibility_across_threads() {
    let spec = DistributionSpec::standard(Family::StudentT { nu: 3.0 }, 3);
    let run = |threads: usize| {
        let config = ExperimentConfig {
            trials: 40,
            seed: 10,
            threads,
            shuffle: true,
            ..ExperimentConfig::default()
        };
        let r = bench::run_error_experiment(&spec, 600, &Method::ALL, &config).unwrap();
        let g = bench::verify_geometry(&spec, 600, &[0.5, 1.0, 2.0], 20, &config).unwrap();
        let s = bench::rate_sweep(&spec, &[200, 400], &[Method::Lm], &config).unwrap();
        [r.to_json(), r.to_csv(), g.to_json(), g.to_csv(), s.to_json(), s.to_csv()]
    };
    let one = run(1);
    let four = run(4);
    let lib_same = one == four;

    // Same through the CLI, comparing the written files byte for byte.
    let dir = tempfile::tempdir().unwrap();
    let cli_run = |threads: &str, name: &str| {
        let path = dir.path().join(name);
        let status = Command::new(env!("CARGO_BIN_EXE_submean"))
            .args([
                "bench", "--dist", "student-t:3", "--d", "3", "--n", "500", "--trials", "30", "--seed", "99",
                "--threads", threads, "--format", "csv", "--output",
            ])
            .arg(&path)
            .output()
            .unwrap();
        assert!(status.status.success());
        std::fs::read(path).unwrap()
    };
    let cli_same = cli_run("1", "a.csv") == cli_run("3", "b.csv");

    let pass = lib_same && cli_same;
    report(
        10,
        "reproducibility across thread counts",
        pass,
        &format!("library reports identical: {lib_same}, CLI files identical: {cli_same}"),
    );
    assert!(pass);
}
