//! The pairwise defeat relation between candidate means and the descent that
//! approximates the diameter-minimizing multivariate median of block means.
//!
//! For candidates `a` and `b`, block `j` votes for `a` when the block-averaged
//! squared distance to `a` is smaller than to `b`. Because
//!
//! ```text
//! (1/|B_j|) Σ_{i∈B_j} (‖X_i−b‖² − ‖X_i−a‖²) = ‖Z_j−b‖² − ‖Z_j−a‖²
//! ```
//!
//! the vote can be read off the raw samples ([`defeats_raw`]) or off the block
//! means alone ([`defeats_blockform`]); the two are kept as independent code
//! paths so each checks the other.
//!
//! The estimator picks `a` minimizing the diameter of
//! `S_a^c = { x : ‖Z_j−x‖ > ‖Z_j−a‖ on at most k/2 blocks }`. Minimizing that
//! exactly is out of reach, so [`lm_estimate`] runs line-restricted tournaments
//! ([`line_winner`]) along axis and random directions. [`sac_diameter_oracle`]
//! evaluates the objective on a grid for small validation instances.

use serde::{Deserialize, Serialize};

use crate::data::{BlockPartition, SampleSet};
use crate::error::{invalid, Error, Result};
use crate::linalg::{dist, dist_sq, norm};
use crate::rng::Stream;

/// Relative tolerance for treating a per-block comparison as a tie.
pub const TIE_TOLERANCE: f64 = 1e-12;

/// Default cap on the number of grid points the diameter oracle will visit.
pub const DEFAULT_GRID_BUDGET: u64 = 10_000_000;

/// Block-by-block outcome of comparing two candidates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DefeatVerdict {
    pub blocks_for_a: usize,
    pub blocks_for_b: usize,
    pub ties: usize,
    pub k: usize,
}

impl DefeatVerdict {
    /// `a` wins a strict majority of blocks outright.
    pub fn a_defeats_b(&self) -> bool {
        2 * self.blocks_for_a > self.k
    }

    pub fn b_defeats_a(&self) -> bool {
        2 * self.blocks_for_b > self.k
    }

    fn tally(k: usize, mut vote: impl FnMut(usize) -> std::cmp::Ordering) -> Self {
        let mut v = DefeatVerdict {
            blocks_for_a: 0,
            blocks_for_b: 0,
            ties: 0,
            k,
        };
        for j in 0..k {
            match vote(j) {
                std::cmp::Ordering::Greater => v.blocks_for_a += 1,
                std::cmp::Ordering::Less => v.blocks_for_b += 1,
                std::cmp::Ordering::Equal => v.ties += 1,
            }
        }
        v
    }
}

fn check_candidates(a: &[f64], b: &[f64], dim: usize) -> Result<()> {
    if a.len() != dim || b.len() != dim {
        return Err(invalid(format!(
            "candidates have dimensions {} and {}, expected {dim}",
            a.len(),
            b.len()
        )));
    }
    Ok(())
}

fn sign_with_tolerance(value: f64, tol: f64) -> std::cmp::Ordering {
    if value > tol {
        std::cmp::Ordering::Greater
    } else if value < -tol {
        std::cmp::Ordering::Less
    } else {
        std::cmp::Ordering::Equal
    }
}

/// Compares `a` and `b` from the raw samples of each block.
///
/// Block `j` favours `a` when `s_j = mean_{i∈B_j}(‖X_i−b‖² − ‖X_i−a‖²)` is
/// positive; `|s_j| ≤ 1e-12·scale` is a tie, where `scale` is the largest
/// block mean of `‖X_i−a‖² + ‖X_i−b‖²`.
pub fn defeats_raw(
    a: &[f64],
    b: &[f64],
    samples: &SampleSet,
    partition: &BlockPartition,
) -> Result<DefeatVerdict> {
    check_candidates(a, b, samples.dim())?;
    let mut margins = Vec::with_capacity(partition.k());
    let mut scale = 0.0f64;
    for block in partition.blocks() {
        let (mut diff, mut second) = (0.0, 0.0);
        for &i in block {
            let x = samples.point(i);
            let (db, da) = (dist_sq(x, b), dist_sq(x, a));
            diff += db - da;
            second += db + da;
        }
        let size = block.len() as f64;
        margins.push(diff / size);
        scale = scale.max(second / size);
    }
    let tol = TIE_TOLERANCE * scale;
    Ok(DefeatVerdict::tally(partition.k(), |j| {
        sign_with_tolerance(margins[j], tol)
    }))
}

/// Compares `a` and `b` using only the block means: block `j` favours `a`
/// when `‖Z_j−b‖ > ‖Z_j−a‖`, with ties within `1e-12·diam({Z_j})`.
pub fn defeats_blockform(a: &[f64], b: &[f64], partition: &BlockPartition) -> Result<DefeatVerdict> {
    check_candidates(a, b, partition.dim())?;
    let tol = TIE_TOLERANCE * partition.diameter();
    let means = partition.means();
    Ok(DefeatVerdict::tally(partition.k(), |j| {
        sign_with_tolerance(dist(&means[j], b) - dist(&means[j], a), tol)
    }))
}

/// Returns the exact axis index if `u` is `±e_i`.
fn axis_of(u: &[f64]) -> Option<usize> {
    let mut axis = None;
    for (i, &x) in u.iter().enumerate() {
        if x != 0.0 {
            if axis.is_some() || x.abs() != 1.0 {
                return None;
            }
            axis = Some(i);
        }
    }
    axis
}

/// Position of the lower median (1-based rank `ceil(k/2)`) of `values`.
/// Equal values are ordered by index so the choice is deterministic.
pub(crate) fn lower_median_index(values: &[f64]) -> usize {
    let mut order: Vec<usize> = (0..values.len()).collect();
    let rank = (values.len() - 1) / 2;
    order.select_nth_unstable_by(rank, |&i, &j| values[i].total_cmp(&values[j]).then(i.cmp(&j)));
    order[rank]
}

/// Lower median of a nonempty slice.
pub fn lower_median(values: &[f64]) -> f64 {
    values[lower_median_index(values)]
}

/// Tournament winner among the points `p0 + t·u`.
///
/// For two points on the line, block `j` prefers the one whose parameter is
/// closer to `s_j = ⟨Z_j − p0, u⟩`, so the winner sits at the lower median of
/// the `s_j`. Along a coordinate axis the winning coordinate is copied from
/// the median block mean, which keeps the one-dimensional case exact.
pub fn line_winner(p0: &[f64], u: &[f64], partition: &BlockPartition) -> Result<Vec<f64>> {
    if p0.len() != partition.dim() || u.len() != partition.dim() {
        return Err(invalid("line origin or direction has the wrong dimension"));
    }
    let len = norm(u);
    if !((len - 1.0).abs() <= 1e-9) {
        return Err(invalid(format!("direction must be a unit vector, got norm {len}")));
    }
    let means = partition.means();
    let projections: Vec<f64> = means
        .iter()
        .map(|z| z.iter().zip(p0).zip(u).map(|((zi, pi), ui)| (zi - pi) * ui).sum())
        .collect();
    let winner = lower_median_index(&projections);

    if let Some(axis) = axis_of(u) {
        let mut out = p0.to_vec();
        out[axis] = means[winner][axis];
        return Ok(out);
    }
    let t = projections[winner];
    Ok(p0.iter().zip(u).map(|(p, d)| p + t * d).collect())
}

/// How [`descend`] picks its search lines.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DirectionRule {
    /// `e_1, …, e_d`, repeating.
    AxisCycling,
    /// I.i.d. uniform unit vectors from the seeded stream.
    RandomSphere,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DescentConfig {
    pub max_iterations: usize,
    /// Stop once `d` consecutive steps are shorter than this times `diam({Z_j})`.
    pub step_tolerance: f64,
    pub direction_rule: DirectionRule,
    /// Run one pass over `e_1..e_d` before the main loop.
    pub axis_sweep_first: bool,
    pub seed: u64,
}

impl Default for DescentConfig {
    fn default() -> Self {
        Self {
            max_iterations: 200,
            step_tolerance: 1e-9,
            direction_rule: DirectionRule::RandomSphere,
            axis_sweep_first: true,
            seed: 0,
        }
    }
}

impl DescentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iterations < 1 {
            return Err(invalid("max_iterations must be at least 1"));
        }
        if !(self.step_tolerance >= 0.0) {
            return Err(invalid("step_tolerance must be nonnegative"));
        }
        Ok(())
    }
}

/// Final point of a descent run plus how it ended.
#[derive(Debug, Clone, PartialEq)]
pub struct DescentOutcome {
    pub point: Vec<f64>,
    /// Line searches performed, including the initial sweep.
    pub iterations: usize,
    /// Length of the last step taken.
    pub last_step: f64,
    pub converged: bool,
}

/// Repeated line tournaments starting from `start`.
pub fn descend(partition: &BlockPartition, start: &[f64], config: &DescentConfig) -> Result<Vec<f64>> {
    descend_traced(partition, start, config).map(|o| o.point)
}

pub fn descend_traced(
    partition: &BlockPartition,
    start: &[f64],
    config: &DescentConfig,
) -> Result<DescentOutcome> {
    config.validate()?;
    let d = partition.dim();
    if start.len() != d {
        return Err(invalid(format!(
            "start point has dimension {}, expected {d}",
            start.len()
        )));
    }
    let threshold = config.step_tolerance * partition.diameter();
    let axis = |i: usize| {
        let mut e = vec![0.0; d];
        e[i % d] = 1.0;
        e
    };

    let mut rng = Stream::new(config.seed);
    let mut point = start.to_vec();
    let mut small_run = 0usize;
    let mut last_step = f64::INFINITY;
    let mut iterations = 0usize;

    let sweep = if config.axis_sweep_first { d } else { 0 };
    for it in 0..sweep + config.max_iterations {
        let direction = if it < sweep {
            axis(it)
        } else {
            match config.direction_rule {
                DirectionRule::AxisCycling => axis(it - sweep),
                DirectionRule::RandomSphere => rng.unit_vector(d),
            }
        };
        let next = line_winner(&point, &direction, partition)?;
        last_step = dist(&next, &point);
        point = next;
        iterations += 1;
        small_run = if last_step <= threshold { small_run + 1 } else { 0 };
        if small_run >= d {
            return Ok(DescentOutcome {
                point,
                iterations,
                last_step,
                converged: true,
            });
        }
    }
    Ok(DescentOutcome {
        point,
        iterations,
        last_step,
        converged: false,
    })
}

/// Approximate minimizer of `diam(S_a^c)` over `a`, started from `init`
/// (normally the geometric median of the block means).
///
/// With a single block `S_a^c` is the ball around `Z_1` through `a`, so the
/// minimizer is `Z_1` itself and is returned directly.
pub fn lm_estimate(
    samples: &SampleSet,
    partition: &BlockPartition,
    config: &DescentConfig,
    init: &[f64],
) -> Result<Vec<f64>> {
    samples.check_dim(init, "initial point")?;
    if partition.dim() != samples.dim() {
        return Err(invalid("partition and samples disagree on dimension"));
    }
    if partition.k() == 1 {
        return Ok(partition.means()[0].clone());
    }
    descend(partition, init, config)
}

/// Axis-aligned box `[lo, hi]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridBox {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl GridBox {
    /// Bounding box of the block means padded by their diameter on every side.
    pub fn around_means(partition: &BlockPartition) -> Self {
        let pad = partition.diameter();
        let mut b = Self::bounding(partition.means());
        b.lo.iter_mut().for_each(|x| *x -= pad);
        b.hi.iter_mut().for_each(|x| *x += pad);
        b
    }

    /// Tight bounding box of a nonempty point list.
    pub fn bounding(points: &[Vec<f64>]) -> Self {
        let d = points[0].len();
        let mut lo = vec![f64::INFINITY; d];
        let mut hi = vec![f64::NEG_INFINITY; d];
        for p in points {
            for i in 0..d {
                lo[i] = lo[i].min(p[i]);
                hi[i] = hi[i].max(p[i]);
            }
        }
        Self { lo, hi }
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        p.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .all(|(x, (l, h))| *x >= *l && *x <= *h)
    }

    /// Number of grid nodes per axis at spacing `mesh`, anchored at `lo`.
    pub fn nodes_per_axis(&self, mesh: f64) -> Vec<usize> {
        self.lo
            .iter()
            .zip(&self.hi)
            .map(|(l, h)| {
                if h < l {
                    0
                } else {
                    ((h - l) / mesh + 1e-9).floor() as usize + 1
                }
            })
            .collect()
    }

    /// All nodes of the grid, in odometer order with axis 0 fastest.
    pub fn nodes(&self, mesh: f64) -> Vec<Vec<f64>> {
        let counts = self.nodes_per_axis(mesh);
        let total: usize = counts.iter().product();
        let mut out = Vec::with_capacity(total);
        let mut idx = vec![0usize; counts.len()];
        for _ in 0..total {
            out.push(
                idx.iter()
                    .zip(&self.lo)
                    .map(|(&i, l)| l + i as f64 * mesh)
                    .collect(),
            );
            for (axis, c) in idx.iter_mut().zip(&counts) {
                *axis += 1;
                if *axis < *c {
                    break;
                }
                *axis = 0;
            }
        }
        out
    }
}

/// Default grid spacing for the oracle: `diam({Z_j}) / 50`.
pub fn default_mesh(partition: &BlockPartition) -> f64 {
    partition.diameter() / 50.0
}

/// Grid estimate of `diam(S_a^c)`; see [`sac_diameter_oracle_with_budget`].
pub fn sac_diameter_oracle(a: &[f64], partition: &BlockPartition, region: &GridBox, mesh: f64) -> Result<f64> {
    sac_diameter_oracle_with_budget(a, partition, region, mesh, DEFAULT_GRID_BUDGET)
}

/// Diameter of the grid points of `region` (spacing `mesh`) lying in `S_a^c`,
/// together with `a` itself.
///
/// A node `x` belongs to `S_a^c` when at most `k/2` block means satisfy
/// `‖Z_j−x‖ > ‖Z_j−a‖`. Such nodes lie inside at least one ball
/// `B(Z_j, ‖Z_j−a‖)`, so only the part of the grid meeting the bounding box of
/// those balls is scanned. Along each grid line parallel to the first axis only
/// the two outermost members can realize the diameter.
pub fn sac_diameter_oracle_with_budget(
    a: &[f64],
    partition: &BlockPartition,
    region: &GridBox,
    mesh: f64,
    budget: u64,
) -> Result<f64> {
    let d = partition.dim();
    if a.len() != d || region.lo.len() != d || region.hi.len() != d {
        return Err(invalid("candidate or region has the wrong dimension"));
    }
    if !(mesh > 0.0) || !mesh.is_finite() {
        return Err(invalid(format!("mesh must be positive, got {mesh}")));
    }
    let counts = region.nodes_per_axis(mesh);
    if counts.iter().any(|&c| c == 0) {
        return Err(invalid("grid region is empty"));
    }
    let total: u128 = counts.iter().map(|&c| c as u128).product();
    if total > budget as u128 {
        return Err(Error::BudgetExceeded {
            points: total,
            budget,
        });
    }
    if let Some(z) = partition.means().iter().find(|z| !region.contains(z)) {
        return Err(invalid(format!("region does not contain block mean {z:?}")));
    }

    let means = partition.means();
    let k = means.len();
    let radii_sq: Vec<f64> = means.iter().map(|z| dist_sq(z, a)).collect();

    // Index window covering the union of balls, per axis.
    let mut first = vec![0usize; d];
    let mut last = vec![0usize; d];
    for i in 0..d {
        let lo_ball = means
            .iter()
            .zip(&radii_sq)
            .map(|(z, r2)| z[i] - r2.sqrt())
            .fold(f64::INFINITY, f64::min);
        let hi_ball = means
            .iter()
            .zip(&radii_sq)
            .map(|(z, r2)| z[i] + r2.sqrt())
            .fold(f64::NEG_INFINITY, f64::max);
        let lo_idx = ((lo_ball - region.lo[i]) / mesh).ceil().max(0.0);
        let hi_idx = ((hi_ball - region.lo[i]) / mesh).floor();
        if hi_idx < lo_idx || lo_idx >= counts[i] as f64 {
            return Ok(0.0);
        }
        first[i] = lo_idx as usize;
        last[i] = (hi_idx as usize).min(counts[i] - 1);
    }

    let is_member = |x: &[f64]| {
        let farther = means
            .iter()
            .zip(&radii_sq)
            .filter(|(z, r2)| dist_sq(z, x) > **r2)
            .count();
        2 * farther <= k
    };

    let mut extremes: Vec<Vec<f64>> = vec![a.to_vec()];
    let mut idx = first.clone();
    let mut x = vec![0.0; d];
    loop {
        for i in 1..d {
            x[i] = region.lo[i] + idx[i] as f64 * mesh;
        }
        let mut line_first: Option<f64> = None;
        let mut line_last = 0.0;
        for i0 in first[0]..=last[0] {
            x[0] = region.lo[0] + i0 as f64 * mesh;
            if is_member(&x) {
                if line_first.is_none() {
                    line_first = Some(x[0]);
                }
                line_last = x[0];
            }
        }
        if let Some(f) = line_first {
            let mut p = x.clone();
            p[0] = f;
            extremes.push(p.clone());
            if line_last != f {
                p[0] = line_last;
                extremes.push(p);
            }
        }
        // Advance the odometer over axes 1..d.
        let mut axis = 1;
        loop {
            if axis >= d {
                return Ok(crate::linalg::diameter(&extremes));
            }
            idx[axis] += 1;
            if idx[axis] <= last[axis] {
                break;
            }
            idx[axis] = first[axis];
            axis += 1;
        }
    }
}
