//! Sample storage, block partitioning and block means.

use crate::error::{invalid, Error, Result};

/// `N` points in `R^d`, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    data: Vec<f64>,
    n: usize,
    dim: usize,
}

impl SampleSet {
    /// Builds a sample set from a flat row-major buffer of `n * dim` values.
    pub fn from_flat(data: Vec<f64>, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(invalid("dimension must be at least 1"));
        }
        if data.is_empty() {
            return Err(invalid("sample set must contain at least one point"));
        }
        if data.len() % dim != 0 {
            return Err(invalid(format!(
                "buffer of length {} is not a multiple of dimension {dim}",
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|x| !x.is_finite()) {
            return Err(invalid(format!(
                "non-finite coordinate in point {} (coordinate {})",
                pos / dim,
                pos % dim
            )));
        }
        let n = data.len() / dim;
        Ok(Self { data, n, dim })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let dim = rows.first().map(|r| r.as_ref().len()).unwrap_or(0);
        let mut data = Vec::with_capacity(rows.len() * dim);
        for (i, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.len() != dim {
                return Err(invalid(format!(
                    "point {i} has dimension {} but point 0 has dimension {dim}",
                    row.len()
                )));
            }
            data.extend_from_slice(row);
        }
        Self::from_flat(data, dim)
    }

    /// One-dimensional samples.
    pub fn from_scalars(values: &[f64]) -> Result<Self> {
        Self::from_flat(values.to_vec(), 1)
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.data.chunks_exact(self.dim)
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.data
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.points().map(<[f64]>::to_vec).collect()
    }

    /// Applies `f` to every point, producing a new set of dimension `dim`.
    pub fn map_points<F>(&self, dim: usize, mut f: F) -> Result<Self>
    where
        F: FnMut(&[f64]) -> Vec<f64>,
    {
        let mut data = Vec::with_capacity(self.n * dim);
        for p in self.points() {
            let q = f(p);
            if q.len() != dim {
                return Err(invalid("mapped point has the wrong dimension"));
            }
            data.extend(q);
        }
        Self::from_flat(data, dim)
    }

    /// Reorders points by `order`, which must be a permutation of `0..n`.
    pub fn permuted(&self, order: &[usize]) -> Self {
        debug_assert_eq!(order.len(), self.n);
        let mut data = Vec::with_capacity(self.data.len());
        for &i in order {
            data.extend_from_slice(self.point(i));
        }
        Self {
            data,
            n: self.n,
            dim: self.dim,
        }
    }

    pub(crate) fn check_dim(&self, v: &[f64], what: &str) -> Result<()> {
        if v.len() != self.dim {
            return Err(invalid(format!(
                "{what} has dimension {} but samples have dimension {}",
                v.len(),
                self.dim
            )));
        }
        Ok(())
    }
}

/// A partition of sample indices into `k` blocks together with the block means.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockPartition {
    blocks: Vec<Vec<usize>>,
    means: Vec<Vec<f64>>,
    diameter: f64,
}

impl BlockPartition {
    /// Validates an explicit partition of `0..samples.len()` and computes its means.
    ///
    /// Blocks must be nonempty, disjoint, cover every index, and have sizes
    /// `floor(N/k)` or `ceil(N/k)`.
    pub fn from_blocks(blocks: Vec<Vec<usize>>, samples: &SampleSet) -> Result<Self> {
        let n = samples.len();
        let k = blocks.len();
        if k == 0 || k > n {
            return Err(invalid(format!("block count {k} outside 1..={n}")));
        }
        let means = block_means(&blocks, samples)?;
        let mut seen = vec![false; n];
        let (lo, hi) = (n / k, n.div_ceil(k));
        for (j, block) in blocks.iter().enumerate() {
            if block.len() < lo || block.len() > hi {
                return Err(Error::CorruptPartition(format!(
                    "block {j} has size {}, expected {lo} or {hi}",
                    block.len()
                )));
            }
            for &i in block {
                if std::mem::replace(&mut seen[i], true) {
                    return Err(Error::CorruptPartition(format!("index {i} appears twice")));
                }
            }
        }
        if let Some(missing) = seen.iter().position(|&s| !s) {
            return Err(Error::CorruptPartition(format!("index {missing} not covered")));
        }
        let diameter = crate::linalg::diameter(&means);
        Ok(Self {
            blocks,
            means,
            diameter,
        })
    }

    pub fn k(&self) -> usize {
        self.blocks.len()
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    /// Block means `Z_1..Z_k`.
    pub fn means(&self) -> &[Vec<f64>] {
        &self.means
    }

    pub fn dim(&self) -> usize {
        self.means[0].len()
    }

    /// Diameter of the set of block means.
    pub fn diameter(&self) -> f64 {
        self.diameter
    }
}

/// Splits `0..N` into `k` contiguous runs; the first `N mod k` runs take one
/// extra index.
pub fn make_partition(samples: &SampleSet, k: usize) -> Result<BlockPartition> {
    let n = samples.len();
    if k < 1 || k > n {
        return Err(invalid(format!("block count k={k} must satisfy 1 <= k <= N={n}")));
    }
    let (base, extra) = (n / k, n % k);
    let mut blocks = Vec::with_capacity(k);
    let mut start = 0;
    for j in 0..k {
        let size = base + usize::from(j < extra);
        blocks.push((start..start + size).collect());
        start += size;
    }
    BlockPartition::from_blocks(blocks, samples)
}

/// Coordinatewise mean of each block, accumulated left to right in block order.
pub fn block_means(blocks: &[Vec<usize>], samples: &SampleSet) -> Result<Vec<Vec<f64>>> {
    let n = samples.len();
    blocks
        .iter()
        .enumerate()
        .map(|(j, block)| {
            if block.is_empty() {
                return Err(Error::CorruptPartition(format!("block {j} is empty")));
            }
            let mut sum = vec![0.0; samples.dim()];
            for &i in block {
                if i >= n {
                    return Err(Error::CorruptPartition(format!(
                        "block {j} references index {i} but N={n}"
                    )));
                }
                for (s, x) in sum.iter_mut().zip(samples.point(i)) {
                    *s += x;
                }
            }
            let size = block.len() as f64;
            Ok(sum.into_iter().map(|s| s / size).collect())
        })
        .collect()
}
