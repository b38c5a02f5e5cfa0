//! Counter-based random streams.
//!
//! Every draw is a pure function of `(key, counter)`: output `i` of a stream
//! with key `K` is `mix64(K + (i + 1) * GOLDEN_GAMMA)`, where `mix64` is the
//! SplitMix64 finalizer (Stafford variant 13, constants `0xbf58476d1ce4e5b9`
//! and `0x94d049bb133111eb`) and `GOLDEN_GAMMA = 0x9e3779b97f4a7c15`. A stream
//! keyed this way reproduces the classic SplitMix64 sequence seeded with `K`.
//!
//! Substreams are derived with [`Stream::substream`], which hashes the parent
//! key together with an index. Monte Carlo trials use `substream(seed, trial)`
//! so results do not depend on how trials are scheduled across threads.

const GOLDEN_GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;
const SUBSTREAM_SALT: u64 = 0xd1b5_4a32_d192_ed03;

#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// A counter-based 64-bit stream.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Stream {
    key: u64,
    counter: u64,
    spare_normal: Option<u64>,
}

impl Stream {
    pub fn new(seed: u64) -> Self {
        Self {
            key: seed,
            counter: 0,
            spare_normal: None,
        }
    }

    /// Independent child stream `index` of a stream keyed by `seed`.
    pub fn substream(seed: u64, index: u64) -> Self {
        let key = mix64(seed ^ mix64(index.wrapping_add(1).wrapping_mul(SUBSTREAM_SALT)));
        Self::new(mix64(key.wrapping_add(GOLDEN_GAMMA)))
    }

    /// Child stream of this stream's key; does not advance `self`.
    pub fn split(&self, index: u64) -> Self {
        Self::substream(self.key, index)
    }

    pub fn key(&self) -> u64 {
        self.key
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.counter = self.counter.wrapping_add(1);
        mix64(self.key.wrapping_add(self.counter.wrapping_mul(GOLDEN_GAMMA)))
    }

    /// Uniform on [0, 1) with 53 bits of precision.
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform on the open interval (0, 1).
    #[inline]
    pub fn uniform_open(&mut self) -> f64 {
        ((self.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform integer in `0..bound` (Lemire's multiply-shift with rejection).
    pub fn below(&mut self, bound: u64) -> u64 {
        assert!(bound > 0);
        let threshold = bound.wrapping_neg() % bound;
        loop {
            let m = (self.next_u64() as u128) * (bound as u128);
            if (m as u64) >= threshold {
                return (m >> 64) as u64;
            }
        }
    }

    /// Standard normal via Box–Muller; the second variate of each pair is cached.
    pub fn normal(&mut self) -> f64 {
        if let Some(bits) = self.spare_normal.take() {
            return f64::from_bits(bits);
        }
        let u1 = self.uniform_open();
        let u2 = self.uniform();
        let radius = (-2.0 * u1.ln()).sqrt();
        let angle = std::f64::consts::TAU * u2;
        self.spare_normal = Some((radius * angle.sin()).to_bits());
        radius * angle.cos()
    }

    /// Gamma(shape, 1) by Marsaglia–Tsang, with the `U^{1/shape}` boost below shape 1.
    pub fn gamma(&mut self, shape: f64) -> f64 {
        debug_assert!(shape > 0.0);
        if shape < 1.0 {
            let u = self.uniform_open();
            return self.gamma(shape + 1.0) * u.powf(1.0 / shape);
        }
        let d = shape - 1.0 / 3.0;
        let c = 1.0 / (9.0 * d).sqrt();
        loop {
            let x = self.normal();
            let v = 1.0 + c * x;
            if v <= 0.0 {
                continue;
            }
            let v = v * v * v;
            let u = self.uniform_open();
            if u < 1.0 - 0.0331 * x * x * x * x || u.ln() < 0.5 * x * x + d * (1.0 - v + v.ln()) {
                return d * v;
            }
        }
    }

    /// Chi-squared with `dof` degrees of freedom.
    pub fn chi_squared(&mut self, dof: f64) -> f64 {
        2.0 * self.gamma(dof / 2.0)
    }

    /// Uniform direction on the unit sphere in `dim` dimensions.
    pub fn unit_vector(&mut self, dim: usize) -> Vec<f64> {
        loop {
            let v: Vec<f64> = (0..dim).map(|_| self.normal()).collect();
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 1e-300 {
                return v.into_iter().map(|x| x / norm).collect();
            }
        }
    }

    /// In-place Fisher–Yates shuffle.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i as u64 + 1) as usize;
            items.swap(i, j);
        }
    }
}
