//! Random number plumbing.
//!
//! Two sources are used:
//!
//! * [`CounterUniform`] is a stateless counter-based generator: the `n`-th
//!   draw is `splitmix64(seed + (n + 1) * 0x9E3779B97F4A7C15)`. It backs the
//!   embedding matrix so that `B` is reproducible from `(seed, sigma, L)`
//!   without depending on any external RNG implementation.
//! * [`stream_rng`] returns a ChaCha8 generator keyed by a seed and a stream
//!   id. The trainer derives one stream per iteration so that resuming from
//!   a checkpoint only needs the iteration counter.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

#[inline]
pub fn splitmix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, Copy)]
pub struct CounterUniform {
    seed: u64,
}

impl CounterUniform {
    pub fn new(seed: u64) -> Self {
        Self { seed }
    }

    #[inline]
    pub fn bits(&self, counter: u64) -> u64 {
        splitmix64(
            self.seed
                .wrapping_add(counter.wrapping_add(1).wrapping_mul(GOLDEN_GAMMA)),
        )
    }

    /// Uniform in (0, 1]: the top 53 bits plus one, scaled by 2^-53.
    #[inline]
    pub fn open01(&self, counter: u64) -> f64 {
        ((self.bits(counter) >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// The `n`-th standard normal, using Box-Muller on draws `2*(n/2)` and
    /// `2*(n/2)+1`: even `n` takes the cosine branch, odd `n` the sine branch.
    pub fn standard_normal(&self, n: u64) -> f64 {
        let pair = n / 2;
        let u1 = self.open01(2 * pair);
        let u2 = self.open01(2 * pair + 1);
        let radius = (-2.0 * u1.ln()).sqrt();
        let angle = std::f64::consts::TAU * u2;
        if n % 2 == 0 {
            radius * angle.cos()
        } else {
            radius * angle.sin()
        }
    }
}

/// A ChaCha8 generator for `(seed, stream)`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Derive an independent seed from a base seed and a label.
pub fn derive_seed(base: u64, label: u64) -> u64 {
    splitmix64(base ^ splitmix64(label.wrapping_add(GOLDEN_GAMMA)))
}
