//! Counter-based random numbers.
//!
//! Every value is a pure function of `(seed, stream, counter)`, so a lazily
//! generated matrix gives the same elements for any partitioning or worker
//! count.

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

#[inline]
fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// A splittable counter-based generator (SplitMix64 finalizer over a keyed
/// counter).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Rng {
    key: u64,
}

impl Rng {
    pub fn new(seed: u64) -> Self {
        Rng { key: mix(seed ^ GOLDEN) }
    }

    /// An independent generator for a named sub-stream.
    pub fn split(&self, stream: u64) -> Rng {
        Rng {
            key: mix(self.key ^ mix(stream.wrapping_add(1).wrapping_mul(GOLDEN))),
        }
    }

    #[inline]
    pub fn u64_at(&self, counter: u64) -> u64 {
        mix(self.key.wrapping_add(counter.wrapping_mul(GOLDEN)))
    }

    /// Uniform in `[0, 1)` with 53 random bits.
    #[inline]
    pub fn uniform_at(&self, counter: u64) -> f64 {
        (self.u64_at(counter) >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Standard normal via Box-Muller on two counter slots.
    #[inline]
    pub fn normal_at(&self, counter: u64) -> f64 {
        let u1 = 1.0 - self.uniform_at(counter.wrapping_mul(2));
        let u2 = self.uniform_at(counter.wrapping_mul(2).wrapping_add(1));
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }

    /// Uniform integer in `[0, bound)`.
    pub fn below_at(&self, counter: u64, bound: u64) -> u64 {
        ((self.u64_at(counter) as u128 * bound as u128) >> 64) as u64
    }
}
