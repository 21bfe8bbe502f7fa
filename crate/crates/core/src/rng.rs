//! Deterministic counter-based random number generator.
//!
//! SplitMix64: the state advances by a fixed odd constant (a Weyl sequence,
//! i.e. a counter) and each output is an avalanche mix of the counter value.
//! Constants follow the reference implementation, so streams are
//! bit-identical across platforms and implementations:
//!
//! - increment `0x9E3779B97F4A7C15`
//! - mix multipliers `0xBF58476D1CE4E5B9`, `0x94D049BB133111EB`
//! - mix shifts `30`, `27`, `31`
//!
//! Gaussian variates use the Box-Muller transform through `libm`, keeping
//! generated corpora reproducible everywhere. Not cryptographically secure.

/// Counter-based 64-bit generator with a fixed, documented stream.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitMix64 {
    state: u64,
}

const INCREMENT: u64 = 0x9E37_79B9_7F4A_7C15;

impl SplitMix64 {
    pub const fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(INCREMENT);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform in `[0, 1)` with 53 bits of precision.
    #[inline]
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in `(0, 1]`; never zero, safe under `ln`.
    #[inline]
    fn next_f64_open(&mut self) -> f64 {
        ((self.next_u64() >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform integer in `[0, bound)`. `bound` must be non-zero. Uses the
    /// modulo reduction; the bias is irrelevant at the bounds used here and
    /// keeps the stream layout trivial to document.
    #[inline]
    pub fn next_range(&mut self, bound: u64) -> u64 {
        debug_assert!(bound > 0);
        self.next_u64() % bound
    }

    /// Bernoulli draw with probability `p`.
    #[inline]
    pub fn next_bool(&mut self, p: f64) -> bool {
        self.next_f64() < p
    }

    /// Standard normal via Box-Muller; consumes exactly two uniforms.
    pub fn next_gaussian(&mut self) -> f64 {
        let u1 = self.next_f64_open();
        let u2 = self.next_f64();
        let r = libm::sqrt(-2.0 * libm::log(u1));
        r * libm::cos(2.0 * core::f64::consts::PI * u2)
    }
}
