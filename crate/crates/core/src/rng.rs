//! Deterministic random number generation.
//!
//! Sampling must be reproducible from a single seed regardless of the order
//! in which rows or coordinates are drawn, so every consumer derives one
//! independent [`SplitMix64`] stream per index via [`stream`] instead of
//! sharing a generator.
//!
//! SplitMix64 is not cryptographically secure. The privacy guarantee of a
//! mechanism rests on its (ε,δ) parameters, not on the unpredictability of
//! the noise source; deployments facing adversarial consumers of raw
//! randomness should swap in a CSPRNG.

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finalizer: a full-avalanche mix of one word.
#[inline]
fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Deterministic PRNG (SplitMix64).
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN);
        mix(self.state)
    }

    /// Uniform f64 in the open interval (0, 1).
    pub fn next_f64(&mut self) -> f64 {
        loop {
            let u = (self.next_u64() >> 11) as f64 / ((1u64 << 53) as f64);
            if u > 0.0 && u < 1.0 {
                return u;
            }
        }
    }

    /// Sample from Laplace(0, b) by inverse-CDF.
    pub fn next_laplace(&mut self, b: f64) -> f64 {
        let u = self.next_f64() - 0.5;
        let sign = if u < 0.0 { -1.0 } else { 1.0 };
        -b * sign * libm::log(1.0 - 2.0 * libm::fabs(u))
    }
}

/// The stream-splitting rule: the generator for stream `index` under `seed`
/// is `SplitMix64::new(mix(seed + mix(index * GOLDEN)))`. Each (seed, index)
/// pair yields a fully avalanched starting state, so streams for distinct
/// indices are independent for statistical purposes and can be drawn in any
/// order (or in parallel) without changing the result.
pub fn stream(seed: u64, index: u64) -> SplitMix64 {
    SplitMix64::new(mix(seed.wrapping_add(mix(index.wrapping_mul(GOLDEN)))))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_given_seed() {
        let mut a = SplitMix64::new(42);
        let mut b = SplitMix64::new(42);
        for _ in 0..100 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
    }

    #[test]
    fn streams_differ_and_ignore_draw_order() {
        let first: f64 = stream(7, 0).next_f64();
        let mut second = stream(7, 1);
        let _ = second.next_f64();
        // Re-deriving stream 0 after using stream 1 reproduces the draw.
        assert_eq!(stream(7, 0).next_f64(), first);
        assert_ne!(stream(7, 1).next_f64(), first);
    }

    #[test]
    fn uniform_open_interval() {
        let mut g = SplitMix64::new(1);
        for _ in 0..10_000 {
            let u = g.next_f64();
            assert!(u > 0.0 && u < 1.0);
        }
    }

    #[test]
    fn laplace_moments() {
        // E|X| = b and Var X = 2 b^2 for Laplace(0, b).
        let mut g = SplitMix64::new(99);
        let n = 100_000;
        let b = 1.5;
        let (mut sum, mut abs_sum, mut sq_sum) = (0.0, 0.0, 0.0);
        for _ in 0..n {
            let x = g.next_laplace(b);
            sum += x;
            abs_sum += x.abs();
            sq_sum += x * x;
        }
        let mean = sum / n as f64;
        let mean_abs = abs_sum / n as f64;
        let var = sq_sum / n as f64 - mean * mean;
        assert!(mean.abs() < 0.03, "mean {mean}");
        assert!((mean_abs - b).abs() < 0.03, "mean abs {mean_abs}");
        assert!((var - 2.0 * b * b).abs() < 0.2, "var {var}");
    }
}
