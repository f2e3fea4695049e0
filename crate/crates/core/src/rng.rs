//! Deterministic random streams with hierarchical derivation.
//!
//! Every stochastic component draws from its own [`RngStream`], derived
//! from a master seed and a path of integer labels. Streams never share
//! state, so runs and grid cells may execute on any number of threads
//! without changing a single sampled value.
//!
//! The generator core is ChaCha8 (value-stable across platforms and crate
//! releases). Seeds are derived with a splitmix64 avalanche over the
//! master seed and the label path, and all float conversions are done here
//! rather than through a distribution crate so the sample sequences are
//! pinned by this module alone.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

/// Weyl increment of splitmix64 (the 64-bit golden ratio).
pub const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// splitmix64 finaliser.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Fold a label path into a master seed.
///
/// Each step advances a splitmix state by the golden gamma, xors in the
/// avalanched label, and re-mixes; the path length is folded in last so
/// `[]` and `[0]` differ.
pub fn derive_seed(master_seed: u64, labels: &[u64]) -> u64 {
    let mut h = mix64(master_seed.wrapping_add(GOLDEN_GAMMA));
    for &label in labels {
        h = mix64(h.wrapping_add(GOLDEN_GAMMA) ^ mix64(label.wrapping_add(GOLDEN_GAMMA)));
    }
    mix64(h ^ (labels.len() as u64).wrapping_mul(GOLDEN_GAMMA))
}

/// A single-owner random stream.
#[derive(Clone, Debug)]
pub struct RngStream {
    seed: u64,
    core: ChaCha8Rng,
}

impl RngStream {
    /// Stream for `labels` under `master_seed`.
    pub fn derive(master_seed: u64, labels: &[u64]) -> Self {
        Self::from_seed(derive_seed(master_seed, labels))
    }

    /// Stream keyed directly by an already-derived seed.
    pub fn from_seed(seed: u64) -> Self {
        Self {
            seed,
            core: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// The seed this stream was created from.
    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Child stream; depends only on this stream's seed, not its position.
    pub fn child(&self, label: u64) -> Self {
        Self::derive(self.seed, &[label])
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.core.next_u64()
    }

    /// Uniform double in `[0, 1)` with 53 random bits.
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform index in `0..n` (Lemire's widening multiply, unbiased).
    pub fn index(&mut self, n: usize) -> usize {
        assert!(n > 0, "index range must be non-empty");
        let n = n as u64;
        let threshold = n.wrapping_neg() % n;
        loop {
            let m = (self.next_u64() as u128) * (n as u128);
            if (m as u64) >= threshold {
                return (m >> 64) as usize;
            }
        }
    }

    /// Gaussian sample by the Marsaglia polar method (only `ln` and `sqrt`).
    ///
    /// `std == 0` returns `mean` exactly without consuming randomness.
    pub fn normal(&mut self, mean: f64, std: f64) -> f64 {
        debug_assert!(std >= 0.0);
        if std == 0.0 {
            return mean;
        }
        loop {
            let u = 2.0 * self.uniform() - 1.0;
            let v = 2.0 * self.uniform() - 1.0;
            let s = u * u + v * v;
            if s > 0.0 && s < 1.0 {
                return mean + std * u * (-2.0 * s.ln() / s).sqrt();
            }
        }
    }

    /// Inverse-CDF draw from a probability vector.
    ///
    /// Rounding slack past the cumulative sum falls to the last bucket with
    /// nonzero mass, so a zero-probability index is never returned.
    pub fn categorical(&mut self, probs: &[f64]) -> usize {
        categorical_at(probs, self.uniform())
    }
}

/// Inverse-CDF lookup for a fixed uniform `u`.
pub(crate) fn categorical_at(probs: &[f64], u: f64) -> usize {
    let mut cumulative = 0.0;
    let mut last_positive = 0;
    for (i, &p) in probs.iter().enumerate() {
        if p > 0.0 {
            cumulative += p;
            last_positive = i;
            if u < cumulative {
                return i;
            }
        }
    }
    last_positive
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn golden_vector_is_pinned() {
        let mut s = RngStream::derive(0x9E37_79B9_7F4A_7C15, &[7]);
        let got: Vec<f64> = (0..3).map(|_| s.uniform()).collect();
        assert_eq!(got, GOLDEN);
    }

    // Recorded from the first implementation; any change here breaks
    // reproducibility of every stored experiment.
    const GOLDEN: [f64; 3] = [0.16290967842761694, 0.9238674844048803, 0.8233816175692752];

    #[test]
    fn distinct_labels_give_distinct_streams() {
        let mut a = RngStream::derive(42, &[0]);
        let mut b = RngStream::derive(42, &[1]);
        let xa: Vec<u64> = (0..8).map(|_| a.next_u64()).collect();
        let xb: Vec<u64> = (0..8).map(|_| b.next_u64()).collect();
        assert_ne!(xa, xb);
        assert_ne!(derive_seed(42, &[]), derive_seed(42, &[0]));
        assert_ne!(derive_seed(42, &[1, 2]), derive_seed(42, &[2, 1]));
    }

    #[test]
    fn derive_is_pure() {
        let mut a = RngStream::derive(7, &[3, 9]);
        let mut b = RngStream::derive(7, &[3, 9]);
        for _ in 0..100 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
    }

    #[test]
    fn child_ignores_position() {
        let mut a = RngStream::from_seed(11);
        let b = a.clone();
        a.uniform();
        assert_eq!(a.child(4).seed(), b.child(4).seed());
    }

    #[test]
    fn zero_std_normal_returns_mean() {
        let mut s = RngStream::from_seed(1);
        assert_eq!(s.normal(2.73, 0.0), 2.73);
    }

    #[test]
    fn uniform_in_unit_interval() {
        let mut s = RngStream::from_seed(5);
        for _ in 0..10_000 {
            let u = s.uniform();
            assert!((0.0..1.0).contains(&u));
        }
    }

    #[test]
    fn normal_moments() {
        let mut s = RngStream::from_seed(99);
        let n = 200_000;
        let xs: Vec<f64> = (0..n).map(|_| s.normal(1.0, 0.5)).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        assert!((mean - 1.0).abs() < 4.0 * 0.5 / (n as f64).sqrt());
        assert!((var - 0.25).abs() < 0.005);
    }

    #[test]
    fn categorical_vertex() {
        let mut s = RngStream::from_seed(3);
        for _ in 0..1000 {
            assert_eq!(s.categorical(&[1.0, 0.0, 0.0]), 0);
        }
    }

    #[test]
    fn categorical_slack_skips_zero_final_bucket() {
        assert_eq!(categorical_at(&[0.5, 0.5 - 1e-13, 0.0], 0.999_999_999_999_99), 1);
        assert_eq!(categorical_at(&[0.0, 1.0], 0.0), 1);
    }

    #[test]
    fn categorical_frequencies_within_three_sigma() {
        let probs = [0.9, 0.05, 0.05];
        let n = 1_000_000usize;
        let mut s = RngStream::derive(2024, &[1]);
        let mut counts = [0usize; 3];
        for _ in 0..n {
            counts[s.categorical(&probs)] += 1;
        }
        for (c, p) in counts.iter().zip(probs) {
            let sigma = (n as f64 * p * (1.0 - p)).sqrt();
            assert!((*c as f64 - n as f64 * p).abs() <= 3.0 * sigma, "{counts:?}");
        }
    }

    #[test]
    fn index_is_in_range() {
        let mut s = RngStream::from_seed(8);
        for n in 1..50 {
            assert!(s.index(n) < n);
        }
    }
}
