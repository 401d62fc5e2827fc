//! Seeded randomness.
//!
//! Every random choice in the crate goes through [`RandomSource`], a ChaCha8
//! stream keyed by a 64-bit seed. Identical seeds and identical call
//! sequences give bit-identical draws. Independent streams for parallel runs
//! are derived with [`RandomSource::fork`], which mixes `(seed, stream_id)`
//! through SplitMix64.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{invalid, Result};

#[derive(Clone, Debug)]
pub struct RandomSource {
    seed: u64,
    rng: ChaCha8Rng,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Child seed for stream `stream_id` of `seed`.
pub fn derive_seed(seed: u64, stream_id: u64) -> u64 {
    splitmix64(seed ^ splitmix64(stream_id.wrapping_add(0xD1B5_4A32_D192_ED03)))
}

impl RandomSource {
    pub fn new(seed: u64) -> Self {
        RandomSource { seed, rng: ChaCha8Rng::seed_from_u64(seed) }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Independent source for `stream_id`, e.g. a grid cell or a repeat.
    pub fn fork(&self, stream_id: u64) -> RandomSource {
        RandomSource::new(derive_seed(self.seed, stream_id))
    }

    /// Uniform draw from `0..n` (component `i` of the finite sum is index `i - 1`).
    pub fn draw_index(&mut self, n: usize) -> Result<usize> {
        if n == 0 {
            return invalid("cannot draw an index from an empty range");
        }
        Ok(self.index_unchecked(n))
    }

    pub(crate) fn index_unchecked(&mut self, n: usize) -> usize {
        self.rng.random_range(0..n)
    }

    /// Uniform in `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.rng.random::<f64>()
    }

    pub fn standard_normal(&mut self) -> f64 {
        StandardNormal.sample(&mut self.rng)
    }

    /// Index drawn with probability proportional to `weights[i]`.
    pub fn weighted_index(&mut self, weights: &[f64]) -> Result<usize> {
        let total: f64 = weights.iter().sum();
        if weights.is_empty() || weights.iter().any(|w| !(*w >= 0.0)) || !(total > 0.0) || !total.is_finite() {
            return invalid("weights must be non-negative, finite, with positive sum");
        }
        let target = self.uniform() * total;
        let mut acc = 0.0;
        for (i, w) in weights.iter().enumerate() {
            acc += w;
            if target < acc {
                return Ok(i);
            }
        }
        // Rounding left target at the very top; return the last positive weight.
        Ok(weights.iter().rposition(|w| *w > 0.0).unwrap_or(weights.len() - 1))
    }

    /// `k` distinct indices from `0..n`, uniformly over subsets, in draw order.
    pub fn sample_without_replacement(&mut self, n: usize, k: usize) -> Result<Vec<usize>> {
        if k > n {
            return invalid(format!("cannot draw {k} distinct items from {n}"));
        }
        let mut perm: Vec<usize> = (0..n).collect();
        for i in 0..k {
            let j = i + self.index_unchecked(n - i);
            perm.swap(i, j);
        }
        perm.truncate(k);
        Ok(perm)
    }

    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.index_unchecked(i + 1);
            items.swap(i, j);
        }
    }
}

/// Draws mini-batches of distinct component indices.
///
/// Keeps a permutation buffer and performs a partial Fisher-Yates pass per
/// draw, so a batch costs `O(b)` regardless of `n`.
#[derive(Clone, Debug)]
pub struct BatchSampler {
    perm: Vec<usize>,
}

impl BatchSampler {
    pub fn new(n: usize) -> Self {
        BatchSampler { perm: (0..n).collect() }
    }

    pub fn draw(&mut self, rng: &mut RandomSource, batch: usize) -> &[usize] {
        let n = self.perm.len();
        debug_assert!(batch >= 1 && batch <= n);
        for i in 0..batch {
            let j = i + rng.index_unchecked(n - i);
            self.perm.swap(i, j);
        }
        &self.perm[..batch]
    }
}

/// Size-one reservoir: after `k` offers, each offered item is held with probability `1/k`.
#[derive(Clone, Debug)]
pub struct Reservoir<T> {
    seen: u64,
    item: Option<T>,
}

impl<T> Default for Reservoir<T> {
    fn default() -> Self {
        Reservoir { seen: 0, item: None }
    }
}

impl<T> Reservoir<T> {
    pub fn new() -> Self {
        Self::default()
    }

    /// Offers the item produced by `make`; `make` only runs if the item is kept.
    pub fn offer_with(&mut self, rng: &mut RandomSource, make: impl FnOnce() -> T) {
        self.seen += 1;
        let keep = self.seen == 1 || rng.uniform() * (self.seen as f64) < 1.0;
        if keep {
            self.item = Some(make());
        }
    }

    pub fn seen(&self) -> u64 {
        self.seen
    }

    pub fn into_item(self) -> Option<T> {
        self.item
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_item_range_always_zero() {
        let mut rng = RandomSource::new(3);
        for _ in 0..100 {
            assert_eq!(rng.draw_index(1).unwrap(), 0);
        }
        assert!(rng.draw_index(0).is_err());
    }

    #[test]
    fn determinism() {
        let mut a = RandomSource::new(42);
        let mut b = RandomSource::new(42);
        let xs: Vec<usize> = (0..50).map(|_| a.draw_index(1000).unwrap()).collect();
        let ys: Vec<usize> = (0..50).map(|_| b.draw_index(1000).unwrap()).collect();
        assert_eq!(xs, ys);
        assert_eq!(a.uniform().to_bits(), b.uniform().to_bits());
        assert_ne!(RandomSource::new(1).fork(0).seed(), RandomSource::new(1).fork(1).seed());
        assert_eq!(RandomSource::new(1).fork(5).seed(), RandomSource::new(1).fork(5).seed());
    }

    #[test]
    fn four_buckets_within_band() {
        let mut rng = RandomSource::new(2024);
        let mut counts = [0usize; 4];
        for _ in 0..40_000 {
            counts[rng.draw_index(4).unwrap()] += 1;
        }
        for c in counts {
            assert!((9500..=10500).contains(&c), "{counts:?}");
        }
    }

    #[test]
    fn every_index_within_five_sigma() {
        for (seed, n) in [(1u64, 2usize), (7, 10), (99, 37)] {
            let mut rng = RandomSource::new(seed);
            let draws = 10_000 * n;
            let mut counts = vec![0usize; n];
            for _ in 0..draws {
                counts[rng.draw_index(n).unwrap()] += 1;
            }
            let p = 1.0 / n as f64;
            let sigma = (draws as f64 * p * (1.0 - p)).sqrt();
            for c in counts {
                assert!((c as f64 - draws as f64 * p).abs() <= 5.0 * sigma);
            }
        }
    }

    #[test]
    fn weighted_index_rejects_bad_weights() {
        let mut rng = RandomSource::new(0);
        assert!(rng.weighted_index(&[]).is_err());
        assert!(rng.weighted_index(&[0.0, 0.0]).is_err());
        assert!(rng.weighted_index(&[1.0, -1.0]).is_err());
        assert_eq!(rng.weighted_index(&[0.0, 3.0]).unwrap(), 1);
    }

    #[test]
    fn without_replacement_is_distinct() {
        let mut rng = RandomSource::new(11);
        let mut s = rng.sample_without_replacement(50, 20).unwrap();
        s.sort_unstable();
        s.dedup();
        assert_eq!(s.len(), 20);
        assert!(rng.sample_without_replacement(3, 4).is_err());
    }

    #[test]
    fn batch_sampler_distinct_members() {
        let mut rng = RandomSource::new(5);
        let mut sampler = BatchSampler::new(30);
        for _ in 0..100 {
            let mut b = sampler.draw(&mut rng, 7).to_vec();
            b.sort_unstable();
            b.dedup();
            assert_eq!(b.len(), 7);
            assert!(b.iter().all(|&i| i < 30));
        }
    }

    #[test]
    fn reservoir_uniform_over_stream() {
        let mut rng = RandomSource::new(77);
        let trials = 30_000;
        let mut counts = [0usize; 5];
        for _ in 0..trials {
            let mut r = Reservoir::new();
            for item in 0..5usize {
                r.offer_with(&mut rng, || item);
            }
            counts[r.into_item().unwrap()] += 1;
        }
        for c in counts {
            assert!((c as f64 / trials as f64 - 0.2).abs() < 0.01, "{counts:?}");
        }
    }
}
