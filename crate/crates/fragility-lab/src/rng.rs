//! Deterministic random number streams.
//!
//! Every sampling routine in this crate draws from an explicit [`RngStream`]
//! rather than a global generator, so a run is reproducible from its seed
//! alone on any platform.  Independent sub-experiments get their own streams
//! through [`RngStream::child`], which mixes the parent seed with a task
//! index; two children with different indices never share state even though
//! they are derived from the same parent.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// A seeded, splittable random stream backed by ChaCha8.
///
/// ChaCha8 is counter-based and produces identical output across
/// architectures, unlike generators that depend on platform word order.
#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64) -> Self {
        RngStream {
            seed,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// Seed this stream was created from.
    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Derive an independent stream for sub-task `index`.
    ///
    /// The child seed is the SplitMix64 finalizer applied to
    /// `seed XOR (index + 1) * phi64`, where `phi64` is the 64-bit golden
    /// ratio constant.  The finalizer's avalanche behaviour keeps children
    /// of neighbouring indices uncorrelated; the `+ 1` keeps child 0 from
    /// collapsing onto the parent seed.
    pub fn child(&self, index: u64) -> RngStream {
        let mut z = self.seed ^ index.wrapping_add(1).wrapping_mul(0x9E3779B97F4A7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
        RngStream::new(z ^ (z >> 31))
    }

    /// Standard normal draw.
    pub fn normal(&mut self) -> f64 {
        StandardNormal.sample(&mut self.rng)
    }

    /// Uniform draw from `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.rng.random::<f64>()
    }

    /// Uniform integer in `[0, bound)`.
    pub fn below(&mut self, bound: u64) -> u64 {
        self.rng.random_range(0..bound)
    }

    /// Fisher-Yates shuffle, consuming one draw per element.
    pub fn shuffle<T>(&mut self, xs: &mut [T]) {
        for i in (1..xs.len()).rev() {
            let j = self.below(i as u64 + 1) as usize;
            xs.swap(i, j);
        }
    }

    /// Sample from an arbitrary `rand_distr` distribution.
    pub fn sample<D, T>(&mut self, dist: &D) -> T
    where
        D: Distribution<T>,
    {
        dist.sample(&mut self.rng)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_draws() {
        let mut a = RngStream::new(42);
        let mut b = RngStream::new(42);
        for _ in 0..100 {
            assert_eq!(a.normal().to_bits(), b.normal().to_bits());
        }
    }

    #[test]
    fn children_are_distinct() {
        let root = RngStream::new(7);
        let mut seen = std::collections::HashSet::new();
        for i in 0..1000 {
            assert!(seen.insert(root.child(i).seed()));
        }
        assert!(!seen.contains(&root.seed()));
    }

    #[test]
    fn child_derivation_is_stable() {
        // Frozen values: changing the mixing function would silently retune
        // every seeded experiment, so the derivation is pinned here.
        let root = RngStream::new(0);
        assert_eq!(root.child(0).seed(), 0xE220A8397B1DCDAF);
        assert_eq!(root.child(1).seed(), 0x6E789E6AA1B965F4);
        let root = RngStream::new(123);
        assert_eq!(root.child(5).seed(), 0xD30F0DEF0FB13E2A);
    }

    #[test]
    fn shuffle_is_a_permutation() {
        let mut rng = RngStream::new(3);
        let mut xs: Vec<u32> = (0..50).collect();
        rng.shuffle(&mut xs);
        let mut sorted = xs.clone();
        sorted.sort_unstable();
        assert_eq!(sorted, (0..50).collect::<Vec<_>>());
        assert_ne!(xs, (0..50).collect::<Vec<_>>());
    }

    #[test]
    fn normal_moments() {
        let mut rng = RngStream::new(11);
        let n = 200_000;
        let (mut s1, mut s2) = (0.0, 0.0);
        for _ in 0..n {
            let x = rng.normal();
            s1 += x;
            s2 += x * x;
        }
        let mean = s1 / n as f64;
        let var = s2 / n as f64 - mean * mean;
        assert!(mean.abs() < 0.01, "mean {mean}");
        assert!((var - 1.0).abs() < 0.02, "var {var}");
    }
}
