use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::exec::{self, Parallelism};

/// Standard deviation of `statistic` over `resamples` with-replacement
/// resamples of `values`.
///
/// Resampling indexes a sorted copy of the input, and resample `i` draws
/// from its own ChaCha stream, so the result depends only on the multiset of
/// values and the seed, in either execution mode.
pub fn bootstrap_std<F>(values: &[f64], resamples: usize, seed: u64, mode: Parallelism, statistic: F) -> f64
where
    F: Fn(&[f64]) -> f64 + Sync + Send,
{
    assert!(!values.is_empty(), "bootstrap needs at least one value");
    assert!(resamples >= 1, "bootstrap needs at least one resample");
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();

    let stats: Vec<f64> = exec::map_range(mode, resamples, |i| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(i as u64);
        let sample: Vec<f64> = (0..n).map(|_| sorted[rng.random_range(0..n)]).collect();
        statistic(&sample)
    });
    if resamples < 2 {
        return 0.0;
    }
    let mean = stats.iter().sum::<f64>() / resamples as f64;
    let var = stats.iter().map(|s| (s - mean) * (s - mean)).sum::<f64>() / (resamples - 1) as f64;
    var.sqrt()
}

pub fn sample_mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// [`bootstrap_std`] of the sample mean.
pub fn bootstrap_std_of_mean(values: &[f64], resamples: usize, seed: u64, mode: Parallelism) -> f64 {
    bootstrap_std(values, resamples, seed, mode, sample_mean)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn constant_sample_has_no_spread() {
        assert!(bootstrap_std_of_mean(&[0.3; 17], 200, 1, Parallelism::default()) < 1e-12);
    }

    #[test]
    fn deterministic_given_seed() {
        let xs: Vec<f64> = (0..50).map(|i| (i as f64).sin()).collect();
        let a = bootstrap_std_of_mean(&xs, 500, 42, Parallelism::Rayon);
        let b = bootstrap_std_of_mean(&xs, 500, 42, Parallelism::Sequential);
        assert_eq!(a.to_bits(), b.to_bits());
        let c = bootstrap_std_of_mean(&xs, 500, 43, Parallelism::Sequential);
        assert_ne!(a, c);
    }

    #[test]
    fn bernoulli_mean_matches_analytic_std() {
        let xs: Vec<f64> = (0..100).map(|i| (i % 2) as f64).collect();
        let analytic = (0.5f64 * 0.5 / 100.0).sqrt();
        let est = bootstrap_std_of_mean(&xs, 10_000, 7, Parallelism::default());
        assert!((est - analytic).abs() < 0.01, "{est} vs {analytic}");
    }

    proptest! {
        #[test]
        fn invariant_to_input_order(mut xs in prop::collection::vec(-5.0f64..5.0, 1..30), seed in any::<u64>()) {
            let a = bootstrap_std_of_mean(&xs, 50, seed, Parallelism::Sequential);
            xs.reverse();
            let b = bootstrap_std_of_mean(&xs, 50, seed, Parallelism::Sequential);
            prop_assert_eq!(a.to_bits(), b.to_bits());
        }
    }
}
