//! Summary statistics for comparing training runs.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Empirical quantile with linear interpolation between order statistics.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of an empty sample");
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let (lo, hi) = (pos.floor() as usize, pos.ceil() as usize);
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Paired bootstrap of `mean(a - b)`: resamples the pair indices with
/// replacement and returns the (2.5%, 97.5%) percentiles of the resampled
/// mean differences.
pub fn paired_bootstrap_ci(a: &[f64], b: &[f64], resamples: usize, seed: u64) -> (f64, f64) {
    assert_eq!(a.len(), b.len(), "paired samples differ in length");
    assert!(!a.is_empty(), "empty sample");
    let diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = diffs.len();
    let mut means: Vec<f64> = (0..resamples)
        .map(|_| (0..n).map(|_| diffs[rng.random_range(0..n)]).sum::<f64>() / n as f64)
        .collect();
    means.sort_by(f64::total_cmp);
    (quantile(&means, 0.025), quantile(&means, 0.975))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantiles() {
        let s = [1.0, 2.0, 3.0, 4.0, 5.0];
        assert_eq!(quantile(&s, 0.0), 1.0);
        assert_eq!(quantile(&s, 0.5), 3.0);
        assert_eq!(quantile(&s, 0.125), 1.5);
    }

    #[test]
    fn constant_difference_has_degenerate_interval() {
        let a = [5.0, 6.0, 7.0];
        let b = [3.0, 4.0, 5.0];
        assert_eq!(paired_bootstrap_ci(&a, &b, 1000, 1), (2.0, 2.0));
    }

    #[test]
    fn clear_gap_excludes_zero() {
        let a: Vec<f64> = (0..12).map(|i| 100.0 + i as f64).collect();
        let b: Vec<f64> = (0..12).map(|i| 40.0 + (i * 7 % 5) as f64).collect();
        let (lo, hi) = paired_bootstrap_ci(&a, &b, 10_000, 3);
        assert!(lo > 0.0 && lo <= hi);
    }
}
