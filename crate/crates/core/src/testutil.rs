use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::stats::chi_square_statistic;

/// Asserts that `observed` is consistent with `probs` at significance `alpha`.
/// Zero-probability categories are dropped from the degrees of freedom.
pub(crate) fn assert_chi_square(observed: &[u64], probs: &[f64], alpha: f64) {
    let stat = chi_square_statistic(observed, probs);
    let df = probs.iter().filter(|&&p| p > 0.0).count() - 1;
    assert!(df >= 1, "need at least two categories");
    let critical = ChiSquared::new(df as f64).unwrap().inverse_cdf(1.0 - alpha);
    assert!(
        stat <= critical,
        "chi-square {stat} exceeds critical {critical} (df={df}); observed {observed:?}, probs {probs:?}"
    );
}
