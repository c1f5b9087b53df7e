//! Small statistics used by the trial summaries and the statistical tests.

/// 95% Wilson score interval for `successes` out of `trials`.
///
/// Returns `(0, 1)` for zero trials.
pub fn wilson_interval(successes: u64, trials: u64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    const Z: f64 = 1.959_963_984_540_054;
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = Z * Z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = Z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}

/// Nearest-rank percentile (`q` in `(0, 1]`) of unsorted values.
pub fn percentile(values: &[u64], q: f64) -> Option<u64> {
    if values.is_empty() {
        return None;
    }
    let mut sorted = values.to_vec();
    sorted.sort_unstable();
    let rank = (q * sorted.len() as f64).ceil().max(1.0) as usize;
    Some(sorted[rank.min(sorted.len()) - 1])
}

/// Pearson chi-square statistic of `observed` counts against `probs`.
///
/// Categories with zero expected probability must have zero observations;
/// otherwise the statistic is infinite.
pub fn chi_square_statistic(observed: &[u64], probs: &[f64]) -> f64 {
    let total: u64 = observed.iter().sum();
    let total = total as f64;
    observed
        .iter()
        .zip(probs)
        .map(|(&o, &p)| {
            let expected = p * total;
            if expected == 0.0 {
                if o == 0 {
                    0.0
                } else {
                    f64::INFINITY
                }
            } else {
                let diff = o as f64 - expected;
                diff * diff / expected
            }
        })
        .sum()
}

/// Total-variation distance between empirical counts and `probs`.
pub fn total_variation(observed: &[u64], probs: &[f64]) -> f64 {
    let total: u64 = observed.iter().sum();
    0.5 * observed
        .iter()
        .zip(probs)
        .map(|(&o, &p)| (o as f64 / total as f64 - p).abs())
        .sum::<f64>()
}

/// Least-squares slope of `ys` against `xs`.
pub fn slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let cov: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let var: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    cov / var
}
