//! Bernoulli-bias stopping rule and median amplification.

use crate::error::{invalid, Result};

/// Default constant `c` in the required success count `⌈1 + c/ε²⌉`.
pub const DEFAULT_SUCCESS_CONSTANT: f64 = 5.2;

/// Per-run failure probability assumed for every constant-success estimator
/// in this crate.
pub const BASE_FAILURE: f64 = 1.0 / 3.0;

/// A source of i.i.d. Bernoulli trials with unknown bias, plus a count of
/// how many trials have been drawn from it.
pub struct BernoulliStream<F> {
    next: F,
    trials: u64,
}

impl<F: FnMut() -> Result<bool>> BernoulliStream<F> {
    pub fn new(next: F) -> Self {
        Self { next, trials: 0 }
    }

    pub fn next_trial(&mut self) -> Result<bool> {
        let outcome = (self.next)()?;
        self.trials += 1;
        Ok(outcome)
    }

    pub fn trials_consumed(&self) -> u64 {
        self.trials
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BernoulliEstimate {
    pub p_hat: f64,
    pub successes: u64,
    pub trials: u64,
}

/// Number of successes the stopping rule waits for at accuracy `eps`.
pub fn required_successes(eps: f64, success_constant: f64) -> u64 {
    (1.0 + success_constant / (eps * eps)).ceil() as u64
}

/// Relative-error estimate of a Bernoulli bias.
///
/// Draws until `s = ⌈1 + 5.2/ε²⌉` successes and returns `s / N`, where `N`
/// is the number of trials used. `N` is negative binomial with mean `s/p`,
/// so `1/p̂` is an unbiased estimate of `1/p`.
pub fn bernoulli_estimate<F>(stream: &mut BernoulliStream<F>, eps: f64) -> Result<BernoulliEstimate>
where
    F: FnMut() -> Result<bool>,
{
    bernoulli_estimate_with(stream, eps, DEFAULT_SUCCESS_CONSTANT)
}

pub fn bernoulli_estimate_with<F>(
    stream: &mut BernoulliStream<F>,
    eps: f64,
    success_constant: f64,
) -> Result<BernoulliEstimate>
where
    F: FnMut() -> Result<bool>,
{
    check_eps(eps)?;
    if success_constant.is_nan() || success_constant <= 0.0 {
        return Err(invalid("success constant must be positive"));
    }
    let target = required_successes(eps, success_constant);
    let start = stream.trials_consumed();
    let mut successes = 0;
    while successes < target {
        if stream.next_trial()? {
            successes += 1;
        }
    }
    let trials = stream.trials_consumed() - start;
    Ok(BernoulliEstimate {
        p_hat: successes as f64 / trials as f64,
        successes,
        trials,
    })
}

pub(crate) fn check_eps(eps: f64) -> Result<()> {
    if eps > 0.0 && eps < 1.0 {
        Ok(())
    } else {
        Err(invalid(format!("eps must lie in (0, 1), got {eps}")))
    }
}

/// Probability that at least `⌈r/2⌉` of `r` independent runs fail when each
/// fails with probability `q`, i.e. `P(Bin(r, q) ≥ ⌈r/2⌉)`.
pub fn majority_failure_probability(r: u32, q: f64) -> f64 {
    if q <= 0.0 {
        return 0.0;
    }
    if q >= 1.0 {
        return 1.0;
    }
    let threshold = r.div_ceil(2);
    let log_odds = (q / (1.0 - q)).ln();
    let mut log_pmf = r as f64 * (1.0 - q).ln();
    let mut tail = 0.0;
    for k in 0..=r {
        if k >= threshold {
            tail += log_pmf.exp();
        }
        if k < r {
            log_pmf += ((r - k) as f64 / (k + 1) as f64).ln() + log_odds;
        }
    }
    tail.min(1.0)
}

/// Smallest odd run count whose median fails with probability at most
/// `delta`, given per-run failure `q`.
pub fn repetitions_for(delta: f64, q: f64) -> Result<u32> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(invalid(format!("target failure must lie in (0, 1), got {delta}")));
    }
    if !(q > 0.0 && q < 0.5) {
        return Err(invalid(format!("per-run failure must lie in (0, 1/2), got {q}")));
    }
    // Relative slack absorbs rounding in the log-space tail when the target
    // sits exactly on an attainable value such as `q` itself.
    let mut r = 1;
    while majority_failure_probability(r, q) > delta * (1.0 + 1e-12) {
        r += 2;
    }
    Ok(r)
}

/// The values of `r` independent runs and their median.
#[derive(Debug, Clone, PartialEq)]
pub struct AmplifiedRun {
    /// Run results in ascending order.
    pub values: Vec<f64>,
    pub median: f64,
}

impl AmplifiedRun {
    pub fn runs(&self) -> usize {
        self.values.len()
    }
}

/// Median of `runs` executions of `run`. `runs` must be odd.
pub fn median_of_runs<F>(runs: u32, mut run: F) -> Result<AmplifiedRun>
where
    F: FnMut() -> Result<f64>,
{
    if runs.is_multiple_of(2) {
        return Err(invalid(format!("run count must be odd, got {runs}")));
    }
    let mut values = Vec::with_capacity(runs as usize);
    for _ in 0..runs {
        values.push(run()?);
    }
    Ok(median_of(values))
}

/// Sorts an odd-length vector and picks its middle element.
pub fn median_of(mut values: Vec<f64>) -> AmplifiedRun {
    assert!(values.len() % 2 == 1, "median of an even count");
    values.sort_by(f64::total_cmp);
    let median = values[values.len() / 2];
    AmplifiedRun { values, median }
}

/// Boosts a randomized procedure with per-run failure `q` to failure at most
/// `delta` by taking the median of [`repetitions_for`]`(delta, q)` runs.
///
/// Any interval or one-sided threshold that at least half the runs satisfy is
/// also satisfied by the median, and for nonnegative outputs the median's
/// expectation is at most twice that of a single run.
pub fn median_amplify<F>(run: F, delta: f64, q: f64) -> Result<AmplifiedRun>
where
    F: FnMut() -> Result<f64>,
{
    median_of_runs(repetitions_for(delta, q)?, run)
}
