//! Estimators that use both the proportional and the uniform oracle.

use std::collections::HashSet;

use crate::amplify::{bernoulli_estimate, check_eps, median_amplify, BernoulliStream, BASE_FAILURE};
use crate::error::{invalid, Error, Result};
use crate::numeric::exact_sum;
use crate::proportional::prop_estimate;
use crate::sampling::{DrawBudget, HybridOracle, ItemDraw, ItemId, ProportionalOracle, UniformOracle};

/// Default multiplier `C` of the hybrid abort budget `C·n^{1/3}/ε^{4/3}`.
pub const DEFAULT_ABORT_CONSTANT: f64 = 1000.0;

/// Rank (from the top) of the sampled weight used as the threshold.
pub const THRESHOLD_RANK: usize = 180;

const HARMONIC_P_FAILURE: f64 = 0.1;
const HYBRID_STAGE_FAILURE: f64 = 0.05;
const NO_ADVICE_HYBRID_STAGE_FAILURE: f64 = 1.0 / 6.0;

/// Birthday-paradox set size estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SetSizeResult {
    /// Distinct items seen before the first repeat.
    pub s_hat: u64,
    /// `4 ŝ²`.
    pub n_hat: u64,
}

/// Draws uniformly until the first repeated item. With probability at least
/// 2/3 the returned `n_hat` is at least `n`, and its expectation is `O(n)`.
pub fn set_size_estimate<O>(oracle: &mut O) -> Result<SetSizeResult>
where
    O: UniformOracle + ?Sized,
{
    let mut seen: HashSet<ItemId> = HashSet::new();
    loop {
        let draw = oracle.sample_uniform()?;
        if !seen.insert(draw.id) {
            let s_hat = seen.len() as u64;
            return Ok(SetSizeResult {
                s_hat,
                n_hat: 4 * s_hat * s_hat,
            });
        }
    }
}

/// Parameters of [`harmonic_estimate`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HarmonicConfig {
    pub eps: f64,
    /// Advice: an upper bound on the average weight `W/n`.
    pub theta_tilde: f64,
    /// Weight threshold below which proportional draws are ignored.
    pub phi: f64,
}

impl HarmonicConfig {
    pub fn new(eps: f64, theta_tilde: f64, phi: f64) -> Result<Self> {
        check_eps(eps)?;
        if !(theta_tilde > 0.0 && theta_tilde.is_finite()) {
            return Err(invalid(format!("advice must be positive, got {theta_tilde}")));
        }
        if !(phi > 0.0 && phi.is_finite()) {
            return Err(invalid(format!("threshold must be positive, got {phi}")));
        }
        Ok(Self {
            eps,
            theta_tilde,
            phi,
        })
    }

    /// Proportional sample count `⌈45 θ̃ / (φ (1 − ε/3) p̂ ε²)⌉`.
    pub fn sample_count(&self, p_hat: f64) -> u64 {
        let eps = self.eps;
        (45.0 * self.theta_tilde / (self.phi * (1.0 - eps / 3.0) * p_hat * eps * eps)).ceil() as u64
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HarmonicTrace {
    /// Estimate of `P_unif(w ≥ φ)`.
    pub p_hat: f64,
    /// Number of proportional draws.
    pub k: u64,
    /// Mean of the clipped inverse weights.
    pub h: f64,
    /// `p̂ / H`, an estimate of `W/n`; `+∞` when `H = 0`.
    pub theta_hat: f64,
}

/// Harmonic-mean estimate of the average weight `W/n`.
///
/// With advice `θ̃ ≥ W/n` the result is a `(1 ± ε)` approximation with
/// probability at least 2/3. Regardless of the advice it falls below
/// `W/(20n)` with probability at most 1/20.
///
/// Requires `P_unif(w ≥ φ) > 0`; otherwise the first stage never ends.
pub fn harmonic_estimate<O>(oracle: &mut O, cfg: &HarmonicConfig) -> Result<HarmonicTrace>
where
    O: HybridOracle + ?Sized,
{
    let phi = cfg.phi;
    let p_hat = median_amplify(
        || {
            let mut stream = BernoulliStream::new(|| Ok(oracle.sample_uniform()?.weight >= phi));
            Ok(bernoulli_estimate(&mut stream, cfg.eps / 3.0)?.p_hat)
        },
        HARMONIC_P_FAILURE,
        BASE_FAILURE,
    )?
    .median;

    let k = cfg.sample_count(p_hat);
    let mut sum = 0.0;
    for _ in 0..k {
        let w = oracle.sample_proportional()?.weight;
        if w >= phi {
            sum += 1.0 / w;
        }
    }
    let h = sum / k as f64;
    let theta_hat = if h == 0.0 { f64::INFINITY } else { p_hat / h };
    Ok(HarmonicTrace {
        p_hat,
        k,
        h,
        theta_hat,
    })
}

/// Uniform draws used by [`find_threshold`]: `⌈120 n^{1/3} ε^{2/3}⌉`.
pub fn threshold_sample_count(n: u64, eps: f64) -> u64 {
    (120.0 * (n as f64).cbrt() * (eps * eps).cbrt()).ceil() as u64
}

/// `n^{2/3} / ε^{2/3}`, the target size of `{a : w(a) ≥ θ}`.
pub fn heavy_set_target(n: u64, eps: f64) -> f64 {
    let ratio = n as f64 / eps;
    (ratio * ratio).cbrt()
}

/// Weight threshold `θ`: the 180th largest weight among
/// [`threshold_sample_count`] uniform draws.
///
/// Requires `ε ≥ 8/√n`, which guarantees at least 480 draws.
pub fn find_threshold<O>(oracle: &mut O, n: u64, eps: f64) -> Result<f64>
where
    O: UniformOracle + ?Sized,
{
    check_eps(eps)?;
    if n == 0 || eps < 8.0 / (n as f64).sqrt() {
        return Err(invalid(format!("threshold search needs eps ≥ 8/√n (n={n}, eps={eps})")));
    }
    let count = threshold_sample_count(n, eps).max(THRESHOLD_RANK as u64);
    let mut weights = Vec::with_capacity(count as usize);
    for _ in 0..count {
        weights.push(oracle.sample_uniform()?.weight);
    }
    let (_, theta, _) = weights.select_nth_unstable_by(THRESHOLD_RANK - 1, |a, b| b.total_cmp(a));
    Ok(*theta)
}

/// Proportional oracle restricted to `{a : w(a) ≥ θ}` by rejection.
pub struct ThresholdFiltered<'a, O: ?Sized> {
    inner: &'a mut O,
    theta: f64,
}

impl<'a, O: ?Sized> ThresholdFiltered<'a, O> {
    pub fn new(inner: &'a mut O, theta: f64) -> Self {
        Self { inner, theta }
    }
}

impl<O: ProportionalOracle + ?Sized> ProportionalOracle for ThresholdFiltered<'_, O> {
    fn sample_proportional(&mut self) -> Result<ItemDraw> {
        loop {
            let draw = self.inner.sample_proportional()?;
            if draw.weight >= self.theta {
                return Ok(draw);
            }
        }
    }
}

/// Which path [`hybrid_estimate`] took.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HybridBranch {
    /// `ε ≤ 1/(√n ln n)`: exact coupon collection.
    CouponCollector,
    /// `ε < 8/√n`: [`prop_estimate`] with advice `n`.
    SmallEps,
    /// `p̂ ≥ 1/2`: collision estimate on the heavy items, divided by `p̂`.
    Quantile,
    /// `p̂ < 1/2`: `n` times the harmonic estimate of `W/n`.
    Harmonic,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HybridTrace {
    /// `None` only if the run aborted before the branch was chosen.
    pub branch: Option<HybridBranch>,
    pub theta: Option<f64>,
    /// Estimate of `P_prop(w ≥ θ)`.
    pub p_hat: Option<f64>,
    /// `None` when aborted.
    pub w_hat: Option<f64>,
    /// Abort budget in total draws; `None` outside the main body.
    pub budget: Option<u64>,
}

impl HybridTrace {
    pub fn aborted(&self) -> bool {
        self.w_hat.is_none()
    }
}

/// Draw cap `⌈C n^{1/3} / ε^{4/3}⌉` for the main body of [`hybrid_estimate`].
pub fn abort_budget(n: u64, eps: f64, abort_constant: f64) -> u64 {
    (abort_constant * (n as f64).cbrt() / (eps * eps * eps * eps).cbrt()).ceil() as u64
}

/// Sum estimate with both oracles and known `n`, using
/// `O(n^{1/3}/ε^{4/3})` draws in the main regime.
///
/// Very small `ε` dispatches to [`coupon_collect`] or [`prop_estimate`].
/// Otherwise the run is capped at [`abort_budget`] total draws and reports
/// an aborted trace when the cap is hit.
pub fn hybrid_estimate<O>(oracle: &mut O, n: u64, eps: f64, abort_constant: f64) -> Result<HybridTrace>
where
    O: HybridOracle + ?Sized,
{
    check_eps(eps)?;
    if n == 0 {
        return Err(invalid("n must be positive"));
    }
    let nf = n as f64;
    let mut trace = HybridTrace {
        branch: None,
        theta: None,
        p_hat: None,
        w_hat: None,
        budget: None,
    };

    if eps <= 1.0 / (nf.sqrt() * nf.ln()) {
        trace.branch = Some(HybridBranch::CouponCollector);
        trace.w_hat = Some(coupon_collect(oracle)?.sum);
        return Ok(trace);
    }
    if eps < 8.0 / nf.sqrt() {
        trace.branch = Some(HybridBranch::SmallEps);
        trace.w_hat = Some(prop_estimate(oracle, nf, eps)?);
        return Ok(trace);
    }

    let budget = abort_budget(n, eps, abort_constant);
    trace.budget = Some(budget);
    let mut guarded = DrawBudget::new(oracle, budget);
    match hybrid_main_body(&mut guarded, n, eps, &mut trace) {
        Ok(w_hat) => trace.w_hat = Some(w_hat),
        Err(Error::BudgetExhausted { .. }) => {}
        Err(e) => return Err(e),
    }
    Ok(trace)
}

fn hybrid_main_body<O>(oracle: &mut O, n: u64, eps: f64, trace: &mut HybridTrace) -> Result<f64>
where
    O: HybridOracle + ?Sized,
{
    let theta = find_threshold(oracle, n, eps)?;
    trace.theta = Some(theta);

    let p_hat = median_amplify(
        || {
            let mut stream = BernoulliStream::new(|| Ok(oracle.sample_proportional()?.weight >= theta));
            Ok(bernoulli_estimate(&mut stream, eps / 3.0)?.p_hat)
        },
        HYBRID_STAGE_FAILURE,
        BASE_FAILURE,
    )?
    .median;
    trace.p_hat = Some(p_hat);

    if p_hat >= 0.5 {
        trace.branch = Some(HybridBranch::Quantile);
        let n_tilde = 2.0 * heavy_set_target(n, eps);
        let heavy_sum = median_amplify(
            || {
                let mut filtered = ThresholdFiltered::new(&mut *oracle, theta);
                prop_estimate(&mut filtered, n_tilde, eps / 3.0)
            },
            HYBRID_STAGE_FAILURE,
            BASE_FAILURE,
        )?
        .median;
        Ok(heavy_sum / p_hat)
    } else {
        trace.branch = Some(HybridBranch::Harmonic);
        let cfg = HarmonicConfig::new(eps, 3.0 * theta, theta)?;
        let rho = median_amplify(
            || Ok(harmonic_estimate(&mut *oracle, &cfg)?.theta_hat),
            HYBRID_STAGE_FAILURE,
            BASE_FAILURE,
        )?
        .median;
        Ok(n as f64 * rho)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoAdviceHybridTrace {
    /// Amplified set-size estimate used as advice.
    pub n_tilde: f64,
    pub w_hat: f64,
}

/// Sum estimate with both oracles and unknown `n`, using `O(√n/ε)` draws in
/// expectation: a birthday-paradox size estimate feeds [`prop_estimate`],
/// each stage amplified to success 5/6.
pub fn no_advice_hybrid_estimate<O>(oracle: &mut O, eps: f64) -> Result<NoAdviceHybridTrace>
where
    O: HybridOracle + ?Sized,
{
    check_eps(eps)?;
    let n_tilde = median_amplify(
        || Ok(set_size_estimate(&mut *oracle)?.n_hat as f64),
        NO_ADVICE_HYBRID_STAGE_FAILURE,
        BASE_FAILURE,
    )?
    .median;
    let w_hat = median_amplify(
        || prop_estimate(&mut *oracle, n_tilde, eps),
        NO_ADVICE_HYBRID_STAGE_FAILURE,
        BASE_FAILURE,
    )?
    .median;
    Ok(NoAdviceHybridTrace { n_tilde, w_hat })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CouponResult {
    /// Distinct items found, in discovery order.
    pub items: Vec<ItemDraw>,
    /// Correctly rounded sum of their weights.
    pub sum: f64,
}

/// Uniform draws until `k ≥ 4|S| ln(3|S|)` consecutive draws bring no new
/// item. Recovers the whole universe with probability at least 2/3.
pub fn coupon_collect<O>(oracle: &mut O) -> Result<CouponResult>
where
    O: UniformOracle + ?Sized,
{
    let mut seen: HashSet<ItemId> = HashSet::new();
    let mut items = Vec::new();
    let mut streak: u64 = 0;
    loop {
        let found = items.len() as f64;
        if !items.is_empty() && streak as f64 >= 4.0 * found * (3.0 * found).ln() {
            break;
        }
        let draw = oracle.sample_uniform()?;
        if seen.insert(draw.id) {
            items.push(draw);
            streak = 0;
        } else {
            streak += 1;
        }
    }
    let sum = exact_sum(items.iter().map(|d| d.weight));
    Ok(CouponResult { items, sum })
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::sampling::{SamplerHandle, WeightedInstance};

    /// Replays a fixed sequence of uniform draws.
    struct Scripted(std::vec::IntoIter<u64>);

    impl UniformOracle for Scripted {
        fn sample_uniform(&mut self) -> Result<ItemDraw> {
            let id = self.0.next().expect("script exhausted");
            Ok(ItemDraw {
                id: ItemId(id),
                weight: 1.0,
            })
        }
    }

    fn handle(inst: &WeightedInstance, seed: u64) -> SamplerHandle<'_> {
        SamplerHandle::new(inst, ChaCha8Rng::seed_from_u64(seed))
    }

    #[test]
    fn set_size_stops_at_first_repeat() {
        let mut script = Scripted(vec![0, 1, 0, 7].into_iter());
        let r = set_size_estimate(&mut script).unwrap();
        assert_eq!(r, SetSizeResult { s_hat: 2, n_hat: 16 });
        assert_eq!(script.0.next(), Some(7));
    }

    #[test]
    fn set_size_single_item() {
        let inst = WeightedInstance::from_weights(vec![3.0]).unwrap();
        let mut h = handle(&inst, 1);
        let r = set_size_estimate(&mut h).unwrap();
        assert_eq!(r, SetSizeResult { s_hat: 1, n_hat: 4 });
        assert_eq!(h.counters().uniform, 2);
    }

    #[test]
    fn harmonic_identity_instance() {
        let inst = WeightedInstance::from_weights(vec![2.5; 50]).unwrap();
        let mut h = handle(&inst, 2);
        let cfg = HarmonicConfig::new(0.2, 3.0, 1.0).unwrap();
        let t = harmonic_estimate(&mut h, &cfg).unwrap();
        assert_eq!(t.p_hat, 1.0);
        assert!((t.h - 0.4).abs() < 1e-12);
        assert!((t.theta_hat - 2.5).abs() < 1e-12);
        assert_eq!(t.k, cfg.sample_count(1.0));
    }

    #[test]
    fn harmonic_config_validation() {
        assert!(HarmonicConfig::new(0.0, 1.0, 1.0).is_err());
        assert!(HarmonicConfig::new(0.5, 0.0, 1.0).is_err());
        assert!(HarmonicConfig::new(0.5, 1.0, 0.0).is_err());
        let cfg = HarmonicConfig::new(0.3, 2.0, 1.0).unwrap();
        assert_eq!(cfg.sample_count(0.5), (45.0f64 * 2.0 / (0.9 * 0.5 * 0.09)).ceil() as u64);
    }

    #[test]
    fn harmonic_zero_h_is_infinite() {
        // Uniform draws all clear phi, proportional draws never do.
        struct Split;
        impl ProportionalOracle for Split {
            fn sample_proportional(&mut self) -> Result<ItemDraw> {
                Ok(ItemDraw {
                    id: ItemId(0),
                    weight: 0.5,
                })
            }
        }
        impl UniformOracle for Split {
            fn sample_uniform(&mut self) -> Result<ItemDraw> {
                Ok(ItemDraw {
                    id: ItemId(1),
                    weight: 2.0,
                })
            }
        }
        let cfg = HarmonicConfig::new(0.5, 1.0, 1.0).unwrap();
        let t = harmonic_estimate(&mut Split, &cfg).unwrap();
        assert_eq!(t.p_hat, 1.0);
        assert_eq!(t.h, 0.0);
        assert_eq!(t.theta_hat, f64::INFINITY);
    }

    #[test]
    fn threshold_sample_count_formula() {
        assert_eq!(threshold_sample_count(1_000_000, 0.1), 2586);
        assert_eq!(threshold_sample_count(64, 1.0 - 1e-12), 480);
    }

    #[test]
    fn threshold_equal_weights() {
        let inst = WeightedInstance::from_weights(vec![3.5; 10_000]).unwrap();
        let mut h = handle(&inst, 4);
        assert_eq!(find_threshold(&mut h, 10_000, 0.5).unwrap(), 3.5);
        assert_eq!(h.counters().uniform, threshold_sample_count(10_000, 0.5));
    }

    #[test]
    fn threshold_rejects_small_eps() {
        let inst = WeightedInstance::from_weights(vec![1.0; 100]).unwrap();
        let mut h = handle(&inst, 5);
        assert!(find_threshold(&mut h, 100, 0.5).is_err());
    }

    #[test]
    fn threshold_picks_180th_largest() {
        struct Counting(u64);
        impl UniformOracle for Counting {
            fn sample_uniform(&mut self) -> Result<ItemDraw> {
                self.0 += 1;
                Ok(ItemDraw {
                    id: ItemId(self.0),
                    weight: self.0 as f64,
                })
            }
        }
        let mut o = Counting(0);
        let n = 1_000_000;
        let count = threshold_sample_count(n, 0.1);
        let theta = find_threshold(&mut o, n, 0.1).unwrap();
        assert_eq!(theta, (count - 179) as f64);
    }

    #[test]
    fn hybrid_dispatches_small_eps_to_prop() {
        let inst = WeightedInstance::from_weights(vec![1.0; 100]).unwrap();
        let mut h = handle(&inst, 6);
        let t = hybrid_estimate(&mut h, 100, 0.05, DEFAULT_ABORT_CONSTANT).unwrap();
        assert_eq!(t.branch, Some(HybridBranch::SmallEps));
        assert_eq!(h.counters().proportional, crate::proportional::prop_sample_count(100.0, 0.05));
        assert_eq!(h.counters().uniform, 0);
        assert!(t.budget.is_none());
    }

    #[test]
    fn hybrid_dispatches_tiny_eps_to_coupon() {
        let inst = WeightedInstance::from_weights(vec![1.0, 2.0, 4.0]).unwrap();
        let mut h = handle(&inst, 7);
        // 1/(√3 ln 3) ≈ 0.525
        let t = hybrid_estimate(&mut h, 3, 0.5, DEFAULT_ABORT_CONSTANT).unwrap();
        assert_eq!(t.branch, Some(HybridBranch::CouponCollector));
        assert_eq!(h.counters().proportional, 0);
    }

    #[test]
    fn hybrid_aborts_on_tiny_budget() {
        let inst = WeightedInstance::from_weights(vec![1.0; 10_000]).unwrap();
        let mut h = handle(&inst, 8);
        let t = hybrid_estimate(&mut h, 10_000, 0.5, 1.0).unwrap();
        assert!(t.aborted());
        assert_eq!(h.counters().total(), t.budget.unwrap());
    }

    #[test]
    fn hybrid_branch_follows_p_hat() {
        // Uniform weights: theta = 1, p_hat = 1, quantile branch.
        let inst = WeightedInstance::from_weights(vec![1.0; 10_000]).unwrap();
        let mut h = handle(&inst, 9);
        let t = hybrid_estimate(&mut h, 10_000, 0.5, DEFAULT_ABORT_CONSTANT).unwrap();
        assert_eq!(t.branch, Some(HybridBranch::Quantile));
        assert_eq!(t.p_hat, Some(1.0));
        assert!(h.counters().total() <= t.budget.unwrap());

        // 3% of items at weight 1.5: theta lands on 1 or 1.5 depending on
        // the sample, and the branch must agree with p_hat either way.
        let mut w = vec![1.0; 10_000];
        for x in w.iter_mut().take(300) {
            *x = 1.5;
        }
        let inst = WeightedInstance::from_weights(w).unwrap();
        let mut h = handle(&inst, 10);
        let t = hybrid_estimate(&mut h, 10_000, 0.5, DEFAULT_ABORT_CONSTANT).unwrap();
        let p = t.p_hat.unwrap();
        assert_eq!(t.branch == Some(HybridBranch::Quantile), p >= 0.5);
    }

    #[test]
    fn coupon_single_item() {
        let inst = WeightedInstance::from_weights(vec![9.0]).unwrap();
        let mut h = handle(&inst, 11);
        let r = coupon_collect(&mut h).unwrap();
        assert_eq!(r.sum, 9.0);
        assert_eq!(r.items.len(), 1);
        // First draw plus five repeats: 5 ≥ 4 ln 3 > 4.
        assert_eq!(h.counters().uniform, 6);
    }

    #[test]
    fn no_advice_hybrid_single_item() {
        let inst = WeightedInstance::from_weights(vec![4.25]).unwrap();
        let mut h = handle(&inst, 12);
        let t = no_advice_hybrid_estimate(&mut h, 0.2).unwrap();
        assert_eq!(t.w_hat, 4.25);
        assert_eq!(t.n_tilde, 4.0);
    }
}
