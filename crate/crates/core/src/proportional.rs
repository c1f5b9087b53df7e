//! Sum estimation with only the proportional oracle.

use std::collections::HashMap;

use rand::Rng;

use crate::amplify::{bernoulli_estimate, check_eps, median_amplify, BernoulliStream, BASE_FAILURE};
use crate::error::{invalid, Error, Result};
use crate::hybrid::set_size_estimate;
use crate::numeric::{choose2, exact_sum};
use crate::sampling::{ItemDraw, ItemId, ProportionalOracle, UniformOracle};

/// Failure target for each of the three amplified stages of
/// [`no_advice_prop_estimate`].
const NO_ADVICE_STAGE_FAILURE: f64 = 0.1;

/// Multiplicities of the distinct items in a proportional sample.
#[derive(Debug, Clone, Default)]
pub struct CollisionTally {
    samples: u64,
    counts: HashMap<ItemId, (f64, u64)>,
}

impl CollisionTally {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_draws(draws: impl IntoIterator<Item = ItemDraw>) -> Self {
        let mut tally = Self::new();
        for d in draws {
            tally.record(d);
        }
        tally
    }

    pub fn record(&mut self, draw: ItemDraw) {
        self.samples += 1;
        self.counts.entry(draw.id).or_insert((draw.weight, 0)).1 += 1;
    }

    /// Sample count `m`.
    pub fn samples(&self) -> u64 {
        self.samples
    }

    /// `(item, weight, multiplicity)` for each distinct item, in no
    /// particular order.
    pub fn entries(&self) -> impl Iterator<Item = (ItemId, f64, u64)> + '_ {
        self.counts.iter().map(|(&id, &(w, c))| (id, w, c))
    }

    /// `Σ_s C(c_s, 2) / w(s)`, the number of colliding pairs weighted by
    /// inverse weight. Order independent.
    pub fn collision_mass(&self) -> f64 {
        exact_sum(
            self.counts
                .values()
                .filter(|(_, c)| *c >= 2)
                .map(|&(w, c)| choose2(c) / w),
        )
    }

    /// `C(m, 2) / collision_mass`, or `+∞` when no item repeats.
    pub fn estimate(&self) -> f64 {
        let mass = self.collision_mass();
        if mass == 0.0 {
            f64::INFINITY
        } else {
            choose2(self.samples) / mass
        }
    }
}

/// Number of proportional draws used by [`prop_estimate`]:
/// `⌈√(24 ñ) / ε⌉ + 1`.
pub fn prop_sample_count(n_tilde: f64, eps: f64) -> u64 {
    ((24.0 * n_tilde).sqrt() / eps).ceil() as u64 + 1
}

/// Collision-based sum estimate given advice `n_tilde ≥ n`.
///
/// The reciprocal of the result is an unbiased estimate of `1/W`. With valid
/// advice the result is within `eps·W` of `W` with probability at least 2/3.
/// Returns `+∞` when all draws are distinct.
pub fn prop_estimate<O>(oracle: &mut O, n_tilde: f64, eps: f64) -> Result<f64>
where
    O: ProportionalOracle + ?Sized,
{
    check_eps(eps)?;
    if !(n_tilde >= 1.0 && n_tilde.is_finite()) {
        return Err(invalid(format!("advice must be a finite value ≥ 1, got {n_tilde}")));
    }
    let m = prop_sample_count(n_tilde, eps);
    let mut tally = CollisionTally::new();
    for _ in 0..m {
        tally.record(oracle.sample_proportional()?);
    }
    Ok(tally.estimate())
}

/// `⌊log₂ w⌋`, computed exactly from the float representation.
pub fn bucket_index(weight: f64) -> Result<i32> {
    if weight <= 0.0 || !weight.is_finite() {
        return Err(Error::NonPositiveWeight(weight));
    }
    let bits = weight.to_bits();
    let biased = ((bits >> 52) & 0x7ff) as i32;
    if biased == 0 {
        let mantissa = bits & ((1u64 << 52) - 1);
        Ok(63 - mantissa.leading_zeros() as i32 - 1074)
    } else {
        Ok(biased - 1023)
    }
}

/// `2^b` as an exact float.
pub fn bucket_floor(b: i32) -> f64 {
    if b >= -1022 {
        f64::from_bits(((b + 1023) as u64) << 52)
    } else {
        f64::from_bits(1u64 << (b + 1074))
    }
}

fn in_bucket(weight: f64, bucket: i32) -> bool {
    weight > 0.0 && bucket_index(weight).is_ok_and(|b| b == bucket)
}

/// Proportional draw conditioned on landing in bucket `b`, by resampling.
///
/// Loops until a bucket member appears; wrap the oracle in a
/// [`DrawBudget`](crate::sampling::DrawBudget) if the bucket may be empty.
pub fn prop_bucket_sample<O>(oracle: &mut O, bucket: i32) -> Result<ItemDraw>
where
    O: ProportionalOracle + ?Sized,
{
    loop {
        let draw = oracle.sample_proportional()?;
        if in_bucket(draw.weight, bucket) {
            return Ok(draw);
        }
    }
}

/// Uniform draw from bucket `b`: a conditional proportional draw accepted
/// with probability `2^b / w(a)`, which is at least 1/2.
pub fn unif_bucket_sample<O, R>(oracle: &mut O, bucket: i32, rng: &mut R) -> Result<ItemDraw>
where
    O: ProportionalOracle + ?Sized,
    R: Rng + ?Sized,
{
    let floor = bucket_floor(bucket);
    loop {
        let draw = prop_bucket_sample(oracle, bucket)?;
        let coin: f64 = rng.gen();
        if coin <= floor / draw.weight {
            return Ok(draw);
        }
    }
}

/// Proportional oracle restricted to one bucket.
pub struct BucketProportional<'a, O: ?Sized> {
    inner: &'a mut O,
    bucket: i32,
}

impl<'a, O: ?Sized> BucketProportional<'a, O> {
    pub fn new(inner: &'a mut O, bucket: i32) -> Self {
        Self { inner, bucket }
    }
}

impl<O: ProportionalOracle + ?Sized> ProportionalOracle for BucketProportional<'_, O> {
    fn sample_proportional(&mut self) -> Result<ItemDraw> {
        prop_bucket_sample(self.inner, self.bucket)
    }
}

/// Uniform oracle over one bucket, simulated from proportional draws.
pub struct BucketUniform<'a, O: ?Sized, R: ?Sized> {
    inner: &'a mut O,
    rng: &'a mut R,
    bucket: i32,
}

impl<'a, O: ?Sized, R: ?Sized> BucketUniform<'a, O, R> {
    pub fn new(inner: &'a mut O, rng: &'a mut R, bucket: i32) -> Self {
        Self { inner, rng, bucket }
    }
}

impl<O: ProportionalOracle + ?Sized, R: Rng + ?Sized> UniformOracle for BucketUniform<'_, O, R> {
    fn sample_uniform(&mut self) -> Result<ItemDraw> {
        unif_bucket_sample(self.inner, self.bucket, self.rng)
    }
}

/// Intermediate values of [`no_advice_prop_estimate`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoAdviceBreakdown {
    /// Chosen bucket index `b`.
    pub bucket: i32,
    /// Amplified set-size estimate for bucket `b`.
    pub n_tilde_b: f64,
    /// Estimate of the bucket's total weight.
    pub w_hat_b: f64,
    /// Estimate of the bucket's share of the proportional mass.
    pub p_hat_b: f64,
    /// `w_hat_b / p_hat_b`.
    pub w_hat: f64,
}

/// Sum estimate without knowledge of `n`.
///
/// Picks the heavier bucket of two proportional draws, sizes it by a
/// birthday-paradox estimate over simulated uniform draws, estimates its
/// weight with [`prop_estimate`] on bucket-restricted draws, estimates its
/// share of the proportional mass, and divides. Each stage is amplified to
/// success 9/10.
pub fn no_advice_prop_estimate<O, R>(oracle: &mut O, eps: f64, rng: &mut R) -> Result<NoAdviceBreakdown>
where
    O: ProportionalOracle + ?Sized,
    R: Rng + ?Sized,
{
    check_eps(eps)?;
    let a1 = oracle.sample_proportional()?;
    let a2 = oracle.sample_proportional()?;
    let bucket = bucket_index(a1.weight)?.max(bucket_index(a2.weight)?);

    let n_tilde_b = median_amplify(
        || {
            let mut unif = BucketUniform::new(&mut *oracle, &mut *rng, bucket);
            Ok(set_size_estimate(&mut unif)?.n_hat as f64)
        },
        NO_ADVICE_STAGE_FAILURE,
        BASE_FAILURE,
    )?
    .median;

    let w_hat_b = median_amplify(
        || {
            let mut restricted = BucketProportional::new(&mut *oracle, bucket);
            prop_estimate(&mut restricted, n_tilde_b, eps / 3.0)
        },
        NO_ADVICE_STAGE_FAILURE,
        BASE_FAILURE,
    )?
    .median;

    let p_hat_b = median_amplify(
        || {
            let mut stream =
                BernoulliStream::new(|| Ok(in_bucket(oracle.sample_proportional()?.weight, bucket)));
            Ok(bernoulli_estimate(&mut stream, eps / 3.0)?.p_hat)
        },
        NO_ADVICE_STAGE_FAILURE,
        BASE_FAILURE,
    )?
    .median;

    Ok(NoAdviceBreakdown {
        bucket,
        n_tilde_b,
        w_hat_b,
        p_hat_b,
        w_hat: w_hat_b / p_hat_b,
    })
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::sampling::{SamplerHandle, WeightedInstance};
    use crate::testutil::assert_chi_square;

    fn draw(id: u64, weight: f64) -> ItemDraw {
        ItemDraw {
            id: ItemId(id),
            weight,
        }
    }

    #[test]
    fn closed_form_on_hand_tally() {
        let tally = CollisionTally::from_draws([draw(0, 1.0), draw(1, 5.0), draw(0, 1.0)]);
        assert_eq!(tally.samples(), 3);
        assert_eq!(tally.estimate(), 3.0);
    }

    #[test]
    fn all_distinct_is_infinite() {
        let tally = CollisionTally::from_draws((0..10).map(|i| draw(i, 1.0)));
        assert_eq!(tally.estimate(), f64::INFINITY);
        assert_eq!(CollisionTally::new().estimate(), f64::INFINITY);
    }

    #[test]
    fn single_item_recovers_weight() {
        let inst = WeightedInstance::from_weights(vec![7.0]).unwrap();
        for (n_tilde, eps) in [(1.0, 0.5), (10.0, 0.1), (1000.0, 0.9)] {
            let mut h = SamplerHandle::new(&inst, ChaCha8Rng::seed_from_u64(1));
            assert!((prop_estimate(&mut h, n_tilde, eps).unwrap() - 7.0).abs() < 1e-12);
            assert_eq!(h.counters().proportional, prop_sample_count(n_tilde, eps));
        }
    }

    #[test]
    fn sample_count_formula() {
        assert_eq!(prop_sample_count(1e4, 0.1), 4900);
        assert_eq!(prop_sample_count(1.0, 0.5), 11);
    }

    #[test]
    fn prop_estimate_rejects_bad_arguments() {
        let inst = WeightedInstance::from_weights(vec![1.0]).unwrap();
        let mut h = SamplerHandle::new(&inst, ChaCha8Rng::seed_from_u64(1));
        assert!(prop_estimate(&mut h, 0.5, 0.1).is_err());
        assert!(prop_estimate(&mut h, 10.0, 1.5).is_err());
        assert!(prop_estimate(&mut h, f64::INFINITY, 0.1).is_err());
    }

    #[test]
    fn bucket_index_examples() {
        assert_eq!(bucket_index(1.0).unwrap(), 0);
        assert_eq!(bucket_index(5.0).unwrap(), 2);
        assert_eq!(bucket_index(0.25).unwrap(), -2);
        assert_eq!(bucket_index(0.3).unwrap(), -2);
        assert_eq!(bucket_index(f64::from_bits(1)).unwrap(), -1074);
        assert_eq!(bucket_index(f64::MAX).unwrap(), 1023);
        assert!(bucket_index(0.0).is_err());
        assert!(bucket_index(-1.0).is_err());
    }

    #[test]
    fn bucket_floor_inverts_index() {
        for b in [-1074, -1060, -1022, -5, 0, 3, 1023] {
            assert_eq!(bucket_index(bucket_floor(b)).unwrap(), b);
        }
    }

    #[test]
    fn prop_bucket_sample_single_member() {
        let inst = WeightedInstance::from_weights(vec![1.0, 4.0]).unwrap();
        let mut h = SamplerHandle::new(&inst, ChaCha8Rng::seed_from_u64(2));
        for _ in 0..1000 {
            assert_eq!(prop_bucket_sample(&mut h, 2).unwrap().id, ItemId(1));
        }
    }

    #[test]
    fn prop_bucket_sample_whole_universe_returns_first_draw() {
        let inst = WeightedInstance::from_weights(vec![1.0, 1.5, 0.0, 1.9]).unwrap();
        let mut h = SamplerHandle::new(&inst, ChaCha8Rng::seed_from_u64(3));
        for i in 1..=100 {
            prop_bucket_sample(&mut h, 0).unwrap();
            assert_eq!(h.counters().proportional, i);
        }
    }

    #[test]
    fn empty_bucket_exhausts_budget() {
        let inst = WeightedInstance::from_weights(vec![1.0]).unwrap();
        let mut h = SamplerHandle::new(&inst, ChaCha8Rng::seed_from_u64(4));
        let mut budget = crate::sampling::DrawBudget::new(&mut h, 50);
        assert!(matches!(
            prop_bucket_sample(&mut budget, 5),
            Err(Error::BudgetExhausted { budget: 50 })
        ));
    }

    #[test]
    fn unif_bucket_sample_boundary_weight_always_accepted() {
        let inst = WeightedInstance::from_weights(vec![4.0, 4.0, 1.0]).unwrap();
        let mut h = SamplerHandle::new(&inst, ChaCha8Rng::seed_from_u64(5));
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..1000 {
            let before = h.counters().proportional;
            let d = unif_bucket_sample(&mut h, 2, &mut rng).unwrap();
            assert_eq!(d.weight, 4.0);
            // Accepted on the first in-bucket draw.
            let used = h.counters().proportional - before;
            assert!(used >= 1);
        }
    }

    #[test]
    fn unif_bucket_sample_single_member() {
        let inst = WeightedInstance::from_weights(vec![6.0]).unwrap();
        let mut h = SamplerHandle::new(&inst, ChaCha8Rng::seed_from_u64(7));
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let calls = 20_000;
        for _ in 0..calls {
            assert_eq!(unif_bucket_sample(&mut h, 2, &mut rng).unwrap().id, ItemId(0));
        }
        // Acceptance probability is 4/6, so about 1.5 draws per call.
        let per_call = h.counters().proportional as f64 / calls as f64;
        assert!((per_call - 1.5).abs() < 0.05, "{per_call}");
    }

    #[test]
    fn bucket_samplers_conditional_distributions() {
        let inst = WeightedInstance::from_weights(vec![4.0, 6.0, 1.0, 20.0]).unwrap();
        let mut h = SamplerHandle::new(&inst, ChaCha8Rng::seed_from_u64(9));
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let mut prop = [0u64; 2];
        let mut unif = [0u64; 2];
        for _ in 0..100_000 {
            prop[prop_bucket_sample(&mut h, 2).unwrap().id.0 as usize] += 1;
            unif[unif_bucket_sample(&mut h, 2, &mut rng).unwrap().id.0 as usize] += 1;
        }
        assert_chi_square(&prop, &[0.4, 0.6], 1e-6);
        assert_chi_square(&unif, &[0.5, 0.5], 1e-6);
    }

    #[test]
    fn no_advice_single_item() {
        for w in [1.0, 7.0, 0.3, 1e6] {
            let inst = WeightedInstance::from_weights(vec![w]).unwrap();
            let mut h = SamplerHandle::new(&inst, ChaCha8Rng::seed_from_u64(11));
            let mut rng = ChaCha8Rng::seed_from_u64(12);
            let out = no_advice_prop_estimate(&mut h, 0.3, &mut rng).unwrap();
            assert_eq!(out.bucket, bucket_index(w).unwrap());
            assert_eq!(out.p_hat_b, 1.0);
            assert_eq!(out.w_hat_b, w);
            assert_eq!(out.w_hat, w);
            assert!(out.n_tilde_b >= 1.0);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn estimate_ignores_sample_order(
            seq in prop::collection::vec(0u64..6, 2..40),
            weights in prop::collection::vec(0.01f64..100.0, 6),
            shuffle_seed in any::<u64>(),
        ) {
            use rand::seq::SliceRandom;
            let draws: Vec<ItemDraw> = seq.iter().map(|&i| draw(i, weights[i as usize])).collect();
            let mut shuffled = draws.clone();
            shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(shuffle_seed));
            let a = CollisionTally::from_draws(draws).estimate();
            let b = CollisionTally::from_draws(shuffled).estimate();
            prop_assert_eq!(a.to_bits(), b.to_bits());
        }

        #[test]
        fn bucket_contains_weight(w in 1e-300f64..1e300) {
            let b = bucket_index(w).unwrap();
            prop_assert!(bucket_floor(b) <= w);
            prop_assert!(w < 2.0 * bucket_floor(b));
        }

        #[test]
        fn scaling_by_power_of_two_is_covariant(
            weights in prop::collection::vec(0.01f64..100.0, 1..6),
            k in -20i32..20,
            seed in any::<u64>(),
        ) {
            let scale = bucket_floor(k);
            let scaled: Vec<f64> = weights.iter().map(|w| w * scale).collect();
            for (w, s) in weights.iter().zip(&scaled) {
                prop_assert_eq!(bucket_index(*s).unwrap(), bucket_index(*w).unwrap() + k);
            }
            let base = WeightedInstance::from_weights(weights).unwrap();
            let big = WeightedInstance::from_weights(scaled).unwrap();
            let mut h1 = SamplerHandle::new(&base, ChaCha8Rng::seed_from_u64(seed));
            let mut h2 = SamplerHandle::new(&big, ChaCha8Rng::seed_from_u64(seed));
            let e1 = prop_estimate(&mut h1, 6.0, 0.5).unwrap();
            let e2 = prop_estimate(&mut h2, 6.0, 0.5).unwrap();
            prop_assert_eq!((e1 * scale).to_bits(), e2.to_bits());
        }
    }
}
