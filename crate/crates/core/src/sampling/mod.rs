//! Hidden instance model and the sampling oracles estimators consume.

mod alias;
mod instance;
mod oracle;

pub use instance::{ItemDraw, ItemId, WeightedInstance};
pub use oracle::{
    DrawBudget, DrawCounters, HybridOracle, ProportionalOracle, SamplerHandle, UniformOracle,
};

#[cfg(test)]
mod tests {
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::stats::total_variation;
    use crate::testutil::assert_chi_square;

    fn handle(inst: &WeightedInstance, seed: u64) -> SamplerHandle<'_> {
        SamplerHandle::new(inst, ChaCha8Rng::seed_from_u64(seed))
    }

    fn counts<F: FnMut() -> ItemDraw>(n: usize, draws: usize, mut f: F) -> Vec<u64> {
        let mut c = vec![0u64; n];
        for _ in 0..draws {
            c[f().id.0 as usize] += 1;
        }
        c
    }

    #[test]
    fn zero_weight_item_is_never_drawn_proportionally() {
        let inst = WeightedInstance::from_weights(vec![1.0, 0.0]).unwrap();
        let mut h = handle(&inst, 1);
        for _ in 0..100_000 {
            assert_eq!(h.sample_proportional().unwrap().id, ItemId(0));
        }
    }

    #[test]
    fn single_item_always_returned() {
        let inst = WeightedInstance::from_weights(vec![5.0]).unwrap();
        let mut h = handle(&inst, 2);
        for _ in 0..100 {
            let d = h.sample_proportional().unwrap();
            assert_eq!((d.id, d.weight), (ItemId(0), 5.0));
            let d = h.sample_uniform().unwrap();
            assert_eq!((d.id, d.weight), (ItemId(0), 5.0));
        }
    }

    #[test]
    fn proportional_frequencies_pass_chi_square() {
        let inst = WeightedInstance::from_weights(vec![1.0, 2.0]).unwrap();
        let mut h = handle(&inst, 3);
        let c = counts(2, 100_000, || h.sample_proportional().unwrap());
        assert_chi_square(&c, &[1.0 / 3.0, 2.0 / 3.0], 1e-6);
    }

    #[test]
    fn uniform_includes_zero_weight_items() {
        let inst = WeightedInstance::from_weights(vec![1.0, 0.0]).unwrap();
        let mut h = handle(&inst, 4);
        let c = counts(2, 100_000, || h.sample_uniform().unwrap());
        assert_chi_square(&c, &[0.5, 0.5], 1e-6);
    }

    #[test]
    fn counters_track_each_kind() {
        let inst = WeightedInstance::from_weights(vec![7.0]).unwrap();
        let mut h = handle(&inst, 5);
        for _ in 0..3 {
            h.sample_uniform().unwrap();
        }
        for _ in 0..2 {
            h.sample_proportional().unwrap();
        }
        assert_eq!(
            h.counters(),
            DrawCounters {
                proportional: 2,
                uniform: 3
            }
        );
    }

    #[test]
    fn budget_stops_forwarding() {
        let inst = WeightedInstance::from_weights(vec![1.0, 1.0]).unwrap();
        let mut h = handle(&inst, 6);
        {
            let mut b = DrawBudget::new(&mut h, 3);
            b.sample_uniform().unwrap();
            b.sample_proportional().unwrap();
            b.sample_uniform().unwrap();
            assert!(matches!(
                b.sample_proportional(),
                Err(crate::Error::BudgetExhausted { budget: 3 })
            ));
            assert_eq!(b.used(), 3);
        }
        assert_eq!(h.counters().total(), 3);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        #[test]
        fn equal_seeds_give_equal_draws(
            weights in prop::collection::vec(0.0f64..10.0, 1..8),
            seed in any::<u64>(),
            pattern in prop::collection::vec(any::<bool>(), 1..200),
        ) {
            prop_assume!(weights.iter().sum::<f64>() > 0.0);
            let inst = WeightedInstance::from_weights(weights).unwrap();
            let mut a = handle(&inst, seed);
            let mut b = handle(&inst, seed);
            for prop_first in pattern {
                let (x, y) = if prop_first {
                    (a.sample_proportional().unwrap(), b.sample_proportional().unwrap())
                } else {
                    (a.sample_uniform().unwrap(), b.sample_uniform().unwrap())
                };
                prop_assert_eq!(x.id, y.id);
                prop_assert_eq!(x.weight.to_bits(), y.weight.to_bits());
            }
        }

        #[test]
        fn empirical_frequencies_close_in_total_variation(
            weights in prop::collection::vec(prop_oneof![Just(0.0f64), 0.01f64..10.0], 1..=8),
            seed in any::<u64>(),
        ) {
            prop_assume!(weights.iter().sum::<f64>() > 0.0);
            let inst = WeightedInstance::from_weights(weights.clone()).unwrap();
            let n = inst.len();
            let total = inst.total();
            let mut h = handle(&inst, seed);

            let prop_counts = counts(n, 100_000, || h.sample_proportional().unwrap());
            let probs: Vec<f64> = weights.iter().map(|w| w / total).collect();
            prop_assert!(total_variation(&prop_counts, &probs) <= 0.02);
            for (c, w) in prop_counts.iter().zip(&weights) {
                if *w == 0.0 {
                    prop_assert_eq!(*c, 0);
                }
            }

            let unif_counts = counts(n, 100_000, || h.sample_uniform().unwrap());
            let unif = vec![1.0 / n as f64; n];
            prop_assert!(total_variation(&unif_counts, &unif) <= 0.02);
        }
    }
}
