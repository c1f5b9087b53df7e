use proptest::prelude::*;
use sumest::hybrid::{
    abort_budget, coupon_collect, harmonic_estimate, hybrid_estimate, HarmonicConfig, HybridBranch,
};
use sumest::rng::{stream, Lane};
use sumest::{SamplerHandle, WeightedInstance};

fn handle(inst: &WeightedInstance, seed: u64) -> SamplerHandle<'_> {
    SamplerHandle::new(inst, stream(seed, 0, Lane::Oracle))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn harmonic_is_scale_covariant(
        weights in prop::collection::vec(prop_oneof![Just(0.0f64), 0.1f64..100.0], 2..40),
        shift in -20i32..20,
        eps in 0.2f64..0.9,
        seed in any::<u64>(),
    ) {
        prop_assume!(weights.iter().any(|&w| w > 0.0));
        let phi = weights.iter().copied().filter(|&w| w > 0.0).fold(f64::INFINITY, f64::min);
        let theta_tilde = weights.iter().sum::<f64>() / weights.len() as f64;
        let scale = 2f64.powi(shift);
        let a = WeightedInstance::from_weights(weights.clone()).unwrap();
        let b = WeightedInstance::from_weights(weights.iter().map(|w| w * scale).collect()).unwrap();
        let ta = harmonic_estimate(&mut handle(&a, seed), &HarmonicConfig::new(eps, theta_tilde, phi).unwrap()).unwrap();
        let cfg_b = HarmonicConfig::new(eps, theta_tilde * scale, phi * scale).unwrap();
        let tb = harmonic_estimate(&mut handle(&b, seed), &cfg_b).unwrap();
        prop_assert_eq!(ta.k, tb.k);
        prop_assert_eq!(ta.p_hat.to_bits(), tb.p_hat.to_bits());
        prop_assert_eq!((ta.theta_hat * scale).to_bits(), tb.theta_hat.to_bits());
    }

    #[test]
    fn hybrid_respects_budget_and_dispatch(
        weights in prop::collection::vec(prop_oneof![Just(0.0f64), 0.5f64..50.0], 4..300),
        eps in 0.05f64..0.9,
        abort_constant in prop_oneof![Just(2.0f64), Just(1000.0f64)],
        seed in any::<u64>(),
    ) {
        prop_assume!(weights.iter().any(|&w| w > 0.0));
        let inst = WeightedInstance::from_weights(weights).unwrap();
        let n = inst.len() as u64;
        let nf = n as f64;
        let mut h = handle(&inst, seed);
        let trace = hybrid_estimate(&mut h, n, eps, abort_constant).unwrap();
        let draws = h.counters().total();
        if eps <= 1.0 / (nf.sqrt() * nf.ln()) {
            prop_assert_eq!(trace.branch, Some(HybridBranch::CouponCollector));
        } else if eps < 8.0 / nf.sqrt() {
            prop_assert_eq!(trace.branch, Some(HybridBranch::SmallEps));
            prop_assert_eq!(trace.budget, None);
        } else {
            let budget = abort_budget(n, eps, abort_constant);
            prop_assert_eq!(trace.budget, Some(budget));
            prop_assert!(draws <= budget, "{} draws over budget {}", draws, budget);
            if let Some(p_hat) = trace.p_hat {
                let expected = if p_hat >= 0.5 { HybridBranch::Quantile } else { HybridBranch::Harmonic };
                prop_assert_eq!(trace.branch, Some(expected));
            }
            if !trace.aborted() {
                prop_assert!(trace.branch.is_some());
            }
        }
    }

    #[test]
    fn coupon_sum_is_exact_over_returned_items(
        weights in prop::collection::vec(prop_oneof![Just(0.0f64), 1e-3f64..1e3], 1..30),
        seed in any::<u64>(),
    ) {
        prop_assume!(weights.iter().any(|&w| w > 0.0));
        let inst = WeightedInstance::from_weights(weights).unwrap();
        let r = coupon_collect(&mut handle(&inst, seed)).unwrap();
        for d in &r.items {
            prop_assert_eq!(inst.weight_of(d.id), Some(d.weight));
        }
        if r.items.len() == inst.len() {
            prop_assert_eq!(r.sum, inst.total());
        }
    }
}
