mod common;

use proptest::prelude::*;
use rand::Rng;
use welfare_lab::itemset::all_bundles;
use welfare_lab::valuation::{random_perturbation, Region};
use welfare_lab::ValuationSpec;

proptest! {
    #![proptest_config(ProptestConfig { cases: 200, ..ProptestConfig::default() })]

    #[test]
    fn coverage_counts_touched_regions(seed in common::seeds()) {
        let mut rng = common::rng(seed);
        let m = rng.random_range(1..=10);
        let k = rng.random_range(0..=20);
        let spec = common::random_coverage(&mut rng, m, k);
        let ValuationSpec::Coverage { regions } = &spec else { unreachable!() };
        for s in all_bundles(m) {
            let want = common::brute_coverage(regions, s);
            prop_assert!((spec.eval(s) - want).abs() <= 1e-12 * want.max(1.0));
        }
    }

    #[test]
    fn matroid_rank_is_heaviest_independent_subset(seed in common::seeds()) {
        let mut rng = common::rng(seed);
        let m = rng.random_range(1..=10);
        let matroid = common::random_matroid(&mut rng, m);
        let w: Vec<f64> = (0..m).map(|_| rng.random::<f64>()).collect();
        let spec = ValuationSpec::WeightedMatroidRank { matroid: matroid.clone(), w: w.clone() };
        for s in all_bundles(m) {
            let want = common::brute_matroid_value(&matroid, &w, s);
            prop_assert!((spec.eval(s) - want).abs() <= 1e-12 * want.max(1.0), "{} vs {}", spec.eval(s), want);
        }
    }

    #[test]
    fn transversal_is_a_maximum_matching(seed in common::seeds()) {
        let mut rng = common::rng(seed);
        let m = rng.random_range(1..=8);
        let spec = common::random_transversal(&mut rng, m);
        let ValuationSpec::Transversal { parts, r } = &spec else { unreachable!() };
        for s in all_bundles(m) {
            prop_assert_eq!(spec.eval(s), common::brute_transversal_matching(parts, r, s));
        }
    }

    #[test]
    fn perturbation_stays_in_the_sandwich(seed in common::seeds(), eps in 0.0f64..1.0, repair: bool) {
        let mut rng = common::rng(seed);
        let m = rng.random_range(1..=8);
        let base = common::random_spec(&mut rng, m);
        let v = random_perturbation(&base, m, eps, seed, repair).unwrap();
        for s in all_bundles(m) {
            let (b, x) = (base.eval(s), v.eval(s));
            prop_assert!(b - 1e-12 * b.abs() <= x && x <= (1.0 + eps) * b + 1e-12 * b.abs().max(1.0), "{} {} {}", s, b, x);
        }
    }
}

#[test]
fn coverage_with_disjoint_singletons_is_additive() {
    let spec = ValuationSpec::Coverage { regions: (0..4).map(|j| Region { w: j as f64, items: welfare_lab::ItemSet::singleton(j) }).collect() };
    assert_eq!(spec.eval(welfare_lab::ItemSet::full(4)), 6.0);
}
