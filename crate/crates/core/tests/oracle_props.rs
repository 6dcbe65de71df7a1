mod common;

use proptest::prelude::*;
use rand::Rng;
use welfare_lab::oracle::{exact_demand, greedy_demand, utility, Counted, QueryCounter};
use welfare_lab::{ItemSet, PriceVector, ValuationSpec};

proptest! {
    #![proptest_config(ProptestConfig { cases: 1000, ..ProptestConfig::default() })]

    #[test]
    fn greedy_demand_is_optimal_for_gross_substitutes(seed in common::seeds()) {
        let mut rng = common::rng(seed);
        let m = rng.random_range(1..=10);
        let spec = common::random_gs(&mut rng, m);
        let v = spec.bind(m);
        let p = PriceVector::new((0..m).map(|_| rng.random_range(-0.2..1.2)).collect()).unwrap();
        let (g, e) = (greedy_demand(&v, &p), exact_demand(&v, &p, ItemSet::EMPTY));
        let (ug, ue) = (utility(&v, &p, g, ItemSet::EMPTY), utility(&v, &p, e, ItemSet::EMPTY));
        prop_assert!((ug - ue).abs() <= 1e-9, "{}: greedy {} vs exact {}", spec.kind(), ug, ue);
    }

    #[test]
    fn exact_demand_beats_every_bundle(seed in common::seeds()) {
        let mut rng = common::rng(seed);
        let m = rng.random_range(1..=7);
        let spec = common::random_spec(&mut rng, m);
        let v = spec.bind(m);
        let p = PriceVector::new((0..m).map(|_| rng.random_range(-0.5..1.0)).collect()).unwrap();
        let held = common::random_set(&mut rng, m, 0.3);
        let d = exact_demand(&v, &p, held);
        prop_assert!(d.is_disjoint(held));
        let best = utility(&v, &p, d, held);
        for s in ItemSet::full(m).difference(held).subsets() {
            prop_assert!(utility(&v, &p, s, held) <= best + 1e-12 * best.abs().max(1.0));
        }
    }
}

#[test]
fn negative_prices_make_everything_demanded() {
    let spec = ValuationSpec::Additive { l: vec![0.0; 6] };
    let p = PriceVector::new(vec![-1.0; 6]).unwrap();
    assert_eq!(exact_demand(&spec.bind(6), &p, ItemSet::EMPTY), ItemSet::full(6));
}

#[test]
fn demand_from_scratch_costs_two_to_the_m_queries() {
    for m in 1..=10 {
        let spec = ValuationSpec::UnitDemand { rho: (0..m).map(|j| j as f64).collect() };
        let v = spec.bind(m);
        let counter = QueryCounter::new();
        Counted::new(&v, &counter).demand(&PriceVector::zeros(m), ItemSet::EMPTY);
        assert_eq!(counter.value_queries(), 1 << m);
    }
}
