mod common;

use proptest::prelude::*;
use rand::Rng;
use welfare_lab::algorithms::brute_force_opt;
use welfare_lab::equilibrium::{bias_of, build_exchange_graph, has_negative_cycle, local_demand_prices, local_demand_violations, Move};
use welfare_lab::{welfare, Allocation, ItemSet, Market, PriceVector, SetFunction};

fn random_full_allocation(rng: &mut rand_chacha::ChaCha8Rng, n: usize, m: usize) -> Allocation {
    let mut bundles = vec![ItemSet::EMPTY; n];
    for j in 0..m {
        let i = rng.random_range(0..n);
        bundles[i] = bundles[i].with(j);
    }
    Allocation::new(bundles)
}

/// Every full allocation of `m` items to `n` players.
fn full_allocations(n: usize, m: usize) -> Vec<Allocation> {
    let total = n.pow(m as u32);
    (0..total)
        .map(|mut code| {
            let mut bundles = vec![ItemSet::EMPTY; n];
            for j in 0..m {
                bundles[code % n] = bundles[code % n].with(j);
                code /= n;
            }
            Allocation::new(bundles)
        })
        .collect()
}

/// Full allocations without an improving exchange cycle are within `2 − β` of optimal, with the
/// graph's shortest-path prices putting every bundle in local demand.
fn check_local_optima(market: &Market, beta: f64) -> Result<usize, TestCaseError> {
    let opt = brute_force_opt(market).unwrap().1;
    let mut certified = 0;
    for alloc in full_allocations(market.n(), market.m) {
        let g = build_exchange_graph(market, &alloc).unwrap();
        if has_negative_cycle(&g).is_some() {
            continue;
        }
        let p = local_demand_prices(&g).unwrap();
        for (i, s) in alloc.bundles.iter().enumerate() {
            let bad = local_demand_violations(&market.player(i), *s, &p);
            prop_assert!(bad.is_empty(), "player {} bundle {}: {:?}", i, s, bad);
        }
        let w = welfare(market, &alloc).unwrap();
        prop_assert!(w >= opt / (2.0 - beta) - 1e-9 * opt.max(1.0), "welfare {} opt {}", w, opt);
        certified += 1;
    }
    prop_assert!(certified > 0);
    Ok(certified)
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 40, ..ProptestConfig::default() })]

    #[test]
    fn gross_substitutes_local_optima_are_optimal(seed in common::seeds()) {
        let mut rng = common::rng(seed);
        let (n, m) = (rng.random_range(1..=3), rng.random_range(1..=4));
        let market = Market::new(m, (0..n).map(|_| common::random_gs(&mut rng, m)).collect()).unwrap();
        check_local_optima(&market, 1.0)?;
    }

    #[test]
    fn coverage_local_optima_are_half_optimal(seed in common::seeds()) {
        let mut rng = common::rng(seed);
        let (n, m) = (rng.random_range(1..=3), rng.random_range(1..=4));
        let market = Market::new(m, (0..n).map(|_| {
            let r = rng.random_range(1..=2 * m);
            common::random_coverage(&mut rng, m, r)
        }).collect()).unwrap();
        check_local_optima(&market, 0.0)?;
    }

    /// An arc whose weight plus the price change along it is negative is exactly an improving
    /// add, drop or swap for its player.
    #[test]
    fn negative_reduced_arcs_are_local_improvements(seed in common::seeds()) {
        let mut rng = common::rng(seed);
        let (n, m) = (rng.random_range(1..=3), rng.random_range(1..=6));
        let market = common::random_market(&mut rng, n, m);
        let alloc = random_full_allocation(&mut rng, n, m);
        let p = PriceVector::new((0..m).map(|_| rng.random_range(0.0..1.0)).collect()).unwrap();
        let g = build_exchange_graph(&market, &alloc).unwrap();
        let price = |k: usize| if k == g.dummy() { 0.0 } else { p.prices[k] };
        for i in 0..n {
            let s = alloc.bundles[i];
            let v = market.player(i);
            let tol = 1e-12 * (v.value(s) - p.of(s)).abs().max(1.0);
            let mut from_arcs: Vec<Move> = g.arcs.iter().filter(|a| a.player == i).filter_map(|a| {
                let reduced = a.weight + price(a.to) - price(a.from);
                (-reduced > tol).then(|| match (a.from == g.dummy(), a.to == g.dummy()) {
                    (true, _) => Move::Add(a.to),
                    (_, true) => Move::Drop(a.from),
                    _ => Move::Swap(a.from, a.to),
                })
            }).collect();
            let mut direct: Vec<Move> = local_demand_violations(&v, s, &p).into_iter().map(|(mv, _)| mv).collect();
            from_arcs.sort_by_key(|m| format!("{m:?}"));
            direct.sort_by_key(|m| format!("{m:?}"));
            prop_assert_eq!(from_arcs, direct);
        }
    }

    #[test]
    fn bias_certificate_bounds_welfare(seed in common::seeds()) {
        let mut rng = common::rng(seed);
        let (n, m) = (rng.random_range(1..=3), rng.random_range(1..=5));
        let market = common::random_market(&mut rng, n, m);
        let alloc = random_full_allocation(&mut rng, n, m);
        let p = PriceVector::new((0..m).map(|_| rng.random_range(0.0..1.0)).collect()).unwrap();
        let cert = bias_of(&market, &alloc, &p).unwrap();
        let opt = brute_force_opt(&market).unwrap().1;
        let w = welfare(&market, &alloc).unwrap();
        prop_assert!(w >= cert.mu * opt - 1e-9 * opt.max(1.0), "welfare {} mu {} opt {}", w, cert.mu, opt);
    }
}
