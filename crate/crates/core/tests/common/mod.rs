//! Instance samplers and brute-force oracles shared by the integration tests.
#![allow(dead_code)]

pub mod suites;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use welfare_lab::valuation::{Matroid, Region};
use welfare_lab::{ItemSet, Market, ValuationSpec};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random item set over `m` items, each item present with probability `p`.
pub fn random_set(rng: &mut ChaCha8Rng, m: usize, p: f64) -> ItemSet {
    ItemSet::from_items((0..m).filter(|_| rng.random::<f64>() < p))
}

/// Monotone table: uniform values pushed up to the max over subsets, computed here by brute force.
pub fn monotone_table(rng: &mut ChaCha8Rng, m: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..1usize << m).map(|_| rng.random::<f64>()).collect();
    (0..1usize << m)
        .map(|s| {
            let mut best = 0.0f64;
            let mut t = s;
            loop {
                best = best.max(raw[t]);
                if t == 0 {
                    break;
                }
                t = (t - 1) & s;
            }
            best
        })
        .collect()
}

pub fn random_matroid(rng: &mut ChaCha8Rng, m: usize) -> Matroid {
    match rng.random_range(0..3) {
        0 => Matroid::Uniform { k: rng.random_range(0..=m) },
        1 => {
            let k = rng.random_range(1..=m);
            let mut blocks = vec![ItemSet::EMPTY; k];
            for j in 0..m {
                let b = rng.random_range(0..k);
                blocks[b] = blocks[b].with(j);
            }
            let capacities = blocks.iter().map(|b| rng.random_range(0..=b.len())).collect();
            Matroid::Partition { blocks, capacities }
        }
        _ => {
            // Bases of a partition matroid listed explicitly, so the family is a genuine matroid.
            let k = rng.random_range(1..=m);
            let blocks: Vec<ItemSet> = (0..k).map(|b| ItemSet::from_items((0..m).filter(|j| j % k == b))).collect();
            let mut sets = vec![ItemSet::EMPTY];
            for b in &blocks {
                sets = sets.iter().flat_map(|s| b.iter().map(move |j| s.with(j))).collect();
            }
            Matroid::Explicit { sets }
        }
    }
}

pub fn random_transversal(rng: &mut ChaCha8Rng, m: usize) -> ValuationSpec {
    let k = rng.random_range(1..=m);
    let mut parts = vec![ItemSet::EMPTY; k];
    for j in 0..m {
        let b = rng.random_range(0..k);
        parts[b] = parts[b].with(j);
    }
    parts.retain(|p| !p.is_empty());
    ValuationSpec::Transversal { parts, r: (0..m).map(|_| u8::from(rng.random::<bool>())).collect() }
}

pub fn random_coverage(rng: &mut ChaCha8Rng, m: usize, regions: usize) -> ValuationSpec {
    ValuationSpec::Coverage {
        regions: (0..regions).map(|_| Region { w: rng.random::<f64>(), items: random_set(rng, m, 0.4) }).collect(),
    }
}

/// One of the library's gross-substitutes classes.
pub fn random_gs(rng: &mut ChaCha8Rng, m: usize) -> ValuationSpec {
    match rng.random_range(0..5) {
        0 => ValuationSpec::Linear { c: rng.random::<f64>(), l: (0..m).map(|_| rng.random::<f64>()).collect() },
        1 => ValuationSpec::Additive { l: (0..m).map(|_| rng.random::<f64>()).collect() },
        2 => ValuationSpec::UnitDemand { rho: (0..m).map(|_| rng.random::<f64>()).collect() },
        3 => ValuationSpec::WeightedMatroidRank { matroid: random_matroid(rng, m), w: (0..m).map(|_| rng.random::<f64>()).collect() },
        _ => random_transversal(rng, m),
    }
}

/// Any library valuation kind.
pub fn random_spec(rng: &mut ChaCha8Rng, m: usize) -> ValuationSpec {
    match rng.random_range(0..4) {
        0 => random_gs(rng, m),
        1 => ValuationSpec::Xos {
            clauses: (0..rng.random_range(1..=3)).map(|_| (0..m).map(|_| rng.random::<f64>()).collect()).collect(),
        },
        2 => {
            let r = rng.random_range(0..=2 * m);
            random_coverage(rng, m, r)
        }
        _ => ValuationSpec::Table { values: monotone_table(rng, m) },
    }
}

pub fn random_market(rng: &mut ChaCha8Rng, n: usize, m: usize) -> Market {
    Market::new(m, (0..n).map(|_| random_spec(rng, m)).collect()).expect("valid market")
}

/// Seeds as a proptest input; instances are then drawn deterministically from the seed.
pub fn seeds() -> impl Strategy<Value = u64> {
    any::<u64>()
}

/// Maximum over independent subsets, by enumeration.
pub fn brute_matroid_value(matroid: &Matroid, w: &[f64], s: ItemSet) -> f64 {
    s.subsets().filter(|t| matroid.is_independent(*t)).map(|t| t.iter().map(|j| w[j]).sum::<f64>()).fold(0.0, f64::max)
}

/// Maximum-weight matching between the items of `s` and the parts, by trying every assignment.
pub fn brute_transversal_matching(parts: &[ItemSet], r: &[u8], s: ItemSet) -> f64 {
    fn go(items: &[usize], k: usize, used: &mut Vec<bool>, parts: &[ItemSet], r: &[u8]) -> f64 {
        if k == items.len() {
            return 0.0;
        }
        let j = items[k];
        let mut best = go(items, k + 1, used, parts, r);
        for (p, part) in parts.iter().enumerate() {
            if part.contains(j) && !used[p] {
                used[p] = true;
                best = best.max(f64::from(r[j]) + go(items, k + 1, used, parts, r));
                used[p] = false;
            }
        }
        best
    }
    let items = s.to_vec();
    go(&items, 0, &mut vec![false; parts.len()], parts, r)
}

/// Total weight of regions touching `s`, checked region by region.
pub fn brute_coverage(regions: &[Region], s: ItemSet) -> f64 {
    regions.iter().filter(|r| r.items.iter().any(|j| s.contains(j))).map(|r| r.w).sum()
}
