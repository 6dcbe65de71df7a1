//! Demand oracles and query counting.

use std::cell::Cell;

use crate::itemset::{ItemSet, MAX_ITEMS};
use crate::market::PriceVector;
use crate::valuation::SetFunction;

/// Relative slack under which two utilities count as tied.
pub const TIE_TOL: f64 = 1e-12;

#[inline]
fn beats(u: f64, best: f64) -> Option<bool> {
    let slack = TIE_TOL * best.abs().max(u.abs()).max(1.0);
    if u > best + slack {
        Some(true)
    } else if u < best - slack {
        Some(false)
    } else {
        None
    }
}

/// A bundle in demand given the held bundle `held`: `S ⊆ M∖held` maximizing
/// `v(S | held) − p(S)`. Ties prefer larger bundles, then the lowest bitmask.
pub fn exact_demand<F: SetFunction + ?Sized>(v: &F, p: &PriceVector, held: ItemSet) -> ItemSet {
    let m = v.num_items();
    assert!(m <= MAX_ITEMS);
    let free = ItemSet::full(m).difference(held);
    let mut base = 0.0;
    let mut best = ItemSet::EMPTY;
    let mut best_u = f64::NEG_INFINITY;
    // The first subset is the empty one, so `base` is set before it is used.
    for s in free.subsets() {
        let val = v.value(s.union(held));
        if s.is_empty() {
            base = val;
        }
        let u = val - base - p.of(s);
        let better = s.is_empty()
            || match beats(u, best_u) {
                Some(b) => b,
                None => s.len() > best.len(),
            };
        if better {
            best = s;
            best_u = u;
        }
    }
    best
}

/// Utility `v(S | held) − p(S)`.
pub fn utility<F: SetFunction + ?Sized>(v: &F, p: &PriceVector, s: ItemSet, held: ItemSet) -> f64 {
    v.value(s.union(held)) - v.value(held) - p.of(s.difference(held))
}

/// Marginal-utility greedy: repeatedly adds the item with the largest `v(j | S) − p(j)`
/// while that quantity is strictly positive. Ties go to the lowest index.
pub fn greedy_demand<F: SetFunction + ?Sized>(v: &F, p: &PriceVector) -> ItemSet {
    let m = v.num_items();
    let mut s = ItemSet::EMPTY;
    let mut vs = v.value(s);
    loop {
        let mut pick = None;
        let mut best = 0.0;
        let mut best_val = vs;
        for j in 0..m {
            if s.contains(j) {
                continue;
            }
            let vj = v.value(s.with(j));
            let gain = vj - vs - p.prices[j];
            if gain > best {
                best = gain;
                pick = Some(j);
                best_val = vj;
            }
        }
        match pick {
            Some(j) => {
                s = s.with(j);
                vs = best_val;
            }
            None => return s,
        }
    }
}

/// Query tallies. Counters only grow until [`QueryCounter::reset`].
#[derive(Debug, Default)]
pub struct QueryCounter {
    value_queries: Cell<u64>,
    demand_queries: Cell<u64>,
}

impl QueryCounter {
    pub fn new() -> QueryCounter {
        QueryCounter::default()
    }

    pub fn value_queries(&self) -> u64 {
        self.value_queries.get()
    }

    pub fn demand_queries(&self) -> u64 {
        self.demand_queries.get()
    }

    pub fn reset(&self) {
        self.value_queries.set(0);
        self.demand_queries.set(0);
    }

    pub fn record_demand(&self) {
        self.demand_queries.set(self.demand_queries.get() + 1);
    }
}

/// Wraps a valuation so that every value query is tallied in `counter`.
pub struct Counted<'a, F: ?Sized> {
    pub inner: &'a F,
    pub counter: &'a QueryCounter,
}

impl<'a, F: SetFunction + ?Sized> Counted<'a, F> {
    pub fn new(inner: &'a F, counter: &'a QueryCounter) -> Self {
        Counted { inner, counter }
    }

    /// Demand query through the counted value oracle.
    pub fn demand(&self, p: &PriceVector, held: ItemSet) -> ItemSet {
        self.counter.record_demand();
        exact_demand(self, p, held)
    }
}

impl<F: SetFunction + ?Sized> SetFunction for Counted<'_, F> {
    fn num_items(&self) -> usize {
        self.inner.num_items()
    }
    fn value(&self, s: ItemSet) -> f64 {
        self.counter.value_queries.set(self.counter.value_queries.get() + 1);
        self.inner.value(s)
    }
}
