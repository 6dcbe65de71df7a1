//! Welfare-maximization procedures: greedy under a feasibility constraint, the ascending-price
//! auction, the highest-bidder rule and an exact dynamic-programming optimum.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::itemset::ItemSet;
use crate::market::{Allocation, Market, PriceVector};
use crate::oracle::{exact_demand, utility};
use crate::valuation::{tabulate, SetFunction};

/// Greedy value maximization subject to a downward-closed feasibility oracle: repeatedly adds the
/// feasible item with the largest marginal value (lowest index on ties) until no item fits.
pub fn greedy_max<F: SetFunction + ?Sized>(v: &F, feasible: &dyn Fn(ItemSet) -> bool) -> ItemSet {
    let m = v.num_items();
    let mut s = ItemSet::EMPTY;
    let mut vs = v.value(s);
    loop {
        let mut pick: Option<(usize, f64)> = None;
        for j in 0..m {
            if s.contains(j) || !feasible(s.with(j)) {
                continue;
            }
            let vj = v.value(s.with(j));
            if pick.is_none_or(|(_, best)| vj - vs > best - vs) {
                pick = Some((j, vj));
            }
        }
        match pick {
            Some((j, vj)) => {
                s = s.with(j);
                vs = vj;
            }
            None => return s,
        }
    }
}

/// Greedy over (player, item) pairs where each item may be used once: adds the pair with the
/// largest marginal `v_i(j | S_i)`, ties broken by the lowest pair index `i·m + j`.
pub fn welfare_greedy(market: &Market) -> Allocation {
    let (n, m) = (market.n(), market.m);
    let mut alloc = Allocation::empty(n);
    let mut cur: Vec<f64> = (0..n).map(|i| market.value(i, ItemSet::EMPTY)).collect();
    let mut free = market.items();
    while !free.is_empty() {
        let mut pick: Option<(usize, usize, f64, f64)> = None;
        for i in 0..n {
            for j in free.iter() {
                let vj = market.value(i, alloc.bundles[i].with(j));
                let gain = vj - cur[i];
                if pick.is_none_or(|(_, _, g, _)| gain > g) {
                    pick = Some((i, j, gain, vj));
                }
            }
        }
        let (i, j, _, vj) = pick.expect("free is nonempty");
        alloc.bundles[i] = alloc.bundles[i].with(j);
        cur[i] = vj;
        free = free.without(j);
    }
    debug_assert!(m == 0 || alloc.is_full(m));
    alloc
}

/// Player selection rule for the ascending auction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OrderingPolicy {
    /// Scan players cyclically, starting after the last player who acted.
    RoundRobin,
    /// A fresh uniformly random scan order every round.
    Random { seed: u64 },
    /// Players in groups. The current group is scanned from its top every round and stays
    /// current while any member demands something; then the next group (cyclically) takes over.
    /// Unlisted players form a final group in index order.
    Scripted { phases: Vec<Vec<usize>> },
}

impl OrderingPolicy {
    fn validate(&self, n: usize) -> Result<()> {
        if let OrderingPolicy::Scripted { phases } = self {
            if let Some(&i) = phases.iter().flatten().find(|&&i| i >= n) {
                return Err(Error::Precondition(format!("scripted order names player {i}, but there are {n}")));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KcRound {
    pub player: usize,
    pub bundle: ItemSet,
}

/// Every executed round of an auction run. Price and allocation snapshots are recovered by replay.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KcTrace {
    pub n: usize,
    pub m: usize,
    pub delta: f64,
    pub policy: OrderingPolicy,
    pub rounds: Vec<KcRound>,
}

/// State after some number of rounds.
#[derive(Clone, Debug, PartialEq)]
pub struct KcSnapshot {
    pub round: usize,
    /// How many times each item has been bought; its price is `count · delta`.
    pub counts: Vec<u64>,
    pub allocation: Allocation,
}

impl KcSnapshot {
    pub fn prices(&self, delta: f64) -> PriceVector {
        PriceVector { prices: self.counts.iter().map(|&c| c as f64 * delta).collect() }
    }
}

impl KcTrace {
    /// States after rounds `0..=rounds.len()`, starting from empty bundles and zero prices.
    pub fn snapshots(&self) -> impl Iterator<Item = KcSnapshot> + '_ {
        let mut state = KcSnapshot { round: 0, counts: vec![0; self.m], allocation: Allocation::empty(self.n) };
        let mut k = 0usize;
        std::iter::from_fn(move || {
            if k > self.rounds.len() {
                return None;
            }
            if k > 0 {
                let r = &self.rounds[k - 1];
                apply_round(&mut state.allocation, &mut state.counts, r.player, r.bundle);
                state.round = k;
            }
            k += 1;
            Some(state.clone())
        })
    }

    /// One JSON object per round: round number, acting player, bundle, prices and allocation after it.
    pub fn to_json_lines(&self) -> String {
        let mut out = String::new();
        for snap in self.snapshots().skip(1) {
            let r = &self.rounds[snap.round - 1];
            let line = serde_json::json!({
                "round": snap.round,
                "player": r.player,
                "bundle": r.bundle,
                "prices": snap.prices(self.delta).prices,
                "allocation": snap.allocation.bundles,
            });
            out.push_str(&line.to_string());
            out.push('\n');
        }
        out
    }

    /// Replays the trace against `market` and checks: nonempty bundles, disjoint snapshots,
    /// and that each bundle was utility-maximal at the prices the player was quoted.
    pub fn verify(&self, market: &Market) -> std::result::Result<(), String> {
        let mut prev: Option<KcSnapshot> = None;
        for snap in self.snapshots() {
            if !snap.allocation.is_disjoint() {
                return Err(format!("round {}: overlapping bundles", snap.round));
            }
            if let Some(before) = prev {
                let r = &self.rounds[snap.round - 1];
                if r.bundle.is_empty() {
                    return Err(format!("round {}: empty bundle", snap.round));
                }
                if snap.counts.iter().zip(&before.counts).any(|(a, b)| a < b) {
                    return Err(format!("round {}: a price decreased", snap.round));
                }
                let held = before.allocation.bundles[r.player];
                let q = quoted_prices(&before.prices(self.delta), held, self.delta);
                let v = market.player(r.player);
                let got = utility(&v, &q, r.bundle, held);
                let best = utility(&v, &q, exact_demand(&v, &q, held), held);
                if got < best - 1e-9 * best.abs().max(1.0) {
                    return Err(format!("round {}: bundle utility {got} below demand utility {best}", snap.round));
                }
            }
            prev = Some(snap);
        }
        Ok(())
    }
}

fn apply_round(alloc: &mut Allocation, counts: &mut [u64], player: usize, d: ItemSet) {
    for (k, b) in alloc.bundles.iter_mut().enumerate() {
        if k == player {
            *b = b.union(d);
        } else {
            *b = b.difference(d);
        }
    }
    for j in d.iter() {
        counts[j] += 1;
    }
}

/// Current prices plus `delta` on every item the player does not hold.
pub fn quoted_prices(p: &PriceVector, held: ItemSet, delta: f64) -> PriceVector {
    PriceVector {
        prices: p.prices.iter().enumerate().map(|(j, &x)| if held.contains(j) { x } else { x + delta }).collect(),
    }
}

#[derive(Clone, Debug)]
pub struct KcConfig {
    pub delta: f64,
    pub policy: OrderingPolicy,
    pub max_rounds: u64,
}

impl KcConfig {
    pub fn new(delta: f64, policy: OrderingPolicy) -> KcConfig {
        KcConfig { delta, policy, max_rounds: 10_000_000 }
    }
}

#[derive(Clone, Debug)]
pub struct KcOutcome {
    pub allocation: Allocation,
    pub prices: PriceVector,
    pub trace: KcTrace,
}

/// The ascending-price auction with the default round guard of `10^7`.
pub fn kelso_crawford(market: &Market, delta: f64, policy: OrderingPolicy) -> Result<KcOutcome> {
    kelso_crawford_with(market, &KcConfig::new(delta, policy))
}

/// Each round, the first player in the policy's scan order with a nonempty demand (given their
/// current bundle, at current prices raised by `delta` on items they do not hold) adds that
/// bundle, takes it from its holders, and its items' prices rise by `delta`. Stops when nobody
/// in the scan demands anything.
pub fn kelso_crawford_with(market: &Market, cfg: &KcConfig) -> Result<KcOutcome> {
    let (n, m) = (market.n(), market.m);
    if !(cfg.delta > 0.0 && cfg.delta.is_finite()) {
        return Err(Error::Precondition(format!("delta must be positive, got {}", cfg.delta)));
    }
    cfg.policy.validate(n)?;
    let mut alloc = Allocation::empty(n);
    let mut counts = vec![0u64; m];
    let mut rounds = Vec::new();
    let mut cursor = 0usize;
    let mut rng = match cfg.policy {
        OrderingPolicy::Random { seed } => Some(ChaCha8Rng::seed_from_u64(seed)),
        _ => None,
    };
    let phases: Vec<Vec<usize>> = match &cfg.policy {
        OrderingPolicy::Scripted { phases } => {
            let mut ph: Vec<Vec<usize>> = phases.iter().filter(|g| !g.is_empty()).cloned().collect();
            let rest: Vec<usize> = (0..n).filter(|i| !phases.iter().flatten().any(|j| j == i)).collect();
            if !rest.is_empty() {
                ph.push(rest);
            }
            ph
        }
        _ => Vec::new(),
    };
    let mut phase = 0usize;
    let mut scan: Vec<usize> = (0..n).collect();
    loop {
        if rounds.len() as u64 >= cfg.max_rounds {
            let prices: Vec<f64> = counts.iter().map(|&c| c as f64 * cfg.delta).collect();
            return Err(Error::NonTermination {
                rounds: cfg.max_rounds,
                detail: format!("prices {prices:?}, allocation {:?}", alloc.bundles),
            });
        }
        let p = PriceVector { prices: counts.iter().map(|&c| c as f64 * cfg.delta).collect() };
        let first_demand = |players: &[usize]| {
            players.iter().find_map(|&i| {
                let held = alloc.bundles[i];
                let d = exact_demand(&market.player(i), &quoted_prices(&p, held, cfg.delta), held);
                (!d.is_empty()).then_some((i, d))
            })
        };
        let acted = match &cfg.policy {
            OrderingPolicy::RoundRobin => {
                for (k, s) in scan.iter_mut().enumerate() {
                    *s = (cursor + k) % n;
                }
                first_demand(&scan)
            }
            OrderingPolicy::Random { .. } => {
                scan.sort_unstable();
                scan.shuffle(rng.as_mut().expect("seeded"));
                first_demand(&scan)
            }
            OrderingPolicy::Scripted { .. } => {
                let mut found = None;
                for _ in 0..phases.len() {
                    found = first_demand(&phases[phase]);
                    if found.is_some() {
                        break;
                    }
                    phase = (phase + 1) % phases.len();
                }
                found
            }
        };
        let Some((i, d)) = acted else { break };
        apply_round(&mut alloc, &mut counts, i, d);
        rounds.push(KcRound { player: i, bundle: d });
        cursor = (i + 1) % n;
    }
    let prices = PriceVector { prices: counts.iter().map(|&c| c as f64 * cfg.delta).collect() };
    let trace = KcTrace { n, m, delta: cfg.delta, policy: cfg.policy.clone(), rounds };
    Ok(KcOutcome { allocation: alloc, prices, trace })
}

/// Default work budget for [`brute_force_opt`], counted in (player, bundle, subset) steps.
pub const DEFAULT_OPT_BUDGET: u64 = 4_000_000_000;

/// Exact optimum over partial partitions by dynamic programming over (player suffix, remaining items).
pub fn brute_force_opt(market: &Market) -> Result<(Allocation, f64)> {
    brute_force_opt_with_budget(market, DEFAULT_OPT_BUDGET)
}

pub fn brute_force_opt_with_budget(market: &Market, budget: u64) -> Result<(Allocation, f64)> {
    let (n, m) = (market.n(), market.m);
    let work = (n as u64).saturating_mul(3u64.saturating_pow(m as u32));
    if work > budget {
        return Err(Error::Budget(format!("exact optimum needs about {work} steps (n·3^m), budget is {budget}")));
    }
    let tables: Vec<Vec<f64>> = (0..n).map(|i| tabulate(&market.player(i))).collect();
    let size = 1usize << m;
    // best[i][R]: optimum for players i.. using items in R.
    let mut best = vec![vec![0.0f64; size]; n + 1];
    for i in (0..n).rev() {
        let (head, tail) = best.split_at_mut(i + 1);
        let next = &tail[0];
        let cur = &mut head[i];
        for r in 0..size {
            let rs = ItemSet(r as u32);
            let mut b = f64::NEG_INFINITY;
            for s in rs.subsets() {
                let val = tables[i][s.index()] + next[rs.difference(s).index()];
                if val > b {
                    b = val;
                }
            }
            cur[r] = b;
        }
    }
    let mut alloc = Allocation::empty(n);
    let mut rest = ItemSet::full(m);
    for i in 0..n {
        let target = best[i][rest.index()];
        let mut chosen = ItemSet::EMPTY;
        let mut top = f64::NEG_INFINITY;
        for s in rest.subsets() {
            let val = tables[i][s.index()] + best[i + 1][rest.difference(s).index()];
            if val > top {
                top = val;
                chosen = s;
            }
        }
        debug_assert!(top == target);
        alloc.bundles[i] = chosen;
        rest = rest.difference(chosen);
    }
    Ok((alloc, best[0][ItemSet::full(m).index()]))
}

/// Each item goes to the player with the highest singleton value (lowest index on ties).
pub fn additive_approx(market: &Market) -> Allocation {
    let mut alloc = Allocation::empty(market.n());
    for j in 0..market.m {
        let mut winner = 0;
        let mut top = f64::NEG_INFINITY;
        for i in 0..market.n() {
            let x = market.value(i, ItemSet::singleton(j));
            if x > top {
                top = x;
                winner = i;
            }
        }
        alloc.bundles[winner] = alloc.bundles[winner].with(j);
    }
    alloc
}
