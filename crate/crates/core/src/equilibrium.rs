//! Equilibrium and local-optimality certificates.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::itemset::{all_bundles, ItemSet};
use crate::market::{Allocation, Market, PriceVector};
use crate::oracle::exact_demand;
use crate::properties::{value_scale, Verdict};
use crate::valuation::{tabulate, SetFunction};

fn require_full(market: &Market, alloc: &Allocation, p: &PriceVector) -> Result<()> {
    alloc.check(market)?;
    p.check(market.m)?;
    if !alloc.is_full(market.m) {
        return Err(Error::Precondition("a full allocation is required".into()));
    }
    Ok(())
}

/// For each player, `max_T [v_i(T) − p(T)] − [v_i(S_i) − p(S_i)]` (zero when `S_i` is demanded).
pub fn demand_shortfall(market: &Market, alloc: &Allocation, p: &PriceVector) -> Vec<f64> {
    (0..market.n())
        .map(|i| {
            let v = market.player(i);
            let d = exact_demand(&v, p, ItemSet::EMPTY);
            let s = alloc.bundles[i];
            (v.value(d) - p.of(d)) - (v.value(s) - p.of(s))
        })
        .collect()
}

/// Every player's bundle is in demand at `p` (tolerance `1e-9` scaled). Fails with `(i, T)`.
pub fn is_walrasian(market: &Market, alloc: &Allocation, p: &PriceVector) -> Result<Verdict<(usize, ItemSet)>> {
    require_full(market, alloc, p)?;
    for i in 0..market.n() {
        let v = market.player(i);
        let d = exact_demand(&v, p, ItemSet::EMPTY);
        let s = alloc.bundles[i];
        let (ud, us) = (v.value(d) - p.of(d), v.value(s) - p.of(s));
        if ud > us + 1e-9 * ud.abs().max(us.abs()).max(1.0) {
            return Ok(Verdict { holds: false, witness: Some((i, d)) });
        }
    }
    Ok(Verdict { holds: true, witness: None })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BiasCertificate {
    pub mu: f64,
    pub mu_prime: f64,
    /// Per player, the alternative bundle maximizing `mu_prime·v_i(T) − p(T)`.
    pub binding: Vec<ItemSet>,
}

struct BiasPlayer {
    own_value: f64,
    own_price: f64,
    /// `(v(T), p(T))` for every bundle.
    points: Vec<(f64, f64)>,
}

impl BiasPlayer {
    fn best_alternative(&self, mu_prime: f64) -> (f64, usize) {
        let mut best = f64::NEG_INFINITY;
        let mut arg = 0;
        for (k, &(v, p)) in self.points.iter().enumerate() {
            let u = mu_prime * v - p;
            if u > best {
                best = u;
                arg = k;
            }
        }
        (best, arg)
    }

    fn mu_bound(&self, mu_prime: f64) -> f64 {
        let den = self.best_alternative(mu_prime).0 + self.own_price;
        if den <= 0.0 {
            f64::INFINITY
        } else {
            mu_prime * self.own_value / den
        }
    }
}

fn mu_at(players: &[BiasPlayer], mu_prime: f64) -> f64 {
    players.iter().map(|p| p.mu_bound(mu_prime)).fold(mu_prime, f64::min)
}

/// Largest certified `μ` such that for some `μ′ ∈ [μ, 1]` every player satisfies
/// `(μ′/μ)·v_i(S_i) − p(S_i) ≥ μ′·v_i(T) − p(T)` for all `T`. Searches `μ′` on a 1001-point grid
/// followed by two finer local grids.
pub fn bias_of(market: &Market, alloc: &Allocation, p: &PriceVector) -> Result<BiasCertificate> {
    require_full(market, alloc, p)?;
    if market.m > 16 {
        return Err(Error::Precondition("bias certification is limited to 16 items".into()));
    }
    let prices: Vec<f64> = all_bundles(market.m).map(|s| p.of(s)).collect();
    let mut players = Vec::with_capacity(market.n());
    for i in 0..market.n() {
        let t = tabulate(&market.player(i));
        let s = alloc.bundles[i];
        if t[s.index()] < 0.0 {
            return Err(Error::Precondition(format!("player {i} has negative value for their bundle")));
        }
        players.push(BiasPlayer {
            own_value: t[s.index()],
            own_price: prices[s.index()],
            points: t.into_iter().zip(prices.iter().copied()).collect(),
        });
    }
    let mut best_mp = 0.0;
    let mut best_mu = mu_at(&players, 0.0);
    let consider = |mp: f64, best_mp: &mut f64, best_mu: &mut f64| {
        let mu = mu_at(&players, mp);
        if mu > *best_mu {
            *best_mu = mu;
            *best_mp = mp;
        }
    };
    for k in 0..=1000 {
        consider(k as f64 / 1000.0, &mut best_mp, &mut best_mu);
    }
    let mut half = 1e-3;
    for _ in 0..2 {
        let center = best_mp;
        for k in 0..=200 {
            let mp = (center - half + 2.0 * half * k as f64 / 200.0).clamp(0.0, 1.0);
            consider(mp, &mut best_mp, &mut best_mu);
        }
        half /= 100.0;
    }
    let binding = players.iter().map(|pl| ItemSet(pl.best_alternative(best_mp).1 as u32)).collect();
    Ok(BiasCertificate { mu: best_mu.max(0.0), mu_prime: best_mp, binding })
}

/// Checks the biased-equilibrium inequality at a given `(μ, μ′)`; fails with `(i, T)`.
pub fn check_bias(market: &Market, alloc: &Allocation, p: &PriceVector, mu: f64, mu_prime: f64) -> Verdict<(usize, ItemSet)> {
    for i in 0..market.n() {
        let v = market.player(i);
        let s = alloc.bundles[i];
        let lhs = if mu > 0.0 { (mu_prime / mu) * v.value(s) - p.of(s) } else { f64::INFINITY };
        for t in all_bundles(market.m) {
            let rhs = mu_prime * v.value(t) - p.of(t);
            if lhs < rhs - 1e-9 * lhs.abs().max(rhs.abs()).max(1.0) {
                return Verdict { holds: false, witness: Some((i, t)) };
            }
        }
    }
    Verdict { holds: true, witness: None }
}

/// `α·v(T) ≥ p(T)` for every `T ⊆ S`. Fails with `T`.
pub fn is_strongly_alpha_ir<F: SetFunction + ?Sized>(v: &F, s: ItemSet, p: &PriceVector, alpha: f64) -> Result<Verdict<ItemSet>> {
    if !(alpha >= 1.0) {
        return Err(Error::Precondition(format!("alpha must be at least 1, got {alpha}")));
    }
    if s.len() > 20 {
        return Err(Error::Precondition("strong IR check is limited to bundles of 20 items".into()));
    }
    for t in s.subsets() {
        let (lhs, rhs) = (alpha * v.value(t), p.of(t));
        if lhs.is_finite() && lhs < rhs - 1e-9 * rhs.abs().max(1.0) {
            return Ok(Verdict { holds: false, witness: Some(t) });
        }
    }
    Ok(Verdict { holds: true, witness: None })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Move {
    Add(usize),
    Drop(usize),
    /// Give up the first item, take the second.
    Swap(usize, usize),
}

impl Move {
    pub fn apply(self, s: ItemSet) -> ItemSet {
        match self {
            Move::Add(y) => s.with(y),
            Move::Drop(x) => s.without(x),
            Move::Swap(x, y) => s.without(x).with(y),
        }
    }
}

/// Add, drop and swap moves that raise `v − p` by more than `1e-12` (scaled), with their gains.
pub fn local_demand_violations<F: SetFunction + ?Sized>(v: &F, s: ItemSet, p: &PriceVector) -> Vec<(Move, f64)> {
    let m = v.num_items();
    let u = |t: ItemSet| v.value(t) - p.of(t);
    let base = u(s);
    let tol = 1e-12 * base.abs().max(1.0);
    let mut out = Vec::new();
    let mut consider = |mv: Move| {
        let gain = u(mv.apply(s)) - base;
        if gain > tol {
            out.push((mv, gain));
        }
    };
    for y in (0..m).filter(|&y| !s.contains(y)) {
        consider(Move::Add(y));
    }
    for x in s.iter() {
        consider(Move::Drop(x));
    }
    for x in s.iter() {
        for y in (0..m).filter(|&y| !s.contains(y)) {
            consider(Move::Swap(x, y));
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExchangeArc {
    pub from: usize,
    pub to: usize,
    pub weight: f64,
    pub player: usize,
}

/// Items are nodes `0..m`; node `m` is a single dummy shared by all players (the outside option
/// at price zero). Arcs carry value decreases: swap `x→y` for `x ∈ S_i, y ∉ S_i` weighs
/// `v_i(S_i) − v_i(S_i − x + y)`, add `dummy→y` weighs `v_i(S_i) − v_i(S_i + y)` and drop
/// `x→dummy` weighs `v_i(S_i) − v_i(S_i − x)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExchangeGraph {
    pub m: usize,
    pub arcs: Vec<ExchangeArc>,
    pub allocation: Allocation,
}

impl ExchangeGraph {
    pub fn dummy(&self) -> usize {
        self.m
    }

    pub fn num_nodes(&self) -> usize {
        self.m + 1
    }
}

pub fn build_exchange_graph(market: &Market, alloc: &Allocation) -> Result<ExchangeGraph> {
    alloc.check(market)?;
    let m = market.m;
    let dummy = m;
    let mut arcs = Vec::new();
    for i in 0..market.n() {
        let v = market.player(i);
        let s = alloc.bundles[i];
        let vs = v.value(s);
        for y in (0..m).filter(|&y| !s.contains(y)) {
            arcs.push(ExchangeArc { from: dummy, to: y, weight: vs - v.value(s.with(y)), player: i });
        }
        for x in s.iter() {
            arcs.push(ExchangeArc { from: x, to: dummy, weight: vs - v.value(s.without(x)), player: i });
            for y in (0..m).filter(|&y| !s.contains(y)) {
                arcs.push(ExchangeArc { from: x, to: y, weight: vs - v.value(s.without(x).with(y)), player: i });
            }
        }
    }
    Ok(ExchangeGraph { m, arcs, allocation: alloc.clone() })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NegativeCycle {
    pub arcs: Vec<ExchangeArc>,
    pub weight: f64,
}

impl NegativeCycle {
    /// Node sequence `n_0, n_1, …, n_0`.
    pub fn nodes(&self) -> Vec<usize> {
        let mut out: Vec<usize> = self.arcs.iter().map(|a| a.from).collect();
        if let Some(a) = self.arcs.first() {
            out.push(a.from);
        }
        out
    }
}

/// Bellman-Ford from a virtual source joined to every node. Returns a cycle of total weight
/// below `−1e-12` when one is found.
pub fn has_negative_cycle(g: &ExchangeGraph) -> Option<NegativeCycle> {
    let nn = g.num_nodes();
    let mut dist = vec![0.0f64; nn];
    let mut pred: Vec<Option<usize>> = vec![None; nn];
    let mut last = None;
    for _ in 0..=nn {
        last = None;
        for (k, a) in g.arcs.iter().enumerate() {
            if dist[a.from] + a.weight < dist[a.to] - 1e-12 {
                dist[a.to] = dist[a.from] + a.weight;
                pred[a.to] = Some(k);
                last = Some(a.to);
            }
        }
        if last.is_none() {
            return None;
        }
    }
    // Walk back far enough to land on the cycle.
    let mut node = last?;
    for _ in 0..nn {
        node = g.arcs[pred[node]?].from;
    }
    let start = node;
    let mut arcs = Vec::new();
    loop {
        let k = pred[node]?;
        arcs.push(g.arcs[k].clone());
        node = g.arcs[k].from;
        if node == start {
            break;
        }
        if arcs.len() > nn {
            return None;
        }
    }
    arcs.reverse();
    let weight: f64 = arcs.iter().map(|a| a.weight).sum();
    (weight < -1e-12).then_some(NegativeCycle { arcs, weight })
}

/// Prices under which every player's bundle is in local demand: `p(x) = −dist(dummy, x)` using
/// shortest paths from the dummy. Items the dummy cannot reach get a large-weight virtual arc.
/// Returns `None` when the graph has a negative cycle.
pub fn local_demand_prices(g: &ExchangeGraph) -> Option<PriceVector> {
    if has_negative_cycle(g).is_some() {
        return None;
    }
    let nn = g.num_nodes();
    let dummy = g.dummy();
    let big = 1.0 + g.arcs.iter().map(|a| a.weight.abs()).sum::<f64>();
    // Virtual arcs dummy→x of weight `big` keep every item reachable.
    let mut dist = vec![big; nn];
    dist[dummy] = 0.0;
    for _ in 0..nn {
        let mut changed = false;
        for a in &g.arcs {
            if dist[a.from] + a.weight < dist[a.to] {
                dist[a.to] = dist[a.from] + a.weight;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    Some(PriceVector { prices: dist[..g.m].iter().map(|d| -d).collect() })
}

/// Gives each unallocated item, in index order, to the player with the largest marginal value for
/// it (lowest index on ties). Used to make auction outcomes full before certification.
pub fn complete_allocation(market: &Market, alloc: &Allocation) -> Allocation {
    let mut out = alloc.clone();
    for j in market.items().difference(alloc.allocated()).iter() {
        let mut best = f64::NEG_INFINITY;
        let mut who = 0;
        for i in 0..market.n() {
            let s = out.bundles[i];
            let g = market.value(i, s.with(j)) - market.value(i, s);
            if g > best {
                best = g;
                who = i;
            }
        }
        out.bundles[who] = out.bundles[who].with(j);
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum SiFailure {
    /// A subset whose value falls below its price.
    NotStronglyIr { subset: ItemSet },
    /// A bundle beating `v(S) − β·p(S)`.
    Beaten { alternative: ItemSet, gap: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SiViolation {
    pub prices: Vec<f64>,
    pub bundle: ItemSet,
    pub failure: SiFailure,
}

fn si_check(t: &[f64], m: usize, p: &PriceVector, beta: f64) -> Option<SiViolation> {
    let pr: Vec<f64> = all_bundles(m).map(|s| p.of(s)).collect();
    let scale = value_scale(t);
    let u = |s: usize| t[s] - pr[s];
    let (mut best_u, mut best_t) = (f64::NEG_INFINITY, 0usize);
    for s in 0..t.len() {
        if u(s) > best_u {
            best_u = u(s);
            best_t = s;
        }
    }
    let tol_local = 1e-12 * scale;
    let tol = 1e-9 * scale;
    for s in 0..t.len() {
        let set = ItemSet(s as u32);
        let us = u(s);
        let mut local = true;
        'moves: for y in 0..m {
            if set.contains(y) {
                if u(set.without(y).index()) > us + tol_local {
                    local = false;
                    break 'moves;
                }
                for z in (0..m).filter(|&z| !set.contains(z)) {
                    if u(set.without(y).with(z).index()) > us + tol_local {
                        local = false;
                        break 'moves;
                    }
                }
            } else if u(set.with(y).index()) > us + tol_local {
                local = false;
                break 'moves;
            }
        }
        if !local {
            continue;
        }
        if let Some(sub) = set.subsets().find(|q| t[q.index()] < pr[q.index()] - tol) {
            return Some(SiViolation { prices: p.prices.clone(), bundle: set, failure: SiFailure::NotStronglyIr { subset: sub } });
        }
        let lhs = t[s] - beta * pr[s];
        if lhs < best_u - tol {
            return Some(SiViolation {
                prices: p.prices.clone(),
                bundle: set,
                failure: SiFailure::Beaten { alternative: ItemSet(best_t as u32), gap: best_u - lhs },
            });
        }
    }
    None
}

/// Randomized search for a violation of `β`-single-improvement: at each probed price vector,
/// every bundle in local demand must be strongly IR and satisfy `v(S) − β·p(S) ≥ v(T) − p(T)`.
/// Probes the structured prices (`0` on `S`, `v(j | S)` off `S`) for every `S`, then `trials`
/// uniform draws from `[0, 2·max marginal]`. Only a returned violation is conclusive.
pub fn beta_si_probe<F: SetFunction + ?Sized>(v: &F, beta: f64, trials: usize, seed: u64) -> Result<Option<SiViolation>> {
    if !(0.0..=1.0).contains(&beta) {
        return Err(Error::Precondition(format!("beta must lie in [0, 1], got {beta}")));
    }
    let m = v.num_items();
    let t = tabulate(v);
    for s in all_bundles(m) {
        let p = PriceVector {
            prices: (0..m).map(|j| if s.contains(j) { 0.0 } else { t[s.with(j).index()] - t[s.index()] }).collect(),
        };
        if let Some(viol) = si_check(&t, m, &p, beta) {
            return Ok(Some(viol));
        }
    }
    let mut max_marg = 0.0f64;
    for s in all_bundles(m) {
        for j in (0..m).filter(|&j| !s.contains(j)) {
            max_marg = max_marg.max(t[s.with(j).index()] - t[s.index()]);
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..trials {
        let p = PriceVector { prices: (0..m).map(|_| rng.random::<f64>() * 2.0 * max_marg).collect() };
        if let Some(viol) = si_check(&t, m, &p, beta) {
            return Ok(Some(viol));
        }
    }
    Ok(None)
}
