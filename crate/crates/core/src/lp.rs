//! Configuration LP by column generation, welfare estimation and randomized roundings.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::itemset::ItemSet;
use crate::market::{Allocation, Market, PriceVector};
use crate::oracle::exact_demand;
use crate::simplex::{self, Cmp, LpProblem, LpStatus};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LpColumn {
    pub player: usize,
    pub bundle: ItemSet,
    pub weight: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Residuals {
    /// `max_i |Σ_S x_{i,S} − 1|`.
    pub convexity: f64,
    /// `max_j max(0, Σ_{i,S∋j} x_{i,S} − 1)`.
    pub supply: f64,
    /// Largest reduced cost `v_i(S) − p(S) − u_i` found by the final pricing round.
    pub reduced_cost: f64,
    /// Largest complementary-slackness product over items and positive columns.
    pub slackness: f64,
    /// `Σ_j p_j + Σ_i u_i − value`.
    pub duality_gap: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LpSolution {
    /// Columns with positive weight.
    pub columns: Vec<LpColumn>,
    pub value: f64,
    /// Dual item prices.
    pub prices: Vec<f64>,
    /// Dual per-player utilities.
    pub utilities: Vec<f64>,
    pub residuals: Residuals,
    pub generated_columns: usize,
    pub master_solves: usize,
}

impl LpSolution {
    /// `y[i][j] = Σ_{S∋j} x_{i,S}`.
    pub fn marginals(&self, n: usize, m: usize) -> Vec<Vec<f64>> {
        let mut y = vec![vec![0.0; m]; n];
        for c in &self.columns {
            for j in c.bundle.iter() {
                y[c.player][j] += c.weight;
            }
        }
        y
    }

    /// True when some column weight lies strictly between 0 and 1 (beyond `tol`).
    pub fn is_fractional(&self, tol: f64) -> bool {
        self.columns.iter().any(|c| c.weight > tol && c.weight < 1.0 - tol)
    }
}

pub const DEFAULT_COLUMN_LIMIT: usize = 100_000;

/// Solves the configuration LP `max Σ x_{i,S} v_i(S)` subject to one unit of bundles per player
/// and one unit of supply per item. The master starts from the empty bundle for each player; each
/// pricing round asks every player for a demanded bundle at the item duals and adds it when its
/// reduced cost exceeds `tol`.
pub fn solve_config_lp(market: &Market, tol: f64) -> Result<LpSolution> {
    solve_config_lp_with_limit(market, tol, DEFAULT_COLUMN_LIMIT)
}

pub fn solve_config_lp_with_limit(market: &Market, tol: f64, column_limit: usize) -> Result<LpSolution> {
    let (n, m) = (market.n(), market.m);
    if !(tol > 0.0) {
        return Err(Error::Precondition(format!("tolerance must be positive, got {tol}")));
    }
    if m > 20 {
        return Err(Error::Precondition(format!("configuration LP is limited to 20 items, got {m}")));
    }
    let mut cmp = vec![Cmp::Le; m];
    cmp.extend(std::iter::repeat_n(Cmp::Eq, n));
    let mut lp = LpProblem::new(cmp, vec![1.0; m + n]);
    let mut cols: Vec<(usize, ItemSet)> = Vec::new();
    let add = |lp: &mut LpProblem, cols: &mut Vec<(usize, ItemSet)>, i: usize, s: ItemSet| {
        let mut entries: Vec<(usize, f64)> = s.iter().map(|j| (j, 1.0)).collect();
        entries.push((m + i, 1.0));
        lp.add_column(market.value(i, s), entries);
        cols.push((i, s));
    };
    for i in 0..n {
        add(&mut lp, &mut cols, i, ItemSet::EMPTY);
    }
    let mut solves = 0;
    loop {
        let res = simplex::solve(&lp)?;
        solves += 1;
        if res.status != LpStatus::Optimal {
            return Err(Error::Simplex(format!("master ended with status {:?}", res.status)));
        }
        let prices = PriceVector { prices: res.duals[..m].to_vec() };
        let utilities = res.duals[m..].to_vec();
        let mut added = 0;
        let mut max_rc = f64::NEG_INFINITY;
        for i in 0..n {
            let v = market.player(i);
            let d = exact_demand(&v, &prices, ItemSet::EMPTY);
            let rc = market.value(i, d) - prices.of(d) - utilities[i];
            max_rc = max_rc.max(rc);
            if rc > tol && !cols.contains(&(i, d)) {
                add(&mut lp, &mut cols, i, d);
                added += 1;
            }
        }
        if cols.len() > column_limit {
            return Err(Error::Budget(format!("column limit {column_limit} exceeded")));
        }
        if added == 0 {
            return Ok(finish(market, &cols, &res.x, res.objective, prices.prices, utilities, max_rc.max(0.0), solves));
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn finish(
    market: &Market,
    cols: &[(usize, ItemSet)],
    x: &[f64],
    value: f64,
    prices: Vec<f64>,
    utilities: Vec<f64>,
    reduced_cost: f64,
    solves: usize,
) -> LpSolution {
    let (n, m) = (market.n(), market.m);
    let columns: Vec<LpColumn> = cols
        .iter()
        .zip(x)
        .filter(|(_, &w)| w > 1e-12)
        .map(|(&(player, bundle), &weight)| LpColumn { player, bundle, weight })
        .collect();
    let mut conv = vec![0.0; n];
    let mut load = vec![0.0; m];
    let mut slack = 0.0f64;
    for c in &columns {
        conv[c.player] += c.weight;
        for j in c.bundle.iter() {
            load[j] += c.weight;
        }
        let rc = market.value(c.player, c.bundle) - c.bundle.iter().map(|j| prices[j]).sum::<f64>() - utilities[c.player];
        slack = slack.max((c.weight * rc).abs());
    }
    for j in 0..m {
        slack = slack.max((prices[j] * (1.0 - load[j])).abs());
    }
    let residuals = Residuals {
        convexity: conv.iter().map(|c| (c - 1.0).abs()).fold(0.0, f64::max),
        supply: load.iter().map(|l| (l - 1.0).max(0.0)).fold(0.0, f64::max),
        reduced_cost,
        slackness: slack,
        duality_gap: prices.iter().sum::<f64>() + utilities.iter().sum::<f64>() - value,
    };
    LpSolution { columns, value, prices, utilities, residuals, generated_columns: cols.len(), master_solves: solves }
}

/// `[LP / ((1+eps_hat)·gamma), LP]`. The optimum lies in the interval whenever the players are
/// `eps_hat`-close to a class whose configuration LP has integrality gap at most `gamma`.
pub fn estimate_welfare(market: &Market, gamma: f64, eps_hat: f64, tol: f64) -> Result<(f64, f64)> {
    if !(gamma >= 1.0) {
        return Err(Error::Precondition(format!("gamma must be at least 1, got {gamma}")));
    }
    if !(eps_hat >= 0.0) {
        return Err(Error::Precondition(format!("closeness must be nonnegative, got {eps_hat}")));
    }
    let lp = solve_config_lp(market, tol)?;
    Ok((lp.value / ((1.0 + eps_hat) * gamma), lp.value))
}

/// Per-item cumulative assignment probabilities for item-independent rounding.
pub struct ItemRounder {
    n: usize,
    /// `cum[j][i] = Σ_{k ≤ i} y[k][j]`.
    cum: Vec<Vec<f64>>,
}

impl ItemRounder {
    pub fn new(lp: &LpSolution, market: &Market) -> Result<ItemRounder> {
        let (n, m) = (market.n(), market.m);
        let y = lp.marginals(n, m);
        let mut cum = vec![vec![0.0; n]; m];
        for j in 0..m {
            let mut acc = 0.0;
            for i in 0..n {
                acc += y[i][j];
                cum[j][i] = acc;
            }
            if acc > 1.0 + 1e-6 {
                return Err(Error::Precondition(format!("item {j} has total marginal {acc} > 1")));
            }
        }
        Ok(ItemRounder { n, cum })
    }

    pub fn sample<R: Rng>(&self, rng: &mut R) -> Allocation {
        let mut alloc = Allocation::empty(self.n);
        for (j, cum) in self.cum.iter().enumerate() {
            let u: f64 = rng.random();
            if let Some(i) = cum.iter().position(|&c| u < c) {
                alloc.bundles[i] = alloc.bundles[i].with(j);
            }
        }
        alloc
    }
}

/// Assigns item `j` to player `i` with probability `y_ij`, independently across items.
pub fn round_item_independent(lp: &LpSolution, market: &Market, seed: u64) -> Result<Allocation> {
    let r = ItemRounder::new(lp, market)?;
    Ok(r.sample(&mut ChaCha8Rng::seed_from_u64(seed)))
}

/// Per-player tentative-bundle distributions for contention resolution.
pub struct ContentionRounder {
    n: usize,
    /// Per player: cumulative weights and bundles. Leftover mass means the empty bundle.
    dists: Vec<Vec<(f64, ItemSet)>>,
}

impl ContentionRounder {
    pub fn new(lp: &LpSolution, market: &Market) -> ContentionRounder {
        let n = market.n();
        let mut dists = vec![Vec::new(); n];
        let mut acc = vec![0.0; n];
        for c in &lp.columns {
            acc[c.player] += c.weight;
            dists[c.player].push((acc[c.player], c.bundle));
        }
        ContentionRounder { n, dists }
    }

    /// Tentative bundles, one per player.
    pub fn tentative<R: Rng>(&self, rng: &mut R) -> Vec<ItemSet> {
        self.dists
            .iter()
            .map(|d| {
                let u: f64 = rng.random();
                d.iter().find(|(c, _)| u < *c).map(|(_, s)| *s).unwrap_or(ItemSet::EMPTY)
            })
            .collect()
    }

    /// Tentative draw followed by uniform-among-requesters resolution of every contested item.
    pub fn sample<R: Rng>(&self, rng: &mut R) -> (Vec<ItemSet>, Allocation) {
        let tent = self.tentative(rng);
        let mut alloc = Allocation::empty(self.n);
        let all = tent.iter().fold(ItemSet::EMPTY, |a, b| a.union(*b));
        let mut requesters = Vec::with_capacity(self.n);
        for j in all.iter() {
            requesters.clear();
            requesters.extend((0..self.n).filter(|&i| tent[i].contains(j)));
            let w = requesters[rng.random_range(0..requesters.len())];
            alloc.bundles[w] = alloc.bundles[w].with(j);
        }
        (tent, alloc)
    }
}

/// Each player draws a tentative bundle with probability `x_{i,S}`; each contested item goes to a
/// uniformly random requester.
pub fn round_contention_resolution(lp: &LpSolution, market: &Market, seed: u64) -> Allocation {
    ContentionRounder::new(lp, market).sample(&mut ChaCha8Rng::seed_from_u64(seed)).1
}

/// Per item: how often it was requested and how often a requester received it, over `seeds`.
pub fn contention_receipts(lp: &LpSolution, market: &Market, seeds: std::ops::Range<u64>) -> Vec<(u64, u64)> {
    let r = ContentionRounder::new(lp, market);
    let mut stats = vec![(0u64, 0u64); market.m];
    for seed in seeds {
        let (tent, alloc) = r.sample(&mut ChaCha8Rng::seed_from_u64(seed));
        for (i, t) in tent.iter().enumerate() {
            for j in t.iter() {
                stats[j].0 += 1;
                if alloc.bundles[i].contains(j) {
                    stats[j].1 += 1;
                }
            }
        }
    }
    stats
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::valuation::ValuationSpec;

    #[test]
    fn single_player_takes_everything() {
        let m = Market::new(3, vec![ValuationSpec::UnitDemand { rho: vec![1.0, 4.0, 2.0] }]).unwrap();
        let lp = solve_config_lp(&m, 1e-9).unwrap();
        assert!((lp.value - 4.0).abs() < 1e-9);
    }

    #[test]
    fn gamma_below_one_is_rejected() {
        let m = Market::new(1, vec![ValuationSpec::Additive { l: vec![1.0] }]).unwrap();
        assert!(estimate_welfare(&m, 0.5, 0.0, 1e-9).is_err());
        let (lo, hi) = estimate_welfare(&m, 1.0, 0.0, 1e-9).unwrap();
        assert!((lo - 1.0).abs() < 1e-9 && (hi - 1.0).abs() < 1e-9);
    }

    #[test]
    fn integral_solutions_round_to_themselves() {
        let m = Market::new(2, vec![ValuationSpec::Additive { l: vec![3.0, 0.0] }, ValuationSpec::Additive { l: vec![0.0, 3.0] }]).unwrap();
        let lp = solve_config_lp(&m, 1e-9).unwrap();
        assert!(!lp.is_fractional(1e-9));
        let target = vec![ItemSet::singleton(0), ItemSet::singleton(1)];
        for seed in 0..20 {
            assert_eq!(round_item_independent(&lp, &m, seed).unwrap().bundles, target);
            assert_eq!(round_contention_resolution(&lp, &m, seed).bundles, target);
        }
    }

    #[test]
    fn overfull_marginals_are_rejected() {
        let m = Market::new(1, vec![ValuationSpec::Additive { l: vec![1.0] }; 2]).unwrap();
        let lp = LpSolution {
            columns: vec![
                LpColumn { player: 0, bundle: ItemSet::singleton(0), weight: 1.0 },
                LpColumn { player: 1, bundle: ItemSet::singleton(0), weight: 0.5 },
            ],
            value: 0.0,
            prices: vec![0.0],
            utilities: vec![0.0; 2],
            residuals: Residuals { convexity: 0.0, supply: 0.0, reduced_cost: 0.0, slackness: 0.0, duality_gap: 0.0 },
            generated_columns: 2,
            master_solves: 1,
        };
        assert!(round_item_independent(&lp, &m, 0).is_err());
    }
}
