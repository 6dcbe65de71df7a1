//! Named instances and seeded random-market generators.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::algorithms::OrderingPolicy;
use crate::error::{Error, Result};
use crate::itemset::{all_bundles, ItemSet};
use crate::market::{Labels, Market};
use crate::properties::{alpha_of, epsilon_between};
use crate::valuation::{random_perturbation, smooth_perturbation, Matroid, Region, ValuationSpec};

/// Planted-partition family: `m = a·n` items split into hidden blocks of size `a`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HardFamilyParams {
    pub n: usize,
    pub a: usize,
    pub eps: f64,
    pub seed: u64,
}

#[derive(Clone, Debug)]
pub struct HardFamily {
    /// Players switch between the size-only value and their block-linear value.
    pub planted: Market,
    /// Every player has the size-only value.
    pub null: Market,
    /// The block-linear valuations `ε + |S ∩ A_i| / a`.
    pub linear: Vec<ValuationSpec>,
    pub partition: Vec<ItemSet>,
    /// Whether each planted valuation is monotone.
    pub monotone: Vec<bool>,
}

/// `|S ∩ A| − |S|/n` exceeds `ε²a` in absolute value.
fn deviates(s: ItemSet, block: ItemSet, n: usize, a: usize, eps: f64) -> bool {
    let dev = s.intersection(block).len() as f64 - s.len() as f64 / n as f64;
    dev.abs() > eps * eps * a as f64
}

pub fn gen_close_to_linear_hard(params: &HardFamilyParams) -> Result<HardFamily> {
    let HardFamilyParams { n, a, eps, seed } = *params;
    let m = a * n;
    if m == 0 || m > 24 {
        return Err(Error::Precondition(format!("a·n = {m} must lie in 1..=24")));
    }
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(Error::Precondition(format!("eps must lie in (0, 1], got {eps}")));
    }
    let mut items: Vec<usize> = (0..m).collect();
    items.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let partition: Vec<ItemSet> = items.chunks(a).map(|c| ItemSet::from_items(c.iter().copied())).collect();
    let size_only = ValuationSpec::Linear { c: (1.0 + eps) * eps, l: vec![1.0 / (a * n) as f64; m] };
    let mut planted = Vec::with_capacity(n);
    let mut linear = Vec::with_capacity(n);
    let mut monotone = Vec::with_capacity(n);
    for block in &partition {
        let lin = ValuationSpec::Linear { c: eps, l: (0..m).map(|j| if block.contains(j) { 1.0 / a as f64 } else { 0.0 }).collect() };
        let values: Vec<f64> = all_bundles(m)
            .map(|s| if deviates(s, *block, n, a, eps) { lin.eval(s) } else { size_only.eval(s) })
            .collect();
        let table = ValuationSpec::Table { values };
        monotone.push(crate::properties::is_monotone(&table.bind(m)).holds);
        planted.push(table);
        linear.push(lin);
    }
    Ok(HardFamily {
        planted: Market::new(m, planted)?,
        null: Market::new(m, vec![size_only; n])?,
        linear,
        partition,
        monotone,
    })
}

fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Fraction of all bundles for which a fixed block's valuation takes its block-linear branch.
pub fn second_case_fraction(a: usize, n: usize, eps: f64) -> f64 {
    let m = a * n;
    let mut hit = 0.0;
    for k in 0..=a {
        for l in 0..=m - a {
            let dev = k as f64 - (k + l) as f64 / n as f64;
            if dev.abs() > eps * eps * a as f64 {
                hit += binomial(a, k) * binomial(m - a, l);
            }
        }
    }
    hit / 2f64.powi(m as i32)
}

/// Ascending-auction counterexample with `n_prime` main players.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KcAdversarialParams {
    pub eps: f64,
    pub h: f64,
    /// Amount by which the x-players' values sit below the y-players'.
    pub offset: f64,
    pub n_prime: usize,
}

impl KcAdversarialParams {
    pub fn rho(&self) -> f64 {
        self.eps / (1.0 + self.eps)
    }

    /// The untruncated main-player count `H/ρ`.
    pub fn full_n_prime(&self) -> f64 {
        self.h / self.rho()
    }

    pub fn item_h(&self) -> usize {
        0
    }
    pub fn item_x(&self, i: usize) -> usize {
        1 + i
    }
    pub fn item_y(&self, i: usize) -> usize {
        1 + self.n_prime + i
    }
    pub fn num_items(&self) -> usize {
        2 * self.n_prime + 1
    }
    pub fn num_players(&self) -> usize {
        self.n_prime + 2 + 4 * self.n_prime
    }

    /// Welfare when main player `i` ends with `{x_i}`, the y-players hold the y items and an
    /// h-player holds `h`: `2n′ρH + H`.
    pub fn auction_welfare(&self) -> f64 {
        2.0 * self.n_prime as f64 * self.rho() * self.h + self.h
    }

    /// Main players on `y_i`, x-players on `x_i`, an h-player on `h`: `3n′ρH − n′·offset + H`.
    pub fn optimal_welfare(&self) -> f64 {
        let np = self.n_prime as f64;
        2.0 * np * self.rho() * self.h + np * (self.rho() * self.h - self.offset) + self.h
    }

    /// `(2n′ρH + H) / (3n′ρH + n′(ρH − offset) + H)`, the ratio expression as commonly quoted
    /// for this construction. Its denominator counts the x-items' contribution twice.
    pub fn quoted_ratio(&self) -> f64 {
        let np = self.n_prime as f64;
        let rh = self.rho() * self.h;
        self.auction_welfare() / (3.0 * np * rh + np * (rh - self.offset) + self.h)
    }

    /// `auction_welfare / optimal_welfare`.
    pub fn derived_ratio(&self) -> f64 {
        self.auction_welfare() / self.optimal_welfare()
    }

    /// The derived ratio with the untruncated `n′ = H/ρ`; tends to 2/3 as `H` grows.
    pub fn untruncated_ratio(&self) -> f64 {
        let np = self.full_n_prime();
        let rh = self.rho() * self.h;
        (2.0 * np * rh + self.h) / (3.0 * np * rh - np * self.offset + self.h)
    }
}

/// Main player `i`'s valuation as a coverage function over three regions:
/// `{h}` worth `(1−2ρ)H`, `{h, y_i}` worth `ρH` and `{x_i, y_i}` worth `ρH`.
pub fn kc_adversarial_main_player(p: &KcAdversarialParams, i: usize) -> ValuationSpec {
    let (rho, h) = (p.rho(), p.h);
    let (ih, ix, iy) = (p.item_h(), p.item_x(i), p.item_y(i));
    ValuationSpec::Coverage {
        regions: vec![
            Region { w: (1.0 - 2.0 * rho) * h, items: ItemSet::singleton(ih) },
            Region { w: rho * h, items: ItemSet::from_items([ih, iy]) },
            Region { w: rho * h, items: ItemSet::from_items([ix, iy]) },
        ],
    }
}

/// The unit-demand valuation that main player `i` is `ε`-close to.
pub fn kc_adversarial_comparator(p: &KcAdversarialParams, i: usize) -> ValuationSpec {
    let mut rho = vec![0.0; p.num_items()];
    let k = 1.0 + p.eps;
    rho[p.item_h()] = p.h / k;
    rho[p.item_x(i)] = p.rho() * p.h / k;
    rho[p.item_y(i)] = 2.0 * p.rho() * p.h / k;
    ValuationSpec::UnitDemand { rho }
}

/// Players: main `0..n′`, two h-players, then two x-players per x item, then two y-players per
/// y item. The ordering lets the x- and y-players settle first, then gives each main player one
/// turn in index order, then hands over to the h-players.
pub fn gen_kc_adversarial(p: &KcAdversarialParams) -> Result<(Market, OrderingPolicy)> {
    if !(p.eps > 0.0 && p.eps <= 1.0) {
        return Err(Error::Precondition(format!("eps must lie in (0, 1], got {}", p.eps)));
    }
    if p.n_prime == 0 || p.num_items() > 24 {
        return Err(Error::Precondition(format!("n′ = {} gives {} items; need 1..=24", p.n_prime, p.num_items())));
    }
    let m = p.num_items();
    let unit = |item: usize, value: f64| {
        let mut rho = vec![0.0; m];
        rho[item] = value;
        ValuationSpec::UnitDemand { rho }
    };
    let rh = p.rho() * p.h;
    let mut players: Vec<ValuationSpec> = (0..p.n_prime).map(|i| kc_adversarial_main_player(p, i)).collect();
    let mut names: Vec<String> = (0..p.n_prime).map(|i| format!("main{i}")).collect();
    for k in 0..2 {
        players.push(unit(p.item_h(), p.h));
        names.push(format!("h{k}"));
    }
    for i in 0..p.n_prime {
        for k in 0..2 {
            players.push(unit(p.item_x(i), rh - p.offset));
            names.push(format!("x{i}_{k}"));
        }
    }
    for i in 0..p.n_prime {
        for k in 0..2 {
            players.push(unit(p.item_y(i), rh));
            names.push(format!("y{i}_{k}"));
        }
    }
    let mut item_names = vec!["h".to_string()];
    item_names.extend((0..p.n_prime).map(|i| format!("x{i}")));
    item_names.extend((0..p.n_prime).map(|i| format!("y{i}")));
    let market = Market::new(m, players)?.with_labels(Labels { items: Some(item_names), players: Some(names) });
    let mut phases = vec![(p.n_prime + 2..market.n()).collect::<Vec<_>>()];
    phases.extend((0..p.n_prime).map(|i| vec![i]));
    phases.push(vec![p.n_prime, p.n_prime + 1]);
    Ok((market, OrderingPolicy::Scripted { phases }))
}

/// Region weights of the four-set coverage counterexample, as (weight, sets touched).
fn murota_regions(eps: f64) -> [(f64, &'static [usize]); 8] {
    [
        (2.0, &[0]),
        (eps, &[1]),
        (2.0, &[2]),
        (eps, &[3]),
        (1.0, &[0, 1]),
        (2.0, &[0, 2]),
        (2.0, &[1, 3]),
        (1.0, &[2, 3]),
    ]
}

/// Two players, four items. Player 0's item `k` covers set `A_k`; player 1's items cover
/// `A_3, A_0, A_1, A_2` respectively. `boost` adds `boost·|S|` to both players (as private regions).
pub fn gen_murota_coverage(eps: f64, boost: Option<f64>) -> Result<Market> {
    if !(eps > 0.0) {
        return Err(Error::Precondition(format!("eps must be positive, got {eps}")));
    }
    // Player 1's item k covers set SIGMA[k].
    const SIGMA: [usize; 4] = [3, 0, 1, 2];
    let build = |item_of_set: &dyn Fn(usize) -> usize| {
        let mut regions: Vec<Region> = murota_regions(eps)
            .iter()
            .map(|(w, sets)| Region { w: *w, items: ItemSet::from_items(sets.iter().map(|&a| item_of_set(a))) })
            .collect();
        if let Some(b) = boost {
            regions.extend((0..4).map(|j| Region { w: b, items: ItemSet::singleton(j) }));
        }
        ValuationSpec::Coverage { regions }
    };
    let v1 = build(&|a| a);
    let v2 = build(&|a| SIGMA.iter().position(|&s| s == a).expect("permutation"));
    Market::new(4, vec![v1, v2])
}

/// One additive player over two items with values 1 and 2.
pub fn minimal_market() -> Market {
    Market::new(2, vec![ValuationSpec::Additive { l: vec![1.0, 2.0] }]).expect("valid")
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RandomKind {
    Linear,
    Additive,
    UnitDemand,
    MatroidRank,
    Transversal,
    Xos,
    Coverage,
    GsMixture,
}

impl std::str::FromStr for RandomKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<RandomKind> {
        serde_json::from_value(serde_json::Value::String(s.to_string())).map_err(|_| Error::UnknownName {
            name: s.to_string(),
            available: "linear, additive, unit_demand, matroid_rank, transversal, xos, coverage, gs_mixture".into(),
        })
    }
}

#[derive(Clone, Debug)]
pub struct GeneratedMarket {
    pub market: Market,
    /// Unperturbed valuation per player.
    pub bases: Vec<ValuationSpec>,
    /// `epsilon_between(v_i, base_i)`.
    pub realized_eps: Vec<f64>,
    /// `alpha_of(v_i)`.
    pub realized_alpha: Vec<f64>,
}

impl GeneratedMarket {
    pub fn max_eps(&self) -> f64 {
        self.realized_eps.iter().copied().fold(0.0, f64::max)
    }
    pub fn max_alpha(&self) -> f64 {
        self.realized_alpha.iter().copied().fold(1.0, f64::max)
    }
}

fn uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * rng.random::<f64>()
}

fn random_base(kind: RandomKind, m: usize, rng: &mut ChaCha8Rng) -> ValuationSpec {
    match kind {
        RandomKind::Linear => {
            let c = uniform(rng, 0.2, 1.0);
            ValuationSpec::Linear { c, l: (0..m).map(|_| uniform(rng, 0.1, 1.0)).collect() }
        }
        RandomKind::Additive => ValuationSpec::Additive { l: (0..m).map(|_| uniform(rng, 0.1, 1.0)).collect() },
        RandomKind::UnitDemand => ValuationSpec::UnitDemand { rho: (0..m).map(|_| uniform(rng, 0.0, 1.0)).collect() },
        RandomKind::MatroidRank => {
            let w = (0..m).map(|_| uniform(rng, 0.0, 1.0)).collect();
            let matroid = if rng.random::<bool>() {
                Matroid::Uniform { k: rng.random_range(1..=m) }
            } else {
                let k = rng.random_range(1..=m);
                let mut blocks = vec![ItemSet::EMPTY; k];
                for j in 0..m {
                    let b = rng.random_range(0..k);
                    blocks[b] = blocks[b].with(j);
                }
                let capacities = blocks.iter().map(|b| rng.random_range(1..=b.len().max(1))).collect();
                Matroid::Partition { blocks, capacities }
            };
            ValuationSpec::WeightedMatroidRank { matroid, w }
        }
        RandomKind::Transversal => {
            let k = rng.random_range(1..=m);
            let mut parts = vec![ItemSet::EMPTY; k];
            for j in 0..m {
                let b = rng.random_range(0..k);
                parts[b] = parts[b].with(j);
            }
            parts.retain(|p| !p.is_empty());
            ValuationSpec::Transversal { parts, r: (0..m).map(|_| u8::from(rng.random::<f64>() < 0.7)).collect() }
        }
        RandomKind::Xos => {
            let k = rng.random_range(1..=3);
            ValuationSpec::Xos { clauses: (0..k).map(|_| (0..m).map(|_| uniform(rng, 0.0, 1.0)).collect()).collect() }
        }
        RandomKind::Coverage => {
            let r = rng.random_range(m..=2 * m);
            let regions = (0..r)
                .map(|_| {
                    let mut items = ItemSet::EMPTY;
                    while items.is_empty() {
                        items = ItemSet((0..m).filter(|_| rng.random::<f64>() < 0.35).fold(0, |a, j| a | (1 << j)));
                    }
                    Region { w: rng.random::<f64>(), items }
                })
                .collect();
            ValuationSpec::Coverage { regions }
        }
        RandomKind::GsMixture => {
            let pick = [RandomKind::Linear, RandomKind::Additive, RandomKind::UnitDemand, RandomKind::MatroidRank, RandomKind::Transversal]
                [rng.random_range(0..5)];
            random_base(pick, m, rng)
        }
    }
}

/// Draws `n` base valuations of `kind` and perturbs them by `eps`.
///
/// Without `alpha_target`, factors are independent per bundle followed by monotone repair. With
/// `Some(a)`, the perturbation is [`smooth_perturbation`] with `γ` drawn from `[0.3, 1]`, redrawn
/// until the realized `alpha_of` is at most `a` (up to 64 draws).
pub fn gen_random_market(kind: RandomKind, n: usize, m: usize, eps: f64, alpha_target: Option<f64>, seed: u64) -> Result<GeneratedMarket> {
    if n == 0 || m == 0 || m > 24 {
        return Err(Error::Precondition(format!("need n ≥ 1 and 1 ≤ m ≤ 24, got n = {n}, m = {m}")));
    }
    if !(eps >= 0.0) {
        return Err(Error::Precondition(format!("eps must be nonnegative, got {eps}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut bases = Vec::with_capacity(n);
    let mut players = Vec::with_capacity(n);
    let mut realized_eps = Vec::with_capacity(n);
    let mut realized_alpha = Vec::with_capacity(n);
    for _ in 0..n {
        let base = random_base(kind, m, &mut rng);
        let v = if eps == 0.0 {
            base.clone()
        } else {
            match alpha_target {
                None => random_perturbation(&base, m, eps, rng.random(), true)?,
                Some(target) => {
                    let mut found = None;
                    for _ in 0..64 {
                        let gamma = uniform(&mut rng, 0.3, 1.0);
                        let cand = smooth_perturbation(&base, m, eps, gamma);
                        if alpha_of(&cand.bind(m)) <= target {
                            found = Some(cand);
                            break;
                        }
                    }
                    found.ok_or_else(|| Error::Precondition(format!("no draw reached alpha ≤ {target} for kind {kind:?}")))?
                }
            }
        };
        realized_eps.push(epsilon_between(&v.bind(m), &base.bind(m))?);
        realized_alpha.push(alpha_of(&v.bind(m)));
        bases.push(base);
        players.push(v);
    }
    Ok(GeneratedMarket { market: Market::new(m, players)?, bases, realized_eps, realized_alpha })
}

/// Instances shipped as JSON under `instances/`, keyed by file name.
pub fn golden_instances() -> Vec<(&'static str, Market)> {
    let kc = KcAdversarialParams { eps: 0.5, h: 100.0, offset: 0.05, n_prime: 3 };
    let hard = gen_close_to_linear_hard(&HardFamilyParams { n: 2, a: 4, eps: 0.5, seed: 1 }).expect("valid");
    vec![
        ("minimal.json", minimal_market()),
        ("murota_coverage_eps0.1.json", gen_murota_coverage(0.1, None).expect("valid")),
        ("kc_adversarial_n3_H100_eps0.5.json", gen_kc_adversarial(&kc).expect("valid").0),
        ("hard_family_planted_a4_n2_eps0.5.json", hard.planted),
        ("hard_family_null_a4_n2_eps0.5.json", hard.null),
    ]
}
