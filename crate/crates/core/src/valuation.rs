//! Valuation classes and their exact evaluators.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::itemset::{all_bundles, ItemSet, MAX_ITEMS};

/// A set function over a fixed universe of `num_items()` items.
pub trait SetFunction {
    fn num_items(&self) -> usize;
    fn value(&self, s: ItemSet) -> f64;

    /// `v(S ∪ T) − v(T)`.
    fn marginal(&self, s: ItemSet, t: ItemSet) -> f64 {
        self.value(s.union(t)) - self.value(t)
    }
}

impl<F: SetFunction + ?Sized> SetFunction for &F {
    fn num_items(&self) -> usize {
        (**self).num_items()
    }
    fn value(&self, s: ItemSet) -> f64 {
        (**self).value(s)
    }
}

/// `v(S ∪ T) − v(T)`.
pub fn marginal<F: SetFunction + ?Sized>(v: &F, s: ItemSet, t: ItemSet) -> f64 {
    v.value(s.union(t)) - v.value(t)
}

/// All `2^m` values, indexed by bitmask.
pub fn tabulate<F: SetFunction + ?Sized>(v: &F) -> Vec<f64> {
    all_bundles(v.num_items()).map(|s| v.value(s)).collect()
}

/// A set function given by its full value table.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub m: usize,
    pub values: Vec<f64>,
}

impl Table {
    pub fn new(m: usize, values: Vec<f64>) -> Table {
        assert_eq!(values.len(), 1usize << m, "table needs 2^m entries");
        Table { m, values }
    }

    pub fn of<F: SetFunction + ?Sized>(v: &F) -> Table {
        Table { m: v.num_items(), values: tabulate(v) }
    }
}

impl SetFunction for Table {
    fn num_items(&self) -> usize {
        self.m
    }
    #[inline]
    fn value(&self, s: ItemSet) -> f64 {
        self.values[s.index()]
    }
}

/// Independence structures for weighted matroid rank valuations.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Matroid {
    /// Sets of size at most `k`.
    Uniform { k: usize },
    /// At most `capacities[b]` items from each block `b`; items outside every block are free.
    Partition { blocks: Vec<ItemSet>, capacities: Vec<usize> },
    /// Independent sets are the subsets of the listed sets.
    Explicit { sets: Vec<ItemSet> },
}

impl Matroid {
    pub fn is_independent(&self, s: ItemSet) -> bool {
        match self {
            Matroid::Uniform { k } => s.len() <= *k,
            Matroid::Partition { blocks, capacities } => {
                blocks.iter().zip(capacities).all(|(b, &cap)| s.intersection(*b).len() <= cap)
            }
            Matroid::Explicit { sets } => s.is_empty() || sets.iter().any(|b| s.is_subset(*b)),
        }
    }

    fn validate(&self, m: usize, field: &str) -> Result<()> {
        match self {
            Matroid::Uniform { .. } => Ok(()),
            Matroid::Partition { blocks, capacities } => {
                if blocks.len() != capacities.len() {
                    return Err(Error::Schema(format!("{field}.capacities: expected {} entries", blocks.len())));
                }
                let mut seen = ItemSet::EMPTY;
                for (b, blk) in blocks.iter().enumerate() {
                    if !blk.fits(m) {
                        return Err(Error::Schema(format!("{field}.blocks[{b}]: item index out of range")));
                    }
                    if !seen.is_disjoint(*blk) {
                        return Err(Error::Schema(format!("{field}.blocks[{b}]: blocks overlap")));
                    }
                    seen = seen.union(*blk);
                }
                Ok(())
            }
            Matroid::Explicit { sets } => {
                for (k, s) in sets.iter().enumerate() {
                    if !s.fits(m) {
                        return Err(Error::Schema(format!("{field}.sets[{k}]: item index out of range")));
                    }
                }
                Ok(())
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub w: f64,
    pub items: ItemSet,
}

/// Closed family of evaluable valuations. Values do not depend on the universe size,
/// so a spec is paired with `m` (see [`ValuationSpec::bind`]) wherever enumeration is needed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ValuationSpec {
    /// `c + Σ_{j∈S} l_j`.
    Linear { c: f64, l: Vec<f64> },
    /// `Σ_{j∈S} l_j`.
    Additive { l: Vec<f64> },
    /// `max_{j∈S} rho_j`, zero on the empty bundle.
    UnitDemand { rho: Vec<f64> },
    /// Weight of the heaviest independent subset.
    WeightedMatroidRank { matroid: Matroid, w: Vec<f64> },
    /// Sum over parts of the best 0/1 item value in the part.
    Transversal { parts: Vec<ItemSet>, r: Vec<u8> },
    /// Max over additive clauses.
    Xos { clauses: Vec<Vec<f64>> },
    /// Total weight of regions touched by the bundle.
    Coverage { regions: Vec<Region> },
    /// Explicit values indexed by bitmask.
    Table { values: Vec<f64> },
    /// `factors[S] · base(S)`.
    Perturbed { base: Box<ValuationSpec>, eps: f64, factors: Vec<f64> },
}

impl ValuationSpec {
    pub fn kind(&self) -> &'static str {
        match self {
            ValuationSpec::Linear { .. } => "linear",
            ValuationSpec::Additive { .. } => "additive",
            ValuationSpec::UnitDemand { .. } => "unit_demand",
            ValuationSpec::WeightedMatroidRank { .. } => "weighted_matroid_rank",
            ValuationSpec::Transversal { .. } => "transversal",
            ValuationSpec::Xos { .. } => "xos",
            ValuationSpec::Coverage { .. } => "coverage",
            ValuationSpec::Table { .. } => "table",
            ValuationSpec::Perturbed { .. } => "perturbed",
        }
    }

    pub fn eval(&self, s: ItemSet) -> f64 {
        match self {
            ValuationSpec::Linear { c, l } => c + s.iter().map(|j| l[j]).sum::<f64>(),
            ValuationSpec::Additive { l } => s.iter().map(|j| l[j]).sum(),
            ValuationSpec::UnitDemand { rho } => s.iter().map(|j| rho[j]).fold(0.0, f64::max),
            ValuationSpec::WeightedMatroidRank { matroid, w } => {
                let mut order: Vec<usize> = s.iter().filter(|&j| w[j] > 0.0).collect();
                order.sort_by(|&a, &b| w[b].total_cmp(&w[a]).then(a.cmp(&b)));
                let mut ind = ItemSet::EMPTY;
                let mut total = 0.0;
                for j in order {
                    if matroid.is_independent(ind.with(j)) {
                        ind = ind.with(j);
                        total += w[j];
                    }
                }
                total
            }
            ValuationSpec::Transversal { parts, r } => parts
                .iter()
                .map(|p| p.intersection(s).iter().map(|j| r[j]).max().unwrap_or(0) as f64)
                .sum(),
            ValuationSpec::Xos { clauses } => clauses
                .iter()
                .map(|a| s.iter().map(|j| a[j]).sum::<f64>())
                .fold(f64::NEG_INFINITY, f64::max),
            ValuationSpec::Coverage { regions } => {
                regions.iter().filter(|r| !r.items.is_disjoint(s)).map(|r| r.w).sum()
            }
            ValuationSpec::Table { values } => values[s.index()],
            ValuationSpec::Perturbed { base, factors, .. } => factors[s.index()] * base.eval(s),
        }
    }

    /// Pairs the spec with its universe size.
    pub fn bind(&self, m: usize) -> Bound<'_> {
        Bound { m, spec: self }
    }

    /// Checks that the spec is well formed over `m` items. `field` prefixes error messages.
    pub fn validate(&self, m: usize, field: &str) -> Result<()> {
        let len_check = |name: &str, len: usize| {
            if len != m {
                Err(Error::Schema(format!("{field}.{name}: expected {m} entries, found {len}")))
            } else {
                Ok(())
            }
        };
        let finite_check = |name: &str, xs: &[f64], nonneg: bool| {
            for (k, x) in xs.iter().enumerate() {
                if !x.is_finite() || (nonneg && *x < 0.0) {
                    let what = if nonneg { "a finite nonnegative number" } else { "finite" };
                    return Err(Error::Schema(format!("{field}.{name}[{k}]: must be {what}, found {x}")));
                }
            }
            Ok(())
        };
        match self {
            ValuationSpec::Linear { c, l } => {
                len_check("l", l.len())?;
                finite_check("c", &[*c], true)?;
                finite_check("l", l, true)
            }
            ValuationSpec::Additive { l } => {
                len_check("l", l.len())?;
                finite_check("l", l, true)
            }
            ValuationSpec::UnitDemand { rho } => {
                len_check("rho", rho.len())?;
                finite_check("rho", rho, true)
            }
            ValuationSpec::WeightedMatroidRank { matroid, w } => {
                len_check("w", w.len())?;
                finite_check("w", w, true)?;
                matroid.validate(m, &format!("{field}.matroid"))
            }
            ValuationSpec::Transversal { parts, r } => {
                len_check("r", r.len())?;
                if let Some(k) = r.iter().position(|&x| x > 1) {
                    return Err(Error::Schema(format!("{field}.r[{k}]: must be 0 or 1")));
                }
                let mut seen = ItemSet::EMPTY;
                for (k, p) in parts.iter().enumerate() {
                    if !p.fits(m) {
                        return Err(Error::Schema(format!("{field}.parts[{k}]: item index out of range")));
                    }
                    if !seen.is_disjoint(*p) {
                        return Err(Error::Schema(format!("{field}.parts[{k}]: parts overlap")));
                    }
                    seen = seen.union(*p);
                }
                if seen != ItemSet::full(m) {
                    return Err(Error::Schema(format!("{field}.parts: must cover every item")));
                }
                Ok(())
            }
            ValuationSpec::Xos { clauses } => {
                if clauses.is_empty() {
                    return Err(Error::Schema(format!("{field}.clauses: at least one clause required")));
                }
                for (k, a) in clauses.iter().enumerate() {
                    len_check(&format!("clauses[{k}]"), a.len())?;
                    finite_check(&format!("clauses[{k}]"), a, true)?;
                }
                Ok(())
            }
            ValuationSpec::Coverage { regions } => {
                for (k, r) in regions.iter().enumerate() {
                    finite_check(&format!("regions[{k}].w"), &[r.w], true)?;
                    if !r.items.fits(m) {
                        return Err(Error::Schema(format!("{field}.regions[{k}].items: item index out of range")));
                    }
                }
                Ok(())
            }
            ValuationSpec::Table { values } => {
                if values.len() != 1 << m {
                    return Err(Error::Schema(format!(
                        "{field}.values: expected 2^{m} = {} entries, found {}",
                        1usize << m,
                        values.len()
                    )));
                }
                finite_check("values", values, false)
            }
            ValuationSpec::Perturbed { base, eps, factors } => {
                base.validate(m, &format!("{field}.base"))?;
                if !eps.is_finite() || *eps < 0.0 {
                    return Err(Error::Schema(format!("{field}.eps: must be a finite nonnegative number")));
                }
                if factors.len() != 1 << m {
                    return Err(Error::Schema(format!(
                        "{field}.factors: expected 2^{m} = {} entries, found {}",
                        1usize << m,
                        factors.len()
                    )));
                }
                for (k, f) in factors.iter().enumerate() {
                    if !f.is_finite() || *f < 1.0 - 1e-12 || *f > 1.0 + eps + 1e-12 {
                        return Err(Error::Schema(format!("{field}.factors[{k}]: {f} outside [1, 1+eps]")));
                    }
                }
                Ok(())
            }
        }
    }
}

/// A spec paired with its universe size.
#[derive(Clone, Copy, Debug)]
pub struct Bound<'a> {
    pub m: usize,
    pub spec: &'a ValuationSpec,
}

impl SetFunction for Bound<'_> {
    fn num_items(&self) -> usize {
        self.m
    }
    #[inline]
    fn value(&self, s: ItemSet) -> f64 {
        self.spec.eval(s)
    }
}

/// Running max over subsets: `out[S] = max_{T ⊆ S} values[T]`.
pub fn monotone_closure(m: usize, values: &[f64]) -> Vec<f64> {
    let mut out = values.to_vec();
    for j in 0..m {
        let bit = 1usize << j;
        for s in 0..out.len() {
            if s & bit != 0 && out[s ^ bit] > out[s] {
                out[s] = out[s ^ bit];
            }
        }
    }
    out
}

/// Rewrites a factor table so that `factor · base` becomes its monotone closure.
/// Assumes `base` is monotone and nonnegative, which keeps every factor in `[1, 1+eps]`.
pub fn repair_factors(m: usize, base: &ValuationSpec, eps: f64, factors: &[f64]) -> Vec<f64> {
    let b: Vec<f64> = all_bundles(m).map(|s| base.eval(s)).collect();
    let raw: Vec<f64> = b.iter().zip(factors).map(|(x, f)| x * f).collect();
    let closed = monotone_closure(m, &raw);
    closed
        .iter()
        .zip(&b)
        .map(|(&v, &bs)| if bs > 0.0 { (v / bs).clamp(1.0, 1.0 + eps) } else { 1.0 })
        .collect()
}

/// Multiplies `base` by independent per-bundle factors drawn uniformly from `[1, 1+eps]`.
/// The empty bundle keeps factor 1. With `monotone_repair`, the product is replaced by its
/// monotone closure (requires a monotone nonnegative base).
pub fn random_perturbation(base: &ValuationSpec, m: usize, eps: f64, seed: u64, monotone_repair: bool) -> Result<ValuationSpec> {
    if !(eps >= 0.0 && eps.is_finite()) {
        return Err(Error::Precondition(format!("eps must be finite and nonnegative, got {eps}")));
    }
    if m > MAX_ITEMS {
        return Err(Error::Precondition(format!("m = {m} exceeds {MAX_ITEMS}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut factors: Vec<f64> = (0..1usize << m).map(|_| 1.0 + eps * rng.random::<f64>()).collect();
    factors[0] = 1.0;
    if monotone_repair {
        factors = repair_factors(m, base, eps, &factors);
    }
    Ok(ValuationSpec::Perturbed { base: Box::new(base.clone()), eps, factors })
}

/// Deterministic perturbation `base · (1 + eps · share(S)^gamma)` with
/// `share(S) = (base(S) − base(∅)) / (base(M) − base(∅))`. For a monotone submodular base and
/// `gamma ≤ 1`, marginals stay within a factor `1 + eps·(1 + gamma)` of decreasing.
pub fn smooth_perturbation(base: &ValuationSpec, m: usize, eps: f64, gamma: f64) -> ValuationSpec {
    let (lo, hi) = (base.eval(ItemSet::EMPTY), base.eval(ItemSet::full(m)));
    let factors = all_bundles(m)
        .map(|s| {
            if hi <= lo {
                return 1.0;
            }
            let share = ((base.eval(s) - lo) / (hi - lo)).clamp(0.0, 1.0);
            (1.0 + eps * share.powf(gamma)).min(1.0 + eps)
        })
        .collect();
    ValuationSpec::Perturbed { base: Box::new(base.clone()), eps, factors }
}
