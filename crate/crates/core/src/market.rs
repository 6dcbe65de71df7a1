//! Markets, allocations, prices and welfare accounting.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::itemset::{ItemSet, MAX_ITEMS};
use crate::valuation::{Bound, ValuationSpec};

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Labels {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub items: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub players: Option<Vec<String>>,
}

/// `n` players with valuations over `m` items. Immutable once built.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Market {
    pub m: usize,
    pub players: Vec<ValuationSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub labels: Option<Labels>,
}

impl Market {
    /// Builds and validates a market.
    pub fn new(m: usize, players: Vec<ValuationSpec>) -> Result<Market> {
        let market = Market { m, players, labels: None };
        market.validate()?;
        Ok(market)
    }

    pub fn with_labels(mut self, labels: Labels) -> Market {
        self.labels = Some(labels);
        self
    }

    pub fn n(&self) -> usize {
        self.players.len()
    }

    pub fn items(&self) -> ItemSet {
        ItemSet::full(self.m)
    }

    /// Player `i`'s valuation as a set function over this market's items.
    pub fn player(&self, i: usize) -> Bound<'_> {
        self.players[i].bind(self.m)
    }

    pub fn value(&self, i: usize, s: ItemSet) -> f64 {
        self.players[i].eval(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.m == 0 || self.m > MAX_ITEMS {
            return Err(Error::Schema(format!("m: must be between 1 and {MAX_ITEMS}, found {}", self.m)));
        }
        if self.players.is_empty() {
            return Err(Error::Schema("players: at least one player required".into()));
        }
        for (i, p) in self.players.iter().enumerate() {
            p.validate(self.m, &format!("players[{i}]"))?;
        }
        if let Some(labels) = &self.labels {
            if labels.items.as_ref().is_some_and(|l| l.len() != self.m) {
                return Err(Error::Schema(format!("labels.items: expected {} names", self.m)));
            }
            if labels.players.as_ref().is_some_and(|l| l.len() != self.n()) {
                return Err(Error::Schema(format!("labels.players: expected {} names", self.n())));
            }
        }
        Ok(())
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMarket {
    m: Option<i64>,
    players: Option<Vec<serde_json::Value>>,
    #[serde(default)]
    labels: Option<Labels>,
}

/// Parses a market from JSON and validates it. Errors name the offending field.
pub fn parse_market(text: &str) -> Result<Market> {
    let raw: RawMarket = serde_json::from_str(text).map_err(|e| Error::Schema(e.to_string()))?;
    let m = raw.m.ok_or_else(|| Error::Schema("m: missing".into()))?;
    if m < 1 || m > MAX_ITEMS as i64 {
        return Err(Error::Schema(format!("m: must be between 1 and {MAX_ITEMS}, found {m}")));
    }
    let players = raw.players.ok_or_else(|| Error::Schema("players: missing".into()))?;
    let players = players
        .into_iter()
        .enumerate()
        .map(|(i, v)| serde_json::from_value::<ValuationSpec>(v).map_err(|e| Error::Schema(format!("players[{i}]: {e}"))))
        .collect::<Result<Vec<_>>>()?;
    let market = Market { m: m as usize, players, labels: raw.labels };
    market.validate()?;
    Ok(market)
}

pub fn serialize_market(market: &Market) -> String {
    serde_json::to_string(market).expect("market serialization cannot fail")
}

pub fn serialize_market_pretty(market: &Market) -> String {
    serde_json::to_string_pretty(market).expect("market serialization cannot fail")
}

/// One bundle per player; bundles are pairwise disjoint. Partial allocations are allowed.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Allocation {
    pub bundles: Vec<ItemSet>,
}

impl Allocation {
    pub fn empty(n: usize) -> Allocation {
        Allocation { bundles: vec![ItemSet::EMPTY; n] }
    }

    pub fn new(bundles: Vec<ItemSet>) -> Allocation {
        Allocation { bundles }
    }

    pub fn allocated(&self) -> ItemSet {
        self.bundles.iter().fold(ItemSet::EMPTY, |a, b| a.union(*b))
    }

    pub fn is_full(&self, m: usize) -> bool {
        self.allocated() == ItemSet::full(m)
    }

    pub fn owner(&self, j: usize) -> Option<usize> {
        self.bundles.iter().position(|b| b.contains(j))
    }

    pub fn is_disjoint(&self) -> bool {
        let mut seen = ItemSet::EMPTY;
        for b in &self.bundles {
            if !seen.is_disjoint(*b) {
                return false;
            }
            seen = seen.union(*b);
        }
        true
    }

    /// Checks player count, item range and disjointness against `market`.
    pub fn check(&self, market: &Market) -> Result<()> {
        if self.bundles.len() != market.n() {
            return Err(Error::Dimension(format!("allocation has {} bundles for {} players", self.bundles.len(), market.n())));
        }
        if let Some(i) = self.bundles.iter().position(|b| !b.fits(market.m)) {
            return Err(Error::Dimension(format!("bundle {i} names an item outside 0..{}", market.m)));
        }
        if !self.is_disjoint() {
            return Err(Error::Precondition("allocation bundles overlap".into()));
        }
        Ok(())
    }
}

/// One price per item. Negative prices are allowed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PriceVector {
    pub prices: Vec<f64>,
}

impl PriceVector {
    pub fn zeros(m: usize) -> PriceVector {
        PriceVector { prices: vec![0.0; m] }
    }

    pub fn new(prices: Vec<f64>) -> Result<PriceVector> {
        if let Some(j) = prices.iter().position(|p| !p.is_finite()) {
            return Err(Error::Precondition(format!("price of item {j} is not finite")));
        }
        Ok(PriceVector { prices })
    }

    pub fn len(&self) -> usize {
        self.prices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.prices.is_empty()
    }

    /// `p(S)`.
    #[inline]
    pub fn of(&self, s: ItemSet) -> f64 {
        s.iter().map(|j| self.prices[j]).sum()
    }

    pub fn check(&self, m: usize) -> Result<()> {
        if self.prices.len() != m {
            return Err(Error::Dimension(format!("price vector has {} entries for {m} items", self.prices.len())));
        }
        Ok(())
    }
}

/// `Σ_i v_i(S_i)`.
pub fn welfare(market: &Market, alloc: &Allocation) -> Result<f64> {
    if alloc.bundles.len() != market.n() {
        return Err(Error::Dimension(format!("allocation has {} bundles for {} players", alloc.bundles.len(), market.n())));
    }
    if let Some(i) = alloc.bundles.iter().position(|b| !b.fits(market.m)) {
        return Err(Error::Dimension(format!("bundle {i} names an item outside 0..{}", market.m)));
    }
    Ok(alloc.bundles.iter().enumerate().map(|(i, b)| market.value(i, *b)).sum())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_market_parses() {
        let m = parse_market(r#"{"m": 2, "players": [{"kind": "additive", "l": [1, 2]}]}"#).unwrap();
        assert_eq!(m.value(0, ItemSet::full(2)), 3.0);
    }

    #[test]
    fn malformed_kind_is_named() {
        let e = parse_market(r#"{"m": 2, "players": [{"kind": "quadratic", "l": [1, 2]}]}"#).unwrap_err().to_string();
        assert!(e.contains("quadratic") && e.contains("players[0]"), "{e}");
    }

    #[test]
    fn schema_errors_name_the_field() {
        let e = parse_market(r#"{"m": 30, "players": []}"#).unwrap_err().to_string();
        assert!(e.contains("m:"), "{e}");
        let e = parse_market(r#"{"m": 2, "players": []}"#).unwrap_err().to_string();
        assert!(e.contains("players"), "{e}");
        let e = parse_market(r#"{"m": 2, "players": [{"kind": "table", "values": [0, 1]}]}"#).unwrap_err().to_string();
        assert!(e.contains("players[0].values"), "{e}");
        let e = parse_market(r#"{"m": 2, "players": [{"kind": "coverage", "regions": [{"w": 1, "items": [5]}]}]}"#)
            .unwrap_err()
            .to_string();
        assert!(e.contains("regions[0].items"), "{e}");
    }

    #[test]
    fn welfare_checks_dimensions() {
        let m = Market::new(2, vec![ValuationSpec::Additive { l: vec![1.0, 2.0] }]).unwrap();
        assert!(welfare(&m, &Allocation::empty(2)).is_err());
        assert_eq!(welfare(&m, &Allocation::new(vec![ItemSet::singleton(1)])).unwrap(), 2.0);
    }

    #[test]
    fn allocation_predicates() {
        let a = Allocation::new(vec![ItemSet::from_items([0, 2]), ItemSet::from_items([1])]);
        assert!(a.is_disjoint() && a.is_full(3) && !a.is_full(4));
        assert_eq!(a.owner(1), Some(1));
        let b = Allocation::new(vec![ItemSet::from_items([0, 2]), ItemSet::from_items([2])]);
        assert!(!b.is_disjoint());
    }
}
