//! Combinatorial-auction laboratory: valuation classes, demand oracles, welfare algorithms,
//! the configuration LP, equilibrium certificates and named counterexample instances.
//!
//! Bundles are bitmasks over at most 24 items; every quantity can be checked against
//! exhaustive enumeration.

pub mod algorithms;
pub mod equilibrium;
pub mod error;
pub mod instances;
pub mod itemset;
pub mod lp;
pub mod market;
pub mod oracle;
pub mod properties;
pub mod repro;
pub mod simplex;
pub mod sweep;
pub mod valuation;

pub use error::{Error, Result};
pub use itemset::{ItemSet, MAX_ITEMS};
pub use market::{parse_market, serialize_market, serialize_market_pretty, welfare, Allocation, Market, PriceVector};
pub use valuation::{marginal, SetFunction, Table, ValuationSpec};
