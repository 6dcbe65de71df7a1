use thiserror::Error;

use crate::itemset::ItemSet;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid market: {0}")]
    Schema(String),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("resource budget exceeded: {0}")]
    Budget(String),
    #[error("lower sandwich violated at bundle {bundle}: value {value} < base {base}")]
    LowerSandwich { bundle: ItemSet, value: f64, base: f64 },
    #[error("base value is zero but value is {value} at bundle {bundle}")]
    ZeroBase { bundle: ItemSet, value: f64 },
    #[error("no termination after {rounds} rounds: {detail}")]
    NonTermination { rounds: u64, detail: String },
    #[error("simplex: {0}")]
    Simplex(String),
    #[error("unknown name `{name}`; available: {available}")]
    UnknownName { name: String, available: String },
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
