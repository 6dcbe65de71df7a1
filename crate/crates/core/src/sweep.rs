//! Parameter sweeps over random markets, written as CSV.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algorithms::{additive_approx, brute_force_opt, kelso_crawford, welfare_greedy, OrderingPolicy};
use crate::error::{Error, Result};
use crate::instances::{gen_random_market, RandomKind};
use crate::lp::solve_config_lp;
use crate::market::welfare;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAlgorithm {
    Greedy,
    Kc,
    Lp,
    AdditiveApprox,
}

fn default_delta() -> Vec<f64> {
    vec![1e-3]
}

fn default_alpha() -> Vec<Option<f64>> {
    vec![None]
}

fn default_budget() -> u64 {
    10_000_000_000
}

/// The grid is the product of every list; an empty list gives an empty grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub algorithm: SweepAlgorithm,
    pub generator: RandomKind,
    pub n: Vec<usize>,
    pub m: Vec<usize>,
    pub eps: Vec<f64>,
    #[serde(default = "default_alpha")]
    pub alpha_target: Vec<Option<f64>>,
    /// Auction price increments; ignored by the other algorithms.
    #[serde(default = "default_delta")]
    pub delta: Vec<f64>,
    pub seeds: Vec<u64>,
    /// Upper bound on summed `n·3^m` brute-force work over all cells.
    #[serde(default = "default_budget")]
    pub budget: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Cell {
    pub n: usize,
    pub m: usize,
    pub eps: f64,
    pub alpha_target: Option<f64>,
    pub delta: Option<f64>,
    pub seed: u64,
}

/// One CSV row. Column order is the field order.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub algorithm: SweepAlgorithm,
    pub generator: RandomKind,
    pub n: usize,
    pub m: usize,
    pub eps: f64,
    pub alpha_target: Option<f64>,
    /// Empty for algorithms without a price increment.
    pub delta: Option<f64>,
    pub seed: u64,
    pub eps_realized: f64,
    pub alpha_realized: f64,
    pub welfare: f64,
    pub opt: f64,
    pub ratio: f64,
    pub bound: f64,
    /// Positive when the row is on the right side of `bound`.
    pub margin: f64,
}

pub const CSV_COLUMNS: [&str; 15] = [
    "algorithm",
    "generator",
    "n",
    "m",
    "eps",
    "alpha_target",
    "delta",
    "seed",
    "eps_realized",
    "alpha_realized",
    "welfare",
    "opt",
    "ratio",
    "bound",
    "margin",
];

impl SweepConfig {
    pub fn cells(&self) -> Vec<Cell> {
        let deltas: Vec<Option<f64>> =
            if self.algorithm == SweepAlgorithm::Kc { self.delta.iter().copied().map(Some).collect() } else { vec![None] };
        let mut out = Vec::new();
        for &n in &self.n {
            for &m in &self.m {
                for &eps in &self.eps {
                    for &alpha_target in &self.alpha_target {
                        for &delta in &deltas {
                            for &seed in &self.seeds {
                                out.push(Cell { n, m, eps, alpha_target, delta, seed });
                            }
                        }
                    }
                }
            }
        }
        out
    }

    fn work(&self, cells: &[Cell]) -> Result<u64> {
        cells.iter().try_fold(0u64, |acc, c| {
            if c.m > 24 {
                return Err(Error::Precondition(format!("m = {} exceeds 24", c.m)));
            }
            Ok(acc.saturating_add((c.n as u64).saturating_mul(3u64.pow(c.m as u32))))
        })
    }
}

fn run_cell(cfg: &SweepConfig, c: Cell) -> Result<SweepRow> {
    let g = gen_random_market(cfg.generator, c.n, c.m, c.eps, c.alpha_target, c.seed)?;
    let market = &g.market;
    let (eps_realized, alpha_realized) = (g.max_eps(), g.max_alpha());
    let opt = brute_force_opt(market)?.1;
    let (value, bound, upper) = match cfg.algorithm {
        SweepAlgorithm::Greedy => (welfare(market, &welfare_greedy(market))?, (1.0 - 3.0 * eps_realized) / alpha_realized, false),
        SweepAlgorithm::Kc => {
            let out = kelso_crawford(market, c.delta.expect("auction cells carry delta"), OrderingPolicy::RoundRobin)?;
            (welfare(market, &out.allocation)?, 1.0 / (1.0 + alpha_realized), false)
        }
        SweepAlgorithm::Lp => (solve_config_lp(market, 1e-9)?.value, 1.0 + eps_realized, true),
        SweepAlgorithm::AdditiveApprox => (welfare(market, &additive_approx(market))?, 1.0 / (1.0 + eps_realized), false),
    };
    let ratio = if opt > 0.0 { value / opt } else { 1.0 };
    let margin = if upper { bound - ratio } else { ratio - bound };
    Ok(SweepRow {
        algorithm: cfg.algorithm,
        generator: cfg.generator,
        n: c.n,
        m: c.m,
        eps: c.eps,
        alpha_target: c.alpha_target,
        delta: c.delta,
        seed: c.seed,
        eps_realized,
        alpha_realized,
        welfare: value,
        opt,
        ratio,
        bound,
        margin,
    })
}

/// Runs every cell (in parallel) and returns rows in grid order. Fails before running anything
/// when the grid's brute-force work exceeds the budget.
pub fn run_sweep(cfg: &SweepConfig) -> Result<Vec<SweepRow>> {
    let cells = cfg.cells();
    let work = cfg.work(&cells)?;
    if work > cfg.budget {
        return Err(Error::Budget(format!("{} cells need {work} brute-force steps, budget is {}", cells.len(), cfg.budget)));
    }
    cells.par_iter().map(|&c| run_cell(cfg, c)).collect()
}

pub fn rows_to_csv(rows: &[SweepRow]) -> Result<String> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    w.write_record(CSV_COLUMNS)?;
    for r in rows {
        w.serialize(r)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config() -> SweepConfig {
        serde_json::from_str(r#"{"algorithm": "greedy", "generator": "linear", "n": [2], "m": [4], "eps": [0.0, 0.1], "seeds": [1, 2]}"#).unwrap()
    }

    #[test]
    fn empty_grid_is_header_only() {
        let mut cfg = config();
        cfg.seeds.clear();
        let csv = rows_to_csv(&run_sweep(&cfg).unwrap()).unwrap();
        assert_eq!(csv, CSV_COLUMNS.join(",") + "\n");
    }

    #[test]
    fn rows_follow_grid_order() {
        let rows = run_sweep(&config()).unwrap();
        assert_eq!(rows.len(), 4);
        assert_eq!((rows[1].eps, rows[1].seed), (0.0, 2));
        assert!(rows.iter().all(|r| r.margin >= -1e-9));
        let csv = rows_to_csv(&rows).unwrap();
        assert_eq!(csv.lines().count(), 5);
    }

    #[test]
    fn budget_is_checked_first() {
        let mut cfg = config();
        cfg.m = vec![20];
        cfg.budget = 1000;
        assert!(matches!(run_sweep(&cfg), Err(Error::Budget(_))));
    }
}
