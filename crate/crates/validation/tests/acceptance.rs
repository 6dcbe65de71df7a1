//! One line per acceptance criterion, each followed by its individual checks and tolerances.

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use welfare_lab::repro::{run_repro, Check, ReproConfig, Relation};

const CRITERIA: [(u32, &str, &[&str]); 9] = [
    (1, "ascending auction on gross substitutes", &["kc-gs-convergence"]),
    (2, "adversarial ascending-auction market", &["kc-adversarial-ratio"]),
    (3, "coverage market without local-demand prices", &["murota-negative-cycles"]),
    (4, "greedy on close-to-linear markets", &["greedy-ratio"]),
    (5, "configuration LP integrality and perturbation", &["lp-integrality", "lp-perturbed"]),
    (6, "LP rounding schemes", &["rounding-linear", "rounding-xos"]),
    (7, "strong IR and biased-equilibrium certificates", &["bias-linear", "bias-transversal"]),
    (8, "hard close-to-linear family", &["hard-family"]),
    (9, "highest-bidder allocation on close-to-additive markets", &["additive-approx"]),
];

const SUITE_INSTANCES: usize = 500;
const SUITE_BUDGET_S: f64 = 300.0;

fn line(c: &Check) -> String {
    let rel = match c.relation {
        Relation::AtLeast => ">=",
        Relation::AtMost => "<=",
        Relation::Equal => "==",
        Relation::Above => ">",
    };
    format!("    [{}] {}: {} {} {} (tol {:e})", if c.pass { "PASS" } else { "FAIL" }, c.label, c.measured, rel, c.claimed, c.tolerance)
}

fn suites_criterion() -> (bool, Vec<String>) {
    let start = Instant::now();
    let mut master = ChaCha8Rng::seed_from_u64(10);
    let mut out = Vec::new();
    let mut ok = true;
    for (name, suite) in common::suites::SUITES {
        let failures: Vec<(u64, String)> = (0..SUITE_INSTANCES)
            .map(|_| master.random::<u64>())
            .filter_map(|seed| suite(seed).err().map(|e| (seed, e)))
            .collect();
        ok &= failures.is_empty();
        let c = Check::new(format!("{name}: failing instances out of {SUITE_INSTANCES}"), 0.0, failures.len() as f64, Relation::Equal, 0.0);
        out.push(line(&c));
        if let Some((seed, msg)) = failures.first() {
            out.push(format!("      first failure, seed {seed}: {msg}"));
        }
    }
    let si = run_repro("si-equivalence", &ReproConfig::default()).expect("si-equivalence runs");
    ok &= si.pass;
    out.extend(si.checks.iter().map(|c| format!("{} [si-equivalence]", line(c))));
    let elapsed = start.elapsed().as_secs_f64();
    let timing = Check::new("total suite seconds", SUITE_BUDGET_S, elapsed, Relation::AtMost, 0.0);
    ok &= timing.pass;
    out.push(line(&timing));
    (ok, out)
}

#[test]
fn acceptance() {
    let cfg = ReproConfig::default();
    let mut failed = Vec::new();
    for (num, title, ids) in CRITERIA {
        let mut detail = Vec::new();
        let mut ok = true;
        for id in ids {
            let report = run_repro(id, &cfg).unwrap_or_else(|e| panic!("{id}: {e}"));
            ok &= report.pass;
            detail.extend(report.checks.iter().map(|c| format!("{} [{id}]", line(c))));
            detail.extend(report.notes.iter().map(|n| format!("      note: {n}")));
        }
        println!("[{}] criterion {num}: {title}", if ok { "PASS" } else { "FAIL" });
        detail.iter().for_each(|d| println!("{d}"));
        if !ok {
            failed.push(num);
        }
    }
    let (ok, detail) = suites_criterion();
    println!("[{}] criterion 10: property suites on {SUITE_INSTANCES} instances each", if ok { "PASS" } else { "FAIL" });
    detail.iter().for_each(|d| println!("{d}"));
    if !ok {
        failed.push(10);
    }
    assert!(failed.is_empty(), "failing criteria: {failed:?}");
}
