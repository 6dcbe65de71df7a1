use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;
use welfare_lab::algorithms::{brute_force_opt, kelso_crawford, welfare_greedy, OrderingPolicy};
use welfare_lab::instances::golden_instances;
use welfare_lab::lp::solve_config_lp;
use welfare_lab::oracle::{exact_demand, utility};
use welfare_lab::properties::{alpha_of, curvature_of, fit_linear_closeness, is_gross_substitutes, is_monotone, is_submodular};
use welfare_lab::repro::{run_repro, ReproConfig, REPRO_IDS};
use welfare_lab::sweep::{rows_to_csv, run_sweep, SweepConfig};
use welfare_lab::{parse_market, serialize_market_pretty, welfare, ItemSet, Market, PriceVector};

#[derive(Parser)]
#[command(name = "welfare-lab", version, about = "Combinatorial-auction welfare experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a named reproduction (or `all`) and print its report.
    Repro {
        name: String,
        /// Seed file; defaults to the built-in seeds.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Write the JSON report here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Zero wall-clock fields so reruns produce identical bytes.
        #[arg(long)]
        deterministic: bool,
    },
    /// Run a parameter sweep and emit CSV.
    Sweep {
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Report class membership and closeness measures for every player.
    Check {
        market: PathBuf,
        /// Exit with status 1 unless every player belongs to this class.
        #[arg(long, value_enum)]
        class: Option<Class>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compute an allocation.
    Solve {
        market: PathBuf,
        #[arg(long, value_enum)]
        algo: Algo,
        /// Price increment for the ascending auction.
        #[arg(long, default_value_t = 1e-3)]
        delta: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Query one player's demand at given prices.
    Demand {
        market: PathBuf,
        #[arg(long)]
        player: usize,
        /// Comma-separated, one per item.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        prices: Vec<f64>,
        /// Comma-separated items already held.
        #[arg(long, value_delimiter = ',')]
        held: Vec<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write the named instances as market JSON files.
    ExportInstances { dir: PathBuf },
}

#[derive(Clone, Copy, ValueEnum)]
enum Class {
    Monotone,
    Submodular,
    GrossSubstitutes,
}

#[derive(Clone, Copy, ValueEnum)]
enum Algo {
    Greedy,
    Kc,
    Lp,
    Brute,
}

enum Failure {
    Usage(String),
    Assertion,
}

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Failure {
        Failure::Usage(e.to_string())
    }
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), Failure> {
    match out {
        Some(path) => std::fs::write(path, text)?,
        None => println!("{}", text.trim_end()),
    }
    Ok(())
}

fn load_market(path: &Path) -> Result<Market, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    parse_market(&text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn pretty(v: &serde_json::Value) -> String {
    serde_json::to_string_pretty(v).expect("json value serializes")
}

fn repro(name: &str, config: Option<&Path>, out: Option<&Path>, deterministic: bool) -> Result<(), Failure> {
    let cfg = match config {
        Some(p) => ReproConfig::from_json(&std::fs::read_to_string(p)?)?,
        None => ReproConfig::default(),
    };
    let names: Vec<&str> = if name == "all" { REPRO_IDS.to_vec() } else { vec![name] };
    let mut reports = Vec::new();
    for n in names {
        let r = run_repro(n, &cfg)?;
        eprint!("{}", r.summary());
        reports.push(r);
    }
    let all_pass = reports.iter().all(|r| r.pass);
    let text = if deterministic {
        let parts: Vec<String> = reports.iter().map(|r| r.deterministic_json()).collect();
        if parts.len() == 1 { parts[0].clone() } else { format!("[\n{}\n]", parts.join(",\n")) }
    } else if reports.len() == 1 {
        serde_json::to_string_pretty(&reports[0])?
    } else {
        serde_json::to_string_pretty(&reports)?
    };
    emit(out, &text)?;
    if all_pass { Ok(()) } else { Err(Failure::Assertion) }
}

fn check(path: &Path, class: Option<Class>, out: Option<&Path>) -> Result<(), Failure> {
    let market = load_market(path)?;
    let mut players = Vec::new();
    let mut member = true;
    for i in 0..market.n() {
        let v = market.player(i);
        let mono = is_monotone(&v);
        let sub = is_submodular(&v);
        let gs = (market.m <= 16).then(|| is_gross_substitutes(&v));
        let fit = if market.m <= 12 { Some(fit_linear_closeness(&v)?) } else { None };
        member &= match class {
            None => true,
            Some(Class::Monotone) => mono.holds,
            Some(Class::Submodular) => sub.holds,
            Some(Class::GrossSubstitutes) => gs.as_ref().map(|g| g.holds).ok_or("gross-substitutes check needs m ≤ 16")?,
        };
        players.push(json!({
            "player": i,
            "kind": market.players[i].kind(),
            "monotone": mono,
            "submodular": sub,
            "gross_substitutes": gs,
            "alpha": alpha_of(&v),
            "curvature": curvature_of(&v),
            "linear_fit": fit,
        }));
    }
    emit(out, &pretty(&json!({ "m": market.m, "players": players })))?;
    if member { Ok(()) } else { Err(Failure::Assertion) }
}

fn solve(path: &Path, algo: Algo, delta: f64, out: Option<&Path>) -> Result<(), Failure> {
    let market = load_market(path)?;
    let report = match algo {
        Algo::Greedy => {
            let a = welfare_greedy(&market);
            json!({ "algorithm": "greedy", "welfare": welfare(&market, &a)?, "allocation": a.bundles })
        }
        Algo::Kc => {
            let o = kelso_crawford(&market, delta, OrderingPolicy::RoundRobin)?;
            json!({
                "algorithm": "kc",
                "delta": delta,
                "welfare": welfare(&market, &o.allocation)?,
                "allocation": o.allocation.bundles,
                "prices": o.prices.prices,
                "rounds": o.trace.rounds.len(),
            })
        }
        Algo::Lp => {
            let lp = solve_config_lp(&market, 1e-9)?;
            serde_json::to_value(&lp)?
        }
        Algo::Brute => {
            let (a, w) = brute_force_opt(&market)?;
            json!({ "algorithm": "brute", "welfare": w, "allocation": a.bundles })
        }
    };
    emit(out, &pretty(&report))
}

fn demand(path: &Path, player: usize, prices: Vec<f64>, held: Vec<usize>, out: Option<&Path>) -> Result<(), Failure> {
    let market = load_market(path)?;
    if player >= market.n() {
        return Err(Failure::Usage(format!("player {player} out of range; the market has {}", market.n())));
    }
    let p = PriceVector::new(prices)?;
    p.check(market.m)?;
    if let Some(&j) = held.iter().find(|&&j| j >= market.m) {
        return Err(Failure::Usage(format!("held item {j} out of range")));
    }
    let held = ItemSet::from_items(held);
    let v = market.player(player);
    let d = exact_demand(&v, &p, held);
    emit(out, &pretty(&json!({ "player": player, "held": held, "demand": d, "utility": utility(&v, &p, d, held) })))
}

fn export(dir: &Path) -> Result<(), Failure> {
    std::fs::create_dir_all(dir)?;
    for (name, market) in golden_instances() {
        std::fs::write(dir.join(name), serialize_market_pretty(&market) + "\n")?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Repro { name, config, out, deterministic } => repro(&name, config.as_deref(), out.as_deref(), deterministic),
        Command::Sweep { config, out } => (|| {
            let cfg: SweepConfig = serde_json::from_str(&std::fs::read_to_string(&config)?)?;
            emit(out.as_deref(), &rows_to_csv(&run_sweep(&cfg)?)?)
        })(),
        Command::Check { market, class, out } => check(&market, class, out.as_deref()),
        Command::Solve { market, algo, delta, out } => solve(&market, algo, delta, out.as_deref()),
        Command::Demand { market, player, prices, held, out } => demand(&market, player, prices, held, out.as_deref()),
        Command::ExportInstances { dir } => export(&dir),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Assertion) => ExitCode::from(1),
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
