use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};

use bnbtune::{csp::CspRule, NodeSelection, Rule};

mod commands;
mod config;
mod dataset;

#[derive(Parser)]
#[command(name = "bnbtune", version, about = "Branch-and-bound with tunable variable selection", args_override_self = true)]
struct Cli {
    /// Flat `key = value` file; flags on the command line override it.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Worker threads for per-instance work.
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Write instance files and a manifest.
    Generate(GenerateArgs),
    /// Solve one instance and report the tree.
    Solve(SolveArgs),
    /// Enumerate every behaviour over μ for a dataset and average the costs.
    Sweep(SweepArgs),
    /// Empirical risk minimiser over μ for a dataset.
    Erm(ErmArgs),
    /// Worst-case and data-dependent generalisation curves from sweep output.
    Bounds(BoundsArgs),
    /// Tree search on a constraint satisfaction problem.
    Csp(CspArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Domain {
    Wdp,
    Facility,
    Kmeans,
    Linsep,
    #[value(name = "familyF")]
    FamilyF,
    #[value(name = "familyG")]
    FamilyG,
    Mixture,
    Knapsack,
    Coloring,
}

#[derive(Args)]
struct GenerateArgs {
    domain: Domain,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    /// Number of instances.
    #[arg(long, default_value_t = 1)]
    m: usize,
    /// Base seed; instance k uses seed + k.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Family size, points (kmeans, linsep) or vertices (coloring).
    #[arg(long, default_value_t = 12)]
    n: usize,
    #[arg(long, default_value_t = 0.45)]
    mustar: f64,
    /// Base γ; family instance k uses γ·(k+1).
    #[arg(long, default_value_t = 1.0)]
    gamma: f64,
    /// Mixture breakpoints.
    #[arg(long, default_value_t = 0.4)]
    a: f64,
    #[arg(long, default_value_t = 0.45)]
    b: f64,
    #[arg(long, default_value_t = 5)]
    bidders: usize,
    #[arg(long, default_value_t = 4)]
    goods: usize,
    #[arg(long, default_value_t = 3)]
    max_bundle: usize,
    #[arg(long, default_value_t = 4)]
    facilities: usize,
    #[arg(long, default_value_t = 4)]
    customers: usize,
    /// Clusters (kmeans) or colours (coloring).
    #[arg(long, default_value_t = 2)]
    k: usize,
    #[arg(long, default_value_t = 2)]
    dim: usize,
    #[arg(long, default_value_t = 2)]
    flips: usize,
    /// Edge probability for coloring.
    #[arg(long, default_value_t = 0.5)]
    p: f64,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Policy {
    BestBound,
    DepthFirst,
}

impl From<Policy> for NodeSelection {
    fn from(p: Policy) -> Self {
        match p {
            Policy::BestBound => NodeSelection::BestBound,
            Policy::DepthFirst => NodeSelection::DepthFirst,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Fathom {
    Full,
    LocalOnly,
}

fn parse_rule(s: &str) -> Result<Rule, String> {
    s.parse().map_err(|e: bnbtune::Error| e.to_string())
}

fn parse_csp_rule(s: &str) -> Result<CspRule, String> {
    s.parse().map_err(|e: bnbtune::Error| e.to_string())
}

fn parse_unit(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{s}: {e}"))?;
    if (0.0..=1.0).contains(&v) {
        Ok(v)
    } else {
        Err(format!("{v} is outside [0, 1]"))
    }
}

/// Search settings shared by the MILP subcommands.
#[derive(Args, Clone)]
struct SearchArgs {
    #[arg(long, value_enum, default_value_t = Policy::BestBound)]
    node_selection: Policy,
    #[arg(long, value_enum, default_value_t = Fathom::Full)]
    fathom: Fathom,
    #[arg(long, default_value_t = 1_000_000)]
    node_cap: usize,
    /// Tree sizes are capped at this value when used as a cost.
    #[arg(long, default_value_t = 1_000_000)]
    cost_cap: usize,
    /// Evaluate child LPs with at most this many simplex pivots.
    #[arg(long)]
    partial_pivots: Option<usize>,
}

#[derive(Args)]
struct SolveArgs {
    file: PathBuf,
    #[arg(long, value_parser = parse_rule, default_value = "mostfrac")]
    rule: Rule,
    /// Second rule; combined as μ·rule + (1−μ)·rule2.
    #[arg(long, value_parser = parse_rule)]
    rule2: Option<Rule>,
    #[arg(long, value_parser = parse_unit, default_value = "0.5")]
    mu: f64,
    #[command(flatten)]
    search: SearchArgs,
    /// Write one line per node to this file.
    #[arg(long)]
    dump: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    /// Instance file or directory of `.milp` files.
    dataset: PathBuf,
    #[arg(long, value_parser = parse_rule, default_value = "minchange")]
    rule1: Rule,
    #[arg(long, value_parser = parse_rule, default_value = "maxchange")]
    rule2: Rule,
    /// Output directory for the CSV artifacts.
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    search: SearchArgs,
}

#[derive(Args)]
struct ErmArgs {
    dataset: PathBuf,
    #[arg(long, value_parser = parse_rule, default_value = "minchange")]
    rule1: Rule,
    #[arg(long, value_parser = parse_rule, default_value = "maxchange")]
    rule2: Rule,
    #[command(flatten)]
    search: SearchArgs,
}

#[derive(Args)]
struct BoundsArgs {
    /// Directory written by `sweep`.
    artifacts: PathBuf,
    #[arg(long, default_value_t = 150.0)]
    kappa: f64,
    #[arg(long, default_value_t = 0.05)]
    delta: f64,
    /// Number of binary variables; defaults to the largest in the sweep.
    #[arg(long)]
    n: Option<usize>,
    /// Comma-separated sample sizes; defaults to 1..=m.
    #[arg(long)]
    ms: Option<String>,
    /// Output CSV; stdout if omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Preset {
    Hard,
    None,
}

#[derive(Args)]
struct CspArgs {
    /// CSP file, or a DIMACS graph with `--dimacs`.
    file: PathBuf,
    /// Read a DIMACS edge list and colour it with `--k` colours.
    #[arg(long)]
    dimacs: bool,
    #[arg(long, default_value_t = 3)]
    k: usize,
    #[arg(long, value_enum, default_value_t = Preset::Hard)]
    preset: Preset,
    #[arg(long, value_parser = parse_csp_rule, default_value = "degdom")]
    rule: CspRule,
    #[arg(long, value_parser = parse_csp_rule)]
    rule2: Option<CspRule>,
    #[arg(long, value_parser = parse_unit, default_value = "0.5")]
    mu: f64,
    #[arg(long, value_enum, default_value_t = Policy::DepthFirst)]
    node_selection: Policy,
    #[arg(long, default_value_t = 1_000_000)]
    node_cap: usize,
    /// Enumerate all behaviours over μ for `--rule` and `--rule2`.
    #[arg(long)]
    sweep: bool,
    /// Sweep CSV; stdout if omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Failure classes mapped to exit codes.
pub enum Failure {
    Usage(String),
    Runtime(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Runtime(e)
    }
}

impl From<bnbtune::Error> for Failure {
    fn from(e: bnbtune::Error) -> Self {
        Failure::Runtime(e.into())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Runtime(e.into())
    }
}

impl From<csv::Error> for Failure {
    fn from(e: csv::Error) -> Self {
        Failure::Runtime(e.into())
    }
}

fn main() -> ExitCode {
    let raw: Vec<_> = std::env::args_os().collect();
    let args = match config::expand(raw, &Cli::command()) {
        Ok(a) => a,
        Err(msg) => {
            eprintln!("error: {msg}");
            return ExitCode::from(2);
        }
    };
    let cli = Cli::try_parse_from(args).unwrap_or_else(|e| e.exit());
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(cli.jobs.max(1)).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    let outcome = pool.install(|| match &cli.cmd {
        Cmd::Generate(a) => commands::generate(a),
        Cmd::Solve(a) => commands::solve(a),
        Cmd::Sweep(a) => commands::sweep(a),
        Cmd::Erm(a) => commands::erm(a),
        Cmd::Bounds(a) => commands::bounds(a),
        Cmd::Csp(a) => commands::csp(a),
    });
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
