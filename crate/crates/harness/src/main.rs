use std::fs::{self, File};
use std::io::{self, Write};
use std::path::PathBuf;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use privdcsp::audit::{self, Category};
use privdcsp::model::parse_problem;
use privdcsp::solver::{solve, SolverConfig, SolverKind};
use privdcsp_harness::experiment::{
    run_experiment, summarize, trend_warnings, write_csv, write_summary_csv, ExperimentConfig,
};
use privdcsp_harness::gen::Family;

#[derive(Parser)]
#[command(name = "privdcsp", version, about = "Privacy-preserving DisCSP solvers on a simulated network")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run solvers on sampled instances and write one CSV row per run.
    Bench(BenchArgs),
    /// Solve one problem file.
    Solve(SolveArgs),
    /// Sample one instance and print it in the problem file format.
    Gen(GenArgs),
}

#[derive(Args)]
struct CryptoArgs {
    /// ElGamal modulus size in bits; 64 and 512 use built-in groups.
    #[arg(long, default_value_t = 512)]
    key_bits: u32,
    /// Bit length of obfuscation offsets and keys.
    #[arg(long, default_value_t = 128)]
    b_bits: u64,
    #[arg(long, default_value_t = 10)]
    incr_min: u64,
    #[arg(long, default_value_t = 600)]
    timeout_secs: u64,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long, value_parser = parse_family, default_value = "coloring")]
    family: Family,
    /// Sizes as a list (`3,4,5`) or an inclusive range (`3..6`).
    #[arg(long, value_parser = parse_sizes, default_value = "3..6")]
    sizes: Sizes,
    #[arg(long, default_value_t = 100)]
    instances: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Comma-separated solver names; all of them by default.
    #[arg(long, value_delimiter = ',')]
    solvers: Vec<SolverKind>,
    #[command(flatten)]
    crypto: CryptoArgs,
    /// Per-run CSV; standard output if omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Medians with 95 % intervals per (size, solver).
    #[arg(long)]
    summary: Option<PathBuf>,
}

#[derive(Args)]
struct SolveArgs {
    problem: PathBuf,
    #[arg(long, default_value = "pdpop+")]
    solver: SolverKind,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    crypto: CryptoArgs,
    /// Write the message transcript as NDJSON.
    #[arg(long)]
    transcript: Option<PathBuf>,
    /// Print the privacy audit of the transcript.
    #[arg(long)]
    audit: bool,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, value_parser = parse_family, default_value = "coloring")]
    family: Family,
    #[arg(long)]
    size: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Debug)]
struct Sizes(Vec<usize>);

fn parse_family(s: &str) -> Result<Family, String> {
    s.parse().map_err(|e: privdcsp_harness::gen::GenError| e.to_string())
}

fn parse_sizes(s: &str) -> Result<Sizes, String> {
    let num = |x: &str| x.trim().parse::<usize>().map_err(|e| format!("bad size `{x}`: {e}"));
    if let Some((a, b)) = s.split_once("..") {
        let (a, b) = (num(a)?, num(b.trim_start_matches('='))?);
        if a > b {
            return Err(format!("empty range {s}"));
        }
        return Ok(Sizes((a..=b).collect()));
    }
    s.split(',').map(num).collect::<Result<_, _>>().map(Sizes)
}

fn output(path: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(File::create(p).with_context(|| format!("creating {}", p.display()))?),
        None => Box::new(io::stdout().lock()),
    })
}

fn bench(args: BenchArgs) -> Result<()> {
    let mut cfg = ExperimentConfig::new(args.family, args.sizes.0);
    cfg.instances = args.instances;
    cfg.seed = args.seed;
    if !args.solvers.is_empty() {
        cfg.solvers = args.solvers;
    }
    cfg.key_bits = args.crypto.key_bits;
    cfg.b_bits = args.crypto.b_bits;
    cfg.incr_min = args.crypto.incr_min;
    cfg.timeout = Some(Duration::from_secs(args.crypto.timeout_secs));
    let rows = run_experiment(&cfg)?;
    write_csv(&rows, output(&args.out)?)?;
    let summary = summarize(&rows);
    if let Some(path) = &args.summary {
        write_summary_csv(&summary, File::create(path)?)?;
    }
    for s in &summary {
        if s.mismatches > 0 {
            eprintln!("{} n={}: {} verdicts disagree with the oracle", s.solver, s.size, s.mismatches);
        }
    }
    for w in trend_warnings(&summary) {
        eprintln!("trend: {w}");
    }
    Ok(())
}

fn solve_file(args: SolveArgs) -> Result<()> {
    let text = fs::read_to_string(&args.problem).with_context(|| format!("reading {}", args.problem.display()))?;
    let problem = parse_problem(&text)?;
    let mut cfg = SolverConfig::new(args.solver).seed(args.seed).key_bits(args.crypto.key_bits);
    cfg.b_bits = args.crypto.b_bits;
    cfg.incr_min = args.crypto.incr_min;
    cfg.sim.timeout = Some(Duration::from_secs(args.crypto.timeout_secs));
    let s = solve(&problem, &cfg)?;
    let mut out = io::stdout().lock();
    writeln!(out, "solver: {}", args.solver)?;
    writeln!(out, "feasible: {}", s.feasible)?;
    if let Some(k) = s.min_violations {
        writeln!(out, "min_violations: {k}")?;
    }
    if let Some(a) = &s.assignment {
        for v in problem.var_ids() {
            let var = problem.var(v);
            let x = a.get(v).context("incomplete assignment")?;
            writeln!(out, "  {} = {}", var.name, var.domain[x])?;
        }
    }
    let m = &s.metrics;
    writeln!(out, "messages: {}", m.messages)?;
    writeln!(out, "info_bytes: {}", m.info_bytes)?;
    writeln!(out, "simulated_time: {}", m.simulated_time)?;
    for (k, v) in &m.counters {
        writeln!(out, "{k}: {v}")?;
    }
    if let Some(path) = &args.transcript {
        fs::write(path, s.transcript.to_ndjson())?;
    }
    if args.audit {
        let f = audit::audit(&s.transcript, &s.solved, &s.codebook);
        for (c, name) in [
            (Category::NonNeighbor, "non_neighbor_deliveries"),
            (Category::Agent, "agent_privacy"),
            (Category::Decision, "decision_privacy"),
            (Category::DecodableDecision, "decodable_decisions"),
            (Category::PlaintextFeasibility, "plaintext_feasibility"),
            (Category::DecisionMessage, "decision_messages"),
        ] {
            writeln!(out, "audit.{name}: {}", audit::count(&f, c))?;
        }
    }
    Ok(())
}

fn gen(args: GenArgs) -> Result<()> {
    if args.size == 0 {
        bail!("size must be positive");
    }
    let p = args.family.generate(args.size, args.seed)?;
    output(&args.out)?.write_all(privdcsp::model::write_problem(&p).as_bytes())?;
    Ok(())
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Bench(a) => bench(a),
        Command::Solve(a) => solve_file(a),
        Command::Gen(a) => gen(a),
    }
}
