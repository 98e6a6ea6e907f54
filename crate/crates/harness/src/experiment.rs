//! Experiment driver: sample instances, run every solver on each, check the
//! verdicts against the oracle and aggregate medians per configuration.

use std::collections::BTreeMap;
use std::io;
use std::time::Duration;

use privdcsp::sim::SimError;
use privdcsp::solver::{solve, SolveError, SolverConfig, SolverKind};
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::gen::{Family, GenError};
use crate::oracle::{brute_force, DEFAULT_CAP};
use crate::stats::{median, median_ci};

#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub family: Family,
    pub sizes: Vec<usize>,
    pub instances: usize,
    pub seed: u64,
    pub solvers: Vec<SolverKind>,
    pub key_bits: u32,
    pub b_bits: u64,
    pub incr_min: u64,
    pub timeout: Option<Duration>,
    pub oracle_cap: u128,
}

impl ExperimentConfig {
    pub fn new(family: Family, sizes: Vec<usize>) -> Self {
        ExperimentConfig {
            family,
            sizes,
            instances: 100,
            seed: 0,
            solvers: SolverKind::ALL.to_vec(),
            key_bits: 512,
            b_bits: 128,
            incr_min: 10,
            timeout: Some(Duration::from_secs(600)),
            oracle_cap: DEFAULT_CAP,
        }
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        if self.instances == 0 {
            return Err(ExperimentError::Config("instance count must be at least 1".into()));
        }
        if self.sizes.is_empty() || self.sizes.contains(&0) {
            return Err(ExperimentError::Config("sizes must be positive".into()));
        }
        if self.solvers.is_empty() {
            return Err(ExperimentError::Config("no solver selected".into()));
        }
        Ok(())
    }

    /// Seed of instance `i` of size `size`, shared by every solver.
    pub fn instance_seed(&self, size: usize, i: usize) -> u64 {
        self.seed.wrapping_mul(1_000_003).wrapping_add((size as u64) << 32).wrapping_add(i as u64)
    }

    pub fn solver_config(&self, kind: SolverKind, seed: u64) -> SolverConfig {
        let mut cfg = SolverConfig::new(kind).seed(seed).key_bits(self.key_bits);
        cfg.b_bits = self.b_bits;
        cfg.incr_min = self.incr_min;
        cfg.sim.timeout = self.timeout;
        cfg
    }
}

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("bad configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Gen(#[from] GenError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Ok,
    Timeout,
    Error,
}

/// One (instance, solver) run. Field order is the CSV column order.
#[derive(Clone, Debug, Serialize)]
pub struct Row {
    pub family: &'static str,
    pub size: usize,
    pub instance: usize,
    pub seed: u64,
    pub solver: &'static str,
    pub status: Status,
    pub feasible: Option<bool>,
    pub oracle_feasible: Option<bool>,
    /// Verdict agrees with the oracle and any returned solution is valid.
    pub correct: Option<bool>,
    pub simulated_time: Option<u64>,
    pub messages: Option<u64>,
    pub info_bytes: Option<u64>,
    pub max_separator: Option<u64>,
    pub iterations: Option<u64>,
    pub error: Option<String>,
}

pub fn run_instance(cfg: &ExperimentConfig, size: usize, instance: usize) -> Result<Vec<Row>, ExperimentError> {
    let seed = cfg.instance_seed(size, instance);
    let problem = cfg.family.generate(size, seed)?;
    let oracle = brute_force(&problem, cfg.oracle_cap).ok();
    let mut rows = Vec::new();
    for kind in &cfg.solvers {
        let mut row = Row {
            family: cfg.family.name(),
            size,
            instance,
            seed,
            solver: kind.name(),
            status: Status::Ok,
            feasible: None,
            oracle_feasible: oracle.as_ref().map(|o| o.feasible()),
            correct: None,
            simulated_time: None,
            messages: None,
            info_bytes: None,
            max_separator: None,
            iterations: None,
            error: None,
        };
        match solve(&problem, &cfg.solver_config(*kind, seed)) {
            Ok(s) => {
                let valid = s.assignment.as_ref().map_or(true, |a| problem.evaluate(a) == Ok(0));
                row.feasible = Some(s.feasible);
                row.correct = row.oracle_feasible.map(|f| f == s.feasible && valid);
                row.simulated_time = Some(s.metrics.simulated_time);
                row.messages = Some(s.metrics.messages);
                row.info_bytes = Some(s.metrics.info_bytes);
                row.max_separator = Some(s.metrics.counter("max_separator"));
                row.iterations = kind.reroots().then(|| s.metrics.counter("iterations"));
            }
            Err(SolveError::Sim(SimError::Timeout)) => row.status = Status::Timeout,
            Err(e) => {
                row.status = Status::Error;
                row.error = Some(e.to_string());
            }
        }
        rows.push(row);
    }
    Ok(rows)
}

/// Runs every (size, instance) pair, in parallel across instances. Rows come
/// back in (size, instance, solver) order regardless of scheduling.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<Row>, ExperimentError> {
    cfg.validate()?;
    let jobs: Vec<(usize, usize)> = cfg.sizes.iter().flat_map(|s| (0..cfg.instances).map(move |i| (*s, i))).collect();
    let rows: Result<Vec<Vec<Row>>, ExperimentError> =
        jobs.par_iter().map(|(s, i)| run_instance(cfg, *s, *i)).collect();
    Ok(rows?.into_iter().flatten().collect())
}

/// Median and 95 % interval of one metric.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Estimate {
    pub median: f64,
    pub lo: f64,
    pub hi: f64,
}

impl Estimate {
    fn of(xs: &[f64]) -> Option<Estimate> {
        let (lo, hi) = median_ci(xs, 0.95)?;
        Some(Estimate { median: median(xs)?, lo, hi })
    }
}

#[derive(Clone, Debug)]
pub struct Summary {
    pub family: &'static str,
    pub size: usize,
    pub solver: &'static str,
    pub runs: usize,
    pub timeouts: usize,
    pub errors: usize,
    pub mismatches: usize,
    pub simulated_time: Option<Estimate>,
    pub messages: Option<Estimate>,
    pub info_bytes: Option<Estimate>,
    pub max_separator: Option<Estimate>,
}

/// [`Summary`] flattened into CSV columns.
#[derive(Serialize)]
struct SummaryRecord {
    family: &'static str,
    size: usize,
    solver: &'static str,
    runs: usize,
    timeouts: usize,
    errors: usize,
    mismatches: usize,
    simulated_time_median: Option<f64>,
    simulated_time_lo: Option<f64>,
    simulated_time_hi: Option<f64>,
    messages_median: Option<f64>,
    messages_lo: Option<f64>,
    messages_hi: Option<f64>,
    info_bytes_median: Option<f64>,
    info_bytes_lo: Option<f64>,
    info_bytes_hi: Option<f64>,
    max_separator_median: Option<f64>,
    max_separator_lo: Option<f64>,
    max_separator_hi: Option<f64>,
}

impl From<&Summary> for SummaryRecord {
    fn from(s: &Summary) -> Self {
        let m = |e: Option<Estimate>| e.map(|e| e.median);
        let lo = |e: Option<Estimate>| e.map(|e| e.lo);
        let hi = |e: Option<Estimate>| e.map(|e| e.hi);
        SummaryRecord {
            family: s.family,
            size: s.size,
            solver: s.solver,
            runs: s.runs,
            timeouts: s.timeouts,
            errors: s.errors,
            mismatches: s.mismatches,
            simulated_time_median: m(s.simulated_time),
            simulated_time_lo: lo(s.simulated_time),
            simulated_time_hi: hi(s.simulated_time),
            messages_median: m(s.messages),
            messages_lo: lo(s.messages),
            messages_hi: hi(s.messages),
            info_bytes_median: m(s.info_bytes),
            info_bytes_lo: lo(s.info_bytes),
            info_bytes_hi: hi(s.info_bytes),
            max_separator_median: m(s.max_separator),
            max_separator_lo: lo(s.max_separator),
            max_separator_hi: hi(s.max_separator),
        }
    }
}

pub fn write_summary_csv<W: io::Write>(summary: &[Summary], out: W) -> Result<(), ExperimentError> {
    let records: Vec<SummaryRecord> = summary.iter().map(SummaryRecord::from).collect();
    write_csv(&records, out)
}

/// Aggregates completed runs per (family, size, solver).
pub fn summarize(rows: &[Row]) -> Vec<Summary> {
    let mut groups: BTreeMap<(&'static str, usize, usize), Vec<&Row>> = BTreeMap::new();
    for r in rows {
        let order = SolverKind::ALL.iter().position(|k| k.name() == r.solver).unwrap_or(usize::MAX);
        groups.entry((r.family, r.size, order)).or_default().push(r);
    }
    groups
        .into_values()
        .map(|g| {
            let metric = |f: fn(&Row) -> Option<u64>| {
                let xs: Vec<f64> = g.iter().filter_map(|r| f(r)).map(|x| x as f64).collect();
                Estimate::of(&xs)
            };
            Summary {
                family: g[0].family,
                size: g[0].size,
                solver: g[0].solver,
                runs: g.len(),
                timeouts: g.iter().filter(|r| r.status == Status::Timeout).count(),
                errors: g.iter().filter(|r| r.status == Status::Error).count(),
                mismatches: g.iter().filter(|r| r.correct == Some(false)).count(),
                simulated_time: metric(|r| r.simulated_time),
                messages: metric(|r| r.messages),
                info_bytes: metric(|r| r.info_bytes),
                max_separator: metric(|r| r.max_separator),
            }
        })
        .collect()
}

/// Observations that go against the expected trends: median separator sizes
/// growing with the problem size, and simulated time and information
/// exchanged growing from P-DPOP to P^{3/2}-DPOP to P^2-DPOP. Only logged.
pub fn trend_warnings(summary: &[Summary]) -> Vec<String> {
    let mut out = Vec::new();
    let get = |size: usize, solver: &str| summary.iter().find(|s| s.size == size && s.solver == solver);
    let mut sizes: Vec<usize> = summary.iter().map(|s| s.size).collect();
    sizes.sort();
    sizes.dedup();
    let solvers: Vec<&str> = SolverKind::ALL.iter().map(|k| k.name()).collect();
    for solver in &solvers {
        let seps: Vec<(usize, f64)> =
            sizes.iter().filter_map(|n| Some((*n, get(*n, solver)?.max_separator?.median))).collect();
        for w in seps.windows(2) {
            if w[1].1 < w[0].1 {
                out.push(format!(
                    "{solver}: median separator drops from {} at n={} to {} at n={}",
                    w[0].1, w[0].0, w[1].1, w[1].0
                ));
            }
        }
    }
    let chains = [["pdpop", "p32dpop", "p2dpop"], ["pdpop+", "p32dpop+", "p2dpop+"]];
    for n in &sizes {
        for chain in &chains {
            for metric in ["simulated_time", "info_bytes"] {
                let vals: Vec<(&str, f64)> = chain
                    .iter()
                    .filter_map(|s| {
                        let e = get(*n, s)?;
                        let m = if metric == "simulated_time" { e.simulated_time } else { e.info_bytes };
                        Some((*s, m?.median))
                    })
                    .collect();
                for w in vals.windows(2) {
                    if w[1].1 < w[0].1 {
                        out.push(format!("n={n} {metric}: {} ({}) below {} ({})", w[1].0, w[1].1, w[0].0, w[0].1));
                    }
                }
            }
        }
    }
    out
}

pub fn write_csv<T: Serialize, W: io::Write>(items: &[T], out: W) -> Result<(), ExperimentError> {
    let mut w = csv::Writer::from_writer(out);
    for it in items {
        w.serialize(it)?;
    }
    w.flush()?;
    Ok(())
}
