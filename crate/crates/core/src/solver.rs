//! One entry point for every protocol: pick a [`SolverKind`], run it on the
//! simulator, and get back the verdict, the assembled assignment, metrics and
//! the transcript.

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use thiserror::Error;

use crate::crypto::{CryptoError, GroupParams};
use crate::dpop::{self, VarResult};
use crate::kernel::{ChildOrder, TreeSource};
use crate::model::{Assignment, ModelError, Problem};
use crate::p2;
use crate::p32::{self, P32Config};
use crate::pdpop::{self, PdpopConfig, Variant};
use crate::sim::{self, CodeRecord, Metrics, Probe, SimConfig, SimError, Transcript};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SolverKind {
    Dpop,
    PDpop,
    PDpopPlus,
    P32,
    P32Plus,
    P2,
    P2Plus,
}

impl SolverKind {
    pub const ALL: [SolverKind; 7] = [
        SolverKind::Dpop,
        SolverKind::PDpop,
        SolverKind::PDpopPlus,
        SolverKind::P32,
        SolverKind::P32Plus,
        SolverKind::P2,
        SolverKind::P2Plus,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SolverKind::Dpop => "dpop",
            SolverKind::PDpop => "pdpop",
            SolverKind::PDpopPlus => "pdpop+",
            SolverKind::P32 => "p32dpop",
            SolverKind::P32Plus => "p32dpop+",
            SolverKind::P2 => "p2dpop",
            SolverKind::P2Plus => "p2dpop+",
        }
    }

    pub fn variant(self) -> Variant {
        match self {
            SolverKind::PDpopPlus | SolverKind::P32Plus | SolverKind::P2Plus => Variant::Plus,
            _ => Variant::Minus,
        }
    }

    /// Uses codenames, i.e. anything but plain DPOP.
    pub fn is_private(self) -> bool {
        self != SolverKind::Dpop
    }

    /// Reroots the pseudo-tree and never sends decisions.
    pub fn reroots(self) -> bool {
        matches!(self, SolverKind::P32 | SolverKind::P32Plus | SolverKind::P2 | SolverKind::P2Plus)
    }

    pub fn is_encrypted_propagation(self) -> bool {
        matches!(self, SolverKind::P2 | SolverKind::P2Plus)
    }
}

impl fmt::Display for SolverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("unknown solver `{0}`")]
pub struct UnknownSolver(pub String);

impl FromStr for SolverKind {
    type Err = UnknownSolver;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        SolverKind::ALL.into_iter().find(|k| k.name() == s).ok_or_else(|| UnknownSolver(s.to_string()))
    }
}

#[derive(Clone, Debug)]
pub struct SolverConfig {
    pub kind: SolverKind,
    /// Source of the first pseudo-tree.
    pub tree: TreeSource,
    /// Child order for pseudo-trees rebuilt by rerooting solvers.
    pub child_order: ChildOrder,
    /// ElGamal modulus size; 5, 64 and 512 use built-in groups.
    pub key_bits: u32,
    pub b_bits: u64,
    pub incr_min: u64,
    /// Pad every domain to the largest size. `None` pads for the private
    /// solvers only.
    pub pad_domains: Option<bool>,
    pub obfuscate: bool,
    pub shuffle: bool,
    pub probes: bool,
    pub sim: SimConfig,
}

impl SolverConfig {
    pub fn new(kind: SolverKind) -> Self {
        SolverConfig {
            kind,
            tree: TreeSource::default(),
            child_order: ChildOrder::Random,
            key_bits: 512,
            b_bits: 128,
            incr_min: 1,
            pad_domains: None,
            obfuscate: true,
            shuffle: true,
            probes: false,
            sim: SimConfig::default(),
        }
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.sim.seed = seed;
        self
    }

    pub fn key_bits(mut self, bits: u32) -> Self {
        self.key_bits = bits;
        self
    }

    pub fn tree(mut self, tree: TreeSource) -> Self {
        self.tree = tree;
        self
    }

    pub fn record_payloads(mut self) -> Self {
        self.sim.record_payloads = true;
        self
    }
}

#[derive(Debug, Error)]
pub enum SolveError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Crypto(#[from] CryptoError),
    #[error(transparent)]
    Sim(#[from] SimError),
}

pub struct Solution {
    pub feasible: bool,
    /// A solution of the original problem, when feasible.
    pub assignment: Option<Assignment>,
    /// Minimum number of violated constraints, for solvers that compute it.
    pub min_violations: Option<u64>,
    /// What each variable reported.
    pub outputs: Vec<VarResult>,
    /// The problem the protocol actually ran on, after padding.
    pub solved: Problem,
    pub metrics: Metrics,
    pub transcript: Transcript,
    pub codebook: Vec<CodeRecord>,
    pub probes: Vec<Probe>,
}

pub fn solve(problem: &Problem, cfg: &SolverConfig) -> Result<Solution, SolveError> {
    let kind = cfg.kind;
    let pad = cfg.pad_domains.unwrap_or(kind.is_private());
    let solved = if pad { problem.pad_domains(problem.max_domain_size())? } else { problem.clone() };
    let pc = PdpopConfig { variant: kind.variant(), b_bits: cfg.b_bits, obfuscate: cfg.obfuscate };
    let group = if kind.reroots() {
        let mut rng = ChaCha20Rng::seed_from_u64(cfg.sim.seed);
        GroupParams::for_bits(cfg.key_bits, &mut rng)?
    } else {
        GroupParams::toy23()
    };
    let p32cfg = P32Config {
        pdpop: pc,
        group,
        incr_min: cfg.incr_min,
        child_order: cfg.child_order.clone(),
        shuffle: cfg.shuffle,
        probes: cfg.probes,
    };
    let tree = cfg.tree.clone();
    let out = sim::run(&solved, &cfg.sim, |node| {
        let tree = tree.clone();
        let p32cfg = p32cfg.clone();
        async move {
            match kind {
                SolverKind::Dpop => dpop::run_node(node, tree).await,
                SolverKind::PDpop | SolverKind::PDpopPlus => pdpop::run_node(node, tree, pc).await,
                SolverKind::P32 | SolverKind::P32Plus => p32::run_node(node, tree, p32cfg).await,
                SolverKind::P2 | SolverKind::P2Plus => p2::run_node(node, tree, p32cfg).await,
            }
        }
    })?;

    let feasible = out.outputs.iter().all(|o| o.root_feasible != Some(false));
    let min_violations = (kind == SolverKind::Dpop).then(|| out.outputs.iter().filter_map(|o| o.root_cost).sum());
    let assignment = if feasible {
        let values: Option<Vec<usize>> = out.outputs.iter().map(|o| o.value).collect();
        let values = values.ok_or_else(|| SimError::Protocol("feasible run left a variable unassigned".into()))?;
        for (v, x) in problem.var_ids().zip(&values) {
            if *x >= problem.domain_size(v) {
                return Err(SimError::Protocol(format!("{v} took a padding value")).into());
            }
        }
        Some(Assignment::complete(values))
    } else {
        None
    };
    Ok(Solution {
        feasible,
        assignment,
        min_violations,
        outputs: out.outputs,
        solved,
        metrics: out.metrics,
        transcript: out.transcript,
        codebook: out.codebook,
        probes: out.probes,
    })
}
