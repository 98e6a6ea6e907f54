//! Omniscient transcript audit. The auditor knows the whole problem and the
//! codebook, and flags what each receiver could read off the messages it got.

use serde::Serialize;

use crate::model::{Problem, VarId};
use crate::sim::{CodeRecord, Transcript};
use crate::table::{Axis, Label, Symbol, Table};
use crate::wire::{Mention, MsgKind};

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum Finding {
    /// A message crossed a pair of variables that share no constraint.
    NonNeighborDelivery { record: usize },
    /// The receiver saw the name or a value of a variable whose owner is
    /// neither itself nor one of its neighbours.
    AgentPrivacy { record: usize, var: VarId },
    /// The receiver was told the value of another agent's variable.
    DecisionPrivacy { record: usize, var: VarId },
    /// A coded decision the receiver can decode with a codename package it holds.
    DecodableDecision { record: usize, var: VarId },
    /// A feasibility table travelled with cleartext entries.
    PlaintextFeasibility { record: usize },
    /// Any decision message at all.
    DecisionMessage { record: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Category {
    NonNeighbor,
    Agent,
    Decision,
    DecodableDecision,
    PlaintextFeasibility,
    DecisionMessage,
}

impl Finding {
    pub fn category(&self) -> Category {
        match self {
            Finding::NonNeighborDelivery { .. } => Category::NonNeighbor,
            Finding::AgentPrivacy { .. } => Category::Agent,
            Finding::DecisionPrivacy { .. } => Category::Decision,
            Finding::DecodableDecision { .. } => Category::DecodableDecision,
            Finding::PlaintextFeasibility { .. } => Category::PlaintextFeasibility,
            Finding::DecisionMessage { .. } => Category::DecisionMessage,
        }
    }
}

pub fn audit(transcript: &Transcript, problem: &Problem, codebook: &[CodeRecord]) -> Vec<Finding> {
    let mut out = Vec::new();
    for (i, r) in transcript.records.iter().enumerate() {
        if !problem.are_neighbors(r.from, r.to) {
            out.push(Finding::NonNeighborDelivery { record: i });
        }
        let known = problem.neighbor_agents(r.to_agent);
        let foreign = |v: VarId| {
            let a = problem.owner(v);
            a != r.to_agent && !known.contains(&a)
        };
        for m in &r.mentions {
            match *m {
                Mention::VarName(v) | Mention::Value(v) if foreign(v) => {
                    out.push(Finding::AgentPrivacy { record: i, var: v });
                }
                Mention::Assignment(v) if problem.owner(v) != r.to_agent => {
                    out.push(Finding::DecisionPrivacy { record: i, var: v });
                }
                Mention::CodedAssignment(code, _) => {
                    if let Some(c) = codebook.iter().find(|c| c.var_code == code && c.recipient == r.to) {
                        out.push(Finding::DecodableDecision { record: i, var: c.issuer });
                    }
                }
                Mention::PlainFeasibility => out.push(Finding::PlaintextFeasibility { record: i }),
                _ => {}
            }
        }
        if r.inner == MsgKind::Decision.as_str() {
            out.push(Finding::DecisionMessage { record: i });
        }
    }
    // duplicates arise when a value and a name of the same variable are both seen
    out.dedup();
    out
}

/// Rewrites every coded axis of `t` back to the cleartext variable and value
/// order using the codebook. Several codenames of one variable collapse onto
/// their diagonal. `None` if a codename is not in the codebook.
pub fn decode_table<T: Clone>(t: &Table<T>, codebook: &[CodeRecord]) -> Option<Table<T>> {
    let mut t = t.clone();
    let coded: Vec<u128> = t
        .labels()
        .filter_map(|l| match l {
            Label::Code(c) => Some(c),
            Label::Var(_) => None,
        })
        .collect();
    for code in coded {
        let rec = codebook.iter().find(|r| r.var_code == code)?;
        let target = Axis::var(rec.issuer, rec.domain_codes.len());
        t = t
            .resolve_axis(Label::Code(code), Label::Var(rec.issuer), &target.symbols, |s| match s {
                Symbol::Code(c) => rec.domain_codes.iter().position(|d| *d == c),
                Symbol::Value(_) => None,
            })
            .ok()?;
    }
    Some(t)
}

pub fn count(findings: &[Finding], category: Category) -> usize {
    findings.iter().filter(|f| f.category() == category).count()
}
