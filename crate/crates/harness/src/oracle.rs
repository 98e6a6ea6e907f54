//! Exhaustive ground truth for small instances.

use privdcsp::model::{for_each_tuple, Problem};
use thiserror::Error;

pub const DEFAULT_CAP: u128 = 10_000_000;

#[derive(Debug, Error, PartialEq, Eq)]
#[error("search space of {size} assignments exceeds the cap of {cap}")]
pub struct TooLarge {
    pub size: u128,
    pub cap: u128,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BruteForce {
    pub min_violations: usize,
    /// First assignment (in lexicographic order) reaching the minimum.
    pub witness: Option<Vec<usize>>,
    pub solutions: u128,
}

impl BruteForce {
    pub fn feasible(&self) -> bool {
        self.min_violations == 0
    }
}

pub fn brute_force(problem: &Problem, cap: u128) -> Result<BruteForce, TooLarge> {
    let size = problem.search_space();
    if size > cap {
        return Err(TooLarge { size, cap });
    }
    let dims: Vec<usize> = problem.var_ids().map(|v| problem.domain_size(v)).collect();
    let mut best = BruteForce { min_violations: usize::MAX, witness: None, solutions: 0 };
    for_each_tuple(&dims, |t| {
        let k = problem.violations(t);
        if k < best.min_violations {
            best.min_violations = k;
            best.witness = Some(t.to_vec());
        }
        if k == 0 {
            best.solutions += 1;
        }
    });
    Ok(best)
}
