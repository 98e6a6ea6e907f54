//! Problem definitions: agents, variables with finite domains, constraints
//! given as truth tables, and complete assignments.

mod format;

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use format::{parse_problem, write_problem, ParseError};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct VarId(pub u32);

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct AgentId(pub u32);

impl VarId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl AgentId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for VarId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "v{}", self.0)
    }
}

impl fmt::Display for AgentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "a{}", self.0)
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ModelError {
    #[error("unknown variable {0}")]
    UnknownVariable(String),
    #[error("unknown agent {0}")]
    UnknownAgent(String),
    #[error("duplicate name {0}")]
    DuplicateName(String),
    #[error("variable {0} has an empty domain")]
    EmptyDomain(String),
    #[error("variable {var} has duplicate value {value}")]
    DuplicateValue { var: String, value: String },
    #[error("value {value} is not in the domain of {var}")]
    UnknownValue { var: String, value: String },
    #[error("constraint scope is empty or repeats a variable")]
    BadScope,
    #[error("constraint table has {got} entries, expected {expected}")]
    TableSize { expected: usize, got: usize },
    #[error("assignment leaves {0} unassigned")]
    Unassigned(String),
    #[error("assigned value index {index} is outside the domain of {var}")]
    ValueOutOfRange { var: String, index: usize },
    #[error("cannot decompose a constraint held by zero agents")]
    NoHolders,
    #[error("padded domain size {target} is smaller than the domain of {var}")]
    PadTooSmall { var: String, target: usize },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Variable {
    pub name: String,
    pub owner: AgentId,
    pub domain: Vec<String>,
}

/// A constraint over an ordered scope, stored as a row-major feasibility table
/// (the first scope variable is the most significant coordinate).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Constraint {
    scope: Vec<VarId>,
    dims: Vec<usize>,
    feasible: Vec<bool>,
}

impl Constraint {
    /// Unary constraint `v = value` over a domain of `dim` values.
    pub fn unary_equal(v: VarId, dim: usize, value: usize) -> Self {
        Constraint { scope: vec![v], dims: vec![dim], feasible: (0..dim).map(|i| i == value).collect() }
    }

    pub fn scope(&self) -> &[VarId] {
        &self.scope
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn table(&self) -> &[bool] {
        &self.feasible
    }

    pub fn arity(&self) -> usize {
        self.scope.len()
    }

    pub fn index_of(&self, values: &[usize]) -> usize {
        debug_assert_eq!(values.len(), self.dims.len());
        let mut idx = 0;
        for (v, d) in values.iter().zip(&self.dims) {
            idx = idx * d + v;
        }
        idx
    }

    pub fn allows(&self, values: &[usize]) -> bool {
        self.feasible[self.index_of(values)]
    }

    /// Feasibility of this constraint under the values of `assignment` (indexed by variable).
    pub fn allows_assignment(&self, assignment: &[usize]) -> bool {
        let mut idx = 0;
        for (v, d) in self.scope.iter().zip(&self.dims) {
            idx = idx * d + assignment[v.index()];
        }
        self.feasible[idx]
    }

    pub fn count_infeasible(&self) -> usize {
        self.feasible.iter().filter(|f| !**f).count()
    }
}

/// Enumerates every tuple of a mixed-radix space in row-major order.
pub fn for_each_tuple(dims: &[usize], mut f: impl FnMut(&[usize])) {
    if dims.iter().any(|d| *d == 0) {
        return;
    }
    let mut cur = vec![0usize; dims.len()];
    loop {
        f(&cur);
        let mut k = dims.len();
        loop {
            if k == 0 {
                return;
            }
            k -= 1;
            cur[k] += 1;
            if cur[k] < dims[k] {
                break;
            }
            cur[k] = 0;
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Problem {
    agents: Vec<String>,
    variables: Vec<Variable>,
    constraints: Vec<Constraint>,
    adjacency: Vec<Vec<VarId>>,
}

impl Problem {
    pub fn agents(&self) -> &[String] {
        &self.agents
    }

    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn num_vars(&self) -> usize {
        self.variables.len()
    }

    pub fn var(&self, v: VarId) -> &Variable {
        &self.variables[v.index()]
    }

    pub fn var_ids(&self) -> impl Iterator<Item = VarId> + '_ {
        (0..self.variables.len() as u32).map(VarId)
    }

    pub fn owner(&self, v: VarId) -> AgentId {
        self.variables[v.index()].owner
    }

    pub fn domain_size(&self, v: VarId) -> usize {
        self.variables[v.index()].domain.len()
    }

    pub fn var_by_name(&self, name: &str) -> Option<VarId> {
        self.variables.iter().position(|x| x.name == name).map(|i| VarId(i as u32))
    }

    pub fn agent_by_name(&self, name: &str) -> Option<AgentId> {
        self.agents.iter().position(|x| x == name).map(|i| AgentId(i as u32))
    }

    /// Variables sharing at least one constraint with `v`, sorted.
    pub fn neighbors(&self, v: VarId) -> &[VarId] {
        &self.adjacency[v.index()]
    }

    pub fn are_neighbors(&self, a: VarId, b: VarId) -> bool {
        self.adjacency[a.index()].binary_search(&b).is_ok()
    }

    /// Agents owning a variable adjacent to one of `agent`'s variables (excluding `agent`).
    pub fn neighbor_agents(&self, agent: AgentId) -> BTreeSet<AgentId> {
        let mut out = BTreeSet::new();
        for v in self.var_ids().filter(|v| self.owner(*v) == agent) {
            for n in self.neighbors(v) {
                let o = self.owner(*n);
                if o != agent {
                    out.insert(o);
                }
            }
        }
        out
    }

    pub fn constraints_of(&self, v: VarId) -> impl Iterator<Item = &Constraint> + '_ {
        self.constraints.iter().filter(move |c| c.scope.contains(&v))
    }

    /// Connected components of the constraint graph, each sorted.
    pub fn components(&self) -> Vec<Vec<VarId>> {
        let n = self.num_vars();
        let mut seen = vec![false; n];
        let mut out = Vec::new();
        for s in 0..n {
            if seen[s] {
                continue;
            }
            let mut comp = Vec::new();
            let mut stack = vec![VarId(s as u32)];
            seen[s] = true;
            while let Some(v) = stack.pop() {
                comp.push(v);
                for w in &self.adjacency[v.index()] {
                    if !seen[w.index()] {
                        seen[w.index()] = true;
                        stack.push(*w);
                    }
                }
            }
            comp.sort();
            out.push(comp);
        }
        out
    }

    pub fn is_connected(&self) -> bool {
        self.components().len() <= 1
    }

    /// Number of violated constraints under a complete assignment.
    pub fn evaluate(&self, assignment: &Assignment) -> Result<usize, ModelError> {
        let values = self.check_complete(assignment)?;
        Ok(self.violations(&values))
    }

    /// Violation count for a dense value vector, without validation.
    pub fn violations(&self, values: &[usize]) -> usize {
        self.constraints.iter().filter(|c| !c.allows_assignment(values)).count()
    }

    pub fn check_complete(&self, assignment: &Assignment) -> Result<Vec<usize>, ModelError> {
        if assignment.0.len() != self.num_vars() {
            let missing = self.variables.get(assignment.0.len()).map(|v| v.name.clone()).unwrap_or_default();
            return Err(ModelError::Unassigned(missing));
        }
        let mut out = Vec::with_capacity(self.num_vars());
        for (i, val) in assignment.0.iter().enumerate() {
            let var = &self.variables[i];
            match val {
                None => return Err(ModelError::Unassigned(var.name.clone())),
                Some(x) if *x >= var.domain.len() => {
                    return Err(ModelError::ValueOutOfRange { var: var.name.clone(), index: *x })
                }
                Some(x) => out.push(*x),
            }
        }
        Ok(out)
    }

    /// The Max-DisCSP view: every constraint costs 0 where feasible and 1 elsewhere.
    pub fn to_max_discsp(&self) -> MaxDisCsp {
        MaxDisCsp {
            domain_sizes: self.variables.iter().map(|v| v.domain.len()).collect(),
            constraints: self
                .constraints
                .iter()
                .map(|c| CostConstraint {
                    scope: c.scope.clone(),
                    dims: c.dims.clone(),
                    cost: c.feasible.iter().map(|f| u8::from(!*f)).collect(),
                })
                .collect(),
        }
    }

    /// Pads every domain to `size` values. Padding values are infeasible in every
    /// constraint, and variables without any constraint get a unary one so that
    /// padding values are never chosen.
    pub fn pad_domains(&self, size: usize) -> Result<Problem, ModelError> {
        let mut b = ProblemBuilder::new();
        for a in &self.agents {
            b.agent(a)?;
        }
        for v in &self.variables {
            if v.domain.len() > size {
                return Err(ModelError::PadTooSmall { var: v.name.clone(), target: size });
            }
            let mut domain = v.domain.clone();
            let mut k = 0;
            while domain.len() < size {
                let cand = format!("_pad{k}");
                k += 1;
                if !domain.contains(&cand) {
                    domain.push(cand);
                }
            }
            b.variable(&v.name, v.owner, domain)?;
        }
        let mut constrained = vec![false; self.num_vars()];
        for c in &self.constraints {
            for v in &c.scope {
                constrained[v.index()] = true;
            }
            let orig = c.dims.clone();
            b.constraint_fn(&c.scope, |vals| vals.iter().zip(&orig).all(|(x, d)| x < d) && c.allows(vals))?;
        }
        for (i, v) in self.variables.iter().enumerate() {
            if !constrained[i] && v.domain.len() < size {
                let d = v.domain.len();
                b.constraint_fn(&[VarId(i as u32)], |vals| vals[0] < d)?;
            }
        }
        b.build()
    }

    pub fn max_domain_size(&self) -> usize {
        self.variables.iter().map(|v| v.domain.len()).max().unwrap_or(0)
    }

    /// Size of the joint assignment space, saturating at `u128::MAX`.
    pub fn search_space(&self) -> u128 {
        self.variables.iter().fold(1u128, |acc, v| acc.saturating_mul(v.domain.len() as u128))
    }

    fn rebuild_adjacency(&mut self) {
        let mut adj: Vec<BTreeSet<VarId>> = vec![BTreeSet::new(); self.variables.len()];
        for c in &self.constraints {
            for a in &c.scope {
                for b in &c.scope {
                    if a != b {
                        adj[a.index()].insert(*b);
                    }
                }
            }
        }
        self.adjacency = adj.into_iter().map(|s| s.into_iter().collect()).collect();
    }
}

/// Cost-table view of a problem used by the optimization-based solvers.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MaxDisCsp {
    pub domain_sizes: Vec<usize>,
    pub constraints: Vec<CostConstraint>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CostConstraint {
    pub scope: Vec<VarId>,
    pub dims: Vec<usize>,
    pub cost: Vec<u8>,
}

impl MaxDisCsp {
    pub fn cost(&self, values: &[usize]) -> usize {
        self.constraints
            .iter()
            .map(|c| {
                let mut idx = 0;
                for (v, d) in c.scope.iter().zip(&c.dims) {
                    idx = idx * d + values[v.index()];
                }
                c.cost[idx] as usize
            })
            .sum()
    }
}

/// One value per variable; `None` marks an unassigned variable.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Assignment(pub Vec<Option<usize>>);

impl Assignment {
    pub fn empty(n: usize) -> Self {
        Assignment(vec![None; n])
    }

    pub fn complete(values: Vec<usize>) -> Self {
        Assignment(values.into_iter().map(Some).collect())
    }

    pub fn get(&self, v: VarId) -> Option<usize> {
        self.0.get(v.index()).copied().flatten()
    }

    pub fn set(&mut self, v: VarId, value: usize) {
        self.0[v.index()] = Some(value);
    }

    pub fn is_complete(&self) -> bool {
        self.0.iter().all(Option::is_some)
    }

    pub fn values(&self) -> Option<Vec<usize>> {
        self.0.iter().copied().collect()
    }
}

/// A constraint whose feasibility is the conjunction of private parts held by
/// several agents.
#[derive(Clone, Debug)]
pub struct SharedConstraint {
    pub scope: Vec<VarId>,
    pub parts: Vec<(AgentId, Vec<bool>)>,
}

/// Copies and constraints added by [`ProblemBuilder::add_shared_constraint`].
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Decomposition {
    pub copies: Vec<VarId>,
    pub constraints: usize,
}

#[derive(Debug, Default)]
pub struct ProblemBuilder {
    problem: Problem,
}

impl Default for Problem {
    fn default() -> Self {
        Problem { agents: Vec::new(), variables: Vec::new(), constraints: Vec::new(), adjacency: Vec::new() }
    }
}

impl ProblemBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn agent(&mut self, name: &str) -> Result<AgentId, ModelError> {
        if self.problem.agents.iter().any(|a| a == name) {
            return Err(ModelError::DuplicateName(name.to_string()));
        }
        self.problem.agents.push(name.to_string());
        Ok(AgentId(self.problem.agents.len() as u32 - 1))
    }

    /// Returns the agent with this name, creating it if needed.
    pub fn agent_or_existing(&mut self, name: &str) -> AgentId {
        match self.problem.agent_by_name(name) {
            Some(a) => a,
            None => self.agent(name).expect("name is fresh"),
        }
    }

    pub fn variable<S: Into<String>>(
        &mut self,
        name: &str,
        owner: AgentId,
        domain: impl IntoIterator<Item = S>,
    ) -> Result<VarId, ModelError> {
        if owner.index() >= self.problem.agents.len() {
            return Err(ModelError::UnknownAgent(owner.to_string()));
        }
        if self.problem.variables.iter().any(|v| v.name == name) {
            return Err(ModelError::DuplicateName(name.to_string()));
        }
        let domain: Vec<String> = domain.into_iter().map(Into::into).collect();
        if domain.is_empty() {
            return Err(ModelError::EmptyDomain(name.to_string()));
        }
        let mut seen = BTreeSet::new();
        for d in &domain {
            if !seen.insert(d.as_str()) {
                return Err(ModelError::DuplicateValue { var: name.to_string(), value: d.clone() });
            }
        }
        self.problem.variables.push(Variable { name: name.to_string(), owner, domain });
        Ok(VarId(self.problem.variables.len() as u32 - 1))
    }

    pub fn var_by_name(&self, name: &str) -> Option<VarId> {
        self.problem.var_by_name(name)
    }

    pub fn domain_size(&self, v: VarId) -> usize {
        self.problem.variables[v.index()].domain.len()
    }

    pub fn owner(&self, v: VarId) -> AgentId {
        self.problem.variables[v.index()].owner
    }

    pub fn value_index(&self, v: VarId, value: &str) -> Result<usize, ModelError> {
        let var = &self.problem.variables[v.index()];
        var.domain
            .iter()
            .position(|d| d == value)
            .ok_or_else(|| ModelError::UnknownValue { var: var.name.clone(), value: value.to_string() })
    }

    fn dims_of(&self, scope: &[VarId]) -> Result<Vec<usize>, ModelError> {
        if scope.is_empty() {
            return Err(ModelError::BadScope);
        }
        let mut seen = BTreeSet::new();
        for v in scope {
            if v.index() >= self.problem.variables.len() {
                return Err(ModelError::UnknownVariable(v.to_string()));
            }
            if !seen.insert(*v) {
                return Err(ModelError::BadScope);
            }
        }
        Ok(scope.iter().map(|v| self.domain_size(*v)).collect())
    }

    pub fn constraint_table(&mut self, scope: &[VarId], feasible: Vec<bool>) -> Result<(), ModelError> {
        let dims = self.dims_of(scope)?;
        let expected: usize = dims.iter().product();
        if feasible.len() != expected {
            return Err(ModelError::TableSize { expected, got: feasible.len() });
        }
        self.problem.constraints.push(Constraint { scope: scope.to_vec(), dims, feasible });
        Ok(())
    }

    pub fn constraint_fn(
        &mut self,
        scope: &[VarId],
        mut allowed: impl FnMut(&[usize]) -> bool,
    ) -> Result<(), ModelError> {
        let dims = self.dims_of(scope)?;
        let mut feasible = Vec::with_capacity(dims.iter().product());
        for_each_tuple(&dims, |t| feasible.push(allowed(t)));
        self.constraint_table(scope, feasible)
    }

    /// A constraint forbidding exactly the listed tuples.
    pub fn forbid(&mut self, scope: &[VarId], tuples: &[Vec<usize>]) -> Result<(), ModelError> {
        let bad: BTreeSet<&Vec<usize>> = tuples.iter().collect();
        self.constraint_fn(scope, |t| !bad.contains(&t.to_vec()))
    }

    pub fn not_equal(&mut self, a: VarId, b: VarId) -> Result<(), ModelError> {
        self.constraint_fn(&[a, b], |t| t[0] != t[1])
    }

    pub fn equal(&mut self, a: VarId, b: VarId) -> Result<(), ModelError> {
        self.constraint_fn(&[a, b], |t| t[0] == t[1])
    }

    /// Splits a constraint held jointly by several agents into one private
    /// constraint per holder over copies of the scope, tied to the originals by
    /// equality constraints. A single holder keeps the constraint unchanged.
    pub fn add_shared_constraint(&mut self, shared: &SharedConstraint) -> Result<Decomposition, ModelError> {
        let dims = self.dims_of(&shared.scope)?;
        let expected: usize = dims.iter().product();
        for (_, t) in &shared.parts {
            if t.len() != expected {
                return Err(ModelError::TableSize { expected, got: t.len() });
            }
        }
        match shared.parts.len() {
            0 => Err(ModelError::NoHolders),
            1 => {
                self.constraint_table(&shared.scope, shared.parts[0].1.clone())?;
                Ok(Decomposition { copies: Vec::new(), constraints: 1 })
            }
            _ => {
                let mut out = Decomposition::default();
                let serial = self.problem.constraints.len();
                for (holder, table) in &shared.parts {
                    let mut copies = Vec::with_capacity(shared.scope.len());
                    for v in &shared.scope {
                        if self.owner(*v) == *holder {
                            copies.push(*v);
                            continue;
                        }
                        let orig = &self.problem.variables[v.index()];
                        let name = format!("{}_c{}_{}", orig.name, serial, self.problem.agents[holder.index()]);
                        let domain = orig.domain.clone();
                        let copy = self.variable(&name, *holder, domain)?;
                        self.equal(*v, copy)?;
                        out.constraints += 1;
                        out.copies.push(copy);
                        copies.push(copy);
                    }
                    self.constraint_table(&copies, table.clone())?;
                    out.constraints += 1;
                }
                Ok(out)
            }
        }
    }

    pub fn build(mut self) -> Result<Problem, ModelError> {
        self.problem.rebuild_adjacency();
        Ok(self.problem)
    }
}

/// The five-variable three-colouring instance used throughout the tests:
/// one agent per variable, colours `R B G`.
pub fn colouring_example() -> Problem {
    let mut b = ProblemBuilder::new();
    let vars: Vec<VarId> = (1..=5)
        .map(|i| {
            let a = b.agent(&format!("a{i}")).expect("fresh");
            b.variable(&format!("x{i}"), a, ["R", "B", "G"]).expect("fresh")
        })
        .collect();
    let x = |i: usize| vars[i - 1];
    for (p, q) in [(1, 2), (1, 4), (2, 3), (3, 4), (3, 5)] {
        b.not_equal(x(p), x(q)).expect("valid");
    }
    b.forbid(&[x(1)], &[vec![0]]).expect("valid");
    b.forbid(&[x(4)], &[vec![1]]).expect("valid");
    b.forbid(&[x(5)], &[vec![0], vec![1]]).expect("valid");
    b.build().expect("valid")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn colouring_example_violation_counts() {
        let p = colouring_example();
        assert_eq!(p.constraints().len(), 8);
        assert_eq!(p.evaluate(&Assignment::complete(vec![0; 5])).unwrap(), 7);
        // x1=B x2=R x3=B x4=G x5=G
        assert_eq!(p.evaluate(&Assignment::complete(vec![1, 0, 1, 2, 2])).unwrap(), 0);
    }

    #[test]
    fn evaluate_rejects_partial() {
        let p = colouring_example();
        let mut a = Assignment::complete(vec![0; 5]);
        a.0[2] = None;
        assert_eq!(p.evaluate(&a), Err(ModelError::Unassigned("x3".into())));
        let a = Assignment::complete(vec![0, 0, 5, 0, 0]);
        assert!(matches!(p.evaluate(&a), Err(ModelError::ValueOutOfRange { .. })));
    }

    #[test]
    fn max_discsp_costs_match_violations() {
        let p = colouring_example();
        let m = p.to_max_discsp();
        for_each_tuple(&[3, 3, 3, 3, 3], |t| {
            assert_eq!(m.cost(t), p.violations(t));
        });
    }

    #[test]
    fn neighbors_of_the_colouring_example() {
        let p = colouring_example();
        let x3 = p.var_by_name("x3").unwrap();
        let names: Vec<&str> = p.neighbors(x3).iter().map(|v| p.var(*v).name.as_str()).collect();
        assert_eq!(names, ["x2", "x4", "x5"]);
        assert!(p.is_connected());
    }

    #[test]
    fn duplicate_values_rejected() {
        let mut b = ProblemBuilder::new();
        let a = b.agent("a").unwrap();
        assert!(matches!(b.variable("x", a, ["R", "R"]), Err(ModelError::DuplicateValue { .. })));
        assert_eq!(b.variable("y", a, Vec::<String>::new()), Err(ModelError::EmptyDomain("y".into())));
    }

    #[test]
    fn shared_constraint_single_holder_is_unchanged() {
        let mut b = ProblemBuilder::new();
        let a = b.agent("a").unwrap();
        let x = b.variable("x", a, ["0", "1"]).unwrap();
        let y = b.variable("y", a, ["0", "1"]).unwrap();
        let d = b
            .add_shared_constraint(&SharedConstraint {
                scope: vec![x, y],
                parts: vec![(a, vec![true, false, false, true])],
            })
            .unwrap();
        assert!(d.copies.is_empty());
        let p = b.build().unwrap();
        assert_eq!(p.constraints().len(), 1);
        assert_eq!(p.constraints()[0].table(), &[true, false, false, true]);
    }

    #[test]
    fn shared_constraint_zero_holders_errors() {
        let mut b = ProblemBuilder::new();
        let a = b.agent("a").unwrap();
        let x = b.variable("x", a, ["0", "1"]).unwrap();
        let r = b.add_shared_constraint(&SharedConstraint { scope: vec![x], parts: vec![] });
        assert_eq!(r, Err(ModelError::NoHolders));
    }

    #[test]
    fn shared_constraint_two_holders_preserves_solutions() {
        let mut b = ProblemBuilder::new();
        let a = b.agent("a").unwrap();
        let c = b.agent("c").unwrap();
        let x = b.variable("x", a, ["0", "1", "2"]).unwrap();
        let y = b.variable("y", c, ["0", "1", "2"]).unwrap();
        // a forbids equal values, c forbids y = 0
        let pa: Vec<bool> = (0..9).map(|i| i / 3 != i % 3).collect();
        let pc: Vec<bool> = (0..9).map(|i| i % 3 != 0).collect();
        let d =
            b.add_shared_constraint(&SharedConstraint { scope: vec![x, y], parts: vec![(a, pa), (c, pc)] }).unwrap();
        assert_eq!(d.copies.len(), 2);
        let p = b.build().unwrap();
        // Project solutions of the decomposed problem onto (x, y).
        let mut sols = BTreeSet::new();
        let dims: Vec<usize> = p.variables().iter().map(|v| v.domain.len()).collect();
        for_each_tuple(&dims, |t| {
            if p.violations(t) == 0 {
                sols.insert((t[0], t[1]));
            }
        });
        let expected: BTreeSet<_> = [(0, 1), (0, 2), (1, 2), (2, 1)].into_iter().collect();
        assert_eq!(sols, expected);
        for copy in &d.copies {
            let owner = p.owner(*copy);
            for n in p.neighbors(*copy) {
                let other = p.owner(*n);
                // cross-agent edges of a copy are only the equality with its original
                if other != owner {
                    assert!(p.var(*n).name.len() < p.var(*copy).name.len());
                }
            }
        }
    }

    #[test]
    fn padding_preserves_solutions() {
        let p = colouring_example();
        let q = p.pad_domains(5).unwrap();
        assert!(q.variables().iter().all(|v| v.domain.len() == 5));
        let mut count_p = 0;
        for_each_tuple(&[3; 5], |t| count_p += usize::from(p.violations(t) == 0));
        let mut count_q = 0;
        for_each_tuple(&[5; 5], |t| count_q += usize::from(q.violations(t) == 0));
        assert_eq!(count_p, count_q);
        assert!(matches!(p.pad_domains(2), Err(ModelError::PadTooSmall { .. })));
    }
}
