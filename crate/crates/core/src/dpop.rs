//! DPOP on the Max-DisCSP view: cost tables flow up the pseudo-tree (join by
//! sum, project by min), then optimal values flow down.

use std::collections::BTreeMap;

use crate::kernel::{initial_tree, TreeSource, TreeView};
use crate::model::{Constraint, VarId};
use crate::sim::{LocalKnowledge, Node, SimError};
use crate::table::{Axis, Label, Symbol, Table};
use crate::wire::{FeasTable, Msg};

/// What one variable reports at the end of a run.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VarResult {
    pub value: Option<usize>,
    /// Set by roots: the optimal cost of their component, if they learn it.
    pub root_cost: Option<u64>,
    /// Whether this variable learned that its component is feasible.
    pub root_feasible: Option<bool>,
}

/// Constraints this variable joins locally: those containing it and none of
/// its children or pseudo-children.
pub fn local_constraints<'a>(local: &'a LocalKnowledge, view: &TreeView) -> impl Iterator<Item = &'a Constraint> + 'a {
    let below = view.descendants_linked();
    local.constraints.iter().filter(move |c| !c.scope().iter().any(|v| below.contains(v)))
}

/// Axis list of a constraint over cleartext variable labels.
pub fn constraint_axes(c: &Constraint) -> Vec<Axis> {
    c.scope().iter().zip(c.dims()).map(|(v, d)| Axis::var(*v, *d)).collect()
}

/// Sum of the violation costs of the local constraints plus `extra`, over
/// `x` and the other variables in their scopes.
pub fn local_cost_table(node: &Node, view: &TreeView, extra: &[Constraint]) -> Result<Table<u64>, SimError> {
    let local = node.local();
    let mut t = Table::from_fn(vec![Axis::var(local.var, local.domain_size)], |_| 0u64);
    for c in local_constraints(local, view).chain(extra) {
        let ct = Table::from_fn(constraint_axes(c), |vals| u64::from(!c.allows(vals)));
        t = t.join(&ct, |a, b| a + b)?;
        node.charge_checks(t.len() as u64);
    }
    Ok(t)
}

/// Values for the labels of a child's separator: this variable's own label
/// gets the chosen value, the rest are copied from the parent's decision.
pub(crate) fn child_decision(
    axes: &[Axis],
    mut own: impl FnMut(Label) -> Option<Symbol>,
    inherited: &BTreeMap<Label, Symbol>,
) -> Result<Vec<(Label, Symbol)>, SimError> {
    axes.iter()
        .map(|a| {
            own(a.label)
                .or_else(|| inherited.get(&a.label).copied())
                .map(|s| (a.label, s))
                .ok_or_else(|| SimError::Protocol(format!("no decision for label {:?}", a.label)))
        })
        .collect()
}

pub async fn run_node(node: Node, tree: TreeSource) -> Result<VarResult, SimError> {
    let x = node.var();
    let view = initial_tree(&node, &tree).await?;
    let mut table = local_cost_table(&node, &view, &[])?;
    let mut child_axes: Vec<(VarId, Vec<Axis>)> = Vec::new();
    for c in view.children.clone() {
        let (_, m) = node.recv(move |f, m| f == c && matches!(m, Msg::Feas { epoch: 0, .. })).await?;
        let Msg::Feas { table: FeasTable::Plain(t), .. } = m else {
            return Err(SimError::Protocol("expected a cleartext cost table".into()));
        };
        table = table.join(&t, |a, b| a + b)?;
        node.charge_checks(table.len() as u64);
        child_axes.push((c, t.axes().to_vec()));
    }
    let (proj, arg) = table.project_min(Label::Var(x))?;
    node.charge_checks(table.len() as u64);
    node.record_max("max_separator", proj.axes().len() as u64);

    let mut result = VarResult { value: None, root_cost: None, root_feasible: None };
    let inherited: BTreeMap<Label, Symbol> = match view.parent {
        Some(p) => {
            node.send(p, Msg::Feas { epoch: 0, table: FeasTable::Plain(proj) });
            let (_, m) = node.recv(move |f, m| f == p && matches!(m, Msg::Decision { epoch: 0, .. })).await?;
            let Msg::Decision { values, .. } = m else { unreachable!() };
            values.into_iter().collect()
        }
        None => {
            let cost = proj.entries()[0];
            result.root_cost = Some(cost);
            result.root_feasible = Some(cost == 0);
            BTreeMap::new()
        }
    };
    let at: Vec<(Label, Symbol)> = inherited.iter().map(|(l, s)| (*l, *s)).collect();
    let best = *arg.lookup(&at).ok_or_else(|| SimError::Protocol("decision does not cover the separator".into()))?;
    result.value = Some(best);
    for (c, axes) in child_axes {
        let own = |l: Label| (l == Label::Var(x)).then_some(Symbol::Value(best as u32));
        let values = child_decision(&axes, own, &inherited)?;
        node.send(c, Msg::Decision { epoch: 0, values });
    }
    Ok(result)
}
