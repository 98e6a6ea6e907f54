//! P²-DPOP: like P^{3/2}-DPOP, but each iteration propagates ElGamal-encrypted
//! booleans along the linear preorder of the new pseudo-tree, from the last
//! variable back to the root. Nobody but the root ever decrypts, and the root
//! only learns a feasible value for itself, found by dichotomy.
//!
//! The propagation is written against [`BoolAlgebra`] so that the same code
//! also runs on cleartext booleans, which lets tests compare every message
//! against plain dynamic programming.

use num_bigint::BigUint;

use crate::crypto::Cyphertext;
use crate::dpop::{constraint_axes, local_constraints, VarResult};
use crate::kernel::{initial_tree, to_previous, TreeSource, TreeView};
use crate::model::Constraint;
use crate::p32::{self, P32Config, Propagator, Ring};
use crate::pdpop::{apply_codes, exchange_codes, resolve_own, Variant};
use crate::sim::{Node, SimError};
use crate::table::{Axis, Label, Table};
use crate::wire::{FeasTable, Msg};

/// Boolean operations available on feasibility entries: AND only with a
/// cleartext bit, OR between two entries.
#[allow(async_fn_in_trait)]
pub trait BoolAlgebra {
    type Entry: Clone;

    fn encrypt(&self, node: &Node, b: bool) -> Self::Entry;
    fn and_clear(&self, node: &Node, c: &Self::Entry, b: bool) -> Self::Entry;
    fn or(&self, node: &Node, a: &Self::Entry, b: &Self::Entry) -> Self::Entry;
    fn rerandomize(&self, node: &Node, c: &Self::Entry) -> Self::Entry;
    fn wrap(t: Table<Self::Entry>) -> FeasTable;
    fn unwrap(t: FeasTable) -> Option<Table<Self::Entry>>;
    async fn decrypt(&self, node: &Node, c: &Self::Entry) -> Result<bool, SimError>;
}

/// Entries encrypted under the compound key of a [`Ring`].
pub struct Encrypted<'a>(pub &'a Ring);

impl BoolAlgebra for Encrypted<'_> {
    type Entry = Cyphertext;

    fn encrypt(&self, node: &Node, b: bool) -> Cyphertext {
        node.count("feas_encryptions", 1);
        self.0.encrypt_element(node, &self.0.group.encode_bool(b))
    }

    fn and_clear(&self, node: &Node, c: &Cyphertext, b: bool) -> Cyphertext {
        if b {
            self.rerandomize(node, c)
        } else {
            self.encrypt(node, false)
        }
    }

    fn or(&self, _node: &Node, a: &Cyphertext, b: &Cyphertext) -> Cyphertext {
        self.0.group.or(a, b)
    }

    fn rerandomize(&self, node: &Node, c: &Cyphertext) -> Cyphertext {
        node.count("feas_encryptions", 1);
        self.0.rerandomize(node, c)
    }

    fn wrap(t: Table<Cyphertext>) -> FeasTable {
        FeasTable::Encrypted(t)
    }

    fn unwrap(t: FeasTable) -> Option<Table<Cyphertext>> {
        match t {
            FeasTable::Encrypted(t) => Some(t),
            _ => None,
        }
    }

    async fn decrypt(&self, node: &Node, c: &Cyphertext) -> Result<bool, SimError> {
        let m: BigUint = p32::decrypt(node, self.0, c).await?;
        Ok(self.0.group.decode_bool(&m))
    }
}

/// Cleartext booleans; not private, used to reproduce worked examples.
pub struct Cleartext;

impl BoolAlgebra for Cleartext {
    type Entry = bool;

    fn encrypt(&self, _node: &Node, b: bool) -> bool {
        b
    }

    fn and_clear(&self, _node: &Node, c: &bool, b: bool) -> bool {
        *c && b
    }

    fn or(&self, _node: &Node, a: &bool, b: &bool) -> bool {
        *a || *b
    }

    fn rerandomize(&self, _node: &Node, c: &bool) -> bool {
        *c
    }

    fn wrap(t: Table<bool>) -> FeasTable {
        FeasTable::Shadow(t)
    }

    fn unwrap(t: FeasTable) -> Option<Table<bool>> {
        match t {
            FeasTable::Shadow(t) => Some(t),
            _ => None,
        }
    }

    async fn decrypt(&self, _node: &Node, c: &bool) -> Result<bool, SimError> {
        Ok(*c)
    }
}

/// Conjunction of the local constraints and `extra`, over this variable and
/// the other variables in their scopes.
pub fn local_bool_table(node: &Node, view: &TreeView, extra: &[Constraint]) -> Result<Table<bool>, SimError> {
    let local = node.local();
    let mut t = Table::from_fn(vec![Axis::var(local.var, local.domain_size)], |_| true);
    for c in local_constraints(local, view).chain(extra) {
        let ct = Table::from_fn(constraint_axes(c), |vals| c.allows(vals));
        t = t.join(&ct, |a, b| *a && *b)?;
        node.charge_checks(t.len() as u64);
    }
    Ok(t)
}

/// Finds a value whose entry is true by halving the domain: the first half
/// holds the first `ceil(|D| / 2)` values.
pub async fn feasible_value<A: BoolAlgebra>(
    node: &Node,
    alg: &A,
    entries: &[A::Entry],
) -> Result<Option<usize>, SimError> {
    let (mut lo, mut hi) = (0, entries.len());
    if hi == 0 {
        return Ok(None);
    }
    loop {
        if hi - lo == 1 {
            node.count("dichotomy_decryptions", 1);
            let ok = alg.decrypt(node, &entries[lo]).await?;
            return Ok(ok.then_some(lo));
        }
        let mid = lo + (hi - lo).div_ceil(2);
        let mut acc = entries[lo].clone();
        for e in &entries[lo + 1..mid] {
            acc = alg.or(node, &acc, e);
        }
        node.count("dichotomy_decryptions", 1);
        if alg.decrypt(node, &acc).await? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
}

/// One propagation along the linear order of the tree built in `epoch`.
/// Returns `Some(value or None if infeasible)` at the root, `None` elsewhere.
pub async fn linear_pass<A: BoolAlgebra>(
    node: &Node,
    epoch: u32,
    view: &TreeView,
    variant: Variant,
    alg: &A,
    extra: &[Constraint],
) -> Result<Option<Option<usize>>, SimError> {
    let x = node.var();
    let d = node.local().domain_size;
    let codes = exchange_codes(node, epoch, view, variant).await?;
    if view.is_root() {
        to_previous(node, epoch, Msg::Init { epoch });
    }
    let local = apply_codes(local_bool_table(node, view, extra)?, &codes)?;
    let (_, m) =
        node.recv(move |_, m| matches!(m, Msg::Init { epoch: e } | Msg::Feas { epoch: e, .. } if *e == epoch)).await?;
    let table: Table<A::Entry> = match m {
        Msg::Feas { table, .. } => {
            let t = A::unwrap(table).ok_or_else(|| SimError::Protocol("unexpected feasibility table type".into()))?;
            let t = resolve_own(t, x, d, &codes)?;
            let joined = t.join(&local, |c, b| alg.and_clear(node, c, *b))?;
            node.charge_checks(joined.len() as u64);
            joined
        }
        _ if view.is_root() => local.map(|b| alg.encrypt(node, *b)),
        _ => {
            // last variable: project in the clear, then encrypt
            let projected = local.fold_axis(Label::Var(x), |bs| bs.iter().any(|b| **b))?;
            node.record_max("max_separator", projected.axes().len() as u64);
            let out = projected.map(|b| alg.encrypt(node, *b));
            to_previous(node, epoch, Msg::Feas { epoch, table: A::wrap(out) });
            return Ok(None);
        }
    };
    if view.is_root() {
        if table.axes().len() != 1 || table.position(Label::Var(x)) != Some(0) {
            return Err(SimError::Protocol("root table is not over the root variable alone".into()));
        }
        return Ok(Some(feasible_value(node, alg, table.entries()).await?));
    }
    let projected = table.fold_axis(Label::Var(x), |cs| {
        let mut acc = cs[0].clone();
        for c in &cs[1..] {
            acc = alg.or(node, &acc, c);
        }
        alg.rerandomize(node, &acc)
    })?;
    node.record_max("max_separator", projected.axes().len() as u64);
    to_previous(node, epoch, Msg::Feas { epoch, table: A::wrap(projected) });
    Ok(None)
}

pub async fn run_node(node: Node, tree: TreeSource, cfg: P32Config) -> Result<VarResult, SimError> {
    let prop = Propagator::Linear(cfg.pdpop.variant);
    p32::iterate(node, tree, cfg, prop).await
}

/// A single cleartext pass on the first tree, without keys or rerooting.
/// Only the root reports a value.
pub async fn run_shadow_pass(node: Node, tree: TreeSource, variant: Variant) -> Result<VarResult, SimError> {
    let view = initial_tree(&node, &tree).await?;
    let found = linear_pass(&node, 0, &view, variant, &Cleartext, &[]).await?;
    Ok(match found {
        Some(v) => VarResult { value: v, root_cost: None, root_feasible: Some(v.is_some()) },
        None => VarResult { value: None, root_cost: None, root_feasible: None },
    })
}
