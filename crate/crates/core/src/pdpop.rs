//! P-DPOP: DPOP where every variable hides its name and values behind
//! codenames, cost tables are obfuscated with random offsets, and back-edge
//! roots mask the contributions of their pseudo-children with random keys.
//!
//! The `Plus` variant issues a fresh codename package to each child and
//! pseudo-child; the `Minus` variant shares one package among them.

use std::collections::BTreeMap;

use num_bigint::{BigUint, RandBigInt};
use num_traits::Zero;
use rand::seq::SliceRandom;
use rand::Rng;

use crate::dpop::{child_decision, local_cost_table, VarResult};
use crate::kernel::{initial_tree, TreeSource, TreeView};
use crate::model::{Constraint, VarId};
use crate::sim::{CodeRecord, Node, SimError};
use crate::table::{Axis, Label, Symbol, Table};
use crate::wire::{CodePackage, FeasTable, Msg};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Variant {
    Minus,
    Plus,
}

#[derive(Clone, Copy, Debug)]
pub struct PdpopConfig {
    pub variant: Variant,
    /// Bit length of obfuscation offsets and keys.
    pub b_bits: u64,
    /// Add a random offset to infeasible entries of every local table.
    pub obfuscate: bool,
}

impl Default for PdpopConfig {
    fn default() -> Self {
        PdpopConfig { variant: Variant::Plus, b_bits: 128, obfuscate: true }
    }
}

/// Codename packages known to one variable for one tree.
#[derive(Clone, Debug, Default)]
pub struct CodeState {
    /// Packages received from the parent and pseudo-parents.
    pub received: BTreeMap<VarId, CodePackage>,
    /// Packages issued to each child and pseudo-child.
    pub sent: BTreeMap<VarId, CodePackage>,
}

impl CodeState {
    /// Symbol of value `v` of this variable under the package with `var_code`.
    pub fn own_symbol(&self, var_code: u128, v: usize) -> Option<Symbol> {
        self.sent.values().find(|p| p.var_code == var_code).map(|p| Symbol::Code(p.domain_codes[v]))
    }

    fn distinct_sent(&self) -> Vec<&CodePackage> {
        let mut out: Vec<&CodePackage> = Vec::new();
        for p in self.sent.values() {
            if !out.iter().any(|q| q.var_code == p.var_code) {
                out.push(p);
            }
        }
        out
    }
}

fn fresh_package(node: &Node, domain_size: usize) -> CodePackage {
    let mut rng = node.rng();
    let var_code: u128 = rng.gen();
    let mut domain_codes: Vec<u128> = Vec::with_capacity(domain_size);
    while domain_codes.len() < domain_size {
        let c: u128 = rng.gen();
        if !domain_codes.contains(&c) {
            domain_codes.push(c);
        }
    }
    let mut perm: Vec<u32> = (0..domain_size as u32).collect();
    perm.shuffle(&mut *rng);
    CodePackage { var_code, domain_codes, perm }
}

/// Waits for packages from the parent and pseudo-parents, then issues
/// packages to the children and pseudo-children.
pub async fn exchange_codes(node: &Node, epoch: u32, view: &TreeView, variant: Variant) -> Result<CodeState, SimError> {
    let mut state = CodeState::default();
    for y in view.ancestors_linked() {
        let (_, m) = node.recv(move |f, m| f == y && matches!(m, Msg::Codes { epoch: e, .. } if *e == epoch)).await?;
        let Msg::Codes { codes, .. } = m else { unreachable!() };
        if codes.domain_codes.len() != node.local().domain_size_of(y) {
            return Err(SimError::Protocol("codename package has the wrong domain size".into()));
        }
        state.received.insert(y, codes);
    }
    let d = node.local().domain_size;
    let shared = (variant == Variant::Minus).then(|| fresh_package(node, d));
    for z in view.descendants_linked() {
        let pkg = shared.clone().unwrap_or_else(|| fresh_package(node, d));
        node.record_codes(CodeRecord {
            issuer: node.var(),
            recipient: z,
            var_code: pkg.var_code,
            domain_codes: pkg.domain_codes.clone(),
        });
        node.send(z, Msg::Codes { epoch, codes: pkg.clone() });
        state.sent.insert(z, pkg);
    }
    Ok(state)
}

/// Keys exchanged along back edges.
#[derive(Clone, Debug, Default)]
pub struct KeyState {
    /// From each pseudo-parent, indexed by that pseudo-parent's values.
    pub received: BTreeMap<VarId, Vec<BigUint>>,
    /// To each pseudo-child, indexed by this variable's values.
    pub sent: BTreeMap<VarId, Vec<BigUint>>,
}

pub fn random_bits(node: &Node, bits: u64) -> BigUint {
    let mut r = node.rng().gen_biguint(bits);
    r.set_bit(bits - 1, true);
    r
}

pub async fn exchange_keys(node: &Node, epoch: u32, view: &TreeView, b_bits: u64) -> Result<KeyState, SimError> {
    let mut state = KeyState::default();
    for y in view.pseudo_parents.clone() {
        let (_, m) = node.recv(move |f, m| f == y && matches!(m, Msg::Key { epoch: e, .. } if *e == epoch)).await?;
        let Msg::Key { key, .. } = m else { unreachable!() };
        state.received.insert(y, key);
    }
    let d = node.local().domain_size;
    for z in view.pseudo_children.clone() {
        let key: Vec<BigUint> = (0..d).map(|_| random_bits(node, b_bits)).collect();
        node.send(z, Msg::Key { epoch, key: key.clone() });
        state.sent.insert(z, key);
    }
    Ok(state)
}

/// Replaces the cleartext labels of the parent and pseudo-parents by the
/// codenames they issued, reordering each coded axis by its permutation.
pub fn apply_codes<T: Clone>(mut t: Table<T>, codes: &CodeState) -> Result<Table<T>, SimError> {
    for (y, pkg) in &codes.received {
        if t.position(Label::Var(*y)).is_none() {
            continue;
        }
        let perm: Vec<usize> = pkg.perm.iter().map(|p| *p as usize).collect();
        let symbols = perm.iter().map(|i| Symbol::Code(pkg.domain_codes[*i])).collect();
        t = t.permute_axis(Label::Var(*y), Label::Code(pkg.var_code), &perm, symbols)?;
    }
    Ok(t)
}

/// Maps this variable's own codenames in a received table back to its
/// cleartext label and values.
pub fn resolve_own<T: Clone>(
    mut t: Table<T>,
    x: VarId,
    domain: usize,
    codes: &CodeState,
) -> Result<Table<T>, SimError> {
    let target = Axis::var(x, domain);
    for pkg in codes.distinct_sent() {
        let l = Label::Code(pkg.var_code);
        if t.position(l).is_none() {
            continue;
        }
        t = t.resolve_axis(l, Label::Var(x), &target.symbols, |s| match s {
            Symbol::Code(c) => pkg.domain_codes.iter().position(|d| *d == c),
            Symbol::Value(_) => None,
        })?;
    }
    Ok(t)
}

/// Adds an axis with constant entries if the table lacks it.
pub fn ensure_axis<T: Clone>(t: Table<T>, axis: &Axis) -> Result<Table<T>, SimError> {
    if t.position(axis.label).is_some() {
        return Ok(t);
    }
    let unit = Table::from_fn(vec![axis.clone()], |_| ());
    Ok(t.join(&unit, |a, _| a.clone())?)
}

/// Axis of the coded label a pseudo-parent issued, as carried in tables.
pub fn coded_axis(pkg: &CodePackage) -> Axis {
    Axis {
        label: Label::Code(pkg.var_code),
        symbols: pkg.perm.iter().map(|i| Symbol::Code(pkg.domain_codes[*i as usize])).collect(),
    }
}

/// Outcome of one bottom-up propagation at one variable.
pub struct Propagation {
    pub codes: CodeState,
    /// Projected table sent to the parent, or the root's table over nothing.
    pub projected: Table<BigUint>,
    /// Best response for each assignment of the separator.
    pub argmin: Option<Table<usize>>,
    /// Separator axes of each child's message, as received.
    pub child_axes: Vec<(VarId, Vec<Axis>)>,
    /// Root only: minimum entry, zero iff the component is feasible.
    pub root_min: Option<BigUint>,
}

/// Codenames, keys and the obfuscated bottom-up FEAS phase for one tree.
pub async fn propagate(
    node: &Node,
    epoch: u32,
    view: &TreeView,
    cfg: &PdpopConfig,
    extra: &[Constraint],
    keep_argmin: bool,
) -> Result<Propagation, SimError> {
    let x = node.var();
    let d = node.local().domain_size;
    let codes = exchange_codes(node, epoch, view, cfg.variant).await?;
    let keys = exchange_keys(node, epoch, view, cfg.b_bits).await?;

    let local = apply_codes(local_cost_table(node, view, extra)?, &codes)?;
    let r = if cfg.obfuscate { random_bits(node, cfg.b_bits) } else { BigUint::zero() };
    let mut table = local.map(|c| if *c > 0 { BigUint::from(*c) + &r } else { BigUint::zero() });

    let mut child_axes = Vec::new();
    for c in view.children.clone() {
        let (_, m) = node.recv(move |f, m| f == c && matches!(m, Msg::Feas { epoch: e, .. } if *e == epoch)).await?;
        let Msg::Feas { table: FeasTable::Obfuscated(t), .. } = m else {
            return Err(SimError::Protocol("expected an obfuscated cost table".into()));
        };
        child_axes.push((c, t.axes().to_vec()));
        let t = resolve_own(t, x, d, &codes)?;
        table = table.join(&t, |a, b| a + b)?;
        node.charge_checks(table.len() as u64);
    }

    for (z, key) in &keys.sent {
        let p = table.position(Label::Var(x)).expect("own axis is always present");
        let mut bad = false;
        table.for_each_indexed(|coords, e| {
            let k = &key[coords[p]];
            if *e >= *k {
                *e -= k;
            } else {
                bad = true;
            }
        });
        if bad {
            return Err(SimError::Protocol(format!("key of pseudo-child {z} missing from the table")));
        }
    }

    let (projected, argmin) = table.project_min(Label::Var(x))?;
    node.charge_checks(table.len() as u64);
    node.record_max("max_separator", projected.axes().len() as u64);
    let argmin = keep_argmin.then_some(argmin);

    let Some(parent) = view.parent else {
        let root_min = projected.entries()[0].clone();
        return Ok(Propagation { codes, projected, argmin, child_axes, root_min: Some(root_min) });
    };
    let mut out = projected;
    for (y, key) in &keys.received {
        let pkg = &codes.received[y];
        let axis = coded_axis(pkg);
        out = ensure_axis(out, &axis)?;
        let p = out.position(axis.label).expect("just ensured");
        let syms = &out.axes()[p].symbols.clone();
        out.for_each_indexed(|coords, e| {
            let Symbol::Code(c) = syms[coords[p]] else { unreachable!() };
            let v = pkg.domain_codes.iter().position(|d| *d == c).expect("own package");
            *e += &key[v];
        });
    }
    node.send(parent, Msg::Feas { epoch, table: FeasTable::Obfuscated(out.clone()) });
    Ok(Propagation { codes, projected: out, argmin, child_axes, root_min: None })
}

/// Top-down decisions with coded labels and values.
pub async fn decide(node: &Node, epoch: u32, view: &TreeView, prop: &Propagation) -> Result<usize, SimError> {
    let inherited: BTreeMap<Label, Symbol> = match view.parent {
        Some(p) => {
            let (_, m) =
                node.recv(move |f, m| f == p && matches!(m, Msg::Decision { epoch: e, .. } if *e == epoch)).await?;
            let Msg::Decision { values, .. } = m else { unreachable!() };
            values.into_iter().collect()
        }
        None => BTreeMap::new(),
    };
    let arg = prop.argmin.as_ref().expect("decisions need the best responses");
    let at: Vec<(Label, Symbol)> = inherited.iter().map(|(l, s)| (*l, *s)).collect();
    let best = *arg.lookup(&at).ok_or_else(|| SimError::Protocol("decision does not cover the separator".into()))?;
    for (c, axes) in &prop.child_axes {
        let own = |l: Label| match l {
            Label::Code(vc) => prop.codes.own_symbol(vc, best),
            Label::Var(_) => None,
        };
        let values = child_decision(axes, own, &inherited)?;
        node.send(*c, Msg::Decision { epoch, values });
    }
    Ok(best)
}

pub async fn run_node(node: Node, tree: TreeSource, cfg: PdpopConfig) -> Result<VarResult, SimError> {
    let view = initial_tree(&node, &tree).await?;
    let prop = propagate(&node, 0, &view, &cfg, &[], true).await?;
    let best = decide(&node, 0, &view, &prop).await?;
    let root_feasible = prop.root_min.as_ref().map(Zero::is_zero);
    Ok(VarResult { value: Some(best), root_cost: None, root_feasible })
}
