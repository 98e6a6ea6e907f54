//! P^{3/2}-DPOP: the obfuscated bottom-up propagation of P-DPOP, repeated with
//! every variable as root in turn, and no decision messages at all.
//!
//! Setup runs once on the first pseudo-tree: preorder IDs, a compound ElGamal
//! key whose shares circulate around the ring of previous-variable links, and
//! one encrypted root vector per variable shuffled in four rounds. Each
//! iteration then pops entries of the vector until one decrypts to something
//! other than `-1`; whoever reads `0` becomes root of a fresh pseudo-tree,
//! propagates, and grounds its variable with a private unary constraint.

use std::cell::RefCell;
use std::collections::HashSet;
use std::rc::Rc;

use num_bigint::BigUint;
use rand::seq::SliceRandom;

use crate::crypto::{random_u128, CompoundPublicKey, Cyphertext, GroupParams};
use crate::dpop::VarResult;
use crate::kernel::{assign_ids, build_tree, initial_tree, to_previous, ChildOrder, IdInfo, TreeSource, TreeView};
use crate::model::Constraint;
use crate::p2;
use crate::pdpop::{self, PdpopConfig, Variant};
use crate::sim::{Handled, Node, Service, SimError};
use crate::wire::Msg;

/// Ring links are always those of the first pseudo-tree.
const RING: u32 = 0;

#[derive(Clone, Debug)]
pub struct P32Config {
    pub pdpop: PdpopConfig,
    pub group: GroupParams,
    pub incr_min: u64,
    /// Child order for the pseudo-trees rebuilt at each iteration.
    pub child_order: ChildOrder,
    /// Apply a random secret permutation in round 3; off only in tests.
    pub shuffle: bool,
    /// Record private key material and the shuffled vectors as probes.
    pub probes: bool,
}

impl Default for P32Config {
    fn default() -> Self {
        P32Config {
            pdpop: PdpopConfig::default(),
            group: GroupParams::default512(),
            incr_min: 1,
            child_order: ChildOrder::Random,
            shuffle: true,
            probes: false,
        }
    }
}

/// What each iteration's propagation looks like.
#[derive(Clone, Copy, Debug)]
pub(crate) enum Propagator {
    Tree(PdpopConfig),
    Linear(Variant),
}

/// Per-variable cryptographic state shared by the iteration loop and the
/// services.
pub struct Ring {
    pub ids: IdInfo,
    pub key: CompoundPublicKey,
    pub group: Rc<GroupParams>,
    secret: BigUint,
    tickets: Rc<RefCell<HashSet<u128>>>,
}

impl Ring {
    /// Encrypts with the compound key and counts one encryption.
    pub fn encrypt_element(&self, node: &Node, m: &BigUint) -> Cyphertext {
        let r = self.group.random_exponent(&mut *node.rng());
        node.charge_exponentiations(2);
        self.group.encrypt_element(&self.key, m, &r)
    }

    pub fn rerandomize(&self, node: &Node, c: &Cyphertext) -> Cyphertext {
        node.charge_exponentiations(2);
        self.group.rerandomize_random(&self.key, c, &mut *node.rng())
    }
}

struct Decryptor {
    tickets: Rc<RefCell<HashSet<u128>>>,
    secret: BigUint,
    group: Rc<GroupParams>,
}

impl Service for Decryptor {
    fn handle(&mut self, node: &Node, from: crate::model::VarId, msg: Msg) -> Handled {
        match msg {
            Msg::Decr { epoch, ticket, c } if !self.tickets.borrow().contains(&ticket) => {
                let c = self.group.strip_share(&c, &self.secret);
                node.count("partial_decryptions", 1);
                node.charge_exponentiations(1);
                to_previous(node, epoch, Msg::Decr { epoch, ticket, c });
                Handled::Consumed
            }
            m => Handled::Pass(from, m),
        }
    }
}

/// Marks the variable aborted and passes the notice down the tree it names.
struct AbortRelay;

impl Service for AbortRelay {
    fn handle(&mut self, node: &Node, from: crate::model::VarId, msg: Msg) -> Handled {
        match msg {
            Msg::Abort { epoch } => {
                node.set_aborted();
                if let Some(view) = node.view(epoch) {
                    for c in view.children {
                        node.send(c, Msg::Abort { epoch });
                    }
                }
                Handled::Consumed
            }
            m => Handled::Pass(from, m),
        }
    }
}

struct Shuffler {
    my_code: u128,
    ids: IdInfo,
    perm: Vec<usize>,
    is_ring_root: bool,
    ring: Rc<RingCrypto>,
}

/// The parts of [`Ring`] the shuffling service needs.
struct RingCrypto {
    key: CompoundPublicKey,
    group: Rc<GroupParams>,
}

impl Service for Shuffler {
    fn handle(&mut self, node: &Node, from: crate::model::VarId, msg: Msg) -> Handled {
        let Msg::Vect { owner, mut round, entries } = msg else {
            return Handled::Pass(from, msg);
        };
        let mine = owner == self.my_code;
        let mut reserved = false;
        if round == 1 {
            if mine {
                round = 2;
            } else {
                reserved = true;
            }
        }
        if round > 1 && self.is_ring_root {
            round += 1;
        }
        let entries = if round == 3 { self.perm.iter().map(|i| entries[*i].clone()).collect() } else { entries };
        if round == 4 && mine {
            return Handled::Pass(from, Msg::Vect { owner, round, entries });
        }
        let g = &self.ring.group;
        let key = &self.ring.key;
        let minus_one = g.encode_tri(-1);
        let mut rng = node.rng();
        let entries: Vec<Cyphertext> = entries
            .iter()
            .enumerate()
            .map(|(j, c)| {
                let j = j as u64;
                if reserved && j > self.ids.id && j <= self.ids.id_plus {
                    let r = g.random_exponent(&mut *rng);
                    g.encrypt_element(key, &minus_one, &r)
                } else {
                    g.rerandomize_random(key, c, &mut *rng)
                }
            })
            .collect();
        drop(rng);
        node.count("shuffle_encryptions", entries.len() as u64);
        node.charge_exponentiations(2 * entries.len() as u64);
        to_previous(node, RING, Msg::Vect { owner, round, entries });
        Handled::Consumed
    }
}

/// Builds the first tree, assigns IDs, and establishes the compound key.
/// Installs the decryption and abort services.
pub async fn setup(
    node: &Node,
    tree: &TreeSource,
    group: &GroupParams,
    incr_min: u64,
    probes: bool,
) -> Result<(TreeView, Ring), SimError> {
    let view = initial_tree(node, tree).await?;
    let ids = assign_ids(node, &view, incr_min).await?;
    let group = Rc::new(group.clone());
    let secret = group.random_exponent(&mut *node.rng());
    let shares = group.split_private(&secret, ids.width() as usize, &mut *node.rng());
    node.charge_exponentiations(shares.len() as u64);
    let own: Vec<BigUint> = shares.iter().map(|s| s.y.clone()).collect();
    for y in &own {
        to_previous(node, RING, Msg::Share { y: y.clone() });
    }
    let mut received = Vec::with_capacity(ids.n_plus as usize);
    while (received.len() as u64) < ids.n_plus {
        let (_, m) = node.recv(|_, m| matches!(m, Msg::Share { .. })).await?;
        let Msg::Share { y } = m else { unreachable!() };
        if !own.contains(&y) {
            to_previous(node, RING, Msg::Share { y: y.clone() });
        }
        received.push(y);
    }
    let key = group.compound_key(received.iter());
    if probes {
        node.probe("ids", serde_json::json!({ "id": ids.id, "id_plus": ids.id_plus, "n_plus": ids.n_plus }));
        node.probe("secret", serde_json::Value::String(secret.to_str_radix(16)));
        node.probe("compound_key", serde_json::Value::String(key.y.to_str_radix(16)));
    }
    let tickets = Rc::new(RefCell::new(HashSet::new()));
    node.install_service(Rc::new(RefCell::new(Decryptor {
        tickets: tickets.clone(),
        secret: secret.clone(),
        group: group.clone(),
    })));
    node.install_service(Rc::new(RefCell::new(AbortRelay)));
    Ok((view, Ring { ids, key, group, secret, tickets }))
}

/// Collaborative decryption: the cyphertext goes once around the ring, each
/// other variable stripping its share, and this variable strips its own last.
/// Returns the plaintext group element.
pub async fn decrypt(node: &Node, ring: &Ring, c: &Cyphertext) -> Result<BigUint, SimError> {
    let ticket = random_u128(&mut *node.rng());
    ring.tickets.borrow_mut().insert(ticket);
    to_previous(node, RING, Msg::Decr { epoch: RING, ticket, c: c.clone() });
    let (_, m) = node.recv(move |_, m| matches!(m, Msg::Decr { ticket: t, .. } if *t == ticket)).await?;
    ring.tickets.borrow_mut().remove(&ticket);
    let Msg::Decr { c, .. } = m else { unreachable!() };
    node.count("partial_decryptions", 1);
    node.charge_exponentiations(1);
    Ok(ring.group.strip_share(&c, &ring.secret).alpha)
}

/// Encrypts this variable's root vector, runs the four shuffle rounds and
/// returns the vector once it is back. Keeps serving other vectors afterwards.
pub async fn shuffle(node: &Node, view: &TreeView, ring: &Ring, permute: bool) -> Result<Vec<Cyphertext>, SimError> {
    let n_plus = ring.ids.n_plus as usize;
    let mut perm: Vec<usize> = (0..n_plus).collect();
    if permute {
        perm.shuffle(&mut *node.rng());
    }
    let my_code = random_u128(&mut *node.rng());
    let crypto = Rc::new(RingCrypto { key: ring.key.clone(), group: ring.group.clone() });
    let svc =
        Rc::new(RefCell::new(Shuffler { my_code, ids: ring.ids, perm, is_ring_root: view.is_root(), ring: crypto }));
    node.install_service(svc.clone());
    for (from, m) in node.take_matching(|_, m| matches!(m, Msg::Vect { .. })) {
        if let Handled::Pass(f, m) = svc.borrow_mut().handle(node, from, m) {
            node.requeue(f, m);
        }
    }

    let id = ring.ids.id as usize;
    let plain: Vec<i8> = (0..n_plus)
        .map(|j| {
            if j == id {
                0
            } else if j > id && j as u64 <= ring.ids.id_plus {
                -1
            } else {
                1
            }
        })
        .collect();
    let entries: Vec<Cyphertext> =
        plain.iter().map(|v| ring.encrypt_element(node, &ring.group.encode_tri(*v))).collect();
    node.count("shuffle_encryptions", entries.len() as u64);
    to_previous(node, RING, Msg::Vect { owner: my_code, round: 1, entries });
    let (_, m) = node.recv(move |_, m| matches!(m, Msg::Vect { owner, round: 4, .. } if *owner == my_code)).await?;
    let Msg::Vect { entries, .. } = m else { unreachable!() };
    Ok(entries)
}

/// Pops and decrypts entries until one is not `-1`. `None` once the vector
/// is used up.
pub async fn reroot(node: &Node, ring: &Ring, vector: &mut Vec<Cyphertext>) -> Result<Option<bool>, SimError> {
    while let Some(c) = vector.pop() {
        let m = decrypt(node, ring, &c).await?;
        let v = ring.group.decode_tri(&m).map_err(|e| SimError::Protocol(format!("root vector entry: {e}")))?;
        if v != -1 {
            return Ok(Some(v == 0));
        }
    }
    Ok(None)
}

pub(crate) async fn iterate(
    node: Node,
    tree: TreeSource,
    cfg: P32Config,
    prop: Propagator,
) -> Result<VarResult, SimError> {
    let infeasible = VarResult { value: None, root_cost: None, root_feasible: Some(false) };
    let (view0, ring) = setup(&node, &tree, &cfg.group, cfg.incr_min, cfg.probes).await?;
    let mut vector = shuffle(&node, &view0, &ring, cfg.shuffle).await?;
    if cfg.probes {
        node.probe("shuffled", serde_json::to_value(&vector).expect("serializable"));
    }
    let x = node.var();
    let d = node.local().domain_size;
    let mut extra: Vec<Constraint> = Vec::new();
    let mut value = None;
    let mut epoch = 0;
    loop {
        let is_root = match reroot(&node, &ring, &mut vector).await {
            Ok(Some(r)) => r,
            Ok(None) => break,
            Err(SimError::Aborted) => return Ok(infeasible),
            Err(e) => return Err(e),
        };
        epoch += 1;
        let step = async {
            let view = build_tree(&node, epoch, is_root, &cfg.child_order).await?;
            let found = match prop {
                Propagator::Tree(pc) => {
                    let p = pdpop::propagate(&node, epoch, &view, &pc, &extra, is_root).await?;
                    match (p.root_min, p.argmin) {
                        (Some(min), Some(arg)) => Some(num_traits::Zero::is_zero(&min).then(|| arg.entries()[0])),
                        _ => None,
                    }
                }
                Propagator::Linear(variant) => {
                    p2::linear_pass(&node, epoch, &view, variant, &p2::Encrypted(&ring), &extra).await?
                }
            };
            Ok::<_, SimError>((view, found))
        };
        let (view, found) = match step.await {
            Ok(s) => s,
            Err(SimError::Aborted) => return Ok(infeasible),
            Err(e) => return Err(e),
        };
        if is_root {
            node.count("iterations", 1);
            if cfg.probes {
                node.probe("root", serde_json::json!(epoch));
            }
            match found.flatten() {
                Some(v) => {
                    value = Some(v);
                    extra.push(Constraint::unary_equal(x, d, v));
                }
                None => {
                    for c in &view.children {
                        node.send(*c, Msg::Abort { epoch });
                    }
                    return Ok(infeasible);
                }
            }
        }
    }
    Ok(VarResult { value, root_cost: None, root_feasible: Some(true) })
}

pub async fn run_node(node: Node, tree: TreeSource, cfg: P32Config) -> Result<VarResult, SimError> {
    let prop = Propagator::Tree(cfg.pdpop);
    iterate(node, tree, cfg, prop).await
}
