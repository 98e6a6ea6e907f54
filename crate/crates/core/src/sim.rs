//! Deterministic discrete-event runtime. Every variable runs as an async task
//! with its own mailbox; sends are delivered one tick later, in the order
//! `(tick, receiver, sender, sequence)`, and only along constraint-graph edges.
//!
//! Per-variable services see every incoming message before the mailbox and
//! either consume it or pass it on. They implement the event-driven parts of
//! the protocols (routing, collaborative decryption, vector shuffling).

use std::cell::{RefCell, RefMut};
use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap, VecDeque};
use std::future::Future;
use std::pin::Pin;
use std::rc::Rc;
use std::task::{Context, Poll, Waker};
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::Serialize;
use thiserror::Error;

use crate::kernel::TreeView;
use crate::model::{AgentId, Constraint, Problem, VarId};
use crate::table::TableError;
use crate::wire::{Mention, Msg, MsgKind};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SimError {
    #[error("deadlock: no messages in flight while {waiting:?} are still running")]
    Deadlock { waiting: Vec<VarId> },
    #[error("{from} tried to send to non-neighbour {to}")]
    NonNeighborSend { from: VarId, to: VarId },
    #[error("delivery limit of {0} exceeded")]
    StepLimit(u64),
    #[error("wall-clock timeout")]
    Timeout,
    #[error("run aborted")]
    Aborted,
    #[error("protocol error: {0}")]
    Protocol(String),
    #[error(transparent)]
    Table(#[from] TableError),
}

/// Simulated compute costs, in abstract units.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct CostModel {
    pub constraint_check: u64,
    pub exponentiation: u64,
}

impl Default for CostModel {
    fn default() -> Self {
        CostModel { constraint_check: 1, exponentiation: 1000 }
    }
}

#[derive(Clone, Debug)]
pub struct SimConfig {
    pub seed: u64,
    pub costs: CostModel,
    /// Keep a JSON snapshot of every payload in the transcript.
    pub record_payloads: bool,
    pub max_deliveries: u64,
    pub timeout: Option<Duration>,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            seed: 0,
            costs: CostModel::default(),
            record_payloads: false,
            max_deliveries: 200_000_000,
            timeout: None,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Record {
    pub seq: u64,
    pub tick: u64,
    pub from: VarId,
    pub to: VarId,
    pub from_agent: AgentId,
    pub to_agent: AgentId,
    pub kind: &'static str,
    pub inner: &'static str,
    pub size: usize,
    pub mentions: Vec<Mention>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub payload: Option<serde_json::Value>,
    /// Index of the event during which the message was sent.
    pub event: usize,
}

/// One activation of a variable: handling one delivery (or the initial start).
#[derive(Clone, Debug, Serialize)]
pub struct Event {
    pub agent: AgentId,
    pub cost: u64,
    /// Transcript record whose delivery triggered the event.
    pub trigger: Option<usize>,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct Transcript {
    pub records: Vec<Record>,
    pub events: Vec<Event>,
}

impl Transcript {
    pub fn to_ndjson(&self) -> String {
        let mut s = String::new();
        for r in &self.records {
            s.push_str(&serde_json::to_string(r).expect("serializable"));
            s.push('\n');
        }
        s
    }

    pub fn count_inner(&self, kind: MsgKind) -> usize {
        self.records.iter().filter(|r| r.inner == kind.as_str()).count()
    }
}

/// Longest chain of compute costs through the causality graph: an event
/// depends on the previous event of the same agent and on the event that sent
/// the message triggering it.
pub fn simulated_time(t: &Transcript) -> u64 {
    let mut finish = vec![0u64; t.events.len()];
    let mut last_of_agent: BTreeMap<AgentId, u64> = BTreeMap::new();
    let mut best = 0;
    for (i, e) in t.events.iter().enumerate() {
        let prev = last_of_agent.get(&e.agent).copied().unwrap_or(0);
        let cause = e.trigger.map(|r| finish[t.records[r].event]).unwrap_or(0);
        finish[i] = prev.max(cause) + e.cost;
        last_of_agent.insert(e.agent, finish[i]);
        best = best.max(finish[i]);
    }
    best
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Metrics {
    pub messages: u64,
    pub info_bytes: u64,
    /// Physical messages by outer kind.
    pub by_kind: BTreeMap<&'static str, u64>,
    /// Protocol-level sends by kind, counting a routed message once.
    pub logical: BTreeMap<&'static str, u64>,
    pub simulated_time: u64,
    pub compute_units: u64,
    pub ticks: u64,
    pub counters: BTreeMap<&'static str, u64>,
}

impl Metrics {
    pub fn counter(&self, name: &str) -> u64 {
        self.counters.get(name).copied().unwrap_or(0)
    }

    pub fn logical_count(&self, kind: MsgKind) -> u64 {
        self.logical.get(kind.as_str()).copied().unwrap_or(0)
    }
}

/// A codename package as issued, kept for the auditor only.
#[derive(Clone, Debug, Serialize)]
pub struct CodeRecord {
    pub issuer: VarId,
    pub recipient: VarId,
    pub var_code: u128,
    pub domain_codes: Vec<u128>,
}

/// What a variable knows locally about the problem.
#[derive(Debug)]
pub struct LocalKnowledge {
    pub var: VarId,
    pub agent: AgentId,
    pub domain_size: usize,
    pub neighbors: Vec<VarId>,
    pub constraints: Vec<Constraint>,
    neighbor_domains: BTreeMap<VarId, usize>,
}

impl LocalKnowledge {
    /// Domain size of this variable or of a neighbour.
    pub fn domain_size_of(&self, v: VarId) -> usize {
        if v == self.var {
            return self.domain_size;
        }
        self.neighbor_domains[&v]
    }
}

pub enum Handled {
    Consumed,
    Pass(VarId, Msg),
}

pub trait Service {
    fn handle(&mut self, node: &Node, from: VarId, msg: Msg) -> Handled;
}

struct Outgoing {
    to: VarId,
    msg: Msg,
}

pub(crate) struct NodeInner {
    mailbox: VecDeque<(VarId, Msg)>,
    outbox: Vec<Outgoing>,
    charge: u64,
    pub(crate) rng: ChaCha20Rng,
    pub(crate) views: BTreeMap<u32, TreeView>,
    pub(crate) pending_routes: Vec<(u32, VarId, Msg)>,
    pub(crate) aborted: bool,
    services: Vec<Rc<RefCell<dyn Service>>>,
}

#[derive(Default)]
struct Shared {
    counters: BTreeMap<&'static str, u64>,
    logical: BTreeMap<&'static str, u64>,
    codebook: Vec<CodeRecord>,
    probes: Vec<Probe>,
}

/// Test-only snapshot of a variable's private state, taken when a solver is
/// asked to expose it.
#[derive(Clone, Debug, Serialize)]
pub struct Probe {
    pub var: VarId,
    pub name: &'static str,
    pub value: serde_json::Value,
}

/// Handle a variable's task uses to talk to the runtime.
#[derive(Clone)]
pub struct Node {
    local: Rc<LocalKnowledge>,
    costs: CostModel,
    inner: Rc<RefCell<NodeInner>>,
    shared: Rc<RefCell<Shared>>,
}

impl Node {
    pub fn var(&self) -> VarId {
        self.local.var
    }

    pub fn agent(&self) -> AgentId {
        self.local.agent
    }

    pub fn local(&self) -> &LocalKnowledge {
        &self.local
    }

    pub fn neighbors(&self) -> &[VarId] {
        &self.local.neighbors
    }

    pub fn costs(&self) -> CostModel {
        self.costs
    }

    pub fn rng(&self) -> RefMut<'_, ChaCha20Rng> {
        RefMut::map(self.inner.borrow_mut(), |i| &mut i.rng)
    }

    pub fn send(&self, to: VarId, msg: Msg) {
        *self.shared.borrow_mut().logical.entry(msg.kind().as_str()).or_default() += 1;
        self.send_raw(to, msg);
    }

    /// Sends without counting a protocol-level message (routing hops).
    pub(crate) fn send_raw(&self, to: VarId, msg: Msg) {
        self.inner.borrow_mut().outbox.push(Outgoing { to, msg });
    }

    pub(crate) fn count_logical(&self, kind: MsgKind) {
        *self.shared.borrow_mut().logical.entry(kind.as_str()).or_default() += 1;
    }

    /// Hands a message to this variable's own services at the next tick.
    pub(crate) fn deliver_local(&self, msg: Msg) {
        let me = self.var();
        self.inner.borrow_mut().outbox.push(Outgoing { to: me, msg });
    }

    pub fn charge(&self, units: u64) {
        self.inner.borrow_mut().charge += units;
    }

    pub fn charge_exponentiations(&self, n: u64) {
        self.charge(n * self.costs.exponentiation);
    }

    pub fn charge_checks(&self, n: u64) {
        self.charge(n * self.costs.constraint_check);
    }

    /// Instrumentation counter, invisible to every protocol participant.
    pub fn count(&self, name: &'static str, n: u64) {
        *self.shared.borrow_mut().counters.entry(name).or_default() += n;
    }

    pub fn record_max(&self, name: &'static str, v: u64) {
        let mut s = self.shared.borrow_mut();
        let e = s.counters.entry(name).or_default();
        *e = (*e).max(v);
    }

    pub fn record_codes(&self, rec: CodeRecord) {
        self.shared.borrow_mut().codebook.push(rec);
    }

    pub fn probe(&self, name: &'static str, value: serde_json::Value) {
        let var = self.var();
        self.shared.borrow_mut().probes.push(Probe { var, name, value });
    }

    pub fn view(&self, epoch: u32) -> Option<TreeView> {
        self.inner.borrow().views.get(&epoch).cloned()
    }

    pub fn install_service(&self, svc: Rc<RefCell<dyn Service>>) {
        self.inner.borrow_mut().services.push(svc);
    }

    pub fn set_aborted(&self) {
        self.inner.borrow_mut().aborted = true;
    }

    pub fn is_aborted(&self) -> bool {
        self.inner.borrow().aborted
    }

    /// Puts a received message back at the front of the mailbox.
    pub fn requeue(&self, from: VarId, msg: Msg) {
        self.inner.borrow_mut().mailbox.push_front((from, msg));
    }

    /// Removes every buffered message accepted by `pred`, in arrival order.
    pub fn take_matching(&self, mut pred: impl FnMut(VarId, &Msg) -> bool) -> Vec<(VarId, Msg)> {
        let mut inner = self.inner.borrow_mut();
        let (take, keep): (VecDeque<_>, VecDeque<_>) =
            std::mem::take(&mut inner.mailbox).into_iter().partition(|(f, m)| pred(*f, m));
        inner.mailbox = keep;
        take.into_iter().collect()
    }

    pub(crate) fn inner_mut(&self) -> RefMut<'_, NodeInner> {
        self.inner.borrow_mut()
    }

    /// Waits for the first buffered message accepted by `pred`. Fails with
    /// [`SimError::Aborted`] once the variable has been told to abort.
    pub fn recv<F>(&self, pred: F) -> Recv<'_, F>
    where
        F: FnMut(VarId, &Msg) -> bool,
    {
        Recv { node: self, pred }
    }
}

pub struct Recv<'a, F> {
    node: &'a Node,
    pred: F,
}

impl<F> Future for Recv<'_, F>
where
    F: FnMut(VarId, &Msg) -> bool + Unpin,
{
    type Output = Result<(VarId, Msg), SimError>;

    fn poll(mut self: Pin<&mut Self>, _cx: &mut Context<'_>) -> Poll<Self::Output> {
        let this = &mut *self;
        let mut inner = this.node.inner.borrow_mut();
        if inner.aborted {
            return Poll::Ready(Err(SimError::Aborted));
        }
        let pred = &mut this.pred;
        match inner.mailbox.iter().position(|(f, m)| pred(*f, m)) {
            Some(i) => Poll::Ready(Ok(inner.mailbox.remove(i).expect("index valid"))),
            None => Poll::Pending,
        }
    }
}

type Task<O> = Pin<Box<dyn Future<Output = Result<O, SimError>>>>;

pub struct SimOutcome<O> {
    pub outputs: Vec<O>,
    pub transcript: Transcript,
    pub metrics: Metrics,
    pub codebook: Vec<CodeRecord>,
    pub probes: Vec<Probe>,
}

#[derive(PartialEq, Eq, PartialOrd, Ord)]
struct Key {
    tick: u64,
    to: VarId,
    from: VarId,
    seq: u64,
}

struct Envelope {
    from: VarId,
    to: VarId,
    msg: Msg,
    stamp: u64,
    record: Option<usize>,
}

/// Runs one task per variable of `problem` until every task has finished and
/// no message is in flight.
pub fn run<O, F, Fut>(problem: &Problem, config: &SimConfig, mut spawn: F) -> Result<SimOutcome<O>, SimError>
where
    F: FnMut(Node) -> Fut,
    Fut: Future<Output = Result<O, SimError>> + 'static,
{
    let started = Instant::now();
    let n = problem.num_vars();
    let shared = Rc::new(RefCell::new(Shared::default()));
    let mut nodes = Vec::with_capacity(n);
    let mut tasks: Vec<Option<Task<O>>> = Vec::with_capacity(n);
    for v in problem.var_ids() {
        let local = LocalKnowledge {
            var: v,
            agent: problem.owner(v),
            domain_size: problem.domain_size(v),
            neighbors: problem.neighbors(v).to_vec(),
            constraints: problem.constraints_of(v).cloned().collect(),
            neighbor_domains: problem.neighbors(v).iter().map(|w| (*w, problem.domain_size(*w))).collect(),
        };
        let mut rng = ChaCha20Rng::seed_from_u64(config.seed);
        rng.set_stream(u64::from(v.0) + 1);
        let node = Node {
            local: Rc::new(local),
            costs: config.costs,
            inner: Rc::new(RefCell::new(NodeInner {
                mailbox: VecDeque::new(),
                outbox: Vec::new(),
                charge: 0,
                rng,
                views: BTreeMap::new(),
                pending_routes: Vec::new(),
                aborted: false,
                services: Vec::new(),
            })),
            shared: shared.clone(),
        };
        node.install_service(Rc::new(RefCell::new(crate::kernel::routing::Router)));
        tasks.push(Some(Box::pin(spawn(node.clone()))));
        nodes.push(node);
    }

    let mut outputs: Vec<Option<O>> = (0..n).map(|_| None).collect();
    let mut transcript = Transcript::default();
    let mut metrics = Metrics::default();
    let mut clocks = vec![0u64; problem.agents().len()];
    let mut queue: BinaryHeap<Reverse<(Key, usize)>> = BinaryHeap::new();
    let mut slots: Vec<Option<Envelope>> = Vec::new();
    let mut free: Vec<usize> = Vec::new();
    let mut seq = 0u64;
    let waker = Waker::noop();
    let mut cx = Context::from_waker(waker);

    struct Step<'a> {
        tick: u64,
        event: usize,
        agent: AgentId,
        clock: u64,
        from_var: VarId,
        problem: &'a Problem,
    }

    let mut flush = |node: &Node,
                     step: &Step<'_>,
                     transcript: &mut Transcript,
                     metrics: &mut Metrics,
                     queue: &mut BinaryHeap<Reverse<(Key, usize)>>,
                     slots: &mut Vec<Option<Envelope>>,
                     free: &mut Vec<usize>|
     -> Result<(), SimError> {
        let out = std::mem::take(&mut node.inner.borrow_mut().outbox);
        for o in out {
            let from = step.from_var;
            let record = if o.to == from {
                None
            } else {
                if !step.problem.are_neighbors(from, o.to) {
                    return Err(SimError::NonNeighborSend { from, to: o.to });
                }
                let size = o.msg.size();
                let payload = if config.record_payloads {
                    Some(serde_json::to_value(&o.msg).expect("messages serialize"))
                } else {
                    None
                };
                transcript.records.push(Record {
                    seq,
                    tick: step.tick,
                    from,
                    to: o.to,
                    from_agent: step.agent,
                    to_agent: step.problem.owner(o.to),
                    kind: o.msg.kind().as_str(),
                    inner: o.msg.inner_kind().as_str(),
                    size,
                    mentions: o.msg.mentions(),
                    payload,
                    event: step.event,
                });
                metrics.messages += 1;
                metrics.info_bytes += size as u64;
                *metrics.by_kind.entry(o.msg.kind().as_str()).or_default() += 1;
                Some(transcript.records.len() - 1)
            };
            let env = Envelope { from, to: o.to, msg: o.msg, stamp: step.clock, record };
            let slot = match free.pop() {
                Some(i) => {
                    slots[i] = Some(env);
                    i
                }
                None => {
                    slots.push(Some(env));
                    slots.len() - 1
                }
            };
            queue.push(Reverse((Key { tick: step.tick + 1, to: o.to, from, seq }, slot)));
            seq += 1;
        }
        Ok(())
    };

    let mut poll_task =
        |i: usize, tasks: &mut Vec<Option<Task<O>>>, outputs: &mut Vec<Option<O>>| -> Result<(), SimError> {
            if let Some(t) = tasks[i].as_mut() {
                if let Poll::Ready(r) = t.as_mut().poll(&mut cx) {
                    tasks[i] = None;
                    outputs[i] = Some(r?);
                }
            }
            Ok(())
        };

    for i in 0..n {
        let node = nodes[i].clone();
        poll_task(i, &mut tasks, &mut outputs)?;
        let agent = node.agent();
        let cost = std::mem::take(&mut node.inner.borrow_mut().charge);
        clocks[agent.index()] += cost;
        metrics.compute_units += cost;
        transcript.events.push(Event { agent, cost, trigger: None });
        let step = Step {
            tick: 0,
            event: transcript.events.len() - 1,
            agent,
            clock: clocks[agent.index()],
            from_var: node.var(),
            problem,
        };
        flush(&node, &step, &mut transcript, &mut metrics, &mut queue, &mut slots, &mut free)?;
    }

    let mut deliveries = 0u64;
    while let Some(Reverse((key, slot))) = queue.pop() {
        deliveries += 1;
        if deliveries > config.max_deliveries {
            return Err(SimError::StepLimit(config.max_deliveries));
        }
        if deliveries % 1024 == 1 {
            if let Some(limit) = config.timeout {
                if started.elapsed() > limit {
                    return Err(SimError::Timeout);
                }
            }
        }
        let env = slots[slot].take().expect("live slot");
        free.push(slot);
        metrics.ticks = key.tick;
        let i = env.to.index();
        let node = nodes[i].clone();
        let agent = node.agent();
        let a = agent.index();
        clocks[a] = clocks[a].max(env.stamp);

        let services = node.inner.borrow().services.clone();
        let mut current = Some((env.from, env.msg));
        for svc in services {
            let (from, msg) = current.take().expect("message present");
            match svc.borrow_mut().handle(&node, from, msg) {
                Handled::Consumed => break,
                Handled::Pass(f, m) => current = Some((f, m)),
            }
        }
        if let Some(m) = current {
            node.inner.borrow_mut().mailbox.push_back(m);
        }
        poll_task(i, &mut tasks, &mut outputs)?;

        let cost = std::mem::take(&mut node.inner.borrow_mut().charge);
        clocks[a] += cost;
        metrics.compute_units += cost;
        transcript.events.push(Event { agent, cost, trigger: env.record });
        let step = Step {
            tick: key.tick,
            event: transcript.events.len() - 1,
            agent,
            clock: clocks[a],
            from_var: node.var(),
            problem,
        };
        flush(&node, &step, &mut transcript, &mut metrics, &mut queue, &mut slots, &mut free)?;
    }

    let waiting: Vec<VarId> = (0..n).filter(|i| tasks[*i].is_some()).map(|i| VarId(i as u32)).collect();
    if !waiting.is_empty() {
        return Err(SimError::Deadlock { waiting });
    }
    let shared = std::mem::take(&mut *shared.borrow_mut());
    metrics.simulated_time = clocks.iter().copied().max().unwrap_or(0);
    metrics.counters = shared.counters;
    metrics.logical = shared.logical;
    Ok(SimOutcome {
        outputs: outputs.into_iter().map(|o| o.expect("finished")).collect(),
        transcript,
        metrics,
        codebook: shared.codebook,
        probes: shared.probes,
    })
}
