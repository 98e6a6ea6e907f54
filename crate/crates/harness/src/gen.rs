//! Instance generators for the four benchmark families. Each sampler has an
//! explicit constructor next to it so fixed instances can be built by hand.

use std::fmt;
use std::str::FromStr;

use privdcsp::model::{ModelError, Problem, ProblemBuilder, VarId};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GenError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("invalid parameters: {0}")]
    Params(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Family {
    Coloring,
    Meetings,
    Resources,
    Party,
}

impl Family {
    pub const ALL: [Family; 4] = [Family::Coloring, Family::Meetings, Family::Resources, Family::Party];

    pub fn name(self) -> &'static str {
        match self {
            Family::Coloring => "coloring",
            Family::Meetings => "meetings",
            Family::Resources => "resources",
            Family::Party => "party",
        }
    }

    /// Samples one instance whose size parameter is `size`: nodes, meetings,
    /// bids or players.
    pub fn generate(self, size: usize, seed: u64) -> Result<Problem, GenError> {
        match self {
            Family::Coloring => gen_graph_coloring(&ColoringParams::new(size), seed),
            Family::Meetings => gen_meeting_scheduling(&MeetingParams::new(size), seed),
            Family::Resources => gen_resource_allocation(8, size, seed),
            Family::Party => gen_party_game(size, seed),
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = GenError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Family::ALL.into_iter().find(|f| f.name() == s).ok_or_else(|| GenError::Params(format!("unknown family `{s}`")))
    }
}

#[derive(Clone, Debug)]
pub struct ColoringParams {
    pub n: usize,
    pub density: f64,
    pub colors: usize,
    /// Chance that a node gets a private unary constraint forbidding one colour.
    pub unary_prob: f64,
}

impl ColoringParams {
    pub fn new(n: usize) -> Self {
        ColoringParams { n, density: 0.4, colors: 3, unary_prob: 0.3 }
    }
}

/// Graph colouring with one single-variable agent per node. Each pair of nodes
/// is an edge with probability `density`; a disconnected sample is repaired by
/// linking every component to a random node of an earlier one.
pub fn gen_graph_coloring(params: &ColoringParams, seed: u64) -> Result<Problem, GenError> {
    let n = params.n;
    if n == 0 || params.colors == 0 {
        return Err(GenError::Params("coloring needs at least one node and one colour".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.gen_bool(params.density) {
                edges.push((i, j));
            }
        }
    }
    let mut comp: Vec<usize> = (0..n).collect();
    for (i, j) in &edges {
        let (a, b) = (find(&mut comp, *i), find(&mut comp, *j));
        comp[a] = b;
    }
    for j in 1..n {
        // j starts a new component if it is not joined to anything before it
        if (0..j).all(|i| find(&mut comp, i) != find(&mut comp, j)) {
            let i = rng.gen_range(0..j);
            edges.push((i, j));
            let (a, b) = (find(&mut comp, i), find(&mut comp, j));
            comp[a] = b;
        }
    }
    let unary: Vec<Option<usize>> =
        (0..n).map(|_| rng.gen_bool(params.unary_prob).then(|| rng.gen_range(0..params.colors))).collect();
    coloring_from(n, params.colors, &edges, &unary)
}

fn find(c: &mut [usize], x: usize) -> usize {
    if c[x] != x {
        c[x] = find(c, c[x]);
    }
    c[x]
}

/// Colouring instance over nodes `0..n` with `!=` on every edge and an
/// optional forbidden colour per node.
pub fn coloring_from(
    n: usize,
    colors: usize,
    edges: &[(usize, usize)],
    forbidden: &[Option<usize>],
) -> Result<Problem, GenError> {
    let mut b = ProblemBuilder::new();
    let vars: Vec<VarId> = (0..n)
        .map(|i| {
            let a = b.agent(&format!("a{i}"))?;
            b.variable(&format!("x{i}"), a, (0..colors).map(|c| format!("c{c}")))
        })
        .collect::<Result<_, _>>()?;
    for (i, j) in edges {
        b.not_equal(vars[*i], vars[*j])?;
    }
    for (i, f) in forbidden.iter().enumerate() {
        if let Some(c) = f {
            b.forbid(&[vars[i]], &[vec![*c]])?;
        }
    }
    Ok(b.build()?)
}

#[derive(Clone, Debug)]
pub struct MeetingParams {
    pub meetings: usize,
    pub pool: usize,
    pub per_meeting: usize,
    pub slots: usize,
}

impl MeetingParams {
    pub fn new(meetings: usize) -> Self {
        MeetingParams { meetings, pool: 3, per_meeting: 2, slots: 8 }
    }
}

pub fn gen_meeting_scheduling(params: &MeetingParams, seed: u64) -> Result<Problem, GenError> {
    if params.per_meeting > params.pool || params.per_meeting == 0 || params.meetings == 0 {
        return Err(GenError::Params("need 0 < per_meeting <= pool and at least one meeting".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let agents: Vec<usize> = (0..params.pool).collect();
    let meetings: Vec<Vec<usize>> = (0..params.meetings)
        .map(|_| {
            let mut m: Vec<usize> = agents.choose_multiple(&mut rng, params.per_meeting).copied().collect();
            m.sort();
            m
        })
        .collect();
    meetings_from(params.pool, params.slots, &meetings)
}

/// Meeting scheduling: each participant owns a time variable per meeting it
/// attends, its own meetings take pairwise different times, and all copies of
/// one meeting are equal.
pub fn meetings_from(pool: usize, slots: usize, meetings: &[Vec<usize>]) -> Result<Problem, GenError> {
    let mut b = ProblemBuilder::new();
    let agents: Vec<_> = (0..pool).map(|i| b.agent(&format!("p{i}"))).collect::<Result<_, _>>()?;
    let mut per_agent: Vec<Vec<VarId>> = vec![Vec::new(); pool];
    for (m, who) in meetings.iter().enumerate() {
        let mut copies = Vec::new();
        for a in who {
            let v = b.variable(&format!("m{m}_p{a}"), agents[*a], (0..slots).map(|s| format!("t{s}")))?;
            per_agent[*a].push(v);
            copies.push(v);
        }
        for w in copies.windows(2) {
            b.equal(w[0], w[1])?;
        }
    }
    for vars in &per_agent {
        for (i, x) in vars.iter().enumerate() {
            for y in &vars[i + 1..] {
                b.not_equal(*x, *y)?;
            }
        }
    }
    Ok(b.build()?)
}

/// One request for a bundle of resources by an airline.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Bid {
    pub airline: usize,
    pub bundle: Vec<usize>,
}

/// Airport slot allocation. Slots split into takeoffs and landings; every bid
/// asks for one of each. Airlines get at least one bid each, and there are
/// about half as many airlines as bids.
pub fn gen_resource_allocation(slots: usize, bids: usize, seed: u64) -> Result<Problem, GenError> {
    if bids == 0 || slots < 2 {
        return Err(GenError::Params("need at least one bid and two slots".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let half = slots / 2;
    let airlines = bids.div_ceil(2);
    let list: Vec<Bid> = (0..bids)
        .map(|i| {
            let airline = if i < airlines { i } else { rng.gen_range(0..airlines) };
            let t = rng.gen_range(0..half);
            let l = half + rng.gen_range(0..slots - half);
            Bid { airline, bundle: vec![t, l] }
        })
        .collect();
    resources_from(slots, &list)
}

/// Resource allocation DisCSP. Each requested resource has an agent owning a
/// binary variable per interested airline, with at most one set. Airlines own
/// copies tied to those by equality, and their private constraint makes the
/// allocated set exactly one of their bundles.
pub fn resources_from(slots: usize, bids: &[Bid]) -> Result<Problem, GenError> {
    let mut b = ProblemBuilder::new();
    let airlines = bids.iter().map(|x| x.airline + 1).max().unwrap_or(0);
    let mut wanted: Vec<Vec<usize>> = vec![Vec::new(); slots];
    for bid in bids {
        for r in &bid.bundle {
            if *r >= slots {
                return Err(GenError::Params(format!("resource {r} out of range")));
            }
            if !wanted[*r].contains(&bid.airline) {
                wanted[*r].push(bid.airline);
            }
        }
    }
    let airline_agents: Vec<_> = (0..airlines).map(|i| b.agent(&format!("airline{i}"))).collect::<Result<_, _>>()?;
    // (resource, copy) per airline
    let mut held: Vec<Vec<(usize, VarId)>> = vec![Vec::new(); airlines];
    for (r, who) in wanted.iter().enumerate() {
        if who.is_empty() {
            continue;
        }
        let owner = b.agent(&format!("slot{r}"))?;
        let mut alloc = Vec::new();
        for a in who {
            let x = b.variable(&format!("s{r}_a{a}"), owner, ["0", "1"])?;
            let c = b.variable(&format!("a{a}_s{r}"), airline_agents[*a], ["0", "1"])?;
            b.equal(x, c)?;
            alloc.push(x);
            held[*a].push((r, c));
        }
        b.constraint_fn(&alloc, |t| t.iter().sum::<usize>() <= 1)?;
    }
    for (a, copies) in held.iter().enumerate() {
        let bundles: Vec<Vec<usize>> = bids
            .iter()
            .filter(|x| x.airline == a)
            .map(|x| {
                let mut s = x.bundle.clone();
                s.sort();
                s.dedup();
                s
            })
            .collect();
        let scope: Vec<VarId> = copies.iter().map(|(_, c)| *c).collect();
        b.constraint_fn(&scope, |t| {
            let got: Vec<usize> = copies.iter().zip(t).filter(|(_, x)| **x == 1).map(|((r, _), _)| *r).collect();
            bundles.iter().any(|s| *s == got)
        })?;
    }
    Ok(b.build()?)
}

/// How player `i` feels about its neighbour in a party game.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Attitude {
    Likes,
    Dislikes,
}

#[derive(Clone, Debug)]
pub struct Acquaintance {
    pub a: usize,
    pub b: usize,
    /// `a`'s attitude towards `b`, then `b`'s towards `a`.
    pub attitudes: (Attitude, Attitude),
}

/// Party game on a random path through all players, with random attitudes and
/// attendance costs uniform in `[0, 1]`.
pub fn gen_party_game(players: usize, seed: u64) -> Result<Problem, GenError> {
    if players == 0 {
        return Err(GenError::Params("need at least one player".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..players).collect();
    order.shuffle(&mut rng);
    let att = |rng: &mut ChaCha8Rng| if rng.gen_bool(0.5) { Attitude::Likes } else { Attitude::Dislikes };
    let edges: Vec<Acquaintance> = order
        .windows(2)
        .map(|w| Acquaintance { a: w[0], b: w[1], attitudes: (att(&mut rng), att(&mut rng)) })
        .collect();
    let costs: Vec<f64> = (0..players).map(|_| rng.gen_range(0.0..=1.0)).collect();
    party_from(&costs, &edges)
}

/// Party game DisCSP whose solutions are the pure Nash equilibria. Each player
/// owns its strategy and copies of its neighbours' strategies, and allows a
/// strategy only if it is a best response (ties allow both).
pub fn party_from(costs: &[f64], edges: &[Acquaintance]) -> Result<Problem, GenError> {
    let n = costs.len();
    let mut degree = vec![0usize; n];
    let mut comp: Vec<usize> = (0..n).collect();
    for e in edges {
        if e.a >= n || e.b >= n || e.a == e.b {
            return Err(GenError::Params("acquaintance out of range".into()));
        }
        degree[e.a] += 1;
        degree[e.b] += 1;
        let (ra, rb) = (find(&mut comp, e.a), find(&mut comp, e.b));
        if ra == rb || degree[e.a] > 2 || degree[e.b] > 2 {
            return Err(GenError::Params("game graph must be acyclic with degree at most 2".into()));
        }
        comp[ra] = rb;
    }
    let mut b = ProblemBuilder::new();
    let agents: Vec<_> = (0..n).map(|i| b.agent(&format!("player{i}"))).collect::<Result<_, _>>()?;
    let strategy: Vec<VarId> =
        (0..n).map(|i| b.variable(&format!("go{i}"), agents[i], ["stay", "attend"])).collect::<Result<_, _>>()?;
    // neighbour copies per player: (copy, weight)
    let mut copies: Vec<Vec<(VarId, f64)>> = vec![Vec::new(); n];
    for e in edges {
        for (me, other, att) in [(e.a, e.b, e.attitudes.0), (e.b, e.a, e.attitudes.1)] {
            let c = b.variable(&format!("go{other}_at{me}"), agents[me], ["stay", "attend"])?;
            b.equal(strategy[other], c)?;
            let w = if att == Attitude::Likes { 1.0 } else { -1.0 };
            copies[me].push((c, w));
        }
    }
    for i in 0..n {
        let mut scope = vec![strategy[i]];
        scope.extend(copies[i].iter().map(|(c, _)| *c));
        let weights: Vec<f64> = copies[i].iter().map(|(_, w)| *w).collect();
        let cost = costs[i];
        b.constraint_fn(&scope, |t| {
            let attend: f64 = weights.iter().zip(&t[1..]).map(|(w, x)| w * *x as f64).sum::<f64>() - cost;
            if t[0] == 1 {
                attend >= 0.0
            } else {
                attend <= 0.0
            }
        })?;
    }
    Ok(b.build()?)
}
