//! End-to-end acceptance checks. Runs as a plain binary so that every
//! criterion prints one PASS/FAIL line; the process fails if any hard
//! criterion fails. The trend check only logs.
//!
//!     cargo test -p privdcsp-harness --test acceptance

use std::process::ExitCode;
use std::rc::Rc;
use std::time::{Duration, Instant};

use privdcsp::audit::{self, Category};
use privdcsp::crypto::{GroupParams, KeyPairShare};
use privdcsp::kernel::{example_pseudo_tree, TreeSource};
use privdcsp::model::{colouring_example, Problem, VarId};
use privdcsp::p2::{self, Cleartext};
use privdcsp::pdpop::Variant;
use privdcsp::sim::{self, SimConfig};
use privdcsp::solver::{solve, Solution, SolverConfig, SolverKind};
use privdcsp::table::{Label, Symbol, Table};
use privdcsp::wire::{FeasTable, Msg, MsgKind};
use privdcsp_harness::experiment::{run_experiment, summarize, trend_warnings, ExperimentConfig};
use privdcsp_harness::gen::{gen_graph_coloring, ColoringParams, Family};
use privdcsp_harness::oracle::{brute_force, DEFAULT_CAP};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

const EXAMPLE_LIMIT: Duration = Duration::from_secs(1);
const ENCRYPT_DECRYPT_LIMIT: Duration = Duration::from_millis(50);
const TOY_BITS: u32 = 64;

type Outcome = Result<String, String>;

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn coloring(n: usize, seed: u64) -> Problem {
    gen_graph_coloring(&ColoringParams::new(n), seed).expect("valid parameters")
}

fn name(p: &Problem, v: VarId) -> &str {
    &p.var(v).name
}

/// Verdict and returned solution against brute force.
fn agrees(p: &Problem, s: &Solution) -> Result<(), String> {
    let bf = brute_force(p, DEFAULT_CAP).map_err(|e| e.to_string())?;
    check(s.feasible == bf.feasible(), || format!("verdict {} but oracle says {}", s.feasible, bf.feasible()))?;
    match &s.assignment {
        Some(a) => {
            let k = p.evaluate(a).map_err(|e| e.to_string())?;
            check(k == 0, || format!("returned assignment violates {k} constraints"))
        }
        None => check(!s.feasible, || "feasible without an assignment".into()),
    }
}

// 1

fn example_cost_tables() -> Outcome {
    let p = colouring_example();
    let cfg =
        SolverConfig::new(SolverKind::Dpop).tree(TreeSource::Fixed(Rc::new(example_pseudo_tree(&p)))).record_payloads();
    let t0 = Instant::now();
    let s = solve(&p, &cfg).map_err(|e| e.to_string())?;
    let elapsed = t0.elapsed();
    let x = |n: &str| p.var_by_name(n).unwrap();
    let table = |from: &str, axes: &[&str]| -> Result<Vec<u64>, String> {
        for r in &s.transcript.records {
            let m: Msg =
                serde_json::from_value(r.payload.clone().ok_or("payload missing")?).map_err(|e| e.to_string())?;
            if let (true, Msg::Feas { table: FeasTable::Plain(t), .. }) = (r.from == x(from), m) {
                let order: Vec<Label> = axes.iter().map(|a| Label::Var(x(a))).collect();
                return Ok(t.transpose(&order).map_err(|e| e.to_string())?.into_entries());
            }
        }
        Err(format!("no FEAS from {from}"))
    };
    let expected: [(&str, &[&str], Vec<u64>); 4] = [
        ("x5", &["x3"], vec![0, 0, 1]),
        ("x1", &["x4", "x2"], vec![0, 0, 0, 0, 0, 1, 0, 1, 0]),
        ("x4", &["x3", "x2"], vec![0, 1, 0, 0, 0, 0, 0, 0, 0]),
        ("x3", &["x2"], vec![0, 1, 0]),
    ];
    for (from, axes, want) in expected {
        let got = table(from, axes)?;
        check(got == want, || format!("{from}: got {got:?}, want {want:?}"))?;
    }
    check(elapsed < EXAMPLE_LIMIT, || format!("took {elapsed:?}"))?;
    Ok(format!("4 tables exact, {elapsed:?}"))
}

// 2

fn linear_shadow_tables() -> Outcome {
    let p = colouring_example();
    let tree = example_pseudo_tree(&p);
    let x = |n: &str| p.var_by_name(n).unwrap();
    let order = tree.preorder(x("x2"));
    const T: bool = true;
    const F: bool = false;
    // (sender, receiver, row variable, rows over R B G with columns over x2)
    let expected: [(&str, &str, Option<&str>, Vec<[bool; 3]>); 4] = [
        ("x1", "x4", Some("x4"), vec![[T, T, T], [T, T, F], [T, F, T]]),
        ("x4", "x5", Some("x3"), vec![[T, F, T], [T, T, T], [T, T, T]]),
        ("x5", "x3", Some("x3"), vec![[T, F, T], [T, T, T], [F, F, F]]),
        ("x3", "x2", None, vec![[T, F, T]]),
    ];
    for variant in [Variant::Minus, Variant::Plus] {
        let cfg = SimConfig { record_payloads: true, ..SimConfig::default() };
        let t = Rc::new(tree.clone());
        let out = sim::run(&p, &cfg, |node| p2::run_shadow_pass(node, TreeSource::Fixed(t.clone()), variant))
            .map_err(|e| e.to_string())?;
        // the message of order[j] travels over tree edges until it reaches order[j - 1]
        let mut tables: Vec<(VarId, VarId, Table<bool>)> = Vec::new();
        let mut j = order.len() - 1;
        for r in &out.transcript.records {
            let m: Msg =
                serde_json::from_value(r.payload.clone().ok_or("payload missing")?).map_err(|e| e.to_string())?;
            if let Msg::Feas { table: FeasTable::Shadow(t), .. } = m.innermost() {
                if j > 0 && r.to == order[j - 1] {
                    tables.push((order[j], order[j - 1], t.clone()));
                    j -= 1;
                }
            }
        }
        check(tables.len() == 4, || format!("{variant:?}: {} FEAS messages", tables.len()))?;
        for ((from, to, row, want), (s, d, t)) in expected.iter().zip(&tables) {
            check((x(from), x(to)) == (*s, *d), || {
                format!("{variant:?}: message {}→{} out of order", name(&p, *s), name(&p, *d))
            })?;
            let dec = audit::decode_table(t, &out.codebook).ok_or_else(|| format!("{from}: undecodable"))?;
            let mut labels: Vec<Label> = dec.labels().collect();
            labels.sort();
            let mut want_labels: Vec<Label> =
                row.iter().map(|r| Label::Var(x(r))).chain([Label::Var(x("x2"))]).collect();
            want_labels.sort();
            check(labels == want_labels, || format!("{variant:?} {from}: axes {labels:?}"))?;
            for (ri, cells) in want.iter().enumerate() {
                for (ci, want) in cells.iter().enumerate() {
                    let mut at = vec![(Label::Var(x("x2")), Symbol::Value(ci as u32))];
                    if let Some(r) = row {
                        at.push((Label::Var(x(r)), Symbol::Value(ri as u32)));
                    }
                    let got = dec.lookup(&at).ok_or_else(|| format!("{from}: missing cell"))?;
                    check(got == want, || format!("{variant:?} {from}→{to}: cell ({ri}, {ci}) is {got}"))?;
                }
            }
        }
        // x2 has no local constraint, so its final table is the x3 message: R is the first feasible colour
        let root = &out.outputs[x("x2").index()];
        check(root.root_feasible == Some(true) && root.value == Some(0), || {
            format!("{variant:?}: x2 ended with {root:?}")
        })?;
    }
    Ok("4 tables exact for both variants, x2 = [T,F,T] → R".into())
}

// 3

fn oracle_equivalence() -> Outcome {
    let groups: [(&[SolverKind], usize, std::ops::RangeInclusive<usize>, u32); 3] = [
        (&[SolverKind::Dpop, SolverKind::PDpop, SolverKind::PDpopPlus], 200, 3..=8, 512),
        (&[SolverKind::P32, SolverKind::P32Plus], 100, 3..=6, 512),
        (&[SolverKind::P2, SolverKind::P2Plus], 100, 3..=5, TOY_BITS),
    ];
    let mut runs = 0;
    let mut infeasible = 0;
    for (kinds, count, sizes, bits) in groups {
        let span = sizes.end() - sizes.start() + 1;
        for i in 0..count {
            let n = sizes.start() + i % span;
            let seed = 10_000 + i as u64;
            let p = coloring(n, seed);
            if !brute_force(&p, DEFAULT_CAP).map_err(|e| e.to_string())?.feasible() {
                infeasible += 1;
            }
            for kind in kinds {
                let s = solve(&p, &SolverConfig::new(*kind).seed(seed).key_bits(bits))
                    .map_err(|e| format!("{kind} n={n} seed {seed}: {e}"))?;
                agrees(&p, &s).map_err(|e| format!("{kind} n={n} seed {seed}: {e}"))?;
                runs += 1;
            }
        }
    }
    Ok(format!("{runs} runs, 0 mismatches ({infeasible} infeasible instance-draws)"))
}

// 4

async fn dichotomy(node: sim::Node, pattern: Vec<bool>) -> Result<Option<usize>, sim::SimError> {
    p2::feasible_value(&node, &Cleartext, &pattern).await
}

fn message_count_laws() -> Outcome {
    let mut instances: Vec<(Problem, u64)> =
        (0..24).map(|i| (coloring(3 + i % 4, 20_000 + i as u64), i as u64)).collect();
    // K4 with three colours
    instances.push((gen_graph_coloring(&ColoringParams { density: 1.0, ..ColoringParams::new(4) }, 1).unwrap(), 99));
    let (mut feasible, mut infeasible) = (0, 0);
    for (p, seed) in &instances {
        let n = p.num_vars() as u64;
        let ok = brute_force(p, DEFAULT_CAP).map_err(|e| e.to_string())?.feasible();
        if ok {
            feasible += 1;
        } else {
            infeasible += 1;
        }
        for kind in SolverKind::ALL {
            let s = solve(p, &SolverConfig::new(kind).seed(*seed).key_bits(TOY_BITS)).map_err(|e| e.to_string())?;
            let feas = s.metrics.logical_count(MsgKind::Feas);
            let passes = if kind.reroots() {
                let it = s.metrics.counter("iterations");
                let want = if ok { n } else { 1 };
                check(it == want, || format!("{kind} seed {seed}: {it} iterations, want {want}"))?;
                it
            } else {
                1
            };
            check(feas == passes * (n - 1), || {
                format!("{kind} seed {seed}: {feas} FEAS over {passes} passes, n = {n}")
            })?;
        }
    }
    check(feasible > 0 && infeasible > 0, || format!("sample has {feasible} feasible, {infeasible} infeasible"))?;

    let mut lone = privdcsp::model::ProblemBuilder::new();
    let a = lone.agent("a").unwrap();
    lone.variable("x", a, ["v"]).unwrap();
    let lone = lone.build().unwrap();
    for d in 1..=8usize {
        let lo = (d as f64).log2().ceil() as u64;
        let hi = ((d as f64).log2() + 1.0).ceil() as u64;
        for bits in 0..(1u32 << d) {
            let pattern: Vec<bool> = (0..d).map(|i| bits >> i & 1 == 1).collect();
            let pat = pattern.clone();
            let out = sim::run(&lone, &SimConfig::default(), move |node| dichotomy(node, pat.clone()))
                .map_err(|e| e.to_string())?;
            check(out.outputs[0] == pattern.iter().position(|b| *b), || format!("{pattern:?}: wrong value"))?;
            let k = out.metrics.counter("dichotomy_decryptions");
            check(lo <= k && k <= hi, || format!("|D| = {d}, {pattern:?}: {k} decryptions"))?;
        }
    }
    Ok(format!("{} instances ({infeasible} infeasible) x 7 solvers, 510 dichotomy patterns", instances.len()))
}

// 5

fn decrypt(g: &GroupParams, c: &privdcsp::crypto::Cyphertext, shares: &[KeyPairShare]) -> Result<bool, String> {
    g.combine_decrypt(c, shares.iter().map(|s| &s.x), 4).map_err(|e| e.to_string())
}

fn crypto_suite() -> Outcome {
    let mut rng = ChaCha20Rng::seed_from_u64(5);
    for g in [GroupParams::toy64(), GroupParams::default512()] {
        let bits = g.p.bits();
        for k in 1..=5 {
            let shares: Vec<KeyPairShare> = (0..k).map(|_| g.keygen(&mut rng)).collect();
            let key = g.compound_key(shares.iter().map(|s| &s.y));
            for a in [false, true] {
                let ea = g.encrypt_random(&key, a, &mut rng);
                check(decrypt(&g, &ea, &shares)? == a, || format!("{bits}-bit, {k} shares: round trip of {a}"))?;
                if k > 1 {
                    let partial = g.decrypt_element(&ea, shares[1..].iter().map(|s| &s.x));
                    check(partial != g.encode_bool(a), || format!("{bits}-bit: {} of {k} shares decrypt", k - 1))?;
                }
                for b in [false, true] {
                    let eb = g.encrypt_random(&key, b, &mut rng);
                    let or = decrypt(&g, &g.or(&ea, &eb), &shares)?;
                    let and = decrypt(&g, &g.and_cleartext(&key, &ea, b, &mut rng), &shares)?;
                    check(or == (a || b) && and == (a && b), || format!("{bits}-bit: OR/AND on ({a}, {b})"))?;
                }
                let mut c = ea.clone();
                for _ in 0..5 {
                    let next = g.rerandomize_random(&key, &c, &mut rng);
                    check(next != c, || format!("{bits}-bit: rerandomization is the identity"))?;
                    c = next;
                }
                check(decrypt(&g, &c, &shares)? == a, || format!("{bits}-bit: rerandomization changed {a}"))?;
            }
        }
    }
    let g = GroupParams::default512();
    let share = g.keygen(&mut rng);
    let key = g.compound_key([&share.y]);
    let mut times: Vec<Duration> = (0..21)
        .map(|i| {
            let t0 = Instant::now();
            let c = g.encrypt_random(&key, i % 2 == 0, &mut rng);
            let m = g.combine_decrypt(&c, [&share.x], 1);
            let dt = t0.elapsed();
            assert_eq!(m.ok(), Some(i % 2 == 0));
            dt
        })
        .collect();
    times.sort();
    let median = times[times.len() / 2];
    check(median < ENCRYPT_DECRYPT_LIMIT, || format!("512-bit encrypt+decrypt takes {median:?}"))?;
    Ok(format!("toy and 512-bit groups, 1-5 shares; 512-bit encrypt+decrypt median {median:?}"))
}

// 6

fn privacy_audit() -> Outcome {
    let mut dpop_decision = 0;
    for kind in SolverKind::ALL {
        for i in 0..50u64 {
            let p = coloring(3 + (i % 4) as usize, 30_000 + i);
            let s = solve(&p, &SolverConfig::new(kind).seed(i).key_bits(TOY_BITS)).map_err(|e| e.to_string())?;
            let f = audit::audit(&s.transcript, &s.solved, &s.codebook);
            let c = |cat| audit::count(&f, cat);
            let at = || format!("{kind} instance {i}");
            check(c(Category::NonNeighbor) == 0, || format!("{}: non-neighbour delivery", at()))?;
            if kind.is_private() {
                check(c(Category::Agent) == 0, || format!("{}: {} agent findings", at(), c(Category::Agent)))?;
            }
            if kind.is_encrypted_propagation() {
                check(c(Category::PlaintextFeasibility) == 0, || format!("{}: plaintext feasibility", at()))?;
            }
            if kind.reroots() {
                check(c(Category::DecisionMessage) == 0, || format!("{}: DECISION messages", at()))?;
            }
            if kind == SolverKind::Dpop {
                dpop_decision += c(Category::Decision);
            }
        }
    }
    check(dpop_decision > 0, || "DPOP shows no decision-privacy findings".into())?;
    Ok(format!("50 instances x 7 solvers clean; DPOP control has {dpop_decision} decision findings"))
}

// 7

fn probes<'a>(s: &'a Solution, name: &str) -> impl Iterator<Item = &'a sim::Probe> + 'a {
    let name = name.to_string();
    s.probes.iter().filter(move |p| p.name == name)
}

fn crypto_counters() -> Outcome {
    let mut checked = 0;
    for i in 0..12u64 {
        let n = 3 + (i % 3) as usize;
        let p = coloring(n, 40_000 + i);
        if !brute_force(&p, DEFAULT_CAP).map_err(|e| e.to_string())?.feasible() {
            continue;
        }
        for kind in [SolverKind::P32, SolverKind::P32Plus] {
            let mut cfg = SolverConfig::new(kind).seed(i).key_bits(TOY_BITS);
            cfg.probes = true;
            let s = solve(&p, &cfg).map_err(|e| e.to_string())?;
            let np = probes(&s, "ids").next().and_then(|p| p.value["n_plus"].as_u64()).ok_or("no ids probe")?;
            let n = n as u64;
            let (enc, dec) = (s.metrics.counter("shuffle_encryptions"), s.metrics.counter("partial_decryptions"));
            check(enc == n * (3 * n - 1) * np, || format!("{kind} n={n} n+={np}: {enc} encryptions"))?;
            check(dec == n * n * np, || format!("{kind} n={n} n+={np}: {dec} decryptions"))?;
            checked += 1;
        }
    }
    check(checked > 0, || "no feasible instance sampled".into())?;
    Ok(format!("{checked} runs match n(3n-1)n+ and n^2 n+"))
}

// 8

fn rerooting() -> Outcome {
    let mut runs = 0;
    let mut seed = 50_000;
    while runs < 5 {
        seed += 1;
        let p = coloring(5, seed);
        if !brute_force(&p, DEFAULT_CAP).map_err(|e| e.to_string())?.feasible() {
            continue;
        }
        let mut cfg = SolverConfig::new(SolverKind::P32).seed(seed).key_bits(TOY_BITS);
        cfg.probes = true;
        let s = solve(&p, &cfg).map_err(|e| e.to_string())?;
        let mut roots: Vec<VarId> = probes(&s, "root").map(|p| p.var).collect();
        roots.sort();
        check(roots == p.var_ids().collect::<Vec<_>>(), || format!("seed {seed}: roots {roots:?}"))?;
        runs += 1;
    }
    Ok("5 runs, each variable root exactly once".into())
}

fn trend() -> Vec<String> {
    let mut cfg = ExperimentConfig::new(Family::Coloring, (3..=6).collect());
    cfg.instances = 9;
    cfg.key_bits = TOY_BITS;
    cfg.incr_min = 1;
    match run_experiment(&cfg) {
        Ok(rows) => trend_warnings(&summarize(&rows)),
        Err(e) => vec![e.to_string()],
    }
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("colouring example cost tables", example_cost_tables),
        ("linear-order shadow tables", linear_shadow_tables),
        ("oracle equivalence", oracle_equivalence),
        ("message-count laws", message_count_laws),
        ("crypto suite", crypto_suite),
        ("privacy audit", privacy_audit),
        ("ElGamal operation counters", crypto_counters),
        ("rerooting", rerooting),
    ];
    let mut failed = 0;
    for (i, (label, f)) in criteria.iter().enumerate() {
        let t0 = Instant::now();
        let r = f();
        let dt = t0.elapsed();
        match r {
            Ok(detail) => println!("PASS {} {label}: {detail} [{dt:.1?}]", i + 1),
            Err(e) => {
                failed += 1;
                println!("FAIL {} {label}: {e} [{dt:.1?}]", i + 1);
            }
        }
    }
    let t0 = Instant::now();
    let warnings = trend();
    let dt = t0.elapsed();
    if warnings.is_empty() {
        println!("PASS trend (soft) pdpop <= p32 <= p2 on coloring n 3..6 [{dt:.1?}]");
    } else {
        println!("WARN trend (soft) {} deviations [{dt:.1?}]", warnings.len());
        for w in warnings {
            println!("     {w}");
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
