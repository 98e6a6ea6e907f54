mod common;

use std::rc::Rc;

use privdcsp::audit::{self, Category, Finding};
use privdcsp::kernel::{example_pseudo_tree, TreeSource};
use privdcsp::model::colouring_example;
use privdcsp::solver::{solve, SolverConfig, SolverKind};

fn config(kind: SolverKind, seed: u64) -> SolverConfig {
    SolverConfig::new(kind).seed(seed).key_bits(64)
}

#[test]
fn seeded_runs_are_byte_identical() {
    let p = common::random_problem(17, 5, 3, 0.4);
    for kind in SolverKind::ALL {
        let a = solve(&p, &config(kind, 5).record_payloads()).unwrap();
        let b = solve(&p, &config(kind, 5).record_payloads()).unwrap();
        assert_eq!(a.transcript.to_ndjson(), b.transcript.to_ndjson(), "{kind}");
        assert_eq!(a.metrics, b.metrics, "{kind}");
        let c = solve(&p, &config(kind, 6).record_payloads()).unwrap();
        if kind.is_private() {
            assert_ne!(a.transcript.to_ndjson(), c.transcript.to_ndjson(), "{kind}");
        }
    }
}

#[test]
fn dpop_leaks_a_non_neighbour_on_the_colouring_example() {
    let p = colouring_example();
    let cfg = SolverConfig::new(SolverKind::Dpop).tree(TreeSource::Fixed(Rc::new(example_pseudo_tree(&p))));
    let s = solve(&p, &cfg).unwrap();
    let f = audit::audit(&s.transcript, &s.solved, &s.codebook);
    let (x2, x4) = (p.var_by_name("x2").unwrap(), p.var_by_name("x4").unwrap());
    // x1 reports a table over x2 to x4, who does not know x2's owner
    assert!(f.iter().any(|f| matches!(f, Finding::AgentPrivacy { var, .. } if *var == x2)));
    assert!(f.iter().any(|f| matches!(f, Finding::DecisionPrivacy { var, .. } if *var == x2)));
    assert!(s.transcript.records.iter().any(|r| r.to == x4 && r.inner == "FEAS"));
    assert_eq!(audit::count(&f, Category::NonNeighbor), 0);
}

#[test]
fn audit_matches_each_solvers_guarantees() {
    for seed in 0..6 {
        let p = if seed == 0 { colouring_example() } else { common::random_problem(900 + seed, 5, 3, 0.5) };
        for kind in SolverKind::ALL {
            let s = solve(&p, &config(kind, seed)).unwrap();
            let f = audit::audit(&s.transcript, &s.solved, &s.codebook);
            assert_eq!(audit::count(&f, Category::NonNeighbor), 0, "{kind}");
            if kind.is_private() {
                assert_eq!(audit::count(&f, Category::Agent), 0, "{kind} seed {seed}");
                assert_eq!(audit::count(&f, Category::Decision), 0, "{kind} seed {seed}");
            }
            if kind.reroots() {
                assert_eq!(audit::count(&f, Category::DecisionMessage), 0, "{kind}");
                assert_eq!(audit::count(&f, Category::DecodableDecision), 0, "{kind}");
            }
            if kind.is_encrypted_propagation() {
                assert_eq!(audit::count(&f, Category::PlaintextFeasibility), 0, "{kind}");
            }
        }
    }
}

#[test]
fn every_verdict_matches_brute_force() {
    for seed in 0..8 {
        let p = common::random_problem(1000 + seed, 4, 3, 0.6);
        let feasible = common::min_violations(&p) == 0;
        for kind in SolverKind::ALL {
            let s = solve(&p, &config(kind, seed)).unwrap();
            assert_eq!(s.feasible, feasible, "{kind} seed {seed}");
            match &s.assignment {
                Some(a) => assert_eq!(p.evaluate(a).unwrap(), 0),
                None => assert!(!feasible),
            }
        }
    }
}

#[test]
fn each_component_is_solved_on_its_own() {
    let mut b = privdcsp::model::ProblemBuilder::new();
    let vs: Vec<_> = (0..5)
        .map(|i| {
            let a = b.agent(&format!("a{i}")).unwrap();
            b.variable(&format!("x{i}"), a, ["R", "B"]).unwrap()
        })
        .collect();
    b.not_equal(vs[0], vs[1]).unwrap();
    b.not_equal(vs[2], vs[3]).unwrap();
    b.not_equal(vs[3], vs[4]).unwrap();
    let p = b.build().unwrap();
    for kind in SolverKind::ALL {
        let s = solve(&p, &config(kind, 2)).unwrap_or_else(|e| panic!("{kind}: {e}"));
        assert!(s.feasible, "{kind}");
        assert_eq!(p.evaluate(s.assignment.as_ref().unwrap()).unwrap(), 0, "{kind}");
    }
}
