mod common;

use std::rc::Rc;

use privdcsp::audit::{self, Category};
use privdcsp::kernel::{assign_ids, initial_tree, reference_dfs, ChildOrder, IdInfo, PseudoTree, TreeSource, TreeView};
use privdcsp::model::{colouring_example, Problem, VarId};
use privdcsp::sim::{self, Node, SimConfig, SimError, SimOutcome};
use proptest::prelude::*;

async fn build(node: Node, order: ChildOrder, incr_min: u64) -> Result<(TreeView, IdInfo), SimError> {
    let view = initial_tree(&node, &TreeSource::Elect(order)).await?;
    let ids = assign_ids(&node, &view, incr_min).await?;
    Ok((view, ids))
}

fn run(p: &Problem, seed: u64, order: ChildOrder, incr_min: u64) -> SimOutcome<(TreeView, IdInfo)> {
    let cfg = SimConfig { seed, ..SimConfig::default() };
    sim::run(p, &cfg, |node| build(node, order.clone(), incr_min)).unwrap()
}

fn assemble(out: &SimOutcome<(TreeView, IdInfo)>) -> PseudoTree {
    let views: Vec<TreeView> = out.outputs.iter().map(|(v, _)| v.clone()).collect();
    let roots = (0..views.len()).filter(|i| views[*i].is_root()).map(|i| VarId(i as u32)).collect();
    PseudoTree { roots, views }
}

#[test]
fn distributed_trees_are_pseudo_trees_with_preorder_ids() {
    for seed in 0..100 {
        let n = 2 + (seed as usize % 7);
        let p = common::random_problem(seed, n, 3, 0.35);
        let incr_min = seed % 3;
        let out = run(&p, seed, ChildOrder::Random, incr_min);
        let t = assemble(&out);
        assert_eq!(t.roots.len(), 1, "seed {seed}");
        t.validate(&p).unwrap_or_else(|e| panic!("seed {seed}: {e}"));

        let ids: Vec<IdInfo> = out.outputs.iter().map(|(_, i)| *i).collect();
        let n_plus = ids[0].n_plus;
        assert!(ids.iter().all(|i| i.n_plus == n_plus && i.id <= i.id_plus && i.id_plus < n_plus));
        assert!(n_plus <= (n as u64) * (1 + 2 * incr_min), "seed {seed}");
        let order = t.preorder(t.roots[0]);
        assert_eq!(ids[order[0].index()].id, 0);
        for w in order.windows(2) {
            assert_eq!(ids[w[1].index()].id, ids[w[0].index()].id_plus + 1, "seed {seed}");
        }
        assert_eq!(ids[order[n - 1].index()].id_plus + 1, n_plus);

        let f = audit::audit(&out.transcript, &p, &[]);
        assert_eq!(audit::count(&f, Category::NonNeighbor), 0);
    }
}

#[test]
fn ranked_order_reproduces_the_reference_dfs() {
    for seed in 0..20 {
        let p = common::random_problem(200 + seed, 6, 3, 0.4);
        let rank: Vec<u32> = (0..6).map(|i| ((i * 7 + seed as u32) % 11) as u32).collect();
        let out = run(&p, seed, ChildOrder::Ranked(Rc::new(rank.clone())), 1);
        let t = assemble(&out);
        assert_eq!(t, reference_dfs(&p, &t.roots, &rank), "seed {seed}");
    }
}

#[test]
fn ids_are_sequential_without_gaps() {
    let p = colouring_example();
    let out = run(&p, 4, ChildOrder::Random, 0);
    let mut ids: Vec<u64> = out.outputs.iter().map(|(_, i)| i.id).collect();
    ids.sort();
    assert_eq!(ids, [0, 1, 2, 3, 4]);
    assert!(out.outputs.iter().all(|(_, i)| i.width() == 1 && i.n_plus == 5));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn back_edges_join_ancestors_and_ids_stay_distinct(seed: u64, n in 1usize..9, incr_min in 0u64..4) {
        let p = common::random_problem(seed, n, 2, 0.5);
        let out = run(&p, seed, ChildOrder::Random, incr_min);
        let t = assemble(&out);
        for v in p.var_ids() {
            for u in &t.view(v).pseudo_parents {
                prop_assert!(t.is_ancestor(*u, v));
            }
        }
        let mut ids: Vec<u64> = out.outputs.iter().map(|(_, i)| i.id).collect();
        ids.sort();
        ids.dedup();
        prop_assert_eq!(ids.len(), n);
        prop_assert!(out.outputs.iter().all(|(_, i)| i.id < i.n_plus));
    }
}
