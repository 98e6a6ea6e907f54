#![allow(dead_code)]

use privdcsp::model::{for_each_tuple, Problem, ProblemBuilder, VarId};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Connected random colouring-style instance: a random spanning tree plus
/// extra edges, `!=` on every edge, and a few random unary exclusions.
pub fn random_problem(seed: u64, n: usize, colors: usize, density: f64) -> Problem {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut b = ProblemBuilder::new();
    let vars: Vec<VarId> = (0..n)
        .map(|i| {
            let a = b.agent(&format!("a{i}")).unwrap();
            b.variable(&format!("v{i}"), a, (0..colors).map(|c| format!("c{c}"))).unwrap()
        })
        .collect();
    let mut edges = Vec::new();
    for i in 1..n {
        edges.push((rng.gen_range(0..i), i));
    }
    for i in 0..n {
        for j in i + 1..n {
            if !edges.contains(&(i, j)) && rng.gen_bool(density) {
                edges.push((i, j));
            }
        }
    }
    for (i, j) in edges {
        b.not_equal(vars[i], vars[j]).unwrap();
    }
    for v in &vars {
        if rng.gen_bool(0.3) {
            let c = rng.gen_range(0..colors);
            b.forbid(&[*v], &[vec![c]]).unwrap();
        }
    }
    b.build().unwrap()
}

/// Exhaustive minimum violation count.
pub fn min_violations(p: &Problem) -> usize {
    let dims: Vec<usize> = p.var_ids().map(|v| p.domain_size(v)).collect();
    let mut best = usize::MAX;
    for_each_tuple(&dims, |t| best = best.min(p.violations(t)));
    best
}
