#![allow(dead_code)]

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use regsum::{Graph, VertexSet};

/// Erdős–Rényi graph with weights drawn from `{0.5, 1}` when `weighted`.
pub fn random_graph(n: usize, p: f64, weighted: bool, seed: u64) -> Graph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if rng.gen_bool(p) {
                let w = if weighted && rng.gen_bool(0.5) {
                    0.5
                } else {
                    1.0
                };
                edges.push((u, v, w));
            }
        }
    }
    Graph::from_edges(n, edges).unwrap()
}

/// Shuffled vertices cut into `k` classes of `m`, the rest exceptional.
pub fn random_classes(n: usize, k: usize, m: usize, seed: u64) -> (Vec<VertexSet>, VertexSet) {
    use rand::seq::SliceRandom;
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let classes = order
        .chunks(m)
        .take(k)
        .map(|c| VertexSet::new(c.to_vec(), n).unwrap())
        .collect();
    let rest = VertexSet::new(order[k * m..].to_vec(), n).unwrap();
    (classes, rest)
}

pub fn graph_params() -> impl Strategy<Value = (usize, f64, u64)> {
    (8usize..40, 0.0f64..1.0, any::<u64>())
}
