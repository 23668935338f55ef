//! Planted-cluster graph generator and edge perturbation.

use std::collections::{BTreeSet, HashMap};
use std::io::BufRead;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::Graph;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GeneratorConfig {
    pub n: usize,
    pub num_clusters: usize,
    /// Probability of an edge between vertices of different clusters.
    pub inter_noise: f64,
    /// Probability of dropping an edge inside a cluster.
    pub intra_noise: f64,
    pub seed: u64,
}

#[derive(Clone, Debug)]
pub struct Synthetic {
    pub graph: Graph,
    /// The clusters as cliques, no noise.
    pub ground_truth: Graph,
    /// Cluster of every vertex; `None` for the `n mod num_clusters` leftovers.
    pub labels: Vec<Option<usize>>,
}

fn check_probability(p: f64, what: &str) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::contract(format!("{what}={p} not in [0, 1]")))
    }
}

/// Random background with `inter_noise` edge probability plus `num_clusters`
/// disjoint cliques of `n / num_clusters` shuffled vertices, each clique edge
/// dropped with probability `intra_noise`.
pub fn generate(cfg: &GeneratorConfig) -> Result<Synthetic> {
    check_probability(cfg.inter_noise, "inter-cluster noise")?;
    check_probability(cfg.intra_noise, "intra-cluster noise")?;
    let n = cfg.n;
    let size = n.checked_div(cfg.num_clusters).unwrap_or(0);
    if size < 2 {
        return Err(Error::contract(format!(
            "{} clusters over {n} vertices leave fewer than 2 per cluster",
            cfg.num_clusters
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let mut labels = vec![None; n];
    for (c, block) in order.chunks(size).take(cfg.num_clusters).enumerate() {
        for &v in block {
            labels[v] = Some(c);
        }
    }

    let mut edges = Vec::new();
    let mut truth = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            let same = labels[u].is_some() && labels[u] == labels[v];
            if same {
                truth.push((u, v, 1.0));
            }
            let p = if same {
                1.0 - cfg.intra_noise
            } else {
                cfg.inter_noise
            };
            if rng.gen_bool(p) {
                edges.push((u, v, 1.0));
            }
        }
    }
    Ok(Synthetic {
        graph: Graph::from_edges(n, edges)?,
        ground_truth: Graph::from_edges(n, truth)?,
        labels,
    })
}

/// Adds each absent vertex pair as an edge with probability `p`; existing
/// edges are kept as they are.
pub fn perturb(g: &Graph, p: f64, seed: u64) -> Result<Graph> {
    check_probability(p, "noise probability")?;
    let n = g.n();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges: Vec<(usize, usize, f64)> = g.edges().collect();
    for u in 0..n {
        for v in u + 1..n {
            if g.weight(u, v) == 0.0 && rng.gen_bool(p) {
                edges.push((u, v, 1.0));
            }
        }
    }
    Graph::from_edges(n, edges)
}

/// Reads a downloaded network dump (SNAP or Konect style): `#` and `%`
/// comments, whitespace-separated ids in the first two columns, extra columns
/// ignored. Ids are compacted to `0..n` in ascending order; duplicate and
/// reversed edges collapse, self-loops are dropped. All edges get weight 1.
pub fn read_external_edge_list<R: BufRead>(reader: R, path: &Path) -> Result<Graph> {
    let mut pairs = BTreeSet::new();
    let mut ids = BTreeSet::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') || t.starts_with('%') {
            continue;
        }
        let mut fields = t.split_whitespace();
        let mut id = || -> Result<u64> {
            let s = fields.next().unwrap_or("");
            s.parse().map_err(|_| Error::Parse {
                path: path.to_path_buf(),
                line: idx + 1,
                message: format!("bad vertex id {s:?}"),
            })
        };
        let (u, v) = (id()?, id()?);
        ids.insert(u);
        ids.insert(v);
        if u != v {
            pairs.insert((u.min(v), u.max(v)));
        }
    }
    let index: HashMap<u64, usize> = ids.iter().enumerate().map(|(i, &id)| (id, i)).collect();
    Graph::from_edges(
        ids.len(),
        pairs.iter().map(|(u, v)| (index[u], index[v], 1.0)),
    )
}

pub fn load_external_edge_list(path: &Path) -> Result<Graph> {
    let file = std::fs::File::open(path)?;
    read_external_edge_list(std::io::BufReader::new(file), path)
}
