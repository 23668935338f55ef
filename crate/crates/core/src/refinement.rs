//! One refinement step: every class is split in two.
//!
//! Classes that are regular with all others are sorted by internal degree and
//! unzipped. A class with irregular pairs is matched with one irregular partner
//! (highest structural similarity score) and both are rebuilt from the pair's
//! certificates, either by random halving topped up with weakly connected
//! vertices (sparse certificates) or by unzipping topped up with strongly
//! connected vertices (dense certificates).

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};
use crate::graph::{density_unchecked, internal_density_unchecked, Graph, VertexSet};
use crate::regularity::{EquitablePartition, PairVerdicts, PartitionDensities};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RefineConfig {
    /// Certificates whose ordered-pair internal density is below this value
    /// are sparsified, the others densified.
    pub density_threshold: f64,
    /// Pick the irregular partner uniformly at random instead of by score.
    pub random_partner: bool,
}

impl Default for RefineConfig {
    fn default() -> Self {
        RefineConfig {
            density_threshold: 0.5,
            random_partner: false,
        }
    }
}

/// Result of splitting a certificate into two classes of a target size.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Split {
    pub first: Vec<usize>,
    pub second: Vec<usize>,
    /// Certificate vertices left unplaced, ascending.
    pub excess: Vec<usize>,
    /// Pool vertices left unused, ascending.
    pub pool_rest: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RefinementOutcome {
    pub partition: EquitablePartition,
    /// False when `C_0` outgrew `eps n` but was too small to redistribute.
    pub regular: bool,
    /// Number of class splits that collapsed into `C_0`.
    pub degenerate_splits: usize,
}

/// Odd ranks to the first set, even ranks to the second; an odd-length input
/// leaves its last vertex over (for `C_0`).
pub fn unzip(sorted: &[usize]) -> (VertexSet, VertexSet, Option<usize>) {
    let even = sorted.len() - sorted.len() % 2;
    let first = sorted[..even].iter().step_by(2).copied().collect();
    let second = sorted[..even].iter().skip(1).step_by(2).copied().collect();
    let leftover = (sorted.len() % 2 == 1).then(|| sorted[sorted.len() - 1]);
    (
        VertexSet::from_vec(first),
        VertexSet::from_vec(second),
        leftover,
    )
}

/// Vertices of `set` by weighted degree inside `set`, highest first, ties by
/// ascending id.
pub fn sort_by_internal_degree(g: &Graph, set: &[usize]) -> Vec<usize> {
    let deg = g.internal_degrees(set);
    let mut order: Vec<usize> = (0..set.len()).collect();
    order.sort_by(|&x, &y| deg[y].total_cmp(&deg[x]).then(set[x].cmp(&set[y])));
    order.into_iter().map(|i| set[i]).collect()
}

/// `S = d(C_i, C_j) + (1 - |d(C_i, C_i) - d(C_j, C_j)|)`.
pub fn partner_score(pair_density: f64, internal_i: f64, internal_j: f64) -> f64 {
    pair_density + (1.0 - (internal_i - internal_j).abs())
}

fn argmax_score(candidates: &[usize], score: impl Fn(usize) -> f64) -> usize {
    let mut best = candidates[0];
    let mut best_score = score(best);
    for &c in &candidates[1..] {
        let s = score(c);
        if s > best_score || (s == best_score && c < best) {
            best = c;
            best_score = s;
        }
    }
    best
}

/// Index into `candidates` of the class structurally closest to `ci`.
pub fn select_partner(g: &Graph, ci: &VertexSet, candidates: &[VertexSet]) -> Result<usize> {
    if candidates.is_empty() {
        return Err(Error::contract("no partner candidates"));
    }
    if ci.is_empty() || candidates.iter().any(VertexSet::is_empty) {
        return Err(Error::contract("partner selection on empty classes"));
    }
    let internal_i = internal_density_unchecked(g, ci.as_slice());
    let idx: Vec<usize> = (0..candidates.len()).collect();
    Ok(argmax_score(&idx, |j| {
        let cj = candidates[j].as_slice();
        partner_score(
            density_unchecked(g, ci.as_slice(), cj),
            internal_i,
            internal_density_unchecked(g, cj),
        )
    }))
}

/// Moves `target - half.len()` pool vertices into `half`, each time taking
/// the vertex with the fewest (or most) connections into the half built so far.
fn top_up(
    g: &Graph,
    half: &mut Vec<usize>,
    pool: &mut Vec<usize>,
    target: usize,
    most_connected: bool,
) -> Result<()> {
    let need = target.saturating_sub(half.len());
    if need > pool.len() {
        return Err(Error::DegenerateSplit {
            needed: need,
            available: pool.len(),
        });
    }
    let mut conn: Vec<f64> = pool
        .iter()
        .map(|&p| half.iter().map(|&h| g.weight(p, h)).sum())
        .collect();
    for _ in 0..need {
        let mut best = 0;
        for i in 1..pool.len() {
            let better = if most_connected {
                conn[i] > conn[best]
            } else {
                conn[i] < conn[best]
            };
            if better || (conn[i] == conn[best] && pool[i] < pool[best]) {
                best = i;
            }
        }
        let picked = pool.swap_remove(best);
        conn.swap_remove(best);
        for (c, &p) in conn.iter_mut().zip(pool.iter()) {
            *c += g.weight(p, picked);
        }
        half.push(picked);
    }
    Ok(())
}

fn finish_split(
    g: &Graph,
    mut first: Vec<usize>,
    mut second: Vec<usize>,
    leftover: Vec<usize>,
    pool: &[usize],
    target: usize,
    most_connected: bool,
) -> Result<Split> {
    // certificate vertices that do not fit compete with the pool for the
    // remaining places
    let mut spare = leftover;
    for half in [&mut first, &mut second] {
        if half.len() > target {
            spare.extend(half.drain(target..));
        }
    }
    let mut candidates = pool.to_vec();
    candidates.extend_from_slice(&spare);
    top_up(g, &mut first, &mut candidates, target, most_connected)?;
    top_up(g, &mut second, &mut candidates, target, most_connected)?;
    let (mut excess, mut pool_rest): (Vec<usize>, Vec<usize>) =
        candidates.into_iter().partition(|v| spare.contains(v));
    excess.sort_unstable();
    pool_rest.sort_unstable();
    Ok(Split {
        first,
        second,
        excess,
        pool_rest,
    })
}

fn check_split_args(g: &Graph, cert: &[usize], pool: &[usize]) -> Result<()> {
    let mut mask = vec![false; g.n()];
    for &v in cert.iter().chain(pool) {
        if v >= g.n() {
            return Err(Error::contract(format!("vertex {v} out of range")));
        }
        if std::mem::replace(&mut mask[v], true) {
            return Err(Error::contract(format!(
                "vertex {v} in both certificate and pool"
            )));
        }
    }
    Ok(())
}

/// Random halves of a sparse certificate, each filled up to `target` with the
/// pool vertices that connect least to it.
pub fn sparsification<R: Rng + ?Sized>(
    g: &Graph,
    cert: &VertexSet,
    pool: &VertexSet,
    target: usize,
    rng: &mut R,
) -> Result<Split> {
    check_split_args(g, cert.as_slice(), pool.as_slice())?;
    let mut shuffled = cert.as_slice().to_vec();
    shuffled.shuffle(rng);
    let second = shuffled.split_off(shuffled.len().div_ceil(2));
    finish_split(
        g,
        shuffled,
        second,
        Vec::new(),
        pool.as_slice(),
        target,
        false,
    )
}

/// Unzipped halves of a dense certificate (sorted by internal degree), each
/// filled up to `target` with the pool vertices that connect most to it.
pub fn densification(
    g: &Graph,
    cert: &VertexSet,
    pool: &VertexSet,
    target: usize,
) -> Result<Split> {
    if cert.is_empty() {
        return Err(Error::contract("densification of an empty certificate"));
    }
    check_split_args(g, cert.as_slice(), pool.as_slice())?;
    let sorted = sort_by_internal_degree(g, cert.as_slice());
    let (first, second, leftover) = unzip(&sorted);
    finish_split(
        g,
        first.into_vec(),
        second.into_vec(),
        leftover.into_iter().collect(),
        pool.as_slice(),
        target,
        true,
    )
}

/// Density used to route a certificate: ordered-pair internal density, so a
/// clique scores close to 1.
fn routing_density(g: &Graph, cert: &[usize]) -> f64 {
    if cert.is_empty() {
        return 0.0;
    }
    2.0 * internal_density_unchecked(g, cert)
}

fn split_certificate<R: Rng + ?Sized>(
    g: &Graph,
    cert: &[usize],
    pool: &[usize],
    target: usize,
    cfg: &RefineConfig,
    rng: &mut R,
) -> Result<Split> {
    let cert_set = VertexSet::from_vec(cert.to_vec());
    let pool_set = VertexSet::from_vec(pool.to_vec());
    if cert.is_empty() || routing_density(g, cert) < cfg.density_threshold {
        sparsification(g, &cert_set, &pool_set, target, rng)
    } else {
        densification(g, &cert_set, &pool_set, target)
    }
}

/// Splits every class of `p` in two according to `verdicts`.
pub fn refine<R: Rng + ?Sized>(
    g: &Graph,
    p: &EquitablePartition,
    verdicts: &PairVerdicts,
    cfg: &RefineConfig,
    rng: &mut R,
) -> Result<RefinementOutcome> {
    let k = p.k();
    if verdicts.k() != k {
        return Err(Error::contract(format!(
            "verdicts cover {} classes, partition has {k}",
            verdicts.k()
        )));
    }
    let target = p.class_size() / 2;
    let densities = PartitionDensities::compute(g, p);
    let mut done = vec![false; k];
    let mut classes: Vec<Vec<usize>> = Vec::with_capacity(2 * k);
    let mut c0: Vec<usize> = p.exceptional().as_slice().to_vec();
    let mut degenerate = 0;

    for i in 0..k {
        if done[i] {
            continue;
        }
        done[i] = true;
        let has_irregular = (0..k).any(|j| j != i && !verdicts.is_regular(i, j));
        let candidates: Vec<usize> = (0..k)
            .filter(|&j| !done[j] && !verdicts.is_regular(i, j))
            .collect();
        if !has_irregular || candidates.is_empty() {
            let sorted = sort_by_internal_degree(g, p.class(i).as_slice());
            let (a, b, leftover) = unzip(&sorted);
            classes.push(a.into_vec());
            classes.push(b.into_vec());
            c0.extend(leftover);
            continue;
        }

        let j = if cfg.random_partner {
            candidates[rng.gen_range(0..candidates.len())]
        } else {
            argmax_score(&candidates, |j| {
                partner_score(
                    densities.pair(i, j),
                    densities.internal(i),
                    densities.internal(j),
                )
            })
        };
        done[j] = true;
        let certs = verdicts.get(i, j).certificates.ok_or_else(|| {
            Error::contract(format!("irregular pair ({i}, {j}) lacks certificates"))
        })?;

        let pool: Vec<usize> = certs
            .compl_a
            .iter()
            .chain(certs.compl_b.iter())
            .copied()
            .collect();
        let pool_for_j = match split_certificate(g, certs.a.as_slice(), &pool, target, cfg, rng) {
            Ok(split) => {
                classes.push(split.first);
                classes.push(split.second);
                // certificate overflow of C_i may still fill C_j's halves
                let mut rest = split.pool_rest;
                rest.extend(split.excess);
                rest.sort_unstable();
                rest
            }
            Err(Error::DegenerateSplit { .. }) => {
                degenerate += 1;
                c0.extend(p.class(i).iter().copied());
                certs.compl_b.as_slice().to_vec()
            }
            Err(e) => return Err(e),
        };
        match split_certificate(g, certs.b.as_slice(), &pool_for_j, target, cfg, rng) {
            Ok(split) => {
                classes.push(split.first);
                classes.push(split.second);
                c0.extend(split.excess);
                c0.extend(split.pool_rest);
            }
            Err(Error::DegenerateSplit { .. }) => {
                degenerate += 1;
                c0.extend(certs.b.iter().copied());
                c0.extend(pool_for_j);
            }
            Err(e) => return Err(e),
        }
    }

    let eps = p.epsilon();
    let n = p.n();
    let k_new = classes.len();
    let overflow = c0.len() as f64 > eps * n as f64;
    let regular = if overflow && c0.len() > k_new && k_new > 0 {
        redistribute(g, &mut classes, &mut c0);
        true
    } else {
        !overflow
    };

    for class in &mut classes {
        class.sort_unstable();
    }
    c0.sort_unstable();
    let partition = EquitablePartition::new(
        classes.into_iter().map(VertexSet::from_vec).collect(),
        VertexSet::from_vec(c0),
        eps,
        n,
    )?;
    Ok(RefinementOutcome {
        partition,
        regular,
        degenerate_splits: degenerate,
    })
}

/// Deals `C_0` out round-robin (lowest ids first), then trims every class
/// back to the smallest size by returning its lowest internal-degree vertices.
fn redistribute(g: &Graph, classes: &mut [Vec<usize>], c0: &mut Vec<usize>) {
    c0.sort_unstable();
    let k = classes.len();
    for (i, v) in c0.drain(..).enumerate() {
        classes[i % k].push(v);
    }
    let size = classes.iter().map(Vec::len).min().unwrap_or(0);
    for class in classes.iter_mut() {
        if class.len() > size {
            let sorted = sort_by_internal_degree(g, class);
            c0.extend_from_slice(&sorted[size..]);
            *class = sorted[..size].to_vec();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::regularity::{check_partition, PairStatus, PairVerdict};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn set(v: &[usize]) -> VertexSet {
        VertexSet::from_vec(v.to_vec())
    }

    #[test]
    fn unzip_cases() {
        let (a, b, rest) = unzip(&[1, 2, 3, 4, 5, 6]);
        assert_eq!(
            (a.as_slice(), b.as_slice(), rest),
            (&[1, 3, 5][..], &[2, 4, 6][..], None)
        );
        let (a, b, rest) = unzip(&[7]);
        assert!(a.is_empty() && b.is_empty());
        assert_eq!(rest, Some(7));
        let (a, b, rest) = unzip(&[1, 2]);
        assert_eq!(
            (a.as_slice(), b.as_slice(), rest),
            (&[1][..], &[2][..], None)
        );
    }

    #[test]
    fn partner_score_cases() {
        assert!((partner_score(0.8, 0.4, 0.5) - 1.7).abs() < 1e-12);
        assert_eq!(partner_score(1.0, 0.3, 0.3), 2.0);
    }

    #[test]
    fn partner_ties_go_to_lowest_index() {
        // 0 is joined to all of 2,3 and 4,5 the same way; both candidates tie
        let edges = [(0, 2), (0, 3), (1, 2), (0, 4), (0, 5), (1, 4)]
            .into_iter()
            .map(|(u, v)| (u, v, 1.0));
        let g = Graph::from_edges(6, edges).unwrap();
        let pick = select_partner(&g, &set(&[0, 1]), &[set(&[2, 3]), set(&[4, 5])]).unwrap();
        assert_eq!(pick, 0);
        assert!(select_partner(&g, &set(&[0, 1]), &[]).is_err());
    }

    #[test]
    fn sparsification_without_top_up() {
        let g = Graph::empty(4);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let s = sparsification(&g, &set(&[0, 1, 2, 3]), &set(&[]), 2, &mut rng).unwrap();
        assert_eq!((s.first.len(), s.second.len()), (2, 2));
        assert!(s.excess.is_empty() && s.pool_rest.is_empty());
    }

    /// Sum of connections of `picked` into `base`, plus among `picked`.
    fn cost(g: &Graph, base: &[usize], picked: &[usize]) -> f64 {
        let mut c = 0.0;
        for (i, &p) in picked.iter().enumerate() {
            c += base.iter().map(|&b| g.weight(p, b)).sum::<f64>();
            c += picked[i + 1..].iter().map(|&q| g.weight(p, q)).sum::<f64>();
        }
        c
    }

    fn pairs(pool: &[usize]) -> Vec<[usize; 2]> {
        let mut out = Vec::new();
        for i in 0..pool.len() {
            for j in i + 1..pool.len() {
                out.push([pool[i], pool[j]]);
            }
        }
        out
    }

    #[test]
    fn sparsification_top_up_is_minimal() {
        // cert {0, 1}; pool 2..8 with mixed attachment to the certificate
        let edges = [(0, 2), (0, 3), (0, 4), (1, 5), (1, 6), (1, 2), (0, 7)]
            .into_iter()
            .map(|(u, v)| (u, v, 1.0));
        let g = Graph::from_edges(8, edges).unwrap();
        let pool: Vec<usize> = (2..8).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let s = sparsification(&g, &set(&[0, 1]), &set(&pool), 3, &mut rng).unwrap();
        assert_eq!((s.first.len(), s.second.len()), (3, 3));

        let mut available = pool.clone();
        for half in [&s.first, &s.second] {
            let base = [half[0]];
            let picked = &half[1..];
            let best = pairs(&available)
                .iter()
                .map(|p| cost(&g, &base, p))
                .fold(f64::INFINITY, f64::min);
            assert_eq!(cost(&g, &base, picked), best);
            available.retain(|v| !picked.contains(v));
        }
        assert_eq!(s.pool_rest, available);
    }

    #[test]
    fn sparsification_degenerate_split() {
        let g = Graph::empty(4);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(matches!(
            sparsification(&g, &set(&[0, 1]), &set(&[]), 2, &mut rng),
            Err(Error::DegenerateSplit { .. })
        ));
    }

    #[test]
    fn densification_of_clique() {
        let clique: Vec<_> = (0..4)
            .flat_map(|u| (u + 1..4).map(move |v| (u, v, 1.0)))
            .collect();
        let g = Graph::from_edges(4, clique).unwrap();
        let s = densification(&g, &set(&[0, 1, 2, 3]), &set(&[]), 2).unwrap();
        // equal internal degrees: id order, then unzip
        assert_eq!((s.first, s.second), (vec![0, 2], vec![1, 3]));
    }

    #[test]
    fn densification_odd_certificate() {
        // cert {2,3,4} without internal edges; pool {0, 1}; only 0 is tied to 2
        let g = Graph::from_edges(5, [(0, 2, 1.0)]).unwrap();
        let s = densification(&g, &set(&[2, 3, 4]), &set(&[0, 1]), 2).unwrap();
        // halves {2}, {3}; 4 is left over and loses the ties to pool vertices
        assert_eq!(s.first, vec![2, 0]);
        assert_eq!(s.second, vec![3, 1]);
        assert_eq!(s.excess, vec![4]);
        assert!(s.pool_rest.is_empty());
        assert!(densification(&g, &set(&[]), &set(&[3]), 1).is_err());
    }

    #[test]
    fn spare_certificate_vertex_fills_a_gap() {
        // pool is one short; the odd certificate vertex takes the last place
        let g = Graph::empty(5);
        let s = densification(&g, &set(&[2, 3, 4]), &set(&[0]), 2).unwrap();
        assert_eq!((s.first, s.second), (vec![2, 0], vec![3, 4]));
        assert!(s.excess.is_empty());
    }

    fn uniform_partition(k: usize, m: usize, extra: usize, eps: f64) -> EquitablePartition {
        let classes = (0..k)
            .map(|i| VertexSet::from_vec((i * m..(i + 1) * m).collect()))
            .collect();
        let c0 = VertexSet::from_vec((k * m..k * m + extra).collect());
        EquitablePartition::new(classes, c0, eps, k * m + extra).unwrap()
    }

    #[test]
    fn all_regular_refines_by_unzip() {
        let g = Graph::empty(8);
        let p = uniform_partition(2, 4, 0, 0.3);
        let verdicts = check_partition(&g, &p, 0.3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let out = refine(&g, &p, &verdicts, &RefineConfig::default(), &mut rng).unwrap();
        assert_eq!(out.partition.k(), 4);
        assert_eq!(out.partition.class_size(), 2);
        assert!(out.partition.exceptional().is_empty());
        assert!(out.regular);
    }

    #[test]
    fn irregular_pair_refines_into_four() {
        // class 0 = 0..8, class 1 = 8..16; vertices 8..12 see all of class 0
        // and class 0 is a clique, so certificates are dense
        let mut edges: Vec<(usize, usize, f64)> = (0..8)
            .flat_map(|x| (8..12).map(move |y| (x, y, 1.0)))
            .collect();
        edges.extend((0..8).flat_map(|u| (u + 1..8).map(move |v| (u, v, 1.0))));
        let g = Graph::from_edges(16, edges).unwrap();
        let p = uniform_partition(2, 8, 0, 0.3);
        let verdicts = check_partition(&g, &p, 0.3).unwrap();
        assert_eq!(verdicts.get(0, 1).status, PairStatus::Irregular);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let out = refine(&g, &p, &verdicts, &RefineConfig::default(), &mut rng).unwrap();
        assert_eq!(out.partition.k(), 4);
        assert_eq!(out.partition.class_size(), 4);
        assert_eq!(out.degenerate_splits, 0);
    }

    #[test]
    fn overflowing_exceptional_set_is_redistributed() {
        // k = 2 regular classes of 8 unzip to k' = 4 classes of 4; C0 holds 7 = k' + 3
        let p = uniform_partition(2, 8, 7, 0.1);
        let g = Graph::empty(23);
        let verdicts = PairVerdicts::new(
            2,
            vec![PairVerdict {
                status: PairStatus::Regular,
                condition: None,
                certificates: None,
            }],
        )
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let out = refine(&g, &p, &verdicts, &RefineConfig::default(), &mut rng).unwrap();
        assert!(out.regular);
        assert_eq!(out.partition.k(), 4);
        assert_eq!(out.partition.class_size(), 5);
        assert_eq!(out.partition.exceptional().len(), 3);
        let total: usize = out
            .partition
            .classes()
            .iter()
            .map(VertexSet::len)
            .sum::<usize>()
            + out.partition.exceptional().len();
        assert_eq!(total, 23);
    }

    #[test]
    fn small_overflow_is_irregular() {
        // C0 of 3 exceeds eps n = 2.3 but not k' = 4
        let p = uniform_partition(2, 10, 3, 0.1);
        let g = Graph::empty(23);
        let verdicts = check_partition(&g, &p, 0.1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let out = refine(&g, &p, &verdicts, &RefineConfig::default(), &mut rng).unwrap();
        assert!(!out.regular);
        assert_eq!(out.partition.exceptional().len(), 3);
    }
}
