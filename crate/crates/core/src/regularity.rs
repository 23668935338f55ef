//! Regularity checks for class pairs.
//!
//! A pair `(C_r, C_s)` of equal-size classes is tested with the three
//! degree/co-degree conditions of the constructive regularity lemma:
//!
//! 1. average bipartite degree below `eps^3 m`: regular;
//! 2. more than `eps^4 m / 8` vertices whose degree deviates from the average
//!    by at least `eps^4 m`: irregular, certificates grown around the most
//!    deviating vertex;
//! 3. a greedy search for subsets whose density differs from the pair density
//!    by at least `eps^4`: irregular if found, regular otherwise.
//!
//! Conditions 2 and 3 are run from both sides of the pair so the verdict does
//! not depend on argument order.

use std::sync::atomic::{AtomicBool, Ordering};

use crate::error::{Error, Result};
use crate::graph::{density_unchecked, Graph, VertexSet};

/// Maximum number of seed vertices tried for deviation-based certificates.
const MAX_CONDITION2_SEEDS: usize = 16;

static WARNED_EPS: AtomicBool = AtomicBool::new(false);

/// Classes `C_1..C_k` of identical size plus the exceptional set `C_0`.
#[derive(Clone, Debug, PartialEq)]
pub struct EquitablePartition {
    classes: Vec<VertexSet>,
    exceptional: VertexSet,
    epsilon: f64,
    n: usize,
}

impl EquitablePartition {
    /// Checks equal class sizes and that classes plus `C_0` partition `0..n`.
    pub fn new(
        classes: Vec<VertexSet>,
        exceptional: VertexSet,
        epsilon: f64,
        n: usize,
    ) -> Result<Self> {
        if let Some(first) = classes.first() {
            if let Some(bad) = classes.iter().find(|c| c.len() != first.len()) {
                return Err(Error::contract(format!(
                    "partition is not equitable: class sizes {} and {}",
                    first.len(),
                    bad.len()
                )));
            }
        }
        let mut seen = vec![false; n];
        for v in classes
            .iter()
            .flat_map(|c| c.iter())
            .chain(exceptional.iter())
        {
            if *v >= n {
                return Err(Error::contract(format!(
                    "vertex {v} out of range for n={n}"
                )));
            }
            if std::mem::replace(&mut seen[*v], true) {
                return Err(Error::contract(format!(
                    "vertex {v} appears twice in partition"
                )));
            }
        }
        if let Some(missing) = seen.iter().position(|s| !s) {
            return Err(Error::contract(format!(
                "vertex {missing} missing from partition"
            )));
        }
        Ok(EquitablePartition {
            classes,
            exceptional,
            epsilon,
            n,
        })
    }

    pub fn k(&self) -> usize {
        self.classes.len()
    }

    /// Common class size `m` (0 when there are no classes).
    pub fn class_size(&self) -> usize {
        self.classes.first().map_or(0, VertexSet::len)
    }

    pub fn classes(&self) -> &[VertexSet] {
        &self.classes
    }

    pub fn class(&self, i: usize) -> &VertexSet {
        &self.classes[i]
    }

    pub fn exceptional(&self) -> &VertexSet {
        &self.exceptional
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Class index per vertex, `None` for `C_0`.
    pub fn membership(&self) -> Vec<Option<usize>> {
        let mut out = vec![None; self.n];
        for (i, c) in self.classes.iter().enumerate() {
            for &v in c {
                out[v] = Some(i);
            }
        }
        out
    }

    /// `|C_0| < eps n`.
    pub fn exceptional_is_small(&self) -> bool {
        (self.exceptional.len() as f64) < self.epsilon * self.n as f64
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PairStatus {
    Regular,
    Irregular,
}

/// Which of the three conditions settled a verdict.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Condition {
    LowDensity = 1,
    DegreeDeviation = 2,
    DensityGap = 3,
}

/// Witnesses of irregularity, `a ⊆ C_r` and `b ⊆ C_s`, with their complements.
#[derive(Clone, Debug, PartialEq)]
pub struct Certificates {
    pub a: VertexSet,
    pub b: VertexSet,
    pub compl_a: VertexSet,
    pub compl_b: VertexSet,
}

impl Certificates {
    fn new(cr: &[usize], cs: &[usize], a: Vec<usize>, b: Vec<usize>) -> Self {
        let compl_a = cr.iter().copied().filter(|v| !a.contains(v)).collect();
        let compl_b = cs.iter().copied().filter(|v| !b.contains(v)).collect();
        Certificates {
            a: VertexSet::from_vec(a),
            b: VertexSet::from_vec(b),
            compl_a: VertexSet::from_vec(compl_a),
            compl_b: VertexSet::from_vec(compl_b),
        }
    }

    /// Same certificates viewed from the other class of the pair.
    pub fn swapped(&self) -> Certificates {
        Certificates {
            a: self.b.clone(),
            b: self.a.clone(),
            compl_a: self.compl_b.clone(),
            compl_b: self.compl_a.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PairVerdict {
    pub status: PairStatus,
    pub condition: Option<Condition>,
    pub certificates: Option<Certificates>,
}

impl PairVerdict {
    fn regular(condition: Option<Condition>) -> Self {
        PairVerdict {
            status: PairStatus::Regular,
            condition,
            certificates: None,
        }
    }

    pub fn is_regular(&self) -> bool {
        self.status == PairStatus::Regular
    }

    /// Verdict for the pair with its classes exchanged.
    pub fn swapped(&self) -> PairVerdict {
        PairVerdict {
            status: self.status,
            condition: self.condition,
            certificates: self.certificates.as_ref().map(Certificates::swapped),
        }
    }
}

/// Smallest admissible certificate, `ceil(eps^4 m / 16)`.
pub fn min_certificate_size(eps: f64, m: usize) -> usize {
    ((eps.powi(4) / 16.0) * m as f64).ceil().max(1.0) as usize
}

/// Initial size of the greedy candidate, `ceil(eps^4 m / 4)`.
pub fn greedy_seed_size(eps: f64, m: usize) -> usize {
    ((eps.powi(4) / 4.0) * m as f64).ceil().clamp(1.0, m as f64) as usize
}

/// Bipartite block of a pair seen from side `b`: one row per `b` vertex,
/// one column per `a` vertex.
struct PairBlock {
    m: usize,
    w: Vec<f32>,
    deg_b: Vec<f64>,
    avg: f64,
}

impl PairBlock {
    fn new(g: &Graph, a: &[usize], b: &[usize]) -> Self {
        let m = a.len();
        let w = g.block(b, a);
        Self::from_block(m, w)
    }

    fn from_block(m: usize, w: Vec<f32>) -> Self {
        let deg_b: Vec<f64> = (0..m)
            .map(|i| w[i * m..(i + 1) * m].iter().map(|&x| x as f64).sum())
            .collect();
        let avg = deg_b.iter().sum::<f64>() / m as f64;
        PairBlock { m, w, deg_b, avg }
    }

    /// The same pair seen from side `a`.
    fn transposed(&self) -> PairBlock {
        let m = self.m;
        let mut t = vec![0f32; m * m];
        for i in 0..m {
            for j in 0..m {
                t[j * m + i] = self.w[i * m + j];
            }
        }
        Self::from_block(m, t)
    }

    fn row(&self, i: usize) -> &[f32] {
        &self.w[i * self.m..(i + 1) * self.m]
    }

    /// `|N(y1) ∩ N(y2) ∩ a|` in its weighted form.
    fn co_degree(&self, i: usize, j: usize) -> f64 {
        self.row(i)
            .iter()
            .zip(self.row(j))
            .map(|(&x, &y)| x as f64 * y as f64)
            .sum()
    }

    fn sigma(&self, i: usize, j: usize) -> f64 {
        self.co_degree(i, j) - self.avg * self.avg / self.m as f64
    }
}

fn validate_pair(g: &Graph, a: &VertexSet, b: &VertexSet) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::contract(format!(
            "pair classes differ in size: {} and {}",
            a.len(),
            b.len()
        )));
    }
    let mut mask = vec![false; g.n()];
    for &v in a.iter().chain(b.iter()) {
        if v >= g.n() {
            return Err(Error::contract(format!("vertex {v} out of range")));
        }
        if std::mem::replace(&mut mask[v], true) {
            return Err(Error::contract(format!(
                "vertex {v} repeated across the pair"
            )));
        }
    }
    Ok(())
}

fn check_epsilon(eps: f64) -> Result<()> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::contract(format!(
            "eps must lie in (0, 1), got {eps}"
        )));
    }
    if eps >= 1.0 / 16.0 && !WARNED_EPS.swap(true, Ordering::Relaxed) {
        log::warn!(
            "eps={eps} is outside (0, 1/16); the regularity conditions are used as a heuristic only"
        );
    }
    Ok(())
}

/// `σ(y1, y2) = |N(y1) ∩ N(y2) ∩ a| - d̄² / m` for distinct `y1, y2 ∈ b`.
pub fn neighbourhood_deviation(
    g: &Graph,
    a: &VertexSet,
    b: &VertexSet,
    y1: usize,
    y2: usize,
) -> Result<f64> {
    validate_pair(g, a, b)?;
    let i = b
        .iter()
        .position(|&v| v == y1)
        .ok_or_else(|| Error::contract(format!("vertex {y1} is not in b")))?;
    let j = b
        .iter()
        .position(|&v| v == y2)
        .ok_or_else(|| Error::contract(format!("vertex {y2} is not in b")))?;
    if i == j {
        return Err(Error::contract(
            "neighbourhood deviation needs distinct vertices",
        ));
    }
    let block = PairBlock::new(g, a.as_slice(), b.as_slice());
    Ok(block.sigma(i, j))
}

/// `σ(Y) = Σ σ(y1, y2) / |Y|²` over ordered pairs of distinct vertices of `y`.
pub fn set_deviation(g: &Graph, a: &VertexSet, b: &VertexSet, y: &VertexSet) -> Result<f64> {
    validate_pair(g, a, b)?;
    if y.len() < 2 {
        return Err(Error::contract("set deviation needs at least two vertices"));
    }
    let idx: Vec<usize> = y
        .iter()
        .map(|v| {
            b.iter()
                .position(|x| x == v)
                .ok_or_else(|| Error::contract(format!("vertex {v} is not in b")))
        })
        .collect::<Result<_>>()?;
    let block = PairBlock::new(g, a.as_slice(), b.as_slice());
    let mut total = 0.0;
    for &i in &idx {
        for &j in &idx {
            if i != j {
                total += block.sigma(i, j);
            }
        }
    }
    let len = y.len() as f64;
    Ok(total / (len * len))
}

/// Condition 2 seen from side `b`. Returns certificates as (a-side, b-side)
/// index lists into the block's columns and rows.
fn degree_deviation_certificates(block: &PairBlock, eps: f64) -> Option<(Vec<usize>, Vec<usize>)> {
    let m = block.m;
    let e4 = eps.powi(4);
    let threshold = e4 * m as f64;
    let mut deviating: Vec<usize> = (0..m)
        .filter(|&i| (block.deg_b[i] - block.avg).abs() >= threshold)
        .collect();
    if deviating.len() as f64 <= e4 * m as f64 / 8.0 {
        return None;
    }
    let min_size = min_certificate_size(eps, m);
    // most deviating first; ties keep ascending position, which callers order by id
    deviating.sort_by(|&x, &y| {
        let dx = (block.deg_b[x] - block.avg).abs();
        let dy = (block.deg_b[y] - block.avg).abs();
        dy.total_cmp(&dx)
    });
    for &y0 in deviating.iter().take(MAX_CONDITION2_SEEDS) {
        let b_side: Vec<usize> = (0..m)
            .filter(|&y| block.sigma(y0, y) >= 2.0 * threshold)
            .collect();
        let a_side: Vec<usize> = (0..m).filter(|&x| block.row(y0)[x] > 0.0).collect();
        if a_side.len() >= min_size && b_side.len() >= min_size {
            return Some((a_side, b_side));
        }
    }
    // Vertices deviating in the same direction, against the whole opposite
    // class, always realise a density gap of at least eps^4.
    let (up, down): (Vec<usize>, Vec<usize>) =
        deviating.iter().partition(|&&i| block.deg_b[i] > block.avg);
    let mut side = if up.len() >= down.len() { up } else { down };
    side.sort_unstable();
    Some(((0..m).collect(), side))
}

/// Co-degree matrix `W Wᵀ` of a block, one row per `b` vertex.
fn co_degrees(block: &PairBlock) -> Vec<f64> {
    let m = block.m;
    let w = faer::Mat::<f64>::from_fn(m, m, |i, j| block.w[i * m + j] as f64);
    let c = &w * w.transpose();
    let mut out = vec![0.0; m * m];
    for i in 0..m {
        for j in 0..m {
            out[i * m + j] = c[(i, j)];
        }
    }
    out
}

/// Condition-3 certificates from neighbourhood deviations, seen from side
/// `b`: for a vertex `y0` of typical degree, `B' = {y : σ(y0, y) >= 2 eps^4 m}`
/// and `A' = N(y0)`. Candidates are tried largest `B'` first.
fn co_degree_search(
    block: &PairBlock,
    eps: f64,
    accept: &mut dyn FnMut(&[usize], &[usize]) -> bool,
) -> bool {
    let m = block.m;
    let e4 = eps.powi(4);
    let threshold = 2.0 * e4 * m as f64;
    let offset = block.avg * block.avg / m as f64;
    let co = co_degrees(block);
    let mut sized: Vec<(usize, usize)> = (0..m)
        .filter(|&y0| (block.deg_b[y0] - block.avg).abs() < e4 * m as f64)
        .map(|y0| {
            let count = co[y0 * m..(y0 + 1) * m]
                .iter()
                .filter(|&&c| c - offset >= threshold)
                .count();
            (y0, count)
        })
        .filter(|&(_, count)| count as f64 >= e4 * m as f64 / 4.0)
        .collect();
    sized.sort_by(|x, y| y.1.cmp(&x.1).then(x.0.cmp(&y.0)));
    for &(y0, _) in sized.iter().take(MAX_CONDITION2_SEEDS) {
        let b_side: Vec<usize> = (0..m)
            .filter(|&y| co[y0 * m + y] - offset >= threshold)
            .collect();
        let a_side: Vec<usize> = (0..m).filter(|&x| block.row(y0)[x] > 0.0).collect();
        if accept(&a_side, &b_side) {
            return true;
        }
    }
    false
}

/// Greedy condition-3 search seen from side `b`, as index lists.
fn greedy_search(
    block: &PairBlock,
    eps: f64,
    accept: &mut dyn FnMut(&[usize], &[usize]) -> bool,
) -> bool {
    let m = block.m;
    let e4 = eps.powi(4);
    let min_size = min_certificate_size(eps, m);
    let pair_density = block.avg / m as f64;

    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&x, &y| block.deg_b[y].total_cmp(&block.deg_b[x]));

    // weight from each a-vertex into the current candidate
    let mut into_y = vec![0f64; m];
    let seed = greedy_seed_size(eps, m);
    for (t, &y) in order.iter().enumerate() {
        for (acc, &w) in into_y.iter_mut().zip(block.row(y)) {
            *acc += w as f64;
        }
        let size = t + 1;
        if size < seed || size < min_size {
            continue;
        }
        let half = size as f64 / 2.0;
        let mut count = 0usize;
        let mut weight = 0.0;
        for &c in &into_y {
            if c > half {
                count += 1;
                weight += c;
            }
        }
        if count < min_size {
            continue;
        }
        let density = weight / (count as f64 * size as f64);
        if (density - pair_density).abs() >= e4 {
            let a_side: Vec<usize> = (0..m).filter(|&x| into_y[x] > half).collect();
            let mut b_side = order[..size].to_vec();
            b_side.sort_unstable();
            if accept(&a_side, &b_side) {
                return true;
            }
        }
    }
    false
}

fn gap_holds(g: &Graph, cr: &[usize], cs: &[usize], a: &[usize], b: &[usize], eps: f64) -> bool {
    let min_size = min_certificate_size(eps, cr.len());
    if a.len() < min_size || b.len() < min_size {
        return false;
    }
    let d_pair = density_unchecked(g, cr, cs);
    let d_cert = density_unchecked(g, a, b);
    (d_cert - d_pair).abs() >= eps.powi(4)
}

fn map_indices(idx: &[usize], vertices: &[usize]) -> Vec<usize> {
    idx.iter().map(|&i| vertices[i]).collect()
}

fn check_scale(eps: f64, m: usize) -> Result<()> {
    if m < 2 {
        return Err(Error::DegenerateScale {
            class_size: m,
            epsilon: eps,
        });
    }
    Ok(())
}

/// Greedy condition-3 certificates `(A', B')` with `A' ⊆ cr`, `B' ⊆ cs`.
///
/// `cs` is ordered by bipartite degree (highest first); the candidate `B'`
/// starts with the `ceil(eps^4 m / 4)` top vertices and grows one vertex at a
/// time. `A'` is the set of `cr` vertices adjacent to more than half of `B'`.
/// The search stops at the first candidate whose density differs from the pair
/// density by at least `eps^4`.
pub fn greedy_certificates(
    g: &Graph,
    cr: &VertexSet,
    cs: &VertexSet,
    eps: f64,
) -> Result<Option<(VertexSet, VertexSet)>> {
    validate_pair(g, cr, cs)?;
    check_epsilon(eps)?;
    check_scale(eps, cr.len())?;
    let block = PairBlock::new(g, cr.as_slice(), cs.as_slice());
    Ok(greedy_oriented(
        g,
        &block,
        cr.as_slice(),
        cs.as_slice(),
        eps,
    ))
}

fn greedy_oriented(
    g: &Graph,
    block: &PairBlock,
    cr: &[usize],
    cs: &[usize],
    eps: f64,
) -> Option<(VertexSet, VertexSet)> {
    let mut found = None;
    greedy_search(block, eps, &mut |a_idx, b_idx| {
        let a = map_indices(a_idx, cr);
        let b = map_indices(b_idx, cs);
        if gap_holds(g, cr, cs, &a, &b, eps) {
            found = Some((VertexSet::from_vec(a), VertexSet::from_vec(b)));
            true
        } else {
            false
        }
    });
    found
}

/// Decides whether `(cr, cs)` is regular, producing certificates otherwise.
pub fn check_pair(g: &Graph, cr: &VertexSet, cs: &VertexSet, eps: f64) -> Result<PairVerdict> {
    validate_pair(g, cr, cs)?;
    check_epsilon(eps)?;
    let m = cr.len();
    check_scale(eps, m)?;
    Ok(check_pair_unchecked(g, cr.as_slice(), cs.as_slice(), eps))
}

pub(crate) fn check_pair_unchecked(g: &Graph, cr: &[usize], cs: &[usize], eps: f64) -> PairVerdict {
    let m = cr.len();
    let from_s = PairBlock::new(g, cr, cs);
    if from_s.avg < eps.powi(3) * m as f64 {
        return PairVerdict::regular(Some(Condition::LowDensity));
    }
    let from_r = from_s.transposed();

    let irregular = |condition, a: Vec<usize>, b: Vec<usize>| PairVerdict {
        status: PairStatus::Irregular,
        condition: Some(condition),
        certificates: Some(Certificates::new(cr, cs, a, b)),
    };

    // condition 2, seen from cs then from cr
    if let Some((a_idx, b_idx)) = degree_deviation_certificates(&from_s, eps) {
        let (a, b) = (map_indices(&a_idx, cr), map_indices(&b_idx, cs));
        if gap_holds(g, cr, cs, &a, &b, eps) {
            return irregular(Condition::DegreeDeviation, a, b);
        }
    }
    if let Some((b_idx, a_idx)) = degree_deviation_certificates(&from_r, eps) {
        let (a, b) = (map_indices(&a_idx, cr), map_indices(&b_idx, cs));
        if gap_holds(g, cr, cs, &a, &b, eps) {
            return irregular(Condition::DegreeDeviation, a, b);
        }
    }

    // condition 3: deviation-based certificates, then the greedy search
    for (block, rows, cols, flip) in [(&from_s, cs, cr, false), (&from_r, cr, cs, true)] {
        let mut found = None;
        co_degree_search(block, eps, &mut |col_idx, row_idx| {
            let (x, y) = (map_indices(col_idx, cols), map_indices(row_idx, rows));
            let (a, b) = if flip { (y, x) } else { (x, y) };
            if gap_holds(g, cr, cs, &a, &b, eps) {
                found = Some((a, b));
                true
            } else {
                false
            }
        });
        if let Some((a, b)) = found {
            return irregular(Condition::DensityGap, a, b);
        }
    }
    if let Some((a, b)) = greedy_oriented(g, &from_s, cr, cs, eps) {
        return irregular(Condition::DensityGap, a.into_vec(), b.into_vec());
    }
    if let Some((b, a)) = greedy_oriented(g, &from_r, cs, cr, eps) {
        return irregular(Condition::DensityGap, a.into_vec(), b.into_vec());
    }
    PairVerdict::regular(None)
}

/// Pair densities and internal densities of every class of a partition.
#[derive(Clone, Debug, PartialEq)]
pub struct PartitionDensities {
    k: usize,
    pair: Vec<f64>,
    internal: Vec<f64>,
}

impl PartitionDensities {
    pub fn compute(g: &Graph, p: &EquitablePartition) -> Self {
        let k = p.k();
        let m = p.class_size() as f64;
        let membership = p.membership();
        let mut weight = vec![0.0f64; k * k];
        for (ci, class) in p.classes().iter().enumerate() {
            for &u in class {
                for (v, w) in g.neighbours(u) {
                    if let Some(cj) = membership[v] {
                        weight[ci * k + cj] += w;
                    }
                }
            }
        }
        let mut pair = vec![0.0; k * k];
        let mut internal = vec![0.0; k];
        for i in 0..k {
            internal[i] = weight[i * k + i] / 2.0 / (m * m);
            for j in 0..k {
                if i != j {
                    pair[i * k + j] = weight[i * k + j] / (m * m);
                }
            }
        }
        PartitionDensities { k, pair, internal }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn pair(&self, i: usize, j: usize) -> f64 {
        self.pair[i * self.k + j]
    }

    pub fn internal(&self, i: usize) -> f64 {
        self.internal[i]
    }

    pub fn internal_all(&self) -> &[f64] {
        &self.internal
    }

    /// `(1/k²) Σ_{s<t} d(C_s, C_t)²`.
    pub fn sze_idx(&self) -> f64 {
        let k = self.k;
        let mut total = 0.0;
        for s in 0..k {
            for t in s + 1..k {
                total += self.pair(s, t).powi(2);
            }
        }
        total / (k * k) as f64
    }
}

/// Partition index `(1/k²) Σ_{s<t} d(C_s, C_t)²`, always within `[0, 1/2]`.
pub fn sze_idx(g: &Graph, p: &EquitablePartition) -> Result<f64> {
    if p.k() < 2 {
        return Err(Error::contract(format!(
            "sze_idx needs k >= 2, got {}",
            p.k()
        )));
    }
    Ok(PartitionDensities::compute(g, p).sze_idx())
}

/// Verdicts for every unordered class pair `i < j`, flattened row by row.
#[derive(Clone, Debug, PartialEq)]
pub struct PairVerdicts {
    k: usize,
    verdicts: Vec<PairVerdict>,
}

impl PairVerdicts {
    pub fn new(k: usize, verdicts: Vec<PairVerdict>) -> Result<Self> {
        if verdicts.len() != k * k.saturating_sub(1) / 2 {
            return Err(Error::contract(format!(
                "{} verdicts do not cover the {} pairs of {k} classes",
                verdicts.len(),
                k * k.saturating_sub(1) / 2
            )));
        }
        Ok(PairVerdicts { k, verdicts })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    fn index(&self, i: usize, j: usize) -> usize {
        debug_assert!(i < j && j < self.k);
        i * self.k - i * (i + 1) / 2 + (j - i - 1)
    }

    /// Verdict for `(C_i, C_j)` oriented so certificates read `a ⊆ C_i`.
    pub fn get(&self, i: usize, j: usize) -> PairVerdict {
        if i < j {
            self.verdicts[self.index(i, j)].clone()
        } else {
            self.verdicts[self.index(j, i)].swapped()
        }
    }

    pub fn is_regular(&self, i: usize, j: usize) -> bool {
        let (a, b) = if i < j { (i, j) } else { (j, i) };
        self.verdicts[self.index(a, b)].is_regular()
    }

    pub fn irregular_count(&self) -> usize {
        self.verdicts.iter().filter(|v| !v.is_regular()).count()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, &PairVerdict)> + '_ {
        let k = self.k;
        (0..k)
            .flat_map(move |i| (i + 1..k).map(move |j| (i, j)))
            .zip(self.verdicts.iter())
            .map(|((i, j), v)| (i, j, v))
    }
}

/// Checks every class pair of `p`. Pairs are independent and may run on the
/// rayon pool; the result order is fixed.
pub fn check_partition(g: &Graph, p: &EquitablePartition, eps: f64) -> Result<PairVerdicts> {
    use rayon::prelude::*;

    check_epsilon(eps)?;
    check_scale(eps, p.class_size())?;
    let k = p.k();
    let pairs: Vec<(usize, usize)> = (0..k)
        .flat_map(|i| (i + 1..k).map(move |j| (i, j)))
        .collect();
    let verdicts = pairs
        .par_iter()
        .map(|&(i, j)| check_pair_unchecked(g, p.class(i).as_slice(), p.class(j).as_slice(), eps))
        .collect();
    PairVerdicts::new(k, verdicts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::edge_density;

    fn set(v: &[usize]) -> VertexSet {
        VertexSet::from_vec(v.to_vec())
    }

    fn complete_bipartite(m: usize) -> (Graph, VertexSet, VertexSet) {
        let edges = (0..m).flat_map(|u| (m..2 * m).map(move |v| (u, v, 1.0)));
        let g = Graph::from_edges(2 * m, edges).unwrap();
        (
            g,
            set(&(0..m).collect::<Vec<_>>()),
            set(&(m..2 * m).collect::<Vec<_>>()),
        )
    }

    /// a = {0,1,2}, b = {3,4,5}; 3 and 4 see all of a, 5 is isolated.
    fn lopsided() -> (Graph, VertexSet, VertexSet) {
        let edges = [3, 4]
            .into_iter()
            .flat_map(|y| (0..3).map(move |x| (x, y, 1.0)));
        let g = Graph::from_edges(6, edges).unwrap();
        (g, set(&[0, 1, 2]), set(&[3, 4, 5]))
    }

    /// Set-intersection evaluation of σ, written independently of the block code.
    fn sigma_oracle(g: &Graph, a: &[usize], b: &[usize], y1: usize, y2: usize) -> f64 {
        let n1: std::collections::BTreeSet<usize> = a
            .iter()
            .copied()
            .filter(|&x| g.weight(x, y1) > 0.0)
            .collect();
        let n2: std::collections::BTreeSet<usize> = a
            .iter()
            .copied()
            .filter(|&x| g.weight(x, y2) > 0.0)
            .collect();
        let common = n1.intersection(&n2).count() as f64;
        let total: f64 = a
            .iter()
            .chain(b)
            .map(|&u| {
                let other = if a.contains(&u) { b } else { a };
                other.iter().filter(|&&v| g.weight(u, v) > 0.0).count() as f64
            })
            .sum();
        let m = a.len() as f64;
        let avg = total / (2.0 * m);
        common - avg * avg / m
    }

    #[test]
    fn sigma_cases() {
        let (g, a, b) = complete_bipartite(4);
        assert_eq!(neighbourhood_deviation(&g, &a, &b, 4, 5).unwrap(), 0.0);

        let g0 = Graph::empty(8);
        assert_eq!(neighbourhood_deviation(&g0, &a, &b, 4, 5).unwrap(), 0.0);

        let (g, a, b) = lopsided();
        let oracle = sigma_oracle(&g, a.as_slice(), b.as_slice(), 3, 4);
        assert!((oracle - 5.0 / 3.0).abs() < 1e-12);
        let got = neighbourhood_deviation(&g, &a, &b, 3, 4).unwrap();
        assert!((got - 5.0 / 3.0).abs() < 1e-12);

        assert!(neighbourhood_deviation(&g, &a, &b, 3, 3).is_err());
        assert!(neighbourhood_deviation(&g, &a, &b, 0, 3).is_err());
    }

    #[test]
    fn set_deviation_cases() {
        let (g, a, b) = complete_bipartite(4);
        assert_eq!(set_deviation(&g, &a, &b, &set(&[4, 5, 6])).unwrap(), 0.0);
        let g0 = Graph::empty(8);
        assert_eq!(set_deviation(&g0, &a, &b, &set(&[4, 5])).unwrap(), 0.0);

        let (g, a, b) = lopsided();
        let got = set_deviation(&g, &a, &b, &set(&[3, 4])).unwrap();
        assert!((got - 5.0 / 6.0).abs() < 1e-12);
        assert!(set_deviation(&g, &a, &b, &set(&[3])).is_err());
    }

    #[test]
    fn complete_pair_is_regular() {
        let (g, a, b) = complete_bipartite(20);
        for eps in [0.05, 0.3, 0.6] {
            assert!(check_pair(&g, &a, &b, eps).unwrap().is_regular());
        }
    }

    #[test]
    fn edgeless_pair_regular_by_condition_one() {
        let g = Graph::empty(2000);
        let a = set(&(0..1000).collect::<Vec<_>>());
        let b = set(&(1000..2000).collect::<Vec<_>>());
        let v = check_pair(&g, &a, &b, 0.1).unwrap();
        assert_eq!(v.status, PairStatus::Regular);
        assert_eq!(v.condition, Some(Condition::LowDensity));
    }

    /// Half of cs sees all of cr, the other half sees nothing.
    fn half_attached(m: usize) -> (Graph, VertexSet, VertexSet) {
        let edges = (0..m).flat_map(|x| (m..m + m / 2).map(move |y| (x, y, 1.0)));
        let g = Graph::from_edges(2 * m, edges).unwrap();
        (
            g,
            set(&(0..m).collect::<Vec<_>>()),
            set(&(m..2 * m).collect::<Vec<_>>()),
        )
    }

    #[test]
    fn planted_half_pair_is_irregular() {
        let m = 200;
        let eps = 0.06;
        let (g, a, b) = half_attached(m);
        let v = check_pair(&g, &a, &b, eps).unwrap();
        assert_eq!(v.status, PairStatus::Irregular);
        let c = v.certificates.unwrap();
        let gap = (edge_density(&g, &c.a, &c.b).unwrap() - edge_density(&g, &a, &b).unwrap()).abs();
        assert!(gap >= eps.powi(4));
        assert!(c.a.len() >= min_certificate_size(eps, m));
        assert!(c.b.len() >= min_certificate_size(eps, m));
        assert_eq!(c.a.len() + c.compl_a.len(), m);
        assert_eq!(c.b.len() + c.compl_b.len(), m);
    }

    #[test]
    fn greedy_finds_dense_half() {
        let m = 40;
        let eps = 0.3;
        let (g, a, b) = half_attached(m);
        let (ca, cb) = greedy_certificates(&g, &a, &b, eps).unwrap().unwrap();
        // the candidate grows from the attached half
        assert!(cb.iter().all(|&y| y < m + m / 2));
        let gap = (edge_density(&g, &ca, &cb).unwrap() - 0.5).abs();
        assert!(gap >= eps.powi(4));
    }

    #[test]
    fn greedy_none_on_uniform_pair() {
        let (g, a, b) = complete_bipartite(16);
        assert_eq!(greedy_certificates(&g, &a, &b, 0.3).unwrap(), None);
    }

    #[test]
    fn greedy_signals_degenerate_scale() {
        let g = Graph::from_edges(2, [(0, 1, 1.0)]).unwrap();
        assert!(matches!(
            greedy_certificates(&g, &set(&[0]), &set(&[1]), 0.3),
            Err(Error::DegenerateScale { .. })
        ));
    }

    #[test]
    fn check_pair_rejects_bad_input() {
        let (g, a, _) = complete_bipartite(4);
        assert!(check_pair(&g, &a, &set(&[4, 5]), 0.3).is_err());
        assert!(check_pair(&g, &a, &set(&[4, 5, 6, 7]), 0.0).is_err());
        assert!(check_pair(&g, &a, &set(&[4, 5, 6, 7]), 1.5).is_err());
    }

    fn partition(classes: Vec<Vec<usize>>, n: usize) -> EquitablePartition {
        let used: Vec<usize> = classes.iter().flatten().copied().collect();
        let rest = (0..n).filter(|v| !used.contains(v)).collect();
        EquitablePartition::new(
            classes.into_iter().map(VertexSet::from_vec).collect(),
            VertexSet::from_vec(rest),
            0.25,
            n,
        )
        .unwrap()
    }

    #[test]
    fn sze_idx_cases() {
        let classes: Vec<Vec<usize>> = (0..4).map(|i| vec![2 * i, 2 * i + 1]).collect();
        let p = partition(classes, 8);
        assert_eq!(sze_idx(&Graph::empty(8), &p).unwrap(), 0.0);

        let full: Vec<_> = (0..8)
            .flat_map(|u| (u + 1..8).map(move |v| (u, v, 1.0)))
            .collect();
        let g = Graph::from_edges(8, full).unwrap();
        assert_eq!(sze_idx(&g, &p).unwrap(), 0.375);

        let g = Graph::from_edges(4, [(0, 2, 1.0), (1, 3, 1.0)]).unwrap();
        let p = partition(vec![vec![0, 1], vec![2, 3]], 4);
        assert_eq!(sze_idx(&g, &p).unwrap(), 0.0625);

        let p = partition(vec![vec![0, 1, 2, 3]], 4);
        assert!(sze_idx(&g, &p).is_err());
    }

    #[test]
    fn partition_validation() {
        let ok = EquitablePartition::new(vec![set(&[0, 1]), set(&[2, 3])], set(&[4]), 0.3, 5);
        assert!(ok.is_ok());
        assert!(
            EquitablePartition::new(vec![set(&[0, 1]), set(&[2])], set(&[3, 4]), 0.3, 5).is_err()
        );
        assert!(
            EquitablePartition::new(vec![set(&[0, 1]), set(&[1, 3])], set(&[2, 4]), 0.3, 5)
                .is_err()
        );
        assert!(
            EquitablePartition::new(vec![set(&[0, 1]), set(&[2, 3])], set(&[]), 0.3, 5).is_err()
        );
    }

    #[test]
    fn verdict_table_orientation() {
        let (g, a, b) = half_attached(40);
        let v = check_pair(&g, &a, &b, 0.3).unwrap();
        let table = PairVerdicts::new(2, vec![v.clone()]).unwrap();
        assert_eq!(table.get(0, 1), v);
        let back = table.get(1, 0);
        assert_eq!(
            back.certificates.unwrap().a,
            v.certificates.clone().unwrap().b
        );
        assert!(PairVerdicts::new(3, vec![v]).is_err());
    }
}
