//! Undirected weighted graphs, edge-list I/O and the density primitives the
//! regularity machinery is built on.
//!
//! Weights live in `[0, 1]`; unweighted input gets weight `1.0`. Small graphs
//! are stored as a dense row-major matrix, larger ones as compressed sparse
//! rows. Both layouts answer `weight(u, v)` and row scans without allocation.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};

/// Graphs with at most this many vertices use the dense layout.
pub const DENSE_THRESHOLD: usize = 8192;

/// Comment line recognised by the loader as a lower bound on the vertex count.
const VERTICES_HEADER: &str = "# vertices:";

/// Ordered list of distinct vertex ids.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct VertexSet(Vec<usize>);

impl VertexSet {
    /// Validates that ids are distinct and below `n`.
    pub fn new(vertices: Vec<usize>, n: usize) -> Result<Self> {
        let mut seen = vec![false; n];
        for &v in &vertices {
            if v >= n {
                return Err(Error::contract(format!(
                    "vertex {v} out of range for n={n}"
                )));
            }
            if std::mem::replace(&mut seen[v], true) {
                return Err(Error::contract(format!("vertex {v} listed twice")));
            }
        }
        Ok(VertexSet(vertices))
    }

    pub(crate) fn from_vec(vertices: Vec<usize>) -> Self {
        VertexSet(vertices)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn iter(&self) -> std::slice::Iter<'_, usize> {
        self.0.iter()
    }

    pub fn into_vec(self) -> Vec<usize> {
        self.0
    }

    pub fn contains(&self, v: usize) -> bool {
        self.0.contains(&v)
    }

    /// Copy of the set with ids in ascending order.
    pub fn sorted(&self) -> VertexSet {
        let mut v = self.0.clone();
        v.sort_unstable();
        VertexSet(v)
    }
}

impl From<VertexSet> for Vec<usize> {
    fn from(set: VertexSet) -> Self {
        set.0
    }
}

impl<'a> IntoIterator for &'a VertexSet {
    type Item = &'a usize;
    type IntoIter = std::slice::Iter<'a, usize>;

    fn into_iter(self) -> Self::IntoIter {
        self.0.iter()
    }
}

#[derive(Clone, Debug)]
enum Storage {
    Dense(Vec<f32>),
    Sparse {
        offsets: Vec<usize>,
        targets: Vec<u32>,
        weights: Vec<f32>,
    },
}

/// Undirected simple graph with weights in `[0, 1]` and no self-loops.
///
/// Immutable once built; share freely across threads.
#[derive(Clone, Debug)]
pub struct Graph {
    n: usize,
    edges: usize,
    storage: Storage,
}

impl Graph {
    /// Builds a graph from `(u, v, w)` triples. Later duplicates overwrite
    /// earlier ones; zero weights mean "no edge".
    pub fn from_edges<I>(n: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, f64)>,
    {
        Self::from_edges_with_threshold(n, edges, DENSE_THRESHOLD)
    }

    pub fn from_edges_with_threshold<I>(n: usize, edges: I, dense_threshold: usize) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, f64)>,
    {
        let mut list: Vec<(u32, u32, f32)> = Vec::new();
        for (u, v, w) in edges {
            if u >= n || v >= n {
                return Err(Error::contract(format!(
                    "edge {u}-{v} out of range for n={n}"
                )));
            }
            if u == v {
                return Err(Error::contract(format!("self-loop on vertex {u}")));
            }
            if !(0.0..=1.0).contains(&w) {
                return Err(Error::contract(format!("weight {w} outside [0, 1]")));
            }
            let (a, b) = if u < v { (u, v) } else { (v, u) };
            list.push((a as u32, b as u32, w as f32));
        }
        // stable sort keeps insertion order among duplicates; the last one wins
        list.sort_by_key(|&(a, b, _)| (a, b));
        let mut dedup: Vec<(u32, u32, f32)> = Vec::with_capacity(list.len());
        for e in list {
            match dedup.last_mut() {
                Some(last) if (last.0, last.1) == (e.0, e.1) => *last = e,
                _ => dedup.push(e),
            }
        }
        dedup.retain(|e| e.2 > 0.0);

        if n <= dense_threshold {
            let mut w = vec![0f32; n * n];
            for &(a, b, x) in &dedup {
                let (a, b) = (a as usize, b as usize);
                w[a * n + b] = x;
                w[b * n + a] = x;
            }
            Ok(Graph {
                n,
                edges: dedup.len(),
                storage: Storage::Dense(w),
            })
        } else {
            let mut deg = vec![0usize; n];
            for &(a, b, _) in &dedup {
                deg[a as usize] += 1;
                deg[b as usize] += 1;
            }
            let mut offsets = Vec::with_capacity(n + 1);
            offsets.push(0);
            for d in &deg {
                offsets.push(offsets.last().unwrap() + d);
            }
            let mut cursor = offsets[..n].to_vec();
            let mut targets = vec![0u32; offsets[n]];
            let mut weights = vec![0f32; offsets[n]];
            // dedup is sorted by (min, max), so each row fills in ascending order
            // except that rows receive their "max" side entries first; sort after.
            for &(a, b, x) in &dedup {
                for (s, t) in [(a, b), (b, a)] {
                    let c = &mut cursor[s as usize];
                    targets[*c] = t;
                    weights[*c] = x;
                    *c += 1;
                }
            }
            for u in 0..n {
                let (lo, hi) = (offsets[u], offsets[u + 1]);
                let mut row: Vec<(u32, f32)> = targets[lo..hi]
                    .iter()
                    .copied()
                    .zip(weights[lo..hi].iter().copied())
                    .collect();
                row.sort_unstable_by_key(|&(t, _)| t);
                for (i, (t, x)) in row.into_iter().enumerate() {
                    targets[lo + i] = t;
                    weights[lo + i] = x;
                }
            }
            Ok(Graph {
                n,
                edges: dedup.len(),
                storage: Storage::Sparse {
                    offsets,
                    targets,
                    weights,
                },
            })
        }
    }

    /// Wraps a symmetric dense weight matrix produced inside the crate.
    pub(crate) fn from_dense(n: usize, w: Vec<f32>) -> Self {
        debug_assert_eq!(w.len(), n * n);
        let mut edges = 0;
        for u in 0..n {
            debug_assert_eq!(w[u * n + u], 0.0);
            for v in u + 1..n {
                debug_assert_eq!(w[u * n + v], w[v * n + u]);
                if w[u * n + v] > 0.0 {
                    edges += 1;
                }
            }
        }
        Graph {
            n,
            edges,
            storage: Storage::Dense(w),
        }
    }

    pub fn empty(n: usize) -> Self {
        Self::from_edges(n, std::iter::empty()).expect("edgeless graph is valid")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of unordered pairs with positive weight.
    pub fn edge_count(&self) -> usize {
        self.edges
    }

    pub fn is_dense(&self) -> bool {
        matches!(self.storage, Storage::Dense(_))
    }

    pub fn weight(&self, u: usize, v: usize) -> f64 {
        match &self.storage {
            Storage::Dense(w) => w[u * self.n + v] as f64,
            Storage::Sparse {
                offsets,
                targets,
                weights,
            } => {
                let (lo, hi) = (offsets[u], offsets[u + 1]);
                match targets[lo..hi].binary_search(&(v as u32)) {
                    Ok(i) => weights[lo + i] as f64,
                    Err(_) => 0.0,
                }
            }
        }
    }

    /// Neighbours of `u` with their weights, ascending by id.
    pub fn neighbours(&self, u: usize) -> Box<dyn Iterator<Item = (usize, f64)> + '_> {
        match &self.storage {
            Storage::Dense(w) => Box::new(
                w[u * self.n..(u + 1) * self.n]
                    .iter()
                    .enumerate()
                    .filter(|(_, &x)| x > 0.0)
                    .map(|(v, &x)| (v, x as f64)),
            ),
            Storage::Sparse {
                offsets,
                targets,
                weights,
            } => {
                let (lo, hi) = (offsets[u], offsets[u + 1]);
                Box::new(
                    targets[lo..hi]
                        .iter()
                        .zip(&weights[lo..hi])
                        .map(|(&v, &x)| (v as usize, x as f64)),
                )
            }
        }
    }

    /// Weighted degree.
    pub fn degree(&self, u: usize) -> f64 {
        self.neighbours(u).map(|(_, w)| w).sum()
    }

    /// Edges `(u, v, w)` with `u < v`, ascending.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n).flat_map(move |u| {
            self.neighbours(u)
                .filter(move |&(v, _)| v > u)
                .map(move |(v, w)| (u, v, w))
        })
    }

    /// Weight block with one row per vertex of `rows` and one column per vertex
    /// of `cols`, row-major.
    pub fn block(&self, rows: &[usize], cols: &[usize]) -> Vec<f32> {
        let mut out = vec![0f32; rows.len() * cols.len()];
        match &self.storage {
            Storage::Dense(w) => {
                for (i, &u) in rows.iter().enumerate() {
                    let src = &w[u * self.n..(u + 1) * self.n];
                    let dst = &mut out[i * cols.len()..(i + 1) * cols.len()];
                    for (d, &v) in dst.iter_mut().zip(cols) {
                        *d = src[v];
                    }
                }
            }
            Storage::Sparse {
                offsets,
                targets,
                weights,
            } => {
                let pos: HashMap<usize, usize> =
                    cols.iter().enumerate().map(|(j, &v)| (v, j)).collect();
                for (i, &u) in rows.iter().enumerate() {
                    for k in offsets[u]..offsets[u + 1] {
                        if let Some(&j) = pos.get(&(targets[k] as usize)) {
                            out[i * cols.len() + j] = weights[k];
                        }
                    }
                }
            }
        }
        out
    }

    /// Sum of weights over pairs `(u, v)` with `u` in `a` and `v` in `b`.
    pub(crate) fn cross_weight(&self, a: &[usize], b: &[usize]) -> f64 {
        match &self.storage {
            Storage::Dense(w) => a
                .iter()
                .map(|&u| {
                    let row = &w[u * self.n..(u + 1) * self.n];
                    b.iter().map(|&v| row[v] as f64).sum::<f64>()
                })
                .sum(),
            Storage::Sparse { .. } => {
                let mut mask = vec![false; self.n];
                for &v in b {
                    mask[v] = true;
                }
                a.iter()
                    .map(|&u| {
                        self.neighbours(u)
                            .filter(|&(v, _)| mask[v])
                            .map(|(_, w)| w)
                            .sum::<f64>()
                    })
                    .sum()
            }
        }
    }

    /// Weighted degree of every vertex of `set` restricted to `set`.
    pub(crate) fn internal_degrees(&self, set: &[usize]) -> Vec<f64> {
        let block = self.block(set, set);
        let m = set.len();
        (0..m)
            .map(|i| block[i * m..(i + 1) * m].iter().map(|&x| x as f64).sum())
            .collect()
    }

    /// Weighted adjacency as a dense row-major `f64` matrix.
    pub fn to_dense(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.n * self.n];
        for u in 0..self.n {
            for (v, w) in self.neighbours(u) {
                out[u * self.n + v] = w;
            }
        }
        out
    }
}

fn check_disjoint(n: usize, a: &[usize], b: &[usize]) -> Result<()> {
    let mut mask = vec![false; n];
    for &u in a {
        if u >= n {
            return Err(Error::contract(format!(
                "vertex {u} out of range for n={n}"
            )));
        }
        mask[u] = true;
    }
    for &v in b {
        if v >= n {
            return Err(Error::contract(format!(
                "vertex {v} out of range for n={n}"
            )));
        }
        if mask[v] {
            return Err(Error::contract(format!("vertex {v} lies in both sets")));
        }
    }
    Ok(())
}

/// Edge density `e(ci, cj) / (|ci| |cj|)` of two disjoint non-empty sets.
pub fn edge_density(g: &Graph, ci: &VertexSet, cj: &VertexSet) -> Result<f64> {
    if ci.is_empty() || cj.is_empty() {
        return Err(Error::contract("edge density needs non-empty sets"));
    }
    check_disjoint(g.n(), ci.as_slice(), cj.as_slice())?;
    Ok(density_unchecked(g, ci.as_slice(), cj.as_slice()))
}

pub(crate) fn density_unchecked(g: &Graph, a: &[usize], b: &[usize]) -> f64 {
    g.cross_weight(a, b) / (a.len() as f64 * b.len() as f64)
}

/// `e(c, c) / |c|^2`, counting every internal edge once. A clique on `m`
/// vertices therefore scores `(m - 1) / (2m)`, not 1.
pub fn internal_density(g: &Graph, c: &VertexSet) -> Result<f64> {
    if c.is_empty() {
        return Err(Error::contract("internal density of an empty set"));
    }
    Ok(internal_density_unchecked(g, c.as_slice()))
}

pub(crate) fn internal_density_unchecked(g: &Graph, c: &[usize]) -> f64 {
    let m = c.len() as f64;
    g.cross_weight(c, c) / 2.0 / (m * m)
}

/// Degrees of a balanced bipartite pair, each side measured into the other.
#[derive(Clone, Debug, PartialEq)]
pub struct BipartiteDegrees {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    /// `(1 / 2m) * sum of all degrees`, i.e. `e(a, b) / m`.
    pub average: f64,
}

pub fn bipartite_degrees(g: &Graph, a: &VertexSet, b: &VertexSet) -> Result<BipartiteDegrees> {
    if a.len() != b.len() {
        return Err(Error::contract(format!(
            "bipartite degrees need equal sides, got {} and {}",
            a.len(),
            b.len()
        )));
    }
    if a.is_empty() {
        return Err(Error::contract("bipartite degrees of empty sets"));
    }
    check_disjoint(g.n(), a.as_slice(), b.as_slice())?;
    let m = a.len();
    let block = g.block(a.as_slice(), b.as_slice());
    let mut da = vec![0.0; m];
    let mut db = vec![0.0; m];
    for i in 0..m {
        for j in 0..m {
            let w = block[i * m + j] as f64;
            da[i] += w;
            db[j] += w;
        }
    }
    let total: f64 = da.iter().sum::<f64>() + db.iter().sum::<f64>();
    Ok(BipartiteDegrees {
        a: da,
        b: db,
        average: total / (2.0 * m as f64),
    })
}

/// What `load_edge_list` dropped while parsing.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct LoadReport {
    pub self_loops: usize,
}

pub fn load_edge_list(path: &Path, n_hint: Option<usize>) -> Result<(Graph, LoadReport)> {
    let file = File::open(path)?;
    read_edge_list(BufReader::new(file), path, n_hint)
}

/// Parses `u v [w]` lines. `#` starts a comment line; `# vertices: N` raises
/// the vertex count to at least `N`.
pub fn read_edge_list<R: BufRead>(
    reader: R,
    path: &Path,
    n_hint: Option<usize>,
) -> Result<(Graph, LoadReport)> {
    let mut edges = Vec::new();
    let mut report = LoadReport::default();
    let mut n = n_hint.unwrap_or(0);
    let parse_err = |line: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };

    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = idx + 1;
        let trimmed = line.trim();
        if let Some(rest) = trimmed.strip_prefix(VERTICES_HEADER) {
            let declared: usize = rest
                .trim()
                .parse()
                .map_err(|_| parse_err(lineno, format!("bad vertex count {:?}", rest.trim())))?;
            n = n.max(declared);
            continue;
        }
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = trimmed.split_whitespace().collect();
        if fields.len() < 2 || fields.len() > 3 {
            return Err(parse_err(
                lineno,
                format!("expected \"u v [w]\", got {trimmed:?}"),
            ));
        }
        let id = |s: &str| {
            s.parse::<usize>()
                .map_err(|_| parse_err(lineno, format!("bad vertex id {s:?}")))
        };
        let u = id(fields[0])?;
        let v = id(fields[1])?;
        let w = match fields.get(2) {
            Some(s) => s
                .parse::<f64>()
                .map_err(|_| parse_err(lineno, format!("bad weight {s:?}")))?,
            None => 1.0,
        };
        if !(0.0..=1.0).contains(&w) {
            return Err(Error::WeightRange {
                path: path.to_path_buf(),
                line: lineno,
                weight: w,
            });
        }
        n = n.max(u + 1).max(v + 1);
        if u == v {
            report.self_loops += 1;
            continue;
        }
        edges.push((u, v, w));
    }
    if report.self_loops > 0 {
        log::warn!(
            "{}: dropped {} self-loop line(s)",
            path.display(),
            report.self_loops
        );
    }
    Ok((Graph::from_edges(n, edges)?, report))
}

pub fn save_edge_list(g: &Graph, path: &Path) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    write_edge_list(g, &mut out)?;
    out.flush()?;
    Ok(())
}

/// Canonical form: vertex-count header, then ascending `(min, max)` pairs;
/// weight omitted when it is exactly 1.
pub fn write_edge_list<W: Write>(g: &Graph, out: &mut W) -> Result<()> {
    writeln!(out, "{VERTICES_HEADER} {}", g.n())?;
    for (u, v, w) in g.edges() {
        if w == 1.0 {
            writeln!(out, "{u} {v}")?;
        } else {
            writeln!(out, "{u} {v} {}", w as f32)?;
        }
    }
    Ok(())
}
