//! Summarization driver and the reduced graph.

use std::io::{BufRead, Write};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::{Graph, VertexSet};
use crate::refinement::{refine, RefineConfig};
use crate::regularity::{check_partition, EquitablePartition, PairVerdicts, PartitionDensities};

pub const SUMMARY_HEADER: &str = "SZE-SUMMARY v1";

/// How the driver reacts to an iteration with too many irregular pairs.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum LoopMode {
    /// Too many irregular pairs ends the run; refinement happens only on
    /// partitions that are already regular.
    #[default]
    Literal,
    /// Irregular partitions are refined; regular ones are collected. The run
    /// ends at the compression floor or when classes get too small.
    Classic,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SummaryConfig {
    pub epsilon: f64,
    pub c_min: f64,
    pub d_prime: f64,
    pub initial_k: usize,
    pub seed: u64,
    pub loop_mode: LoopMode,
    /// Return the last partition when none was collected instead of failing.
    pub fallback: bool,
    pub refine: RefineConfig,
}

impl Default for SummaryConfig {
    fn default() -> Self {
        SummaryConfig {
            epsilon: 0.3,
            c_min: 0.9,
            d_prime: 0.0,
            initial_k: 4,
            seed: 0,
            loop_mode: LoopMode::Literal,
            fallback: false,
            refine: RefineConfig::default(),
        }
    }
}

impl SummaryConfig {
    pub fn validate(&self) -> Result<()> {
        let open_unit = |x: f64| x > 0.0 && x < 1.0;
        if !open_unit(self.epsilon) {
            return Err(Error::contract(format!(
                "eps={} not in (0, 1)",
                self.epsilon
            )));
        }
        if !open_unit(self.c_min) {
            return Err(Error::contract(format!(
                "c_min={} not in (0, 1)",
                self.c_min
            )));
        }
        if !(0.0..=1.0).contains(&self.d_prime) {
            return Err(Error::contract(format!(
                "d'={} not in [0, 1]",
                self.d_prime
            )));
        }
        if self.initial_k < 2 {
            return Err(Error::contract(format!(
                "initial k={} below 2",
                self.initial_k
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct IterationStats {
    pub iteration: usize,
    pub k: usize,
    pub class_size: usize,
    pub exceptional: usize,
    pub irregular_pairs: usize,
    pub sze_idx: f64,
    pub compression: f64,
    /// Whether this iteration's partition entered the candidate list.
    pub collected: bool,
    pub degenerate_splits: usize,
}

/// Weighted graph on the classes of a partition.
#[derive(Clone, Debug, PartialEq)]
pub struct ReducedGraph {
    pub n: usize,
    pub k: usize,
    pub m: usize,
    pub epsilon: f64,
    pub d_prime: f64,
    pub sze_idx: f64,
    /// Class of every vertex, `None` for `C_0`.
    pub membership: Vec<Option<usize>>,
    /// Row-major `k x k`, symmetric with a zero diagonal.
    pub weights: Vec<f64>,
    /// Per class, the fraction of its vertex pairs joined by an edge.
    pub internal: Vec<f64>,
}

impl ReducedGraph {
    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.weights[i * self.k + j]
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.k;
        if self.weights.len() != k * k
            || self.internal.len() != k
            || self.membership.len() != self.n
        {
            return Err(Error::contract("reduced graph shape mismatch"));
        }
        for i in 0..k {
            if self.weight(i, i) != 0.0 {
                return Err(Error::contract(format!("nonzero diagonal at class {i}")));
            }
            for j in 0..k {
                let w = self.weight(i, j);
                if !(0.0..=1.0).contains(&w) || w != self.weight(j, i) {
                    return Err(Error::contract(format!("bad weight at ({i}, {j})")));
                }
            }
        }
        if let Some(c) = self.membership.iter().flatten().find(|&&c| c >= k) {
            return Err(Error::contract(format!(
                "membership names class {c} of {k}"
            )));
        }
        Ok(())
    }

    /// Weighted graph on `k` nodes, for spectra.
    pub fn to_graph(&self) -> Graph {
        let k = self.k;
        let dense = self.weights.iter().map(|&w| w as f32).collect();
        Graph::from_dense(k, dense)
    }
}

#[derive(Clone, Debug)]
pub struct Summary {
    pub partition: EquitablePartition,
    pub reduced: ReducedGraph,
    pub trace: Vec<IterationStats>,
}

/// Seeded shuffle of the vertices cut into `k` classes of `n / k`; the
/// remainder forms `C_0`.
pub fn initial_partition(g: &Graph, k: usize, eps: f64, seed: u64) -> Result<EquitablePartition> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    initial_partition_with(g, k, eps, &mut rng)
}

fn initial_partition_with(
    g: &Graph,
    k: usize,
    eps: f64,
    rng: &mut ChaCha8Rng,
) -> Result<EquitablePartition> {
    let n = g.n();
    if k < 2 || k > n {
        return Err(Error::contract(format!(
            "initial k={k} must be in [2, n={n}]"
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let m = n / k;
    let classes = order[..k * m]
        .chunks(m)
        .map(|c| {
            let mut c = c.to_vec();
            c.sort_unstable();
            VertexSet::from_vec(c)
        })
        .collect();
    let mut rest = order[k * m..].to_vec();
    rest.sort_unstable();
    EquitablePartition::new(classes, VertexSet::from_vec(rest), eps, n)
}

/// `1 - k/n`.
pub fn compression_rate(p: &EquitablePartition) -> f64 {
    1.0 - p.k() as f64 / p.n() as f64
}

/// Applies the reduced-graph weight rule: a pair keeps its density if it is
/// regular and at least `d_prime` dense.
pub fn build_reduced(
    g: &Graph,
    p: &EquitablePartition,
    verdicts: &PairVerdicts,
    d_prime: f64,
) -> Result<ReducedGraph> {
    let densities = PartitionDensities::compute(g, p);
    reduced_from(p, &densities, verdicts, d_prime)
}

fn reduced_from(
    p: &EquitablePartition,
    densities: &PartitionDensities,
    verdicts: &PairVerdicts,
    d_prime: f64,
) -> Result<ReducedGraph> {
    let k = p.k();
    if verdicts.k() != k {
        return Err(Error::contract(format!(
            "verdicts cover {} classes, partition has {k}",
            verdicts.k()
        )));
    }
    let mut weights = vec![0.0; k * k];
    for (i, j, v) in verdicts.iter() {
        let d = densities.pair(i, j).min(1.0);
        if v.is_regular() && d >= d_prime {
            weights[i * k + j] = d;
            weights[j * k + i] = d;
        }
    }
    let m = p.class_size();
    let internal = densities
        .internal_all()
        .iter()
        .map(|&d| {
            if m < 2 {
                0.0
            } else {
                (2.0 * d * m as f64 / (m - 1) as f64).min(1.0)
            }
        })
        .collect();
    Ok(ReducedGraph {
        n: p.n(),
        k,
        m,
        epsilon: p.epsilon(),
        d_prime,
        sze_idx: densities.sze_idx(),
        membership: p.membership(),
        weights,
        internal,
    })
}

struct Candidate {
    partition: EquitablePartition,
    verdicts: PairVerdicts,
    densities: PartitionDensities,
}

/// Runs check/refine iterations and returns the collected partition with the
/// largest `sze_idx` (ties to fewer classes) and its reduced graph.
pub fn summarize(g: &Graph, cfg: &SummaryConfig) -> Result<Summary> {
    cfg.validate()?;
    let eps = cfg.epsilon;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut p = initial_partition_with(g, cfg.initial_k, eps, &mut rng)?;
    let mut trace: Vec<IterationStats> = Vec::new();
    let mut collected: Vec<Candidate> = Vec::new();
    let mut last: Option<Candidate> = None;
    let mut pending_degenerate = 0;

    for iteration in 0.. {
        let verdicts = match check_partition(g, &p, eps) {
            Ok(v) => v,
            Err(Error::DegenerateScale { .. }) if iteration > 0 => break,
            Err(e) => return Err(e),
        };
        let densities = PartitionDensities::compute(g, &p);
        let k = p.k();
        let irregular = verdicts.irregular_count();
        let pairs = (k * (k - 1) / 2) as f64;
        let too_irregular = irregular as f64 > eps * pairs;
        let compression = compression_rate(&p);
        let keep = match cfg.loop_mode {
            LoopMode::Literal if iteration == 0 => !too_irregular,
            LoopMode::Literal => true,
            LoopMode::Classic => !too_irregular && p.exceptional_is_small(),
        };
        trace.push(IterationStats {
            iteration,
            k,
            class_size: p.class_size(),
            exceptional: p.exceptional().len(),
            irregular_pairs: irregular,
            sze_idx: densities.sze_idx(),
            compression,
            collected: keep,
            degenerate_splits: pending_degenerate,
        });
        log::debug!(
            "iteration {iteration}: k={k} m={} |C0|={} irregular={irregular} sze={:.6}",
            p.class_size(),
            p.exceptional().len(),
            densities.sze_idx()
        );
        let candidate = Candidate {
            partition: p.clone(),
            verdicts,
            densities,
        };
        let stop = compression < cfg.c_min
            || p.class_size() < 4
            || (cfg.loop_mode == LoopMode::Literal && too_irregular);
        let verdicts_ref = &candidate.verdicts;
        let next = if stop {
            None
        } else {
            Some(refine(g, &p, verdicts_ref, &cfg.refine, &mut rng)?)
        };
        if keep {
            collected.push(candidate);
        } else {
            last = Some(candidate);
        }
        let Some(outcome) = next else { break };
        pending_degenerate = outcome.degenerate_splits;
        if outcome.partition.k() < 2 {
            break;
        }
        if cfg.loop_mode == LoopMode::Literal && !outcome.regular {
            break;
        }
        p = outcome.partition;
    }

    let best = collected
        .iter()
        .enumerate()
        .max_by(|(ia, a), (ib, b)| {
            a.densities
                .sze_idx()
                .total_cmp(&b.densities.sze_idx())
                .then(b.partition.k().cmp(&a.partition.k()))
                .then(ib.cmp(ia))
        })
        .map(|(i, _)| i);
    let chosen = match best {
        Some(i) => collected.swap_remove(i),
        None if cfg.fallback => match last {
            Some(c) => {
                log::warn!("no partition collected; falling back to the last one");
                c
            }
            None => return Err(Error::SummaryFailed { trace }),
        },
        None => return Err(Error::SummaryFailed { trace }),
    };
    let reduced = reduced_from(
        &chosen.partition,
        &chosen.densities,
        &chosen.verdicts,
        cfg.d_prime,
    )?;
    Ok(Summary {
        partition: chosen.partition,
        reduced,
        trace,
    })
}

/// Writes the summary text format: header, parameters, membership, the upper
/// triangle of the weights and the internal densities.
pub fn write_summary<W: Write>(r: &ReducedGraph, out: &mut W) -> Result<()> {
    writeln!(out, "{SUMMARY_HEADER}")?;
    writeln!(
        out,
        "n={} k={} m={} eps={} dprime={} sze={:.6}",
        r.n, r.k, r.m, r.epsilon, r.d_prime, r.sze_idx
    )?;
    let membership: Vec<String> = r
        .membership
        .iter()
        .map(|c| c.map_or("-1".to_string(), |c| c.to_string()))
        .collect();
    writeln!(out, "{}", membership.join(" "))?;
    for i in 0..r.k {
        let row: Vec<String> = (i..r.k).map(|j| format!("{:.6}", r.weight(i, j))).collect();
        writeln!(out, "{}", row.join(" "))?;
    }
    let internal: Vec<String> = r.internal.iter().map(|d| format!("{d:.6}")).collect();
    writeln!(out, "internal={}", internal.join(" "))?;
    Ok(())
}

fn next_line<R: BufRead>(lines: &mut std::io::Lines<R>, what: &str) -> Result<String> {
    match lines.next() {
        Some(line) => Ok(line?),
        None => Err(Error::format("summary", format!("missing {what}"))),
    }
}

fn parse_num<T: std::str::FromStr>(s: &str, what: &str) -> Result<T> {
    s.parse()
        .map_err(|_| Error::format("summary", format!("bad {what}: {s:?}")))
}

/// Reads one summary from `lines`, consuming exactly its lines.
pub fn read_summary_lines<R: BufRead>(lines: &mut std::io::Lines<R>) -> Result<ReducedGraph> {
    let header = next_line(lines, "header")?;
    if header.trim() != SUMMARY_HEADER {
        return Err(Error::format(
            "summary",
            format!("unknown header {header:?}"),
        ));
    }
    let params = next_line(lines, "parameter line")?;
    let mut n = None;
    let mut k = None;
    let mut m = None;
    let mut eps = None;
    let mut d_prime = None;
    let mut sze = None;
    for field in params.split_whitespace() {
        let (key, value) = field
            .split_once('=')
            .ok_or_else(|| Error::format("summary", format!("bad field {field:?}")))?;
        match key {
            "n" => n = Some(parse_num::<usize>(value, "n")?),
            "k" => k = Some(parse_num::<usize>(value, "k")?),
            "m" => m = Some(parse_num::<usize>(value, "m")?),
            "eps" => eps = Some(parse_num::<f64>(value, "eps")?),
            "dprime" => d_prime = Some(parse_num::<f64>(value, "dprime")?),
            "sze" => sze = Some(parse_num::<f64>(value, "sze")?),
            _ => return Err(Error::format("summary", format!("unknown field {key:?}"))),
        }
    }
    let missing = |f: &str| Error::format("summary", format!("missing field {f}"));
    let (n, k, m) = (
        n.ok_or_else(|| missing("n"))?,
        k.ok_or_else(|| missing("k"))?,
        m.ok_or_else(|| missing("m"))?,
    );

    let membership_line = next_line(lines, "membership")?;
    let membership = membership_line
        .split_whitespace()
        .map(|t| {
            let c: i64 = parse_num(t, "class id")?;
            Ok((c >= 0).then_some(c as usize))
        })
        .collect::<Result<Vec<_>>>()?;
    if membership.len() != n {
        return Err(Error::format(
            "summary",
            format!("membership has {} entries, expected {n}", membership.len()),
        ));
    }

    let mut weights = vec![0.0; k * k];
    for i in 0..k {
        let row = next_line(lines, "weight row")?;
        let values = row
            .split_whitespace()
            .map(|t| parse_num::<f64>(t, "weight"))
            .collect::<Result<Vec<_>>>()?;
        if values.len() != k - i {
            return Err(Error::format(
                "summary",
                format!("weight row {i} has {} entries", values.len()),
            ));
        }
        for (off, w) in values.into_iter().enumerate() {
            let j = i + off;
            weights[i * k + j] = w;
            weights[j * k + i] = w;
        }
    }
    let internal_line = next_line(lines, "internal densities")?;
    let internal = internal_line
        .strip_prefix("internal=")
        .ok_or_else(|| Error::format("summary", "missing internal= line"))?
        .split_whitespace()
        .map(|t| parse_num::<f64>(t, "internal density"))
        .collect::<Result<Vec<_>>>()?;

    let r = ReducedGraph {
        n,
        k,
        m,
        epsilon: eps.ok_or_else(|| missing("eps"))?,
        d_prime: d_prime.ok_or_else(|| missing("dprime"))?,
        sze_idx: sze.ok_or_else(|| missing("sze"))?,
        membership,
        weights,
        internal,
    };
    r.validate()
        .map_err(|e| Error::format("summary", e.to_string()))?;
    Ok(r)
}

pub fn read_summary<R: BufRead>(input: R) -> Result<ReducedGraph> {
    read_summary_lines(&mut input.lines())
}
