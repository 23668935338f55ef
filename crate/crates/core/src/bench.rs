//! Experiment drivers: noise separation, retrieval quality and query timing.
//!
//! Every driver is deterministic for a fixed seed apart from the measured
//! times. Cells run on the rayon pool and are sorted by their key before
//! output.

use std::collections::HashSet;
use std::io::Write;
use std::sync::Arc;
use std::time::Duration;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::metrics::{ap_at_k, map_at_k};
use crate::reconstruction::{blow_up, reconstruction_error, DensityMatrix};
use crate::spectral::{spectrum, SpectrumKind};
use crate::store::{describe_config, AddOptions, RecordMeta, Store, SummaryRecord};
use crate::summarizer::{summarize, LoopMode, SummaryConfig};
use crate::synth::{generate, GeneratorConfig};

/// Noise levels of the separation grid.
pub const NOISE_GRID: [f64; 5] = [0.1, 0.2, 0.3, 0.4, 0.5];
/// Noise level held fixed in the single-axis sweeps.
pub const SWEEP_FIXED_NOISE: f64 = 0.2;

/// Summarizer settings the experiments run with unless overridden. The
/// library defaults keep almost no partition at these graph sizes: binomial
/// noise makes nearly every pair fail the deviation test for small epsilon.
pub fn experiment_config() -> SummaryConfig {
    SummaryConfig {
        epsilon: 0.8,
        c_min: 0.5,
        loop_mode: LoopMode::Classic,
        fallback: true,
        ..SummaryConfig::default()
    }
}

/// Timing runs keep the default compression floor, so summaries stay at
/// most a tenth of the graph and their spectra stay cheap.
pub fn scale_config() -> SummaryConfig {
    SummaryConfig {
        c_min: SummaryConfig::default().c_min,
        ..experiment_config()
    }
}

fn median(values: &mut [f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(f64::total_cmp);
    let mid = values.len() / 2;
    Some(if values.len() % 2 == 1 {
        values[mid]
    } else {
        (values[mid - 1] + values[mid]) / 2.0
    })
}

/// Derives a per-run seed from a base seed and run coordinates.
fn mix_seed(base: u64, parts: &[u64]) -> u64 {
    let mut h = base ^ 0x9e37_79b9_7f4a_7c15;
    for &p in parts {
        h = (h ^ p).wrapping_mul(0x1000_0000_01b3).rotate_left(29);
    }
    h
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum NoiseSweep {
    Grid,
    /// Inter-cluster noise varies, intra-cluster noise fixed.
    Inter,
    /// Intra-cluster noise varies, inter-cluster noise fixed.
    Intra,
}

impl NoiseSweep {
    pub fn name(self) -> &'static str {
        match self {
            NoiseSweep::Grid => "grid",
            NoiseSweep::Inter => "inter_sweep",
            NoiseSweep::Intra => "intra_sweep",
        }
    }
}

#[derive(Clone, Debug)]
pub struct NoiseExperiment {
    pub sizes: Vec<usize>,
    pub grid: Vec<f64>,
    pub sweep: Vec<f64>,
    pub num_clusters: usize,
    pub seeds: usize,
    pub seed: u64,
    pub summary: SummaryConfig,
}

impl NoiseExperiment {
    pub fn desk_scale(summary: SummaryConfig) -> Self {
        NoiseExperiment {
            sizes: vec![500, 1000, 2000],
            grid: NOISE_GRID.to_vec(),
            sweep: NOISE_GRID.to_vec(),
            num_clusters: 5,
            seeds: 5,
            seed: summary.seed,
            summary,
        }
    }

    pub fn full_scale(summary: SummaryConfig) -> Self {
        NoiseExperiment {
            sizes: vec![1000, 2000, 3000, 4000, 5000],
            seeds: 10,
            ..NoiseExperiment::desk_scale(summary)
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct NoiseCell {
    pub sweep: NoiseSweep,
    pub n: usize,
    pub inter: f64,
    pub intra: f64,
    pub runs: usize,
    pub failures: usize,
    /// Median normalized l2 error of the reconstruction against ground truth.
    pub reconstructed: Option<f64>,
    /// Median normalized l2 error of the noisy input against ground truth.
    pub input: f64,
    /// Median raw l2 error of the reconstruction.
    pub reconstructed_raw: Option<f64>,
}

struct NoiseRun {
    reconstructed: Option<(f64, f64)>,
    input: f64,
}

fn noise_run(
    n: usize,
    inter: f64,
    intra: f64,
    seed: u64,
    exp: &NoiseExperiment,
) -> Result<NoiseRun> {
    let synth = generate(&GeneratorConfig {
        n,
        num_clusters: exp.num_clusters,
        inter_noise: inter,
        intra_noise: intra,
        seed,
    })?;
    let truth = DensityMatrix::from_graph(&synth.ground_truth);
    let input = reconstruction_error(&DensityMatrix::from_graph(&synth.graph), &truth, 2.0, true)?;
    let cfg = SummaryConfig {
        seed,
        ..exp.summary.clone()
    };
    let reconstructed = match summarize(&synth.graph, &cfg) {
        Ok(s) => {
            let rec = blow_up(&s.reduced)?;
            Some((
                reconstruction_error(&rec, &truth, 2.0, true)?,
                reconstruction_error(&rec, &truth, 2.0, false)?,
            ))
        }
        Err(Error::SummaryFailed { trace }) => {
            log::info!(
                "n={n} inter={inter} intra={intra} seed={seed}: no partition after {} iterations",
                trace.len()
            );
            None
        }
        Err(e) => return Err(e),
    };
    Ok(NoiseRun {
        reconstructed,
        input,
    })
}

/// Median reconstruction errors over the noise grid and both single-axis
/// sweeps, for every graph size.
pub fn run_noise_experiment(exp: &NoiseExperiment) -> Result<Vec<NoiseCell>> {
    let mut cells: Vec<(NoiseSweep, usize, f64, f64)> = Vec::new();
    for &n in &exp.sizes {
        for &inter in &exp.grid {
            for &intra in &exp.grid {
                cells.push((NoiseSweep::Grid, n, inter, intra));
            }
        }
        for &x in &exp.sweep {
            cells.push((NoiseSweep::Inter, n, x, SWEEP_FIXED_NOISE));
            cells.push((NoiseSweep::Intra, n, SWEEP_FIXED_NOISE, x));
        }
    }
    let jobs: Vec<(usize, usize)> = (0..cells.len())
        .flat_map(|c| (0..exp.seeds).map(move |s| (c, s)))
        .collect();
    let runs = jobs
        .par_iter()
        .map(|&(c, s)| {
            let (_, n, inter, intra) = cells[c];
            let seed = mix_seed(
                exp.seed,
                &[
                    n as u64,
                    (inter * 1000.0).round() as u64,
                    (intra * 1000.0).round() as u64,
                    s as u64,
                ],
            );
            noise_run(n, inter, intra, seed, exp)
        })
        .collect::<Result<Vec<_>>>()?;

    let mut out = Vec::with_capacity(cells.len());
    for (c, &(sweep, n, inter, intra)) in cells.iter().enumerate() {
        let group = &runs[c * exp.seeds..(c + 1) * exp.seeds];
        let mut rec: Vec<f64> = group
            .iter()
            .filter_map(|r| r.reconstructed.map(|x| x.0))
            .collect();
        let mut raw: Vec<f64> = group
            .iter()
            .filter_map(|r| r.reconstructed.map(|x| x.1))
            .collect();
        let mut input: Vec<f64> = group.iter().map(|r| r.input).collect();
        out.push(NoiseCell {
            sweep,
            n,
            inter,
            intra,
            runs: group.len(),
            failures: group.len() - rec.len(),
            reconstructed: median(&mut rec),
            input: median(&mut input).unwrap_or(f64::NAN),
            reconstructed_raw: median(&mut raw),
        });
    }
    out.sort_by(|a, b| {
        (a.sweep, a.n)
            .cmp(&(b.sweep, b.n))
            .then(a.inter.total_cmp(&b.inter))
            .then(a.intra.total_cmp(&b.intra))
    });
    Ok(out)
}

fn opt(x: Option<f64>) -> String {
    x.map_or_else(String::new, |v| format!("{v:.6}"))
}

pub fn write_noise_csv<W: Write>(cells: &[NoiseCell], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "sweep",
        "n",
        "eta1",
        "eta2",
        "runs",
        "failures",
        "median_l2_reconstructed",
        "median_l2_input",
        "median_l2_reconstructed_raw",
    ])
    .map_err(csv_error)?;
    for c in cells {
        w.write_record([
            c.sweep.name().to_string(),
            c.n.to_string(),
            c.inter.to_string(),
            c.intra.to_string(),
            c.runs.to_string(),
            c.failures.to_string(),
            opt(c.reconstructed),
            format!("{:.6}", c.input),
            opt(c.reconstructed_raw),
        ])
        .map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

fn csv_error(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::format("csv", format!("{other:?}")),
    }
}

#[derive(Clone, Debug)]
pub struct QualityExperiment {
    pub n: usize,
    pub cluster_counts: Vec<usize>,
    pub inter: Vec<f64>,
    pub intra: Vec<f64>,
    pub k_max: usize,
    /// Head count for the spectral distance; half the shorter spectrum if unset.
    pub head: Option<usize>,
    pub seed: u64,
    pub summary: SummaryConfig,
}

impl QualityExperiment {
    pub fn new(n: usize, summary: SummaryConfig) -> Self {
        let noise = vec![0.05, 0.1, 0.15, 0.2, 0.25, 0.3];
        QualityExperiment {
            n,
            cluster_counts: vec![4, 8, 12, 16, 20],
            inter: noise.clone(),
            intra: noise,
            k_max: 36,
            head: None,
            seed: summary.seed,
            summary,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct QualityRow {
    pub k: usize,
    pub two_stage: f64,
    pub one_stage: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct QualityReport {
    pub rows: Vec<QualityRow>,
    /// Store ids used as queries, one per group.
    pub queries: Vec<u64>,
    pub store_size: usize,
}

impl QualityReport {
    pub fn at(&self, k: usize) -> Option<&QualityRow> {
        self.rows.iter().find(|r| r.k == k)
    }
}

/// Builds the grouped store (one group per cluster count), queries one member
/// of each group with both pipelines and reports MAP@k for `k = 1..=k_max`.
pub fn run_quality_experiment(exp: &QualityExperiment) -> Result<QualityReport> {
    let mut specs: Vec<(usize, GeneratorConfig)> = Vec::new();
    for (group, &c) in exp.cluster_counts.iter().enumerate() {
        for &inter in &exp.inter {
            for &intra in &exp.intra {
                let seed = mix_seed(exp.seed, &[specs.len() as u64]);
                specs.push((
                    group,
                    GeneratorConfig {
                        n: exp.n,
                        num_clusters: c,
                        inter_noise: inter,
                        intra_noise: intra,
                        seed,
                    },
                ));
            }
        }
    }
    let graphs: Vec<Graph> = specs
        .par_iter()
        .map(|(_, g)| generate(g).map(|s| s.graph))
        .collect::<Result<_>>()?;
    let mut store = Store::in_memory(SpectrumKind::Laplacian);
    let records = graphs
        .par_iter()
        .map(|g| {
            let summary = summarize(g, &exp.summary)?;
            Ok(SummaryRecord {
                id: 0,
                meta: RecordMeta {
                    source: String::new(),
                    created: 0,
                    config: describe_config(&exp.summary),
                },
                signature: spectrum(&summary.reduced.to_graph(), SpectrumKind::Laplacian)?,
                full_signature: Some(spectrum(g, SpectrumKind::Laplacian)?),
                reduced: Arc::new(summary.reduced),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    for r in records {
        store.insert(r)?;
    }

    let mut rng = ChaCha8Rng::seed_from_u64(exp.seed);
    let groups = exp.cluster_counts.len();
    let mut queries = Vec::with_capacity(groups);
    for group in 0..groups {
        let members: Vec<usize> = (0..specs.len()).filter(|&i| specs[i].0 == group).collect();
        queries.push(*members.choose(&mut rng).expect("groups are non-empty"));
    }
    let k_max = exp.k_max.min(store.len());
    let mut two_ap = vec![Vec::new(); k_max];
    let mut one_ap = vec![Vec::new(); k_max];
    for &q in &queries {
        let relevant: HashSet<u64> = (0..specs.len())
            .filter(|&i| specs[i].0 == specs[q].0)
            .map(|i| i as u64)
            .collect();
        let two: Vec<u64> = store
            .query(&graphs[q], &exp.summary, store.len(), exp.head)?
            .hits
            .iter()
            .map(|h| h.id)
            .collect();
        let one: Vec<u64> = store
            .query_one_stage(&graphs[q], store.len(), exp.head)?
            .hits
            .iter()
            .map(|h| h.id)
            .collect();
        for k in 1..=k_max {
            two_ap[k - 1].push(ap_at_k(&two, &relevant, k)?);
            one_ap[k - 1].push(ap_at_k(&one, &relevant, k)?);
        }
    }
    let rows = (1..=k_max)
        .map(|k| {
            Ok(QualityRow {
                k,
                two_stage: map_at_k(&two_ap[k - 1])?,
                one_stage: map_at_k(&one_ap[k - 1])?,
            })
        })
        .collect::<Result<_>>()?;
    Ok(QualityReport {
        rows,
        queries: queries.iter().map(|&q| q as u64).collect(),
        store_size: store.len(),
    })
}

pub fn write_quality_csv<W: Write>(report: &QualityReport, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["k", "map_two_stage", "map_one_stage"])
        .map_err(csv_error)?;
    for r in &report.rows {
        w.write_record([
            r.k.to_string(),
            format!("{:.6}", r.two_stage),
            format!("{:.6}", r.one_stage),
        ])
        .map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ScaleMode {
    /// Fixed graph size, growing store.
    StoreSize,
    /// Fixed store size, growing graphs.
    GraphSize,
}

#[derive(Clone, Debug)]
pub struct ScaleExperiment {
    pub mode: ScaleMode,
    /// Store sizes (store-size mode) or graph sizes (graph-size mode).
    pub points: Vec<usize>,
    /// Graph size in store-size mode, store size in graph-size mode.
    pub fixed: usize,
    /// Distinct graphs summarized per point; the store repeats them.
    pub base_graphs: usize,
    /// Timings are the minimum over this many repeated queries.
    pub repeats: usize,
    pub seed: u64,
    pub summary: SummaryConfig,
}

impl ScaleExperiment {
    pub fn desk_scale(mode: ScaleMode, summary: SummaryConfig) -> Self {
        let (points, fixed) = match mode {
            ScaleMode::StoreSize => (vec![1000, 2000, 3000, 4000, 5000], 2000),
            ScaleMode::GraphSize => (vec![500, 1000, 2000, 3000, 4000], 100),
        };
        ScaleExperiment {
            mode,
            points,
            fixed,
            base_graphs: 6,
            repeats: 3,
            seed: summary.seed,
            summary,
        }
    }

    pub fn full_scale(mode: ScaleMode, summary: SummaryConfig) -> Self {
        let (points, fixed) = match mode {
            ScaleMode::StoreSize => ((1..=10).map(|i| i * 1000).collect(), 2000),
            ScaleMode::GraphSize => (vec![1000, 2000, 3000, 4000, 5000, 7000], 108),
        };
        ScaleExperiment {
            points,
            fixed,
            base_graphs: 108,
            ..ScaleExperiment::desk_scale(mode, summary)
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScalePoint {
    pub n: usize,
    pub store_size: usize,
    pub two_stage: crate::store::QueryTiming,
    pub one_stage: crate::store::QueryTiming,
}

impl ScalePoint {
    /// One-stage over two-stage total query time.
    pub fn ratio(&self) -> f64 {
        self.one_stage.total().as_secs_f64() / self.two_stage.total().as_secs_f64()
    }
}

fn base_store(
    n: usize,
    count: usize,
    seed: u64,
    cfg: &SummaryConfig,
) -> Result<(Vec<Graph>, Vec<SummaryRecord>)> {
    let counts = [4usize, 8, 12, 16, 20];
    let specs: Vec<GeneratorConfig> = (0..count)
        .map(|i| GeneratorConfig {
            n,
            num_clusters: counts[i % counts.len()],
            inter_noise: 0.05 + 0.05 * ((i / counts.len()) % 6) as f64,
            intra_noise: 0.05 + 0.05 * ((i / 30) % 6) as f64,
            seed: mix_seed(seed, &[n as u64, i as u64]),
        })
        .collect();
    let graphs: Vec<Graph> = specs
        .iter()
        .map(|s| generate(s).map(|x| x.graph))
        .collect::<Result<_>>()?;
    let records = graphs
        .iter()
        .map(|g| {
            let opts = AddOptions {
                keep_full: true,
                ..AddOptions::default()
            };
            let mut one = Store::in_memory(SpectrumKind::Laplacian);
            one.add(g, cfg, &opts)?;
            Ok(one.records()[0].clone())
        })
        .collect::<Result<_>>()?;
    Ok((graphs, records))
}

fn min_timing(samples: &[crate::store::QueryTiming]) -> crate::store::QueryTiming {
    let pick = |f: fn(&crate::store::QueryTiming) -> Duration| {
        samples.iter().map(f).min().unwrap_or_default()
    };
    crate::store::QueryTiming {
        summarize: pick(|t| t.summarize),
        eigen: pick(|t| t.eigen),
        distances: pick(|t| t.distances),
    }
}

fn time_point(
    graphs: &[Graph],
    records: &[SummaryRecord],
    store_size: usize,
    exp: &ScaleExperiment,
) -> Result<ScalePoint> {
    let mut store = Store::in_memory(SpectrumKind::Laplacian);
    for i in 0..store_size {
        store.insert(records[i % records.len()].clone())?;
    }
    let query = &graphs[0];
    let mut two = Vec::new();
    let mut one = Vec::new();
    for _ in 0..exp.repeats.max(1) {
        two.push(store.query(query, &exp.summary, 10, None)?.timing);
        one.push(store.query_one_stage(query, 10, None)?.timing);
    }
    Ok(ScalePoint {
        n: query.n(),
        store_size,
        two_stage: min_timing(&two),
        one_stage: min_timing(&one),
    })
}

/// Per-point query timings for both pipelines.
pub fn run_scalability_experiment(exp: &ScaleExperiment) -> Result<Vec<ScalePoint>> {
    match exp.mode {
        ScaleMode::StoreSize => {
            let (graphs, records) = base_store(exp.fixed, exp.base_graphs, exp.seed, &exp.summary)?;
            exp.points
                .iter()
                .map(|&size| time_point(&graphs, &records, size, exp))
                .collect()
        }
        ScaleMode::GraphSize => exp
            .points
            .iter()
            .map(|&n| {
                let (graphs, records) = base_store(n, exp.base_graphs, exp.seed, &exp.summary)?;
                time_point(&graphs, &records, exp.fixed, exp)
            })
            .collect(),
    }
}

pub fn write_scale_csv<W: Write>(points: &[ScalePoint], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "n",
        "store_size",
        "two_stage_summarize_s",
        "two_stage_eigen_s",
        "two_stage_distances_s",
        "two_stage_total_s",
        "one_stage_eigen_s",
        "one_stage_distances_s",
        "one_stage_total_s",
    ])
    .map_err(csv_error)?;
    for p in points {
        let s = |d: Duration| format!("{:.9}", d.as_secs_f64());
        w.write_record([
            p.n.to_string(),
            p.store_size.to_string(),
            s(p.two_stage.summarize),
            s(p.two_stage.eigen),
            s(p.two_stage.distances),
            s(p.two_stage.total()),
            s(p.one_stage.eigen),
            s(p.one_stage.distances),
            s(p.one_stage.total()),
        ])
        .map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

/// Least-squares fit `y = a + b x`; returns `(a, b, r²)`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 {
        1.0
    } else {
        sxy * sxy / (sxx * syy)
    };
    (my - slope * mx, slope, r2)
}

/// Spearman rank correlation (average ranks for ties).
pub fn spearman(xs: &[f64], ys: &[f64]) -> f64 {
    fn ranks(v: &[f64]) -> Vec<f64> {
        let mut idx: Vec<usize> = (0..v.len()).collect();
        idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
        let mut r = vec![0.0; v.len()];
        let mut i = 0;
        while i < idx.len() {
            let mut j = i;
            while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
                j += 1;
            }
            let avg = (i + j) as f64 / 2.0 + 1.0;
            for &t in &idx[i..=j] {
                r[t] = avg;
            }
            i = j + 1;
        }
        r
    }
    let (rx, ry) = (ranks(xs), ranks(ys));
    let (_, _, r2) = linear_fit(&rx, &ry);
    let (_, slope, _) = linear_fit(&rx, &ry);
    r2.sqrt() * slope.signum()
}
