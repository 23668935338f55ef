//! Append-only summary store with spectral top-k search.
//!
//! The file starts with a two-line header and holds one framed record per
//! summarized graph:
//!
//! ```text
//! SZE-STORE v1
//! spectrum=laplacian
//! REC 0
//! source=graphs/a.el
//! created=1700000000
//! config=eps=0.7 cmin=0.9 dprime=0 initial_k=4 seed=0 loop=literal
//! SZE-SUMMARY v1
//! ...
//! eigs=0 1.5 3
//! ENDREC
//! ```
//!
//! Records may also carry `full_eigs=` with the spectrum of the original
//! graph, used by the one-stage baseline.

use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::{Duration, Instant};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::spectral::{default_head, spectral_distance, spectrum, SpectralSignature, SpectrumKind};
use crate::summarizer::{
    read_summary_lines, summarize, write_summary, LoopMode, ReducedGraph, SummaryConfig,
};

pub const STORE_HEADER: &str = "SZE-STORE v1";

#[derive(Clone, Debug, PartialEq)]
pub struct RecordMeta {
    pub source: String,
    /// Seconds since the Unix epoch.
    pub created: u64,
    pub config: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SummaryRecord {
    pub id: u64,
    pub meta: RecordMeta,
    /// Shared so that copies of a record stay cheap.
    pub reduced: Arc<ReducedGraph>,
    pub signature: SpectralSignature,
    pub full_signature: Option<SpectralSignature>,
}

#[derive(Clone, Debug, Default)]
pub struct AddOptions {
    pub source: String,
    pub created: u64,
    /// Also keep the spectrum of the original graph.
    pub keep_full: bool,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Hit {
    pub id: u64,
    pub distance: f64,
}

/// Time spent per query stage.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct QueryTiming {
    pub summarize: Duration,
    pub eigen: Duration,
    pub distances: Duration,
}

impl QueryTiming {
    pub fn total(&self) -> Duration {
        self.summarize + self.eigen + self.distances
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct QueryResult {
    pub hits: Vec<Hit>,
    pub timing: QueryTiming,
    /// `k` exceeded the store size; every record was returned.
    pub truncated: bool,
}

/// Renders the parameters that shape a summary.
pub fn describe_config(cfg: &SummaryConfig) -> String {
    let mode = match cfg.loop_mode {
        LoopMode::Literal => "literal",
        LoopMode::Classic => "classic",
    };
    format!(
        "eps={} cmin={} dprime={} initial_k={} seed={} loop={mode}",
        cfg.epsilon, cfg.c_min, cfg.d_prime, cfg.initial_k, cfg.seed
    )
}

fn format_eigs(s: &SpectralSignature) -> String {
    let values: Vec<String> = s.eigs().iter().map(|x| x.to_string()).collect();
    values.join(" ")
}

fn parse_eigs(s: &str) -> Result<SpectralSignature> {
    let eigs = s
        .split_whitespace()
        .map(|t| {
            t.parse::<f64>()
                .map_err(|_| Error::format("store", format!("bad eigenvalue {t:?}")))
        })
        .collect::<Result<Vec<_>>>()?;
    SpectralSignature::new(eigs).map_err(|e| Error::format("store", e.to_string()))
}

pub fn write_record<W: Write>(r: &SummaryRecord, out: &mut W) -> Result<()> {
    writeln!(out, "REC {}", r.id)?;
    writeln!(out, "source={}", r.meta.source)?;
    writeln!(out, "created={}", r.meta.created)?;
    writeln!(out, "config={}", r.meta.config)?;
    write_summary(&r.reduced, out)?;
    writeln!(out, "eigs={}", format_eigs(&r.signature))?;
    if let Some(full) = &r.full_signature {
        writeln!(out, "full_eigs={}", format_eigs(full))?;
    }
    writeln!(out, "ENDREC")?;
    Ok(())
}

fn expect_field<'a>(line: &'a str, key: &str) -> Result<&'a str> {
    line.strip_prefix(key)
        .and_then(|rest| rest.strip_prefix('='))
        .ok_or_else(|| Error::format("store", format!("expected {key}=, found {line:?}")))
}

fn next_line<R: BufRead>(lines: &mut std::io::Lines<R>) -> Result<String> {
    lines
        .next()
        .ok_or_else(|| Error::format("store", "truncated record"))?
        .map_err(Error::from)
}

fn read_record<R: BufRead>(rec_line: &str, lines: &mut std::io::Lines<R>) -> Result<SummaryRecord> {
    let id = rec_line
        .strip_prefix("REC ")
        .and_then(|s| s.trim().parse::<u64>().ok())
        .ok_or_else(|| {
            Error::format(
                "store",
                format!("expected record header, found {rec_line:?}"),
            )
        })?;
    let source = expect_field(&next_line(lines)?, "source")?.to_string();
    let created = expect_field(&next_line(lines)?, "created")?
        .parse::<u64>()
        .map_err(|_| Error::format("store", "bad timestamp"))?;
    let config = expect_field(&next_line(lines)?, "config")?.to_string();
    let reduced = read_summary_lines(lines)?;
    let signature = parse_eigs(expect_field(&next_line(lines)?, "eigs")?)?;
    if signature.len() != reduced.k {
        return Err(Error::format(
            "store",
            format!(
                "record {id}: {} eigenvalues for {} classes",
                signature.len(),
                reduced.k
            ),
        ));
    }
    let mut full_signature = None;
    let mut line = next_line(lines)?;
    if let Some(rest) = line.strip_prefix("full_eigs=") {
        full_signature = Some(parse_eigs(rest)?);
        line = next_line(lines)?;
    }
    if line != "ENDREC" {
        return Err(Error::format(
            "store",
            format!("record {id} not terminated"),
        ));
    }
    Ok(SummaryRecord {
        id,
        meta: RecordMeta {
            source,
            created,
            config,
        },
        reduced: Arc::new(reduced),
        signature,
        full_signature,
    })
}

/// Summaries of many graphs, optionally backed by a file.
#[derive(Clone, Debug)]
pub struct Store {
    path: Option<PathBuf>,
    kind: SpectrumKind,
    records: Vec<SummaryRecord>,
    next_id: u64,
}

impl Store {
    pub fn in_memory(kind: SpectrumKind) -> Self {
        Store {
            path: None,
            kind,
            records: Vec::new(),
            next_id: 0,
        }
    }

    /// Creates a new store file; fails if it already exists.
    pub fn create(path: &Path, kind: SpectrumKind) -> Result<Self> {
        let mut f = OpenOptions::new().write(true).create_new(true).open(path)?;
        writeln!(f, "{STORE_HEADER}")?;
        writeln!(f, "spectrum={}", kind.name())?;
        f.flush()?;
        Ok(Store {
            path: Some(path.to_path_buf()),
            ..Store::in_memory(kind)
        })
    }

    pub fn open(path: &Path) -> Result<Self> {
        let mut lines = BufReader::new(File::open(path)?).lines();
        let header = next_line(&mut lines)?;
        if header != STORE_HEADER {
            return Err(Error::format("store", format!("unknown header {header:?}")));
        }
        let kind = SpectrumKind::parse(expect_field(&next_line(&mut lines)?, "spectrum")?)
            .map_err(|e| Error::format("store", e.to_string()))?;
        let mut records = Vec::new();
        while let Some(line) = lines.next() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            records.push(read_record(&line, &mut lines)?);
        }
        let next_id = records.iter().map(|r| r.id + 1).max().unwrap_or(0);
        Ok(Store {
            path: Some(path.to_path_buf()),
            kind,
            records,
            next_id,
        })
    }

    /// Opens `path`, creating it when missing.
    pub fn open_or_create(path: &Path, kind: SpectrumKind) -> Result<Self> {
        if path.exists() {
            let store = Store::open(path)?;
            if store.kind != kind {
                return Err(Error::contract(format!(
                    "store uses {} spectra, requested {}",
                    store.kind.name(),
                    kind.name()
                )));
            }
            Ok(store)
        } else {
            Store::create(path, kind)
        }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn kind(&self) -> SpectrumKind {
        self.kind
    }

    pub fn records(&self) -> &[SummaryRecord] {
        &self.records
    }

    pub fn path(&self) -> Option<&Path> {
        self.path.as_deref()
    }

    /// Summarizes `g` and stores its reduced graph and spectrum. Nothing is
    /// written when summarization fails.
    pub fn add(&mut self, g: &Graph, cfg: &SummaryConfig, opts: &AddOptions) -> Result<u64> {
        let summary = summarize(g, cfg)?;
        let signature = spectrum(&summary.reduced.to_graph(), self.kind)?;
        let full_signature = if opts.keep_full {
            Some(spectrum(g, self.kind)?)
        } else {
            None
        };
        let record = SummaryRecord {
            id: self.next_id,
            meta: RecordMeta {
                source: opts.source.clone(),
                created: opts.created,
                config: describe_config(cfg),
            },
            reduced: Arc::new(summary.reduced),
            signature,
            full_signature,
        };
        self.insert(record)
    }

    /// Appends a prepared record, assigning it the next id.
    pub fn insert(&mut self, mut record: SummaryRecord) -> Result<u64> {
        record.id = self.next_id;
        if let Some(path) = &self.path {
            let mut buf = Vec::new();
            write_record(&record, &mut buf)?;
            let mut f = OpenOptions::new().append(true).open(path)?;
            f.write_all(&buf)?;
            f.flush()?;
        }
        self.next_id += 1;
        self.records.push(record);
        Ok(self.next_id - 1)
    }

    /// Ranks every record by distance to `query`; ties go to the lower id.
    pub fn rank(
        &self,
        query: &SpectralSignature,
        head: Option<usize>,
        full: bool,
    ) -> Result<Vec<Hit>> {
        let mut hits = self
            .records
            .par_iter()
            .map(|r| {
                let sig = if full {
                    r.full_signature.as_ref().ok_or_else(|| {
                        Error::contract(format!("record {} has no full-graph spectrum", r.id))
                    })?
                } else {
                    &r.signature
                };
                let l = head.map_or_else(
                    || default_head(query, sig),
                    |l| l.min(query.len().min(sig.len())),
                );
                Ok(Hit {
                    id: r.id,
                    distance: spectral_distance(query, sig, l)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        hits.sort_by(|a, b| a.distance.total_cmp(&b.distance).then(a.id.cmp(&b.id)));
        Ok(hits)
    }

    fn top_k(&self, mut hits: Vec<Hit>, k: usize, timing: QueryTiming) -> Result<QueryResult> {
        if k == 0 {
            return Err(Error::contract("top-k query with k = 0"));
        }
        let truncated = k > hits.len();
        if truncated {
            log::warn!(
                "k={k} exceeds the {} stored summaries; returning all",
                hits.len()
            );
        }
        hits.truncate(k);
        Ok(QueryResult {
            hits,
            timing,
            truncated,
        })
    }

    /// Two-stage search: summarize `q`, sign its reduced graph and rank the
    /// stored signatures.
    pub fn query(
        &self,
        q: &Graph,
        cfg: &SummaryConfig,
        k: usize,
        head: Option<usize>,
    ) -> Result<QueryResult> {
        if self.is_empty() {
            return Err(Error::contract("query on an empty store"));
        }
        let t = Instant::now();
        let summary = summarize(q, cfg)?;
        let summarize_time = t.elapsed();
        let t = Instant::now();
        let sig = spectrum(&summary.reduced.to_graph(), self.kind)?;
        let eigen = t.elapsed();
        let t = Instant::now();
        let hits = self.rank(&sig, head, false)?;
        let distances = t.elapsed();
        self.top_k(
            hits,
            k,
            QueryTiming {
                summarize: summarize_time,
                eigen,
                distances,
            },
        )
    }

    /// Baseline search on full-graph spectra.
    pub fn query_one_stage(&self, q: &Graph, k: usize, head: Option<usize>) -> Result<QueryResult> {
        if self.is_empty() {
            return Err(Error::contract("query on an empty store"));
        }
        let t = Instant::now();
        let sig = spectrum(q, self.kind)?;
        let eigen = t.elapsed();
        let t = Instant::now();
        let hits = self.rank(&sig, head, true)?;
        let distances = t.elapsed();
        self.top_k(
            hits,
            k,
            QueryTiming {
                summarize: Duration::ZERO,
                eigen,
                distances,
            },
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{generate, GeneratorConfig};

    fn graph(seed: u64, clusters: usize) -> Graph {
        generate(&GeneratorConfig {
            n: 120,
            num_clusters: clusters,
            inter_noise: 0.1,
            intra_noise: 0.1,
            seed,
        })
        .unwrap()
        .graph
    }

    fn cfg() -> SummaryConfig {
        SummaryConfig {
            epsilon: 0.7,
            fallback: true,
            ..SummaryConfig::default()
        }
    }

    #[test]
    fn ids_count_and_self_match() {
        let mut store = Store::in_memory(SpectrumKind::Laplacian);
        let graphs: Vec<Graph> = (0..3).map(|s| graph(s, 2 + s as usize)).collect();
        for (i, g) in graphs.iter().enumerate() {
            let id = store.add(g, &cfg(), &AddOptions::default()).unwrap();
            assert_eq!(id, i as u64);
        }
        assert_eq!(store.len(), 3);
        let res = store.query(&graphs[1], &cfg(), 3, None).unwrap();
        assert_eq!(
            res.hits[0],
            Hit {
                id: 1,
                distance: 0.0
            }
        );
        assert_eq!(res.hits.len(), 3);
        let res = store.query(&graphs[1], &cfg(), 10, None).unwrap();
        assert!(res.truncated && res.hits.len() == 3);
        assert!(store.query(&graphs[1], &cfg(), 0, None).is_err());
    }

    #[test]
    fn one_stage_needs_full_spectra() {
        let mut store = Store::in_memory(SpectrumKind::Laplacian);
        let g = graph(1, 3);
        store.add(&g, &cfg(), &AddOptions::default()).unwrap();
        assert!(store.query_one_stage(&g, 1, None).is_err());
        let keep = AddOptions {
            keep_full: true,
            ..AddOptions::default()
        };
        let mut store = Store::in_memory(SpectrumKind::Laplacian);
        store.add(&graph(2, 3), &cfg(), &keep).unwrap();
        store.add(&g, &cfg(), &keep).unwrap();
        let res = store.query_one_stage(&g, 2, None).unwrap();
        assert_eq!(res.hits[0].id, 1);
        assert!(res.hits[0].distance.abs() < 1e-9);
    }

    #[test]
    fn failed_summary_leaves_store_unchanged() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("db");
        let mut store = Store::create(&path, SpectrumKind::Laplacian).unwrap();
        let before = std::fs::read(&path).unwrap();
        let strict = SummaryConfig {
            epsilon: 0.3,
            ..SummaryConfig::default()
        };
        assert!(store
            .add(&graph(0, 4), &strict, &AddOptions::default())
            .is_err());
        assert_eq!(store.len(), 0);
        assert_eq!(std::fs::read(&path).unwrap(), before);
    }

    #[test]
    fn reopen_preserves_records_and_counter() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("db");
        let mut store = Store::create(&path, SpectrumKind::Laplacian).unwrap();
        let opts = AddOptions {
            source: "a.el".into(),
            created: 42,
            keep_full: true,
        };
        store.add(&graph(3, 2), &cfg(), &opts).unwrap();
        store.add(&graph(4, 3), &cfg(), &opts).unwrap();
        let bytes = std::fs::read(&path).unwrap();

        let mut reopened = Store::open(&path).unwrap();
        assert_eq!(reopened.len(), 2);
        assert_eq!(reopened.records()[1].meta.created, 42);
        assert_eq!(
            reopened.records()[0].signature,
            store.records()[0].signature
        );
        let q = graph(4, 3);
        assert_eq!(
            reopened.query(&q, &cfg(), 2, None).unwrap().hits,
            store.query(&q, &cfg(), 2, None).unwrap().hits
        );
        let mut rewritten = Vec::new();
        for r in reopened.records() {
            write_record(r, &mut rewritten).unwrap();
        }
        assert!(bytes.ends_with(&rewritten));
        assert_eq!(reopened.add(&q, &cfg(), &opts).unwrap(), 2);
        assert!(Store::create(&path, SpectrumKind::Laplacian).is_err());
    }
}
