mod config;

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};
use regsum::bench::{self, NoiseExperiment, QualityExperiment, ScaleExperiment, ScaleMode};
use regsum::graph::{load_edge_list, write_edge_list};
use regsum::reconstruction::{blow_up, reconstruction_error, DensityMatrix};
use regsum::spectral::SpectrumKind;
use regsum::store::{AddOptions, Store};
use regsum::summarizer::{read_summary, write_summary, IterationStats, SummaryConfig};
use regsum::synth::{generate, load_external_edge_list, perturb, GeneratorConfig};
use regsum::{summarize, Error, Result};

use config::SummaryArgs;

const VERSION: &str = concat!(
    env!("CARGO_PKG_VERSION"),
    " (summary format SZE-SUMMARY v1, store format SZE-STORE v1)"
);

#[derive(Parser, Debug)]
#[command(name = "regsum", version = VERSION, about = "Summarize graphs with regular partitions and search them by spectrum")]
struct Cli {
    /// Worker threads for parallel sections
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Only log warnings and errors
    #[arg(short, long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Summarize an edge list into a reduced graph
    Summarize(SummarizeArgs),
    /// Blow a summary back up and compare it with a reference graph
    Reconstruct(ReconstructArgs),
    /// Summary store operations
    Db {
        #[command(subcommand)]
        command: DbCommand,
    },
    /// Generate a planted-cluster graph
    Gen(GenArgs),
    /// Add random edges to a graph
    Perturb(PerturbArgs),
    /// Run an experiment and write CSV
    Bench {
        #[command(subcommand)]
        command: BenchCommand,
    },
}

#[derive(Args, Debug)]
struct SummarizeArgs {
    graph: PathBuf,
    #[command(flatten)]
    summary: SummaryArgs,
    /// Print one line per iteration to stderr
    #[arg(long)]
    trace: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ReconstructArgs {
    summary: PathBuf,
    /// Reference edge list to measure the error against
    #[arg(long = "ref")]
    reference: Option<PathBuf>,
    /// Error norm exponent, 1 or 2
    #[arg(long = "p", default_value_t = 2.0, value_parser = parse_norm)]
    p: f64,
    /// Write the blown-up density matrix as a binary dump
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum DbCommand {
    /// Summarize graphs and append them to a store
    Add(DbAddArgs),
    /// Rank stored graphs by spectral distance to a query graph
    Query(DbQueryArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum SpectrumArg {
    Laplacian,
    Adjacency,
}

impl From<SpectrumArg> for SpectrumKind {
    fn from(s: SpectrumArg) -> Self {
        match s {
            SpectrumArg::Laplacian => SpectrumKind::Laplacian,
            SpectrumArg::Adjacency => SpectrumKind::Adjacency,
        }
    }
}

#[derive(Args, Debug)]
struct DbAddArgs {
    #[arg(required = true)]
    graphs: Vec<PathBuf>,
    #[arg(long)]
    db: PathBuf,
    #[command(flatten)]
    summary: SummaryArgs,
    /// Also store the full-graph spectrum for one-stage queries
    #[arg(long)]
    keep_full: bool,
    /// Matrix whose spectrum signs the summaries (new stores only)
    #[arg(long, value_enum, default_value_t = SpectrumArg::Laplacian)]
    spectrum: SpectrumArg,
}

#[derive(Args, Debug)]
struct DbQueryArgs {
    graph: PathBuf,
    #[arg(long)]
    db: PathBuf,
    /// Number of results
    #[arg(short = 'k', default_value_t = 10)]
    k: usize,
    /// Head count of the spectral distance; half the shorter spectrum if unset
    #[arg(long = "l")]
    head: Option<usize>,
    /// Compare full-graph spectra instead of summaries
    #[arg(long)]
    one_stage: bool,
    #[command(flatten)]
    summary: SummaryArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct GenArgs {
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 5)]
    clusters: usize,
    /// Edge probability between clusters
    #[arg(long)]
    inter: f64,
    /// Edge drop probability inside clusters
    #[arg(long)]
    intra: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write the noise-free cluster graph here
    #[arg(long)]
    truth: Option<PathBuf>,
    /// Write "vertex cluster" lines here (-1 for unclustered vertices)
    #[arg(long)]
    labels: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct PerturbArgs {
    graph: PathBuf,
    /// Probability of adding each absent edge
    #[arg(long)]
    prob: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Read a downloaded SNAP or Konect dump instead of a plain edge list
    #[arg(long)]
    external: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct BenchCommon {
    #[command(flatten)]
    summary: SummaryArgs,
    /// Use the full-size experiment grids
    #[arg(long)]
    full_scale: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum ScaleArg {
    DbSize,
    GraphSize,
}

#[derive(Subcommand, Debug)]
enum BenchCommand {
    /// Reconstruction error over the noise grid and sweeps
    Noise {
        #[command(flatten)]
        common: BenchCommon,
        /// Graph sizes, comma separated
        #[arg(long, value_delimiter = ',')]
        sizes: Option<Vec<usize>>,
        /// Runs per cell
        #[arg(long)]
        seeds: Option<usize>,
        #[arg(long)]
        clusters: Option<usize>,
    },
    /// MAP@k of two-stage and one-stage search
    Quality {
        #[command(flatten)]
        common: BenchCommon,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long = "k-max", default_value_t = 36)]
        k_max: usize,
        #[arg(long = "l")]
        head: Option<usize>,
    },
    /// Query time against store size or graph size
    Scale {
        #[command(flatten)]
        common: BenchCommon,
        #[arg(long, value_enum, default_value_t = ScaleArg::DbSize)]
        mode: ScaleArg,
        /// Sweep points, comma separated
        #[arg(long, value_delimiter = ',')]
        points: Option<Vec<usize>>,
        /// Distinct graphs behind each store
        #[arg(long)]
        base_graphs: Option<usize>,
    },
}

fn parse_norm(s: &str) -> std::result::Result<f64, String> {
    match s.parse::<f64>() {
        Ok(p) if p == 1.0 || p == 2.0 => Ok(p),
        _ => Err(format!("expected 1 or 2, got {s:?}")),
    }
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(std::io::stdout().lock())),
    })
}

fn print_trace(trace: &[IterationStats]) {
    for s in trace {
        eprintln!(
            "iteration={} k={} irregular={} sze={:.6} compression={:.6} exceptional={} kept={}",
            s.iteration,
            s.k,
            s.irregular_pairs,
            s.sze_idx,
            s.compression,
            s.exceptional,
            s.collected
        );
    }
}

/// `SOURCE_DATE_EPOCH` when set, else the current time.
fn timestamp() -> Result<u64> {
    match std::env::var("SOURCE_DATE_EPOCH") {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| Error::contract(format!("SOURCE_DATE_EPOCH={v:?} is not a number"))),
        Err(_) => Ok(SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0)),
    }
}

fn cmd_summarize(a: &SummarizeArgs) -> Result<()> {
    let cfg = a.summary.resolve(SummaryConfig::default())?;
    let (g, _) = load_edge_list(&a.graph, None)?;
    log::info!(
        "{}: n={} edges={}",
        a.graph.display(),
        g.n(),
        g.edge_count()
    );
    let summary = match summarize(&g, &cfg) {
        Ok(s) => s,
        Err(Error::SummaryFailed { trace }) => {
            if a.trace {
                print_trace(&trace);
            }
            return Err(Error::SummaryFailed { trace });
        }
        Err(e) => return Err(e),
    };
    if a.trace {
        print_trace(&summary.trace);
    }
    let r = &summary.reduced;
    log::info!("summary: k={} m={} sze={:.6}", r.k, r.m, r.sze_idx);
    let mut out = output(a.out.as_deref())?;
    write_summary(r, &mut out)?;
    out.flush()?;
    Ok(())
}

fn cmd_reconstruct(a: &ReconstructArgs) -> Result<()> {
    if a.reference.is_none() && a.out.is_none() {
        return Err(Error::contract("reconstruct needs --ref, --out or both"));
    }
    let reduced = read_summary(BufReader::new(File::open(&a.summary)?))?;
    let density = blow_up(&reduced)?;
    if let Some(path) = &a.out {
        let mut out = BufWriter::new(File::create(path)?);
        density.write_dump(&mut out)?;
        out.flush()?;
    }
    if let Some(path) = &a.reference {
        let (g, _) = load_edge_list(path, Some(reduced.n))?;
        if g.n() != reduced.n {
            return Err(Error::contract(format!(
                "reference has {} vertices, summary {}",
                g.n(),
                reduced.n
            )));
        }
        let truth = DensityMatrix::from_graph(&g);
        let raw = reconstruction_error(&density, &truth, a.p, false)?;
        let normalized = reconstruction_error(&density, &truth, a.p, true)?;
        let mut out = std::io::stdout().lock();
        writeln!(out, "raw {raw:.9}")?;
        writeln!(out, "normalized {normalized:.9}")?;
    }
    Ok(())
}

fn cmd_db_add(a: &DbAddArgs) -> Result<()> {
    let cfg = a.summary.resolve(SummaryConfig::default())?;
    let mut store = Store::open_or_create(&a.db, a.spectrum.into())?;
    let created = timestamp()?;
    let mut out = std::io::stdout().lock();
    for path in &a.graphs {
        let (g, _) = load_edge_list(path, None)?;
        let opts = AddOptions {
            source: path.display().to_string(),
            created,
            keep_full: a.keep_full,
        };
        let id = store.add(&g, &cfg, &opts)?;
        writeln!(out, "{id} {}", path.display())?;
    }
    Ok(())
}

fn cmd_db_query(a: &DbQueryArgs) -> Result<()> {
    let cfg = a.summary.resolve(SummaryConfig::default())?;
    let store = Store::open(&a.db)?;
    let (g, _) = load_edge_list(&a.graph, None)?;
    let result = if a.one_stage {
        store.query_one_stage(&g, a.k, a.head)?
    } else {
        store.query(&g, &cfg, a.k, a.head)?
    };
    let t = &result.timing;
    log::info!(
        "summarize {:?}, eigen {:?}, distances {:?}",
        t.summarize,
        t.eigen,
        t.distances
    );
    let mut out = output(a.out.as_deref())?;
    for (rank, hit) in result.hits.iter().enumerate() {
        writeln!(out, "{} {} {:.9}", rank + 1, hit.id, hit.distance)?;
    }
    out.flush()?;
    Ok(())
}

fn cmd_gen(a: &GenArgs) -> Result<()> {
    let s = generate(&GeneratorConfig {
        n: a.n,
        num_clusters: a.clusters,
        inter_noise: a.inter,
        intra_noise: a.intra,
        seed: a.seed,
    })?;
    let mut out = output(a.out.as_deref())?;
    write_edge_list(&s.graph, &mut out)?;
    out.flush()?;
    if let Some(path) = &a.truth {
        let mut f = BufWriter::new(File::create(path)?);
        write_edge_list(&s.ground_truth, &mut f)?;
        f.flush()?;
    }
    if let Some(path) = &a.labels {
        let mut f = BufWriter::new(File::create(path)?);
        for (v, l) in s.labels.iter().enumerate() {
            writeln!(f, "{v} {}", l.map_or(-1, |c| c as i64))?;
        }
        f.flush()?;
    }
    Ok(())
}

fn cmd_perturb(a: &PerturbArgs) -> Result<()> {
    let g = if a.external {
        load_external_edge_list(&a.graph)?
    } else {
        load_edge_list(&a.graph, None)?.0
    };
    let noisy = perturb(&g, a.prob, a.seed)?;
    let mut out = output(a.out.as_deref())?;
    write_edge_list(&noisy, &mut out)?;
    out.flush()?;
    Ok(())
}

fn cmd_bench(c: &BenchCommand) -> Result<()> {
    match c {
        BenchCommand::Noise {
            common,
            sizes,
            seeds,
            clusters,
        } => {
            let cfg = common.summary.resolve(bench::experiment_config())?;
            let mut exp = if common.full_scale {
                NoiseExperiment::full_scale(cfg)
            } else {
                NoiseExperiment::desk_scale(cfg)
            };
            if let Some(s) = sizes {
                exp.sizes = s.clone();
            }
            if let Some(s) = seeds {
                exp.seeds = *s;
            }
            if let Some(c) = clusters {
                exp.num_clusters = *c;
            }
            let cells = bench::run_noise_experiment(&exp)?;
            bench::write_noise_csv(&cells, output(common.out.as_deref())?)
        }
        BenchCommand::Quality {
            common,
            n,
            k_max,
            head,
        } => {
            let cfg = common.summary.resolve(bench::experiment_config())?;
            let default_n = if common.full_scale { 1500 } else { 1000 };
            let mut exp = QualityExperiment::new(n.unwrap_or(default_n), cfg);
            exp.k_max = *k_max;
            exp.head = *head;
            let report = bench::run_quality_experiment(&exp)?;
            bench::write_quality_csv(&report, output(common.out.as_deref())?)
        }
        BenchCommand::Scale {
            common,
            mode,
            points,
            base_graphs,
        } => {
            let cfg = common.summary.resolve(bench::scale_config())?;
            let mode = match mode {
                ScaleArg::DbSize => ScaleMode::StoreSize,
                ScaleArg::GraphSize => ScaleMode::GraphSize,
            };
            let mut exp = if common.full_scale {
                ScaleExperiment::full_scale(mode, cfg)
            } else {
                ScaleExperiment::desk_scale(mode, cfg)
            };
            if let Some(p) = points {
                exp.points = p.clone();
            }
            if let Some(b) = base_graphs {
                exp.base_graphs = *b;
            }
            let rows = bench::run_scalability_experiment(&exp)?;
            bench::write_scale_csv(&rows, output(common.out.as_deref())?)
        }
    }
}

fn run(cli: &Cli) -> Result<()> {
    if let Some(t) = cli.threads {
        if t == 0 {
            return Err(Error::contract("--threads must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| Error::contract(e.to_string()))?;
    }
    match &cli.command {
        Command::Summarize(a) => cmd_summarize(a),
        Command::Reconstruct(a) => cmd_reconstruct(a),
        Command::Db { command } => match command {
            DbCommand::Add(a) => cmd_db_add(a),
            DbCommand::Query(a) => cmd_db_query(a),
        },
        Command::Gen(a) => cmd_gen(a),
        Command::Perturb(a) => cmd_perturb(a),
        Command::Bench { command } => cmd_bench(command),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(if cli.quiet {
        "warn"
    } else {
        "info"
    }))
    .format_timestamp(None)
    .init();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_io() { 2 } else { 1 })
        }
    }
}
