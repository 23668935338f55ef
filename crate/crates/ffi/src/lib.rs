//! C ABI over `regsum`.
//!
//! Every fallible call returns a [`RegsumStatus`]; on failure the message is
//! kept per thread and read with [`regsum_last_error`]. Graphs, summaries and
//! stores are opaque handles released with their `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;

use regsum::graph::load_edge_list;
use regsum::reconstruction::{blow_up, reconstruction_error, DensityMatrix};
use regsum::spectral::SpectrumKind;
use regsum::store::{AddOptions, Store};
use regsum::summarizer::{write_summary, LoopMode, SummaryConfig};
use regsum::{Error, Graph, Summary};

/// Passing this (`SIZE_MAX` in C) as `head` selects half the shorter spectrum.
pub const REGSUM_DEFAULT_HEAD: usize = usize::MAX;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RegsumStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidArgument = 2,
    Parse = 3,
    Io = 4,
    SummaryFailed = 5,
    Format = 6,
    Panic = 7,
}

/// Summarizer settings; fill with [`regsum_config_default`] first.
#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct RegsumConfig {
    pub epsilon: f64,
    pub c_min: f64,
    pub d_prime: f64,
    pub initial_k: usize,
    pub seed: u64,
    pub classic_loop: bool,
    pub fallback: bool,
}

impl From<&RegsumConfig> for SummaryConfig {
    fn from(c: &RegsumConfig) -> Self {
        SummaryConfig {
            epsilon: c.epsilon,
            c_min: c.c_min,
            d_prime: c.d_prime,
            initial_k: c.initial_k,
            seed: c.seed,
            loop_mode: if c.classic_loop {
                LoopMode::Classic
            } else {
                LoopMode::Literal
            },
            fallback: c.fallback,
            ..SummaryConfig::default()
        }
    }
}

pub struct RegsumGraph(Graph);
pub struct RegsumSummary(Summary);
pub struct RegsumStore(Store);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> RegsumStatus {
    match e {
        Error::Parse { .. } | Error::WeightRange { .. } => RegsumStatus::Parse,
        Error::Io(_) => RegsumStatus::Io,
        Error::SummaryFailed { .. } => RegsumStatus::SummaryFailed,
        Error::Format { .. } => RegsumStatus::Format,
        _ => RegsumStatus::InvalidArgument,
    }
}

struct Failure(RegsumStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(RegsumStatus::NullArgument, format!("{what} is null"))
}

/// Runs `f`, recording its error or panic.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> RegsumStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => RegsumStatus::Ok,
        Ok(Err(Failure(status, message))) => {
            set_error(message);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            RegsumStatus::Panic
        }
    }
}

unsafe fn path_arg(p: *const c_char, what: &str) -> Result<PathBuf, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    let s = CStr::from_ptr(p).to_str().map_err(|_| {
        Failure(
            RegsumStatus::InvalidArgument,
            format!("{what} is not UTF-8"),
        )
    })?;
    Ok(PathBuf::from(s))
}

unsafe fn config_arg(cfg: *const RegsumConfig) -> SummaryConfig {
    cfg.as_ref()
        .map_or_else(SummaryConfig::default, SummaryConfig::from)
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn store_out<T>(out: *mut *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

/// Library version, a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn regsum_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failed call on this thread, or NULL. Valid until the
/// next failing call on the same thread.
#[no_mangle]
pub extern "C" fn regsum_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(std::ptr::null(), |c| c.as_ptr()))
}

/// # Safety
/// `out` must be null or point to writable memory for one `RegsumConfig`.
#[no_mangle]
pub unsafe extern "C" fn regsum_config_default(out: *mut RegsumConfig) -> RegsumStatus {
    guard(|| {
        let d = SummaryConfig::default();
        let out = out.as_mut().ok_or_else(|| null("output pointer"))?;
        *out = RegsumConfig {
            epsilon: d.epsilon,
            c_min: d.c_min,
            d_prime: d.d_prime,
            initial_k: d.initial_k,
            seed: d.seed,
            classic_loop: d.loop_mode == LoopMode::Classic,
            fallback: d.fallback,
        };
        Ok(())
    })
}

/// Reads a `u v [w]` edge list.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn regsum_graph_load(
    path: *const c_char,
    out: *mut *mut RegsumGraph,
) -> RegsumStatus {
    guard(|| {
        let path = path_arg(path, "path")?;
        let (g, _) = load_edge_list(&path, None)?;
        store_out(out, RegsumGraph(g))
    })
}

/// Builds a graph from `count` edges. `weights` may be NULL for unit weights.
///
/// # Safety
/// `sources` and `targets` (and `weights` when non-null) must hold `count`
/// elements; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn regsum_graph_from_edges(
    n: usize,
    sources: *const usize,
    targets: *const usize,
    weights: *const f64,
    count: usize,
    out: *mut *mut RegsumGraph,
) -> RegsumStatus {
    guard(|| {
        if count > 0 && (sources.is_null() || targets.is_null()) {
            return Err(null("edge array"));
        }
        let edges = (0..count).map(|i| {
            let w = if weights.is_null() {
                1.0
            } else {
                *weights.add(i)
            };
            (*sources.add(i), *targets.add(i), w)
        });
        let g = Graph::from_edges(n, edges.collect::<Vec<_>>())?;
        store_out(out, RegsumGraph(g))
    })
}

/// # Safety
/// `g` must be null or a live graph handle.
#[no_mangle]
pub unsafe extern "C" fn regsum_graph_vertex_count(g: *const RegsumGraph) -> usize {
    g.as_ref().map_or(0, |g| g.0.n())
}

/// # Safety
/// `g` must be null or a handle from this library, freed at most once.
#[no_mangle]
pub unsafe extern "C" fn regsum_graph_free(g: *mut RegsumGraph) {
    if !g.is_null() {
        drop(Box::from_raw(g));
    }
}

/// Summarizes `g`; `cfg` may be NULL for the defaults.
///
/// # Safety
/// Handles must be live; `cfg` null or valid; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn regsum_summarize(
    g: *const RegsumGraph,
    cfg: *const RegsumConfig,
    out: *mut *mut RegsumSummary,
) -> RegsumStatus {
    guard(|| {
        let g = handle(g, "graph")?;
        let summary = regsum::summarize(&g.0, &config_arg(cfg))?;
        store_out(out, RegsumSummary(summary))
    })
}

/// # Safety
/// `s` must be null or a live summary handle.
#[no_mangle]
pub unsafe extern "C" fn regsum_summary_class_count(s: *const RegsumSummary) -> usize {
    s.as_ref().map_or(0, |s| s.0.reduced.k)
}

/// # Safety
/// `s` must be null or a live summary handle.
#[no_mangle]
pub unsafe extern "C" fn regsum_summary_class_size(s: *const RegsumSummary) -> usize {
    s.as_ref().map_or(0, |s| s.0.reduced.m)
}

/// NaN for a null handle.
///
/// # Safety
/// `s` must be null or a live summary handle.
#[no_mangle]
pub unsafe extern "C" fn regsum_summary_sze_idx(s: *const RegsumSummary) -> f64 {
    s.as_ref().map_or(f64::NAN, |s| s.0.reduced.sze_idx)
}

/// Writes the class of every vertex into `classes` (-1 for the exceptional
/// set). `len` must equal the vertex count.
///
/// # Safety
/// `classes` must hold `len` writable elements.
#[no_mangle]
pub unsafe extern "C" fn regsum_summary_membership(
    s: *const RegsumSummary,
    classes: *mut i64,
    len: usize,
) -> RegsumStatus {
    guard(|| {
        let s = handle(s, "summary")?;
        let membership = &s.0.reduced.membership;
        if len != membership.len() {
            return Err(Failure(
                RegsumStatus::InvalidArgument,
                format!(
                    "buffer holds {len} entries, graph has {} vertices",
                    membership.len()
                ),
            ));
        }
        if classes.is_null() {
            return Err(null("class buffer"));
        }
        for (i, c) in membership.iter().enumerate() {
            *classes.add(i) = c.map_or(-1, |c| c as i64);
        }
        Ok(())
    })
}

/// Saves the summary in the text summary format.
///
/// # Safety
/// `s` must be live; `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn regsum_summary_write(
    s: *const RegsumSummary,
    path: *const c_char,
) -> RegsumStatus {
    guard(|| {
        let s = handle(s, "summary")?;
        let path = path_arg(path, "path")?;
        let mut f = std::fs::File::create(path).map_err(Error::from)?;
        write_summary(&s.0.reduced, &mut f)?;
        Ok(())
    })
}

/// l_p distance between the blown-up summary and `reference`.
///
/// # Safety
/// Handles must be live; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn regsum_summary_reconstruction_error(
    s: *const RegsumSummary,
    reference: *const RegsumGraph,
    p: f64,
    normalized: bool,
    out: *mut f64,
) -> RegsumStatus {
    guard(|| {
        let s = handle(s, "summary")?;
        let reference = handle(reference, "reference graph")?;
        let out = out.as_mut().ok_or_else(|| null("output pointer"))?;
        let blown = blow_up(&s.0.reduced)?;
        *out = reconstruction_error(
            &blown,
            &DensityMatrix::from_graph(&reference.0),
            p,
            normalized,
        )?;
        Ok(())
    })
}

/// # Safety
/// `s` must be null or a handle from this library, freed at most once.
#[no_mangle]
pub unsafe extern "C" fn regsum_summary_free(s: *mut RegsumSummary) {
    if !s.is_null() {
        drop(Box::from_raw(s));
    }
}

/// Opens a store file; with `create` a missing file becomes a new
/// Laplacian-spectrum store.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn regsum_store_open(
    path: *const c_char,
    create: bool,
    out: *mut *mut RegsumStore,
) -> RegsumStatus {
    guard(|| {
        let path = path_arg(path, "path")?;
        let store = if create {
            Store::open_or_create(&path, SpectrumKind::Laplacian)?
        } else {
            Store::open(&path)?
        };
        store_out(out, RegsumStore(store))
    })
}

/// # Safety
/// `store` must be null or a live store handle.
#[no_mangle]
pub unsafe extern "C" fn regsum_store_len(store: *const RegsumStore) -> usize {
    store.as_ref().map_or(0, |s| s.0.len())
}

/// Summarizes `g` and appends it. `source` may be NULL.
///
/// # Safety
/// Handles must be live; `cfg` null or valid; `source` null or
/// NUL-terminated; `id_out` null or writable.
#[no_mangle]
pub unsafe extern "C" fn regsum_store_add(
    store: *mut RegsumStore,
    g: *const RegsumGraph,
    cfg: *const RegsumConfig,
    keep_full: bool,
    source: *const c_char,
    created: u64,
    id_out: *mut u64,
) -> RegsumStatus {
    guard(|| {
        let store = store.as_mut().ok_or_else(|| null("store"))?;
        let g = handle(g, "graph")?;
        let source = if source.is_null() {
            String::new()
        } else {
            CStr::from_ptr(source).to_string_lossy().into_owned()
        };
        let opts = AddOptions {
            source,
            created,
            keep_full,
        };
        let id = store.0.add(&g.0, &config_arg(cfg), &opts)?;
        if let Some(out) = id_out.as_mut() {
            *out = id;
        }
        Ok(())
    })
}

/// Top-`k` search. Fills `ids` and `distances` (each with room for `k`
/// entries) and sets `count` to the number of hits. A `head` of `SIZE_MAX`
/// picks the default alignment.
///
/// # Safety
/// Handles must be live; `cfg` null or valid; `ids` and `distances` must
/// hold `k` writable elements; `count` writable.
#[no_mangle]
pub unsafe extern "C" fn regsum_store_query(
    store: *const RegsumStore,
    g: *const RegsumGraph,
    cfg: *const RegsumConfig,
    k: usize,
    head: usize,
    one_stage: bool,
    ids: *mut u64,
    distances: *mut f64,
    count: *mut usize,
) -> RegsumStatus {
    guard(|| {
        let store = handle(store, "store")?;
        let g = handle(g, "graph")?;
        if ids.is_null() || distances.is_null() || count.is_null() {
            return Err(null("result buffer"));
        }
        let head = (head != REGSUM_DEFAULT_HEAD).then_some(head);
        let result = if one_stage {
            store.0.query_one_stage(&g.0, k, head)?
        } else {
            store.0.query(&g.0, &config_arg(cfg), k, head)?
        };
        for (i, hit) in result.hits.iter().enumerate() {
            *ids.add(i) = hit.id;
            *distances.add(i) = hit.distance;
        }
        *count = result.hits.len();
        Ok(())
    })
}

/// # Safety
/// `store` must be null or a handle from this library, freed at most once.
#[no_mangle]
pub unsafe extern "C" fn regsum_store_free(store: *mut RegsumStore) {
    if !store.is_null() {
        drop(Box::from_raw(store));
    }
}
