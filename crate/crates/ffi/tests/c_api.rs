use std::ffi::{CStr, CString};
use std::ptr;

use regsum_ffi::*;

/// Four disjoint cliques of `n / 4` vertices.
fn cliques(n: usize) -> *mut RegsumGraph {
    let size = n / 4;
    let (mut src, mut dst) = (Vec::new(), Vec::new());
    for u in 0..n {
        for v in u + 1..n {
            if u / size == v / size {
                src.push(u);
                dst.push(v);
            }
        }
    }
    let mut g = ptr::null_mut();
    let status = unsafe {
        regsum_graph_from_edges(
            n,
            src.as_ptr(),
            dst.as_ptr(),
            ptr::null(),
            src.len(),
            &mut g,
        )
    };
    assert_eq!(status, RegsumStatus::Ok);
    g
}

fn clique_config() -> RegsumConfig {
    let mut cfg = unsafe {
        let mut c = std::mem::zeroed();
        assert_eq!(regsum_config_default(&mut c), RegsumStatus::Ok);
        c
    };
    cfg.epsilon = 0.3;
    cfg.c_min = 0.9;
    cfg.classic_loop = false;
    cfg.seed = 0;
    cfg.fallback = true;
    cfg
}

fn last_error() -> String {
    let p = regsum_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn version_is_a_c_string() {
    let v = unsafe { CStr::from_ptr(regsum_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn summarize_and_reconstruct() {
    let g = cliques(400);
    let cfg = clique_config();
    unsafe {
        assert_eq!(regsum_graph_vertex_count(g), 400);
        let mut s = ptr::null_mut();
        assert_eq!(regsum_summarize(g, &cfg, &mut s), RegsumStatus::Ok);
        let k = regsum_summary_class_count(s);
        assert!(k >= 4);
        assert!(regsum_summary_class_size(s) * k <= 400);
        assert!(regsum_summary_sze_idx(s) > 0.0);

        let mut classes = vec![0i64; 400];
        assert_eq!(
            regsum_summary_membership(s, classes.as_mut_ptr(), 400),
            RegsumStatus::Ok
        );
        assert!(classes.iter().all(|&c| c >= -1 && c < k as i64));
        assert_eq!(
            regsum_summary_membership(s, classes.as_mut_ptr(), 3),
            RegsumStatus::InvalidArgument
        );

        let mut err = f64::NAN;
        assert_eq!(
            regsum_summary_reconstruction_error(s, g, 2.0, true, &mut err),
            RegsumStatus::Ok
        );
        assert!((0.0..0.5).contains(&err), "{err}");

        let dir = tempfile::tempdir().unwrap();
        let path = CString::new(dir.path().join("s.txt").to_str().unwrap()).unwrap();
        assert_eq!(regsum_summary_write(s, path.as_ptr()), RegsumStatus::Ok);
        let text = std::fs::read_to_string(dir.path().join("s.txt")).unwrap();
        assert!(text.starts_with("SZE-SUMMARY v1"));

        regsum_summary_free(s);
        regsum_graph_free(g);
    }
}

#[test]
fn store_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = CString::new(dir.path().join("db.sze").to_str().unwrap()).unwrap();
    let cfg = clique_config();
    let g = cliques(400);
    unsafe {
        let mut store = ptr::null_mut();
        assert_eq!(
            regsum_store_open(path.as_ptr(), true, &mut store),
            RegsumStatus::Ok
        );
        let source = CString::new("cliques").unwrap();
        for expected in 0..2u64 {
            let mut id = u64::MAX;
            let status = regsum_store_add(store, g, &cfg, false, source.as_ptr(), 7, &mut id);
            assert_eq!(status, RegsumStatus::Ok);
            assert_eq!(id, expected);
        }
        assert_eq!(regsum_store_len(store), 2);
        regsum_store_free(store);

        let mut reopened = ptr::null_mut();
        assert_eq!(
            regsum_store_open(path.as_ptr(), false, &mut reopened),
            RegsumStatus::Ok
        );
        assert_eq!(regsum_store_len(reopened), 2);

        let mut ids = [u64::MAX; 5];
        let mut dist = [f64::NAN; 5];
        let mut count = 0usize;
        let status = regsum_store_query(
            reopened,
            g,
            &cfg,
            5,
            REGSUM_DEFAULT_HEAD,
            false,
            ids.as_mut_ptr(),
            dist.as_mut_ptr(),
            &mut count,
        );
        assert_eq!(status, RegsumStatus::Ok);
        assert_eq!(count, 2);
        assert!(dist[..2].iter().all(|&d| d.abs() < 1e-9));
        regsum_store_free(reopened);
        regsum_graph_free(g);
    }
}

#[test]
fn errors_are_reported() {
    unsafe {
        let mut g = ptr::null_mut();
        assert_eq!(
            regsum_graph_load(ptr::null(), &mut g),
            RegsumStatus::NullArgument
        );
        assert!(last_error().contains("null"));

        let missing = CString::new("/nonexistent/graph.txt").unwrap();
        assert_eq!(
            regsum_graph_load(missing.as_ptr(), &mut g),
            RegsumStatus::Io
        );
        assert!(g.is_null());

        let dir = tempfile::tempdir().unwrap();
        let bad = dir.path().join("bad.txt");
        std::fs::write(&bad, "0 1\nzero two\n").unwrap();
        let bad = CString::new(bad.to_str().unwrap()).unwrap();
        assert_eq!(regsum_graph_load(bad.as_ptr(), &mut g), RegsumStatus::Parse);
        assert!(last_error().contains(":2:"), "{}", last_error());

        let (src, dst) = ([0usize], [9usize]);
        let status = regsum_graph_from_edges(3, src.as_ptr(), dst.as_ptr(), ptr::null(), 1, &mut g);
        assert_eq!(status, RegsumStatus::InvalidArgument);

        let mut out = 0.0;
        assert_eq!(
            regsum_summary_reconstruction_error(ptr::null(), ptr::null(), 1.0, false, &mut out),
            RegsumStatus::NullArgument
        );
        assert!(regsum_summary_sze_idx(ptr::null()).is_nan());
        assert_eq!(regsum_graph_vertex_count(ptr::null()), 0);
        regsum_graph_free(ptr::null_mut());
    }
}

#[test]
fn strict_settings_fail_cleanly() {
    let g = cliques(40);
    let mut cfg = clique_config();
    cfg.epsilon = 0.01;
    cfg.c_min = 0.99;
    cfg.fallback = false;
    unsafe {
        let mut s = ptr::null_mut();
        let status = regsum_summarize(g, &cfg, &mut s);
        assert_ne!(status, RegsumStatus::Ok);
        assert!(s.is_null());
        assert!(!last_error().is_empty());
        regsum_graph_free(g);
    }
}
