//! Graph spectra and the head/tail spectral distance.

use faer::{Mat, Side};

use crate::error::{Error, Result};
use crate::graph::Graph;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum SpectrumKind {
    /// Combinatorial Laplacian `D - W`.
    #[default]
    Laplacian,
    /// Weighted adjacency `W`.
    Adjacency,
}

impl SpectrumKind {
    pub fn name(self) -> &'static str {
        match self {
            SpectrumKind::Laplacian => "laplacian",
            SpectrumKind::Adjacency => "adjacency",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "laplacian" => Ok(SpectrumKind::Laplacian),
            "adjacency" => Ok(SpectrumKind::Adjacency),
            _ => Err(Error::contract(format!("unknown spectrum kind {s:?}"))),
        }
    }
}

/// Eigenvalues of a graph matrix in ascending order.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralSignature {
    eigs: Vec<f64>,
}

impl SpectralSignature {
    pub fn new(eigs: Vec<f64>) -> Result<Self> {
        if eigs.is_empty() {
            return Err(Error::contract("empty spectrum"));
        }
        if eigs.iter().any(|x| !x.is_finite()) {
            return Err(Error::contract("non-finite eigenvalue"));
        }
        if eigs.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::contract("eigenvalues not ascending"));
        }
        Ok(SpectralSignature { eigs })
    }

    pub fn eigs(&self) -> &[f64] {
        &self.eigs
    }

    pub fn len(&self) -> usize {
        self.eigs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigs.is_empty()
    }
}

/// Full spectrum of `g`'s Laplacian or adjacency matrix.
pub fn spectrum(g: &Graph, kind: SpectrumKind) -> Result<SpectralSignature> {
    let n = g.n();
    if n == 0 {
        return Err(Error::contract("spectrum of an empty graph"));
    }
    let dense = g.to_dense();
    let mut m = Mat::<f64>::from_fn(n, n, |i, j| match kind {
        SpectrumKind::Laplacian => -dense[i * n + j],
        SpectrumKind::Adjacency => dense[i * n + j],
    });
    if kind == SpectrumKind::Laplacian {
        for i in 0..n {
            m[(i, i)] = g.degree(i);
        }
    }
    let mut eigs = m
        .self_adjoint_eigenvalues(Side::Lower)
        .map_err(|e| Error::contract(format!("eigensolver failed: {e:?}")))?;
    eigs.sort_by(f64::total_cmp);
    SpectralSignature::new(eigs)
}

/// Mean absolute gap between aligned eigenvalues. The shorter spectrum (length
/// `n1`) is compared head to head for its first `head` values and tail to tail
/// for the rest.
pub fn spectral_distance(
    s1: &SpectralSignature,
    s2: &SpectralSignature,
    head: usize,
) -> Result<f64> {
    let (short, long) = if s1.len() <= s2.len() {
        (s1, s2)
    } else {
        (s2, s1)
    };
    let n1 = short.len();
    let n2 = long.len();
    if head > n1 {
        return Err(Error::contract(format!(
            "head count {head} exceeds spectrum length {n1}"
        )));
    }
    let (a, b) = (short.eigs(), long.eigs());
    let mut total = 0.0;
    for i in 0..head {
        total += (b[i] - a[i]).abs();
    }
    for i in head..n1 {
        total += (b[i + n2 - n1] - a[i]).abs();
    }
    Ok(total / n1 as f64)
}

/// Half of the shorter spectrum.
pub fn default_head(s1: &SpectralSignature, s2: &SpectralSignature) -> usize {
    s1.len().min(s2.len()) / 2
}
