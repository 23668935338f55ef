//! Blow-up of a reduced graph and reconstruction error.

use std::io::{Read, Write};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::summarizer::ReducedGraph;

pub const DENSITY_DUMP_MAGIC: &[u8; 8] = b"SZEDMv1\0";

/// Symmetric `n x n` matrix with entries in `[0, 1]` and a zero diagonal.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    n: usize,
    values: Vec<f64>,
}

impl DensityMatrix {
    pub fn new(n: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != n * n {
            return Err(Error::contract(format!(
                "{} values do not form a {n}x{n} matrix",
                values.len()
            )));
        }
        for i in 0..n {
            if values[i * n + i] != 0.0 {
                return Err(Error::contract(format!("nonzero diagonal at {i}")));
            }
            for j in i + 1..n {
                let x = values[i * n + j];
                if !(0.0..=1.0).contains(&x) || x != values[j * n + i] {
                    return Err(Error::contract(format!(
                        "entry ({i}, {j}) breaks symmetry or range"
                    )));
                }
            }
        }
        Ok(DensityMatrix { n, values })
    }

    /// Weighted adjacency of `g`.
    pub fn from_graph(g: &Graph) -> Self {
        DensityMatrix {
            n: g.n(),
            values: g.to_dense(),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Header, `n` as little-endian u64, then row-major f32 entries.
    pub fn write_dump<W: Write>(&self, out: &mut W) -> Result<()> {
        out.write_all(DENSITY_DUMP_MAGIC)?;
        out.write_all(&(self.n as u64).to_le_bytes())?;
        let mut buf = Vec::with_capacity(self.n * 4);
        for row in self.values.chunks(self.n.max(1)) {
            buf.clear();
            for &x in row {
                buf.extend_from_slice(&(x as f32).to_le_bytes());
            }
            out.write_all(&buf)?;
        }
        Ok(())
    }

    pub fn read_dump<R: Read>(input: &mut R) -> Result<Self> {
        let mut magic = [0u8; 8];
        input.read_exact(&mut magic)?;
        if &magic != DENSITY_DUMP_MAGIC {
            return Err(Error::format("density dump", "bad magic"));
        }
        let mut len = [0u8; 8];
        input.read_exact(&mut len)?;
        let n = usize::try_from(u64::from_le_bytes(len))
            .map_err(|_| Error::format("density dump", "size overflow"))?;
        let mut bytes = vec![0u8; n * n * 4];
        input.read_exact(&mut bytes)?;
        let values = bytes
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
            .collect();
        DensityMatrix::new(n, values).map_err(|e| Error::format("density dump", e.to_string()))
    }
}

/// Replaces every class by its vertices: cross-class entries take the pair
/// weight, same-class entries the class's internal density, `C_0` rows stay 0.
pub fn blow_up(r: &ReducedGraph) -> Result<DensityMatrix> {
    r.validate()?;
    let n = r.n;
    let k = r.k;
    let mut values = vec![0.0; n * n];
    values
        .par_chunks_mut(n.max(1))
        .enumerate()
        .for_each(|(u, row)| {
            let Some(cu) = r.membership[u] else { return };
            for (v, x) in row.iter_mut().enumerate() {
                if v == u {
                    continue;
                }
                if let Some(cv) = r.membership[v] {
                    *x = if cu == cv {
                        r.internal[cu]
                    } else {
                        r.weights[cu * k + cv]
                    };
                }
            }
        });
    Ok(DensityMatrix { n, values })
}

/// `(Σ_i Σ_j |a(i,j) - b(i,j)|^p)^(1/p)`; normalized divides by `n^(2/p)`.
pub fn reconstruction_error(
    a: &DensityMatrix,
    b: &DensityMatrix,
    p: f64,
    normalized: bool,
) -> Result<f64> {
    if a.n != b.n {
        return Err(Error::contract(format!(
            "matrix sizes differ: {} and {}",
            a.n, b.n
        )));
    }
    if !(p >= 1.0 && p.is_finite()) {
        return Err(Error::contract(format!(
            "p={p} must be a finite value >= 1"
        )));
    }
    let n = a.n;
    let row_sum = |(x, y): (&[f64], &[f64])| -> f64 {
        let diffs = x.iter().zip(y).map(|(u, v)| (u - v).abs());
        if p == 1.0 {
            diffs.sum()
        } else if p == 2.0 {
            diffs.map(|d| d * d).sum()
        } else {
            diffs.map(|d| d.powf(p)).sum()
        }
    };
    let total: f64 = if n == 0 {
        0.0
    } else {
        a.values
            .par_chunks(n)
            .zip(b.values.par_chunks(n))
            .map(row_sum)
            .collect::<Vec<f64>>()
            .iter()
            .sum()
    };
    let err = total.powf(1.0 / p);
    Ok(if normalized && n > 0 {
        err / (n as f64).powf(2.0 / p)
    } else {
        err
    })
}
