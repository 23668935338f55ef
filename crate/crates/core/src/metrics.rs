//! Ranking quality: average precision and its mean over queries.

use std::collections::HashSet;

use crate::error::{Error, Result};

/// `(1/|relevant|) Σ_{j<=k} precision(j) · relevance(j)` over the first `k`
/// ranked ids.
pub fn ap_at_k(ranking: &[u64], relevant: &HashSet<u64>, k: usize) -> Result<f64> {
    if relevant.is_empty() {
        return Err(Error::contract("average precision needs a relevant set"));
    }
    if k > ranking.len() {
        return Err(Error::contract(format!(
            "k={k} exceeds ranking length {}",
            ranking.len()
        )));
    }
    let mut hits = 0usize;
    let mut total = 0.0;
    for (j, id) in ranking[..k].iter().enumerate() {
        if relevant.contains(id) {
            hits += 1;
            total += hits as f64 / (j + 1) as f64;
        }
    }
    Ok(total / relevant.len() as f64)
}

pub fn map_at_k(per_query: &[f64]) -> Result<f64> {
    if per_query.is_empty() {
        return Err(Error::contract("mean average precision over no queries"));
    }
    Ok(per_query.iter().sum::<f64>() / per_query.len() as f64)
}
