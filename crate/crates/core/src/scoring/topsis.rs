//! TOPSIS ranking over the four criteria.
//!
//! Columns are vector-normalized and weighted; the ideal point takes the
//! column minimum for costs and the maximum for the benefit, the anti-ideal
//! the reverse. Closeness is `d- / (d+ + d-)`, or 1 when both are zero.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

/// Criterion directions: sparsity, temporality, proximity are costs.
pub const BENEFIT: [bool; 4] = [false, false, false, true];

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TopsisError {
    #[error("nothing to rank")]
    Empty,
    #[error("criterion values must be finite and non-negative")]
    BadValue,
}

/// Closeness coefficient of every row, in input order.
pub fn closeness(rows: &[[f64; 4]], weights: &[f64; 4]) -> Result<Vec<f64>, TopsisError> {
    if rows.is_empty() {
        return Err(TopsisError::Empty);
    }
    if rows.iter().flatten().any(|x| !x.is_finite() || *x < 0.0) {
        return Err(TopsisError::BadValue);
    }
    let mut norms = [0.0f64; 4];
    for (j, norm) in norms.iter_mut().enumerate() {
        *norm = rows.iter().map(|r| r[j] * r[j]).sum::<f64>().sqrt();
    }
    let weighted: Vec<[f64; 4]> = rows
        .iter()
        .map(|r| {
            let mut out = [0.0; 4];
            for j in 0..4 {
                // All-zero columns carry no information and are left out.
                if norms[j] > 0.0 {
                    out[j] = weights[j] * r[j] / norms[j];
                }
            }
            out
        })
        .collect();

    let mut ideal = [0.0f64; 4];
    let mut anti = [0.0f64; 4];
    for j in 0..4 {
        let col = weighted.iter().map(|r| r[j]);
        let (lo, hi) = col.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| (lo.min(x), hi.max(x)));
        if BENEFIT[j] {
            ideal[j] = hi;
            anti[j] = lo;
        } else {
            ideal[j] = lo;
            anti[j] = hi;
        }
    }

    Ok(weighted
        .iter()
        .map(|r| {
            let d_plus = distance(r, &ideal);
            let d_minus = distance(r, &anti);
            let total = d_plus + d_minus;
            if total == 0.0 {
                1.0
            } else {
                (d_minus / total).clamp(0.0, 1.0)
            }
        })
        .collect())
}

fn distance(a: &[f64; 4], b: &[f64; 4]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// One row to rank, with the keys used to break closeness ties.
#[derive(Debug, Clone, PartialEq)]
pub struct RankInput {
    pub row: [f64; 4],
    pub non_actionable: usize,
    pub sparsity: usize,
    pub key: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ranked {
    /// Position of the row in the input.
    pub index: usize,
    pub closeness: f64,
}

fn quantize(c: f64) -> i64 {
    (c * 1e12).round() as i64
}

/// Orders rows by closeness (descending), then fewer non-actionable
/// changes, fewer changes, and candidate key.
pub fn topsis_rank(inputs: &[RankInput], weights: &[f64; 4]) -> Result<Vec<Ranked>, TopsisError> {
    let rows: Vec<[f64; 4]> = inputs.iter().map(|i| i.row).collect();
    let c = closeness(&rows, weights)?;
    let mut order: Vec<usize> = (0..inputs.len()).collect();
    order.sort_by(|&a, &b| {
        quantize(c[b])
            .cmp(&quantize(c[a]))
            .then_with(|| inputs[a].non_actionable.cmp(&inputs[b].non_actionable))
            .then_with(|| inputs[a].sparsity.cmp(&inputs[b].sparsity))
            .then_with(|| inputs[a].key.cmp(&inputs[b].key))
            .then(Ordering::Equal)
    });
    Ok(order.into_iter().map(|index| Ranked { index, closeness: c[index] }).collect())
}
