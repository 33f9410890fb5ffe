//! Energy score of a sampled predictive distribution,
//!
//! ```text
//! ES(F, x) = (1/m) Σ_i ‖X_i − x‖^β − 1/(2m(m−1)) Σ_{i≠j} ‖X_i − X_j‖^β
//! ```
//!
//! with the unbiased pairwise term. Lower is better. `β = 1` is the usual
//! choice; any `β ∈ (0, 2]` is accepted.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_BETA: f64 = 1.0;

/// Predictive draws for one date, one draw per row.
#[derive(Clone, Debug, PartialEq)]
pub struct PredictiveSample {
    pub label: String,
    pub draws: Vec<Vec<f64>>,
}

fn dist_pow(a: &[f64], b: &[f64], beta: f64) -> f64 {
    let sq: f64 = a.iter().zip(b).map(|(u, v)| (u - v) * (u - v)).sum();
    if beta == 1.0 {
        sq.sqrt()
    } else {
        sq.powf(0.5 * beta)
    }
}

pub fn energy_score(draws: &[Vec<f64>], x: &[f64], beta: f64) -> Result<f64> {
    if !(beta > 0.0 && beta <= 2.0) {
        return Err(Error::Config(format!("beta must lie in (0, 2], got {beta}")));
    }
    let m = draws.len();
    if m == 0 {
        return Err(Error::Config("energy score needs at least one draw".into()));
    }
    if let Some(bad) = draws.iter().find(|d| d.len() != x.len()) {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            found: bad.len(),
        });
    }
    if m == 1 {
        // a single draw only scores the degenerate case
        return if draws[0] == x {
            Ok(0.0)
        } else {
            Err(Error::Config("energy score needs at least two draws".into()))
        };
    }
    let first = draws.iter().map(|d| dist_pow(d, x, beta)).sum::<f64>() / m as f64;
    let mut pairs = 0.0;
    for i in 0..m {
        for j in i + 1..m {
            pairs += dist_pow(&draws[i], &draws[j], beta);
        }
    }
    // Σ_{i≠j} counts each unordered pair twice
    Ok(first - pairs / (m * (m - 1)) as f64)
}

/// Scores aligned by label.
pub fn score_series(pred: &[PredictiveSample], realized: &[(String, Vec<f64>)], beta: f64) -> Result<Vec<f64>> {
    if pred.len() != realized.len() {
        return Err(Error::LabelMismatch(format!(
            "{} predictive samples but {} realisations",
            pred.len(),
            realized.len()
        )));
    }
    pred.iter()
        .zip(realized)
        .map(|(s, (label, x))| {
            if &s.label != label {
                return Err(Error::LabelMismatch(format!("predictive {} against realisation {label}", s.label)));
            }
            energy_score(&s.draws, x, beta)
        })
        .collect()
}

/// One row of a two-model comparison. Negative `difference` favours
/// model A.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoreRow {
    pub date: String,
    pub score_model_a: f64,
    pub score_model_b: f64,
    pub difference: f64,
}

pub fn compare(labels: &[String], a: &[f64], b: &[f64]) -> Result<Vec<ScoreRow>> {
    if labels.len() != a.len() || a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: labels.len(),
            found: if a.len() != labels.len() { a.len() } else { b.len() },
        });
    }
    Ok(labels
        .iter()
        .zip(a.iter().zip(b))
        .map(|(d, (&x, &y))| ScoreRow {
            date: d.clone(),
            score_model_a: x,
            score_model_b: y,
            difference: x - y,
        })
        .collect())
}

pub fn write_scores<W: Write>(out: W, rows: &[ScoreRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Sample mean and its standard error.
pub fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, f64::NAN);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}
