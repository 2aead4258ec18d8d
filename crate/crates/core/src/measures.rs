//! Recall-agnostic, partial-gain effectiveness measures: scaled DCG,
//! weighted precision and rank-biased precision.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::labelers::GainTable;
use crate::trec_io::Run;

/// Gains of `qid`'s ranking in evaluation order; unlisted documents get 0.
pub fn gains_for(run: &Run, table: &GainTable, qid: &str) -> Vec<f64> {
    let gains = table.query(qid);
    run.ranking(qid)
        .iter()
        .map(|d| gains.and_then(|g| g.get(&d.doc_id)).copied().unwrap_or(0.0))
        .collect()
}

/// Scaled DCG: DCG@k over an ideal of `k` fully relevant documents. The
/// normalizer never depends on the gains, so discovering new relevant
/// documents cannot change it.
pub fn sdcg(gains: &[f64], k: usize) -> f64 {
    let discount = |i: usize| 1.0 / ((i + 2) as f64).log2();
    let dcg: f64 = gains
        .iter()
        .take(k)
        .enumerate()
        .map(|(i, g)| g * discount(i))
        .sum();
    let ideal: f64 = (0..k).map(discount).sum();
    if ideal > 0.0 {
        dcg / ideal
    } else {
        0.0
    }
}

/// Sum of the top-`k` gains over `k`, even when the ranking is shorter.
pub fn weighted_precision(gains: &[f64], k: usize) -> f64 {
    if k == 0 {
        return 0.0;
    }
    gains.iter().take(k).sum::<f64>() / k as f64
}

/// `(1 - p) * Σ p^(i-1) g_i` over the finite ranking, without the residual.
/// Truncating at depth `m` lowers the value by at most `p^m`.
pub fn rbp(gains: &[f64], p: f64) -> f64 {
    let mut weight = 1.0;
    let mut total = 0.0;
    for g in gains {
        total += weight * g;
        weight *= p;
    }
    // Rounding can push long all-ones rankings a hair above 1.
    ((1.0 - p) * total).min(1.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Measure {
    Sdcg { k: usize },
    WeightedPrecision { k: usize },
    Rbp { p: f64 },
}

impl Measure {
    pub fn compute(&self, gains: &[f64]) -> f64 {
        match *self {
            Self::Sdcg { k } => sdcg(gains, k),
            Self::WeightedPrecision { k } => weighted_precision(gains, k),
            Self::Rbp { p } => rbp(gains, p),
        }
    }

    /// A filename-friendly form, e.g. `SDCG_10` or `RBP_p0.8`.
    pub fn slug(&self) -> String {
        match *self {
            Self::Sdcg { k } => format!("SDCG_{k}"),
            Self::WeightedPrecision { k } => format!("WP_{k}"),
            Self::Rbp { p } => format!("RBP_p{p}"),
        }
    }
}

impl fmt::Display for Measure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Self::Sdcg { k } => write!(f, "SDCG@{k}"),
            Self::WeightedPrecision { k } => write!(f, "WP@{k}"),
            Self::Rbp { p } => write!(f, "RBP(p={p})"),
        }
    }
}

impl FromStr for Measure {
    type Err = Error;

    /// Accepts `SDCG@<k>`, `WP@<k>` and `RBP(p=<p>)`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidArgument(format!("unknown measure {s:?}"));
        let depth = |k: &str| -> Result<usize> {
            match k.parse::<usize>() {
                Ok(k) if k >= 1 => Ok(k),
                _ => Err(bad()),
            }
        };
        if let Some(k) = s.strip_prefix("SDCG@") {
            return Ok(Self::Sdcg { k: depth(k)? });
        }
        if let Some(k) = s.strip_prefix("WP@") {
            return Ok(Self::WeightedPrecision { k: depth(k)? });
        }
        if let Some(p) = s.strip_prefix("RBP(p=").and_then(|r| r.strip_suffix(')')) {
            let p: f64 = p.parse().map_err(|_| bad())?;
            if p > 0.0 && p < 1.0 {
                return Ok(Self::Rbp { p });
            }
        }
        Err(bad())
    }
}

impl Serialize for Measure {
    fn serialize<S: serde::Serializer>(
        &self,
        serializer: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

/// Per-query values and their mean for one run and one measure.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalResult {
    pub measure: Measure,
    pub per_query: BTreeMap<String, f64>,
    pub mean: f64,
}

/// Evaluates `run` over exactly `queries`. A query the run skipped scores 0
/// and still counts toward the mean.
pub fn evaluate(run: &Run, table: &GainTable, measure: Measure, queries: &[String]) -> EvalResult {
    let per_query: BTreeMap<String, f64> = queries
        .iter()
        .map(|q| (q.clone(), measure.compute(&gains_for(run, table, q))))
        .collect();
    let mean = if per_query.is_empty() {
        0.0
    } else {
        per_query.values().sum::<f64>() / per_query.len() as f64
    };
    EvalResult {
        measure,
        per_query,
        mean,
    }
}
