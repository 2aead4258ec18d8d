use std::cmp::Ordering;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::trec_io::{Qrels, ScoreRecord};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PrPoint {
    pub threshold: f64,
    pub precision: f64,
    pub recall: f64,
}

/// Labeler scores judged against binary reference labels.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PrCurve {
    /// One point per distinct score, thresholds descending.
    pub points: Vec<PrPoint>,
    pub average_precision: f64,
    pub best_f1: f64,
    pub best_threshold: f64,
    pub relevant: usize,
    pub judged: usize,
    /// Scored pairs without a reference judgment; left out of every number.
    pub unjudged_excluded: usize,
}

struct Item<'a> {
    score: f64,
    qid: &'a str,
    doc_id: &'a str,
    relevant: bool,
}

/// Precision/recall of `records` against `qrels` binarized at `rel_threshold`.
///
/// Average precision is rank-based over the score ordering (ties by doc id,
/// then query id). The curve and best F1 sweep every distinct score as a
/// `score >= threshold` cutoff.
pub fn labeler_pr_analysis(
    records: &[ScoreRecord],
    qrels: &Qrels,
    rel_threshold: u32,
) -> Result<PrCurve> {
    if let Some(first) = records.first() {
        if let Some(other) = records.iter().find(|r| r.labeler != first.labeler) {
            return Err(Error::InvalidArgument(format!(
                "records mix labelers {} and {}",
                first.labeler, other.labeler
            )));
        }
    }
    let mut unjudged_excluded = 0;
    let mut items: Vec<Item<'_>> = Vec::with_capacity(records.len());
    for r in records {
        match qrels.grade(&r.qid, &r.unk_docid) {
            Some(g) => items.push(Item {
                score: r.score,
                qid: &r.qid,
                doc_id: &r.unk_docid,
                relevant: g >= rel_threshold,
            }),
            None => unjudged_excluded += 1,
        }
    }
    let relevant = items.iter().filter(|i| i.relevant).count();
    if relevant == 0 {
        return Err(Error::InvalidArgument(
            "no relevant items among the judged scored pairs".into(),
        ));
    }
    items.sort_by(|a, b| {
        b.score
            .partial_cmp(&a.score)
            .unwrap_or(Ordering::Equal)
            .then_with(|| a.doc_id.cmp(b.doc_id))
            .then_with(|| a.qid.cmp(b.qid))
    });

    let mut hits = 0usize;
    let mut precision_sum = 0.0;
    for (rank, item) in items.iter().enumerate() {
        if item.relevant {
            hits += 1;
            precision_sum += hits as f64 / (rank + 1) as f64;
        }
    }
    let average_precision = precision_sum / relevant as f64;

    let mut points = Vec::new();
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut best_f1 = 0.0;
    let mut best_threshold = items[0].score;
    let mut i = 0;
    while i < items.len() {
        let threshold = items[i].score;
        while i < items.len() && items[i].score == threshold {
            if items[i].relevant {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        let fn_ = relevant - tp;
        let f1 = (2 * tp) as f64 / (2 * tp + fp + fn_) as f64;
        if f1 > best_f1 {
            best_f1 = f1;
            best_threshold = threshold;
        }
        points.push(PrPoint {
            threshold,
            precision: tp as f64 / (tp + fp) as f64,
            recall: tp as f64 / relevant as f64,
        });
    }

    Ok(PrCurve {
        points,
        average_precision,
        best_f1,
        best_threshold,
        relevant,
        judged: items.len(),
        unjudged_excluded,
    })
}

/// CSV with header `threshold,precision,recall`.
pub fn write_pr_csv<W: std::io::Write>(curve: &PrCurve, mut writer: W) -> Result<()> {
    writeln!(writer, "threshold,precision,recall")?;
    for p in &curve.points {
        writeln!(writer, "{},{},{}", p.threshold, p.precision, p.recall)?;
    }
    Ok(())
}
