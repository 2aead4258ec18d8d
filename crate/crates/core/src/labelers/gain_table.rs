use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::pooling::ShallowPool;
use crate::trec_io::{Qrels, ScoreRecord};

/// Per-query document gains in `[0, 1]`. Missing documents count as gain 0.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct GainTable {
    gains: BTreeMap<String, BTreeMap<String, f64>>,
}

impl GainTable {
    /// Only the known relevant documents, each with gain 1: every hole is
    /// treated as non-relevant.
    pub fn baseline(pool: &ShallowPool) -> Self {
        let gains = pool
            .entries()
            .iter()
            .map(|(q, e)| (q.clone(), BTreeMap::from([(e.rel_doc_id.clone(), 1.0)])))
            .collect();
        Self { gains }
    }

    /// Full judgments mapped linearly to `grade / max_grade`.
    pub fn from_qrels(qrels: &Qrels, max_grade: u32) -> Result<Self> {
        if max_grade == 0 {
            return Err(Error::InvalidArgument("max grade must be positive".into()));
        }
        let mut gains: BTreeMap<String, BTreeMap<String, f64>> = BTreeMap::new();
        for (q, d, g) in qrels.iter() {
            if g > max_grade {
                return Err(Error::InvalidArgument(format!(
                    "grade {g} of query {q}, document {d} exceeds max grade {max_grade}"
                )));
            }
            gains
                .entry(q.to_owned())
                .or_default()
                .insert(d.to_owned(), f64::from(g) / f64::from(max_grade));
        }
        Ok(Self { gains })
    }

    pub fn query(&self, qid: &str) -> Option<&BTreeMap<String, f64>> {
        self.gains.get(qid)
    }

    pub fn gain(&self, qid: &str, doc_id: &str) -> f64 {
        self.gains
            .get(qid)
            .and_then(|d| d.get(doc_id))
            .copied()
            .unwrap_or(0.0)
    }

    pub fn queries(&self) -> &BTreeMap<String, BTreeMap<String, f64>> {
        &self.gains
    }

    /// Sets a gain, replacing any previous value.
    pub fn set(&mut self, qid: &str, doc_id: &str, gain: f64) -> Result<()> {
        if !(0.0..=1.0).contains(&gain) {
            return Err(Error::InvalidArgument(format!(
                "gain {gain} outside [0, 1] for query {qid}, document {doc_id}"
            )));
        }
        self.gains
            .entry(qid.to_owned())
            .or_default()
            .insert(doc_id.to_owned(), gain);
        Ok(())
    }

    /// Forces the listed documents to gain 0. Used to treat documents the
    /// assessor passed over before `d+` as judged non-relevant.
    pub fn pin_to_zero(&mut self, docs: &BTreeMap<String, Vec<String>>) {
        for (qid, ids) in docs {
            if let Some(table) = self.gains.get_mut(qid) {
                for d in ids {
                    if let Some(g) = table.get_mut(d) {
                        *g = 0.0;
                    }
                }
            }
        }
    }
}

/// Builds a filled table: `d+` gets 1, every record of `labeler_id` gets its
/// score. Records of other labelers are skipped.
pub fn build_gain_table(
    pool: &ShallowPool,
    records: &[ScoreRecord],
    labeler_id: &str,
) -> Result<GainTable> {
    let mut table = GainTable::baseline(pool);
    for r in records.iter().filter(|r| r.labeler == labeler_id) {
        let entry = pool.get(&r.qid).ok_or_else(|| {
            Error::InvalidArgument(format!("record for query {} outside the pool", r.qid))
        })?;
        if r.unk_docid == entry.rel_doc_id {
            return Err(Error::OverwritesKnownRelevant {
                qid: r.qid.clone(),
                doc_id: r.unk_docid.clone(),
            });
        }
        if r.rel_docid != entry.rel_doc_id {
            return Err(Error::InvalidArgument(format!(
                "record for query {} was anchored on {} but the pool holds {}",
                r.qid, r.rel_docid, entry.rel_doc_id
            )));
        }
        table.set(&r.qid, &r.unk_docid, r.score)?;
    }
    Ok(table)
}
