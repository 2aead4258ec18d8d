use std::cmp::Ordering;
use std::collections::{BTreeMap, HashSet};
use std::io::{BufRead, Write};

use crate::error::{Error, Result};

/// One retrieved document and its system score.
#[derive(Debug, Clone, PartialEq)]
pub struct RankedDoc {
    pub doc_id: String,
    pub score: f64,
}

impl RankedDoc {
    pub fn new(doc_id: impl Into<String>, score: f64) -> Self {
        Self {
            doc_id: doc_id.into(),
            score,
        }
    }
}

/// Evaluation order: score descending, equal scores by doc id descending.
pub fn evaluation_order(a: &RankedDoc, b: &RankedDoc) -> Ordering {
    b.score
        .partial_cmp(&a.score)
        .unwrap_or(Ordering::Equal)
        .then_with(|| b.doc_id.cmp(&a.doc_id))
}

/// A system's ranked output. Rankings are always kept in evaluation order.
#[derive(Debug, Clone, PartialEq)]
pub struct Run {
    system_id: String,
    rankings: BTreeMap<String, Vec<RankedDoc>>,
}

impl Run {
    /// Builds a normalized run. Fails on duplicate documents within a query
    /// or non-finite scores.
    pub fn new(
        system_id: impl Into<String>,
        rankings: BTreeMap<String, Vec<RankedDoc>>,
    ) -> Result<Self> {
        let mut rankings = rankings;
        for (qid, docs) in rankings.iter_mut() {
            let mut seen = HashSet::with_capacity(docs.len());
            for doc in docs.iter() {
                if !doc.score.is_finite() {
                    return Err(Error::InvalidArgument(format!(
                        "non-finite score for query {qid}, document {}",
                        doc.doc_id
                    )));
                }
                if !seen.insert(doc.doc_id.as_str()) {
                    return Err(Error::DuplicateEntry {
                        qid: qid.clone(),
                        doc_id: doc.doc_id.clone(),
                    });
                }
            }
            docs.sort_by(evaluation_order);
        }
        Ok(Self {
            system_id: system_id.into(),
            rankings,
        })
    }

    pub fn system_id(&self) -> &str {
        &self.system_id
    }

    pub fn rankings(&self) -> &BTreeMap<String, Vec<RankedDoc>> {
        &self.rankings
    }

    /// The ranking for `qid`, or an empty slice when the run skipped the query.
    pub fn ranking(&self, qid: &str) -> &[RankedDoc] {
        self.rankings.get(qid).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn query_ids(&self) -> impl Iterator<Item = &str> {
        self.rankings.keys().map(String::as_str)
    }

    /// Top-`depth` doc ids of `qid` in evaluation order.
    pub fn top(&self, qid: &str, depth: usize) -> impl Iterator<Item = &str> {
        self.ranking(qid)
            .iter()
            .take(depth)
            .map(|d| d.doc_id.as_str())
    }
}

/// Parses a TREC run: `qid Q0 docid rank score tag` per line.
///
/// The rank column is ignored and each query is re-sorted by score
/// descending, ties by doc id descending. The system id is the tag of the
/// first line. Blank lines are skipped.
pub fn parse_run<R: BufRead>(reader: R) -> Result<Run> {
    let mut system_id: Option<String> = None;
    let mut rankings: BTreeMap<String, Vec<RankedDoc>> = BTreeMap::new();
    let mut seen: HashSet<(String, String)> = HashSet::new();

    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 6 {
            return Err(Error::Parse {
                line: lineno,
                message: format!("expected 6 fields, found {}", fields.len()),
            });
        }
        let (qid, doc_id, score, tag) = (fields[0], fields[2], fields[4], fields[5]);
        let score: f64 = score.parse().map_err(|_| Error::Parse {
            line: lineno,
            message: format!("unparseable score {score:?}"),
        })?;
        if !score.is_finite() {
            return Err(Error::Parse {
                line: lineno,
                message: format!("non-finite score {score}"),
            });
        }
        if !seen.insert((qid.to_owned(), doc_id.to_owned())) {
            return Err(Error::DuplicateEntry {
                qid: qid.to_owned(),
                doc_id: doc_id.to_owned(),
            });
        }
        system_id.get_or_insert_with(|| tag.to_owned());
        rankings
            .entry(qid.to_owned())
            .or_default()
            .push(RankedDoc::new(doc_id, score));
    }

    let system_id = system_id.ok_or(Error::Empty("run"))?;
    Run::new(system_id, rankings)
}

/// Writes a run in TREC format with ranks recomputed from the stored order.
/// Scores use the shortest representation that parses back to the same value.
pub fn write_run<W: Write>(run: &Run, mut writer: W) -> Result<()> {
    for (qid, docs) in &run.rankings {
        for (i, doc) in docs.iter().enumerate() {
            writeln!(
                writer,
                "{qid} Q0 {} {} {} {}",
                doc.doc_id,
                i + 1,
                doc.score,
                run.system_id
            )?;
        }
    }
    Ok(())
}
