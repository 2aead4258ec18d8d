use std::collections::{BTreeMap, BTreeSet};
use std::io::{BufRead, Write};

use crate::error::{Error, Result};

/// Graded relevance judgments keyed by query, then document.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Qrels {
    grades: BTreeMap<String, BTreeMap<String, u32>>,
}

impl Qrels {
    pub fn new() -> Self {
        Self::default()
    }

    /// Inserts a judgment. Re-inserting the same grade is a no-op; a
    /// different grade for an existing pair is rejected.
    pub fn insert(&mut self, qid: &str, doc_id: &str, grade: u32) -> Result<()> {
        let docs = self.grades.entry(qid.to_owned()).or_default();
        match docs.get(doc_id) {
            Some(&g) if g != grade => Err(Error::DuplicateEntry {
                qid: qid.to_owned(),
                doc_id: doc_id.to_owned(),
            }),
            Some(_) => Ok(()),
            None => {
                docs.insert(doc_id.to_owned(), grade);
                Ok(())
            }
        }
    }

    pub fn grade(&self, qid: &str, doc_id: &str) -> Option<u32> {
        self.grades.get(qid)?.get(doc_id).copied()
    }

    pub fn query(&self, qid: &str) -> Option<&BTreeMap<String, u32>> {
        self.grades.get(qid)
    }

    pub fn contains_query(&self, qid: &str) -> bool {
        self.grades.contains_key(qid)
    }

    pub fn queries(&self) -> &BTreeMap<String, BTreeMap<String, u32>> {
        &self.grades
    }

    pub fn len(&self) -> usize {
        self.grades.values().map(BTreeMap::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn max_grade(&self) -> Option<u32> {
        self.grades.values().flat_map(|d| d.values().copied()).max()
    }

    /// Every judged (qid, doc_id) pair.
    pub fn judged_pairs(&self) -> BTreeSet<(String, String)> {
        self.iter()
            .map(|(q, d, _)| (q.to_owned(), d.to_owned()))
            .collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str, u32)> {
        self.grades
            .iter()
            .flat_map(|(q, docs)| docs.iter().map(move |(d, &g)| (q.as_str(), d.as_str(), g)))
    }
}

/// Parses TREC qrels: `qid iter docid grade` per line. The iteration column
/// is ignored and blank lines are skipped.
pub fn parse_qrels<R: BufRead>(reader: R) -> Result<Qrels> {
    let mut qrels = Qrels::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 4 {
            return Err(Error::Parse {
                line: lineno,
                message: format!("expected 4 fields, found {}", fields.len()),
            });
        }
        let (qid, doc_id, grade) = (fields[0], fields[2], fields[3]);
        let grade: i64 = grade.parse().map_err(|_| Error::Parse {
            line: lineno,
            message: format!("unparseable grade {grade:?}"),
        })?;
        let grade = u32::try_from(grade).map_err(|_| Error::Parse {
            line: lineno,
            message: format!("grade {grade} is not a non-negative integer"),
        })?;
        qrels
            .insert(qid, doc_id, grade)
            .map_err(|_| Error::ConflictingDuplicate {
                line: lineno,
                qid: qid.to_owned(),
                doc_id: doc_id.to_owned(),
            })?;
    }
    Ok(qrels)
}

pub fn write_qrels<W: Write>(qrels: &Qrels, mut writer: W) -> Result<()> {
    for (qid, doc_id, grade) in qrels.iter() {
        writeln!(writer, "{qid} 0 {doc_id} {grade}")?;
    }
    Ok(())
}
