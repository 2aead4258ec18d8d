use std::collections::btree_map::Entry;
use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One labeler output for an unjudged document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRecord {
    pub labeler: String,
    pub qid: String,
    pub rel_docid: String,
    pub unk_docid: String,
    pub score: f64,
}

impl ScoreRecord {
    pub fn key(&self) -> CacheKey {
        (
            self.labeler.clone(),
            self.qid.clone(),
            self.unk_docid.clone(),
        )
    }
}

/// `(labeler, qid, unk_docid)`.
pub type CacheKey = (String, String, String);

/// Deduplicated labeler scores, iterated in `(labeler, qid, unk_docid)` order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ScoreCache {
    records: BTreeMap<CacheKey, ScoreRecord>,
}

impl ScoreCache {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a record. An existing key is accepted only when the stored score
    /// is bitwise-equal.
    pub fn insert(&mut self, record: ScoreRecord) -> Result<()> {
        check_score(&record)?;
        match self.records.entry(record.key()) {
            Entry::Vacant(slot) => {
                slot.insert(record);
                Ok(())
            }
            Entry::Occupied(slot) if slot.get().score.to_bits() == record.score.to_bits() => Ok(()),
            Entry::Occupied(_) => Err(Error::InvalidArgument(format!(
                "conflicting cached scores for labeler {}, query {}, document {}",
                record.labeler, record.qid, record.unk_docid
            ))),
        }
    }

    pub fn get(&self, labeler: &str, qid: &str, unk_docid: &str) -> Option<&ScoreRecord> {
        // BTreeMap<(String, String, String)> cannot be probed with borrowed
        // tuples, so build the owned key.
        self.records
            .get(&(labeler.to_owned(), qid.to_owned(), unk_docid.to_owned()))
    }

    pub fn score(&self, labeler: &str, qid: &str, unk_docid: &str) -> Option<f64> {
        self.get(labeler, qid, unk_docid).map(|r| r.score)
    }

    pub fn records(&self) -> impl Iterator<Item = &ScoreRecord> {
        self.records.values()
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

impl TryFrom<Vec<ScoreRecord>> for ScoreCache {
    type Error = Error;

    fn try_from(records: Vec<ScoreRecord>) -> Result<Self> {
        let mut cache = Self::new();
        for r in records {
            cache.insert(r)?;
        }
        Ok(cache)
    }
}

fn check_score(record: &ScoreRecord) -> Result<()> {
    if (0.0..=1.0).contains(&record.score) {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "score {} outside [0, 1] for query {}, document {}",
            record.score, record.qid, record.unk_docid
        )))
    }
}

pub fn read_score_cache<R: BufRead>(reader: R) -> Result<ScoreCache> {
    let mut cache = ScoreCache::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let record = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let rec: ScoreRecord = serde_json::from_str(&line).map_err(|e| Error::Record {
            record,
            message: e.to_string(),
        })?;
        cache.insert(rec).map_err(|e| Error::Record {
            record,
            message: e.to_string(),
        })?;
    }
    Ok(cache)
}

/// Writes one JSON object per line in canonical key order.
pub fn write_score_cache<W: Write>(cache: &ScoreCache, mut writer: W) -> Result<()> {
    for rec in cache.records() {
        serde_json::to_writer(&mut writer, rec).map_err(std::io::Error::from)?;
        writer.write_all(b"\n")?;
    }
    Ok(())
}
