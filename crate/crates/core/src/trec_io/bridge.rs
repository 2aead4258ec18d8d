//! JSON-lines protocol shared with the external neural scorer.
//!
//! Tasks go out as `{"id","query","passage_a","passage_b"}` lines. Scores come
//! back as `{"id","score"}` lines in task order, terminated by a footer
//! `{"done": true, "count": N}`. A file without the footer is treated as a
//! crashed or partial run and rejected.
//!
//! Task ids are `qid<TAB>rel_docid<TAB>unk_docid`. TREC ids never contain
//! whitespace, so the id decodes back to the hole it scores.

use std::collections::HashSet;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::score_cache::ScoreRecord;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScoringTask {
    pub id: String,
    pub query: String,
    pub passage_a: String,
    pub passage_b: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BridgeScore {
    pub id: String,
    pub score: f64,
}

#[derive(Serialize, Deserialize)]
struct Footer {
    done: bool,
    count: usize,
}

pub fn task_id(qid: &str, rel_docid: &str, unk_docid: &str) -> String {
    format!("{qid}\t{rel_docid}\t{unk_docid}")
}

/// Splits a task id into `(qid, rel_docid, unk_docid)`.
pub fn parse_task_id(id: &str) -> Option<(&str, &str, &str)> {
    let mut parts = id.split('\t');
    let out = (parts.next()?, parts.next()?, parts.next()?);
    match parts.next() {
        None if [out.0, out.1, out.2].iter().all(|p| !p.is_empty()) => Some(out),
        _ => None,
    }
}

pub fn write_tasks<W: Write>(tasks: &[ScoringTask], mut writer: W) -> Result<()> {
    for task in tasks {
        serde_json::to_writer(&mut writer, task).map_err(std::io::Error::from)?;
        writer.write_all(b"\n")?;
    }
    Ok(())
}

/// Writes scores followed by the completion footer.
pub fn write_bridge_scores<W: Write>(scores: &[BridgeScore], mut writer: W) -> Result<()> {
    for s in scores {
        serde_json::to_writer(&mut writer, s).map_err(std::io::Error::from)?;
        writer.write_all(b"\n")?;
    }
    let footer = Footer {
        done: true,
        count: scores.len(),
    };
    serde_json::to_writer(&mut writer, &footer).map_err(std::io::Error::from)?;
    writer.write_all(b"\n")?;
    Ok(())
}

/// Reads a complete bridge score file.
pub fn read_bridge_scores<R: BufRead>(reader: R) -> Result<Vec<BridgeScore>> {
    let mut scores = Vec::new();
    let mut ids = HashSet::new();
    let mut footer: Option<(usize, usize)> = None;

    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let record = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        if let Some((at, _)) = footer {
            return Err(Error::Record {
                record,
                message: format!("content after footer on record {at}"),
            });
        }
        let value: serde_json::Value = serde_json::from_str(&line).map_err(|e| Error::Record {
            record,
            message: e.to_string(),
        })?;
        if value.get("done").is_some() {
            let f: Footer = serde_json::from_value(value).map_err(|e| Error::Record {
                record,
                message: format!("bad footer: {e}"),
            })?;
            if !f.done {
                return Err(Error::Record {
                    record,
                    message: "footer reports an unfinished run".into(),
                });
            }
            footer = Some((record, f.count));
            continue;
        }
        let s: BridgeScore = serde_json::from_value(value).map_err(|e| Error::Record {
            record,
            message: e.to_string(),
        })?;
        if !(0.0..=1.0).contains(&s.score) {
            return Err(Error::Record {
                record,
                message: format!("score {} outside [0, 1]", s.score),
            });
        }
        if !ids.insert(s.id.clone()) {
            return Err(Error::Record {
                record,
                message: format!("duplicate id {:?}", s.id),
            });
        }
        scores.push(s);
    }

    match footer {
        None => Err(Error::InvalidArgument(
            "bridge score file has no completion footer".into(),
        )),
        Some((_, count)) if count != scores.len() => Err(Error::InvalidArgument(format!(
            "bridge footer count {count} does not match {} score lines",
            scores.len()
        ))),
        Some(_) => Ok(scores),
    }
}

/// Converts bridge scores into score-cache records for `labeler`.
pub fn bridge_records(scores: &[BridgeScore], labeler: &str) -> Result<Vec<ScoreRecord>> {
    scores
        .iter()
        .map(|s| {
            let (qid, rel, unk) = parse_task_id(&s.id).ok_or_else(|| {
                Error::InvalidArgument(format!("malformed bridge task id {:?}", s.id))
            })?;
            Ok(ScoreRecord {
                labeler: labeler.to_owned(),
                qid: qid.to_owned(),
                rel_docid: rel.to_owned(),
                unk_docid: unk.to_owned(),
                score: s.score,
            })
        })
        .collect()
}
