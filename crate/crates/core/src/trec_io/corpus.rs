use std::collections::BTreeMap;
use std::io::BufRead;
use std::str::FromStr;

use serde_json::Value;

use crate::error::{Error, Result};

/// On-disk layout of a document or query collection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TextFormat {
    /// `id<TAB>text` per line.
    #[default]
    Tsv,
    /// One JSON object per line with an id field and `text`.
    JsonLines,
}

impl FromStr for TextFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tsv" => Ok(Self::Tsv),
            "jsonl" | "json" => Ok(Self::JsonLines),
            other => Err(Error::InvalidArgument(format!(
                "unknown text format {other:?} (expected tsv or jsonl)"
            ))),
        }
    }
}

/// Passage texts and query texts.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Corpus {
    pub texts: BTreeMap<String, String>,
    pub queries: BTreeMap<String, String>,
}

impl Corpus {
    pub fn with_queries(mut self, queries: BTreeMap<String, String>) -> Self {
        self.queries = queries;
        self
    }

    pub fn text(&self, doc_id: &str) -> Option<&str> {
        self.texts.get(doc_id).map(String::as_str)
    }

    pub fn query(&self, qid: &str) -> Option<&str> {
        self.queries.get(qid).map(String::as_str)
    }
}

/// Loads passages keyed by `docid`.
pub fn load_corpus<R: BufRead>(reader: R, format: TextFormat) -> Result<Corpus> {
    Ok(Corpus {
        texts: load_texts(reader, format, "docid")?,
        queries: BTreeMap::new(),
    })
}

/// Loads query texts keyed by `qid`.
pub fn load_queries<R: BufRead>(reader: R, format: TextFormat) -> Result<BTreeMap<String, String>> {
    load_texts(reader, format, "qid")
}

fn load_texts<R: BufRead>(
    reader: R,
    format: TextFormat,
    id_field: &str,
) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let record = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let (id, text) = match format {
            TextFormat::Tsv => {
                let (id, text) = line.split_once('\t').ok_or_else(|| Error::Record {
                    record,
                    message: "missing tab separator".into(),
                })?;
                (id.to_owned(), text.to_owned())
            }
            TextFormat::JsonLines => {
                let value: Value = serde_json::from_str(&line).map_err(|e| Error::Record {
                    record,
                    message: e.to_string(),
                })?;
                let field = |name: &str| {
                    value
                        .get(name)
                        .and_then(Value::as_str)
                        .map(str::to_owned)
                        .ok_or_else(|| Error::Record {
                            record,
                            message: format!("missing string field {name:?}"),
                        })
                };
                (field(id_field)?, field("text")?)
            }
        };
        if id.is_empty() {
            return Err(Error::Record {
                record,
                message: "empty id".into(),
            });
        }
        if text.is_empty() {
            return Err(Error::Record {
                record,
                message: format!("empty text for {id}"),
            });
        }
        if out.contains_key(&id) {
            return Err(Error::Record {
                record,
                message: format!("duplicate id {id}"),
            });
        }
        out.insert(id, text);
    }
    Ok(out)
}
