use std::collections::BTreeMap;
use std::io::BufRead;

use serde::Deserialize;

use crate::error::{Error, Result};

/// Dense document vectors of a fixed dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingStore {
    dim: usize,
    vectors: BTreeMap<String, Vec<f64>>,
}

impl EmbeddingStore {
    pub fn new(vectors: BTreeMap<String, Vec<f64>>) -> Result<Self> {
        let dim = vectors
            .values()
            .next()
            .map(Vec::len)
            .ok_or(Error::Empty("embedding store"))?;
        if dim == 0 {
            return Err(Error::InvalidArgument("zero-length vectors".into()));
        }
        for (doc_id, v) in &vectors {
            if v.len() != dim {
                return Err(Error::InvalidArgument(format!(
                    "dimension mismatch for {doc_id}: expected {dim}, found {}",
                    v.len()
                )));
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidArgument(format!(
                    "non-finite component in {doc_id}"
                )));
            }
        }
        Ok(Self { dim, vectors })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn get(&self, doc_id: &str) -> Option<&[f64]> {
        self.vectors.get(doc_id).map(Vec::as_slice)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &[f64])> {
        self.vectors.iter().map(|(k, v)| (k.as_str(), v.as_slice()))
    }

    /// Returns a copy with every vector scaled to unit length, so inner
    /// product search becomes cosine search. Zero vectors are kept as is.
    pub fn normalized(&self) -> Self {
        let vectors = self
            .vectors
            .iter()
            .map(|(k, v)| {
                let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                let v = if norm > 0.0 {
                    v.iter().map(|x| x / norm).collect()
                } else {
                    v.clone()
                };
                (k.clone(), v)
            })
            .collect();
        Self {
            dim: self.dim,
            vectors,
        }
    }
}

#[derive(Deserialize)]
struct EmbeddingRecord {
    docid: String,
    vector: Vec<f64>,
}

/// Loads `{"docid": str, "vector": [f64, ...]}` lines. The dimension is taken
/// from the first record.
pub fn load_embeddings<R: BufRead>(reader: R) -> Result<EmbeddingStore> {
    let mut dim = None;
    let mut vectors = BTreeMap::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let record = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let rec: EmbeddingRecord = serde_json::from_str(&line).map_err(|e| Error::Record {
            record,
            message: e.to_string(),
        })?;
        let expected = *dim.get_or_insert(rec.vector.len());
        if rec.vector.len() != expected {
            return Err(Error::Record {
                record,
                message: format!(
                    "dimension mismatch: expected {expected}, found {}",
                    rec.vector.len()
                ),
            });
        }
        if rec.vector.iter().any(|x| !x.is_finite()) {
            return Err(Error::Record {
                record,
                message: "non-finite component".into(),
            });
        }
        if vectors.insert(rec.docid.clone(), rec.vector).is_some() {
            return Err(Error::Record {
                record,
                message: format!("duplicate docid {}", rec.docid),
            });
        }
    }
    if vectors.is_empty() {
        return Err(Error::Empty("embedding store"));
    }
    EmbeddingStore::new(vectors)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dim_from_first_record() {
        let text =
            "{\"docid\":\"a\",\"vector\":[1,2,3]}\n{\"docid\":\"b\",\"vector\":[0.5,0,-1]}\n";
        let store = load_embeddings(text.as_bytes()).unwrap();
        assert_eq!(store.dim(), 3);
        assert_eq!(store.get("b"), Some(&[0.5, 0.0, -1.0][..]));
    }

    #[test]
    fn dimension_mismatch() {
        let text = "{\"docid\":\"a\",\"vector\":[1,2,3]}\n{\"docid\":\"b\",\"vector\":[1,2,3,4]}\n";
        let err = load_embeddings(text.as_bytes()).unwrap_err();
        assert!(err.to_string().contains("dimension mismatch"), "{err}");
        assert!(matches!(err, Error::Record { record: 2, .. }));
    }

    #[test]
    fn empty_store() {
        let err = load_embeddings("".as_bytes()).unwrap_err();
        assert_eq!(err.to_string(), "empty embedding store");
    }

    #[test]
    fn out_of_range_number_is_rejected() {
        assert!(load_embeddings("{\"docid\":\"a\",\"vector\":[1e999]}".as_bytes()).is_err());
    }

    #[test]
    fn normalized_vectors() {
        let store = load_embeddings("{\"docid\":\"a\",\"vector\":[3,4]}".as_bytes()).unwrap();
        assert_eq!(store.normalized().get("a"), Some(&[0.6, 0.8][..]));
    }
}
