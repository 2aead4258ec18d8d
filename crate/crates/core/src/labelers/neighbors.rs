use std::cmp::Ordering;
use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::trec_io::EmbeddingStore;

#[derive(Debug, Clone, PartialEq)]
pub struct Neighbor {
    pub doc_id: String,
    pub score: f64,
}

/// Neighbors of a probe document, best first. Equal scores are ordered by
/// doc id ascending and the probe itself never appears.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct NeighborList {
    entries: Vec<Neighbor>,
}

fn neighbor_order(a: &Neighbor, b: &Neighbor) -> Ordering {
    b.score
        .partial_cmp(&a.score)
        .unwrap_or(Ordering::Equal)
        .then_with(|| a.doc_id.cmp(&b.doc_id))
}

impl NeighborList {
    /// Sorts candidates and keeps the best `k`.
    pub(crate) fn from_unsorted(candidates: &mut Vec<Neighbor>, k: usize) -> Self {
        if candidates.len() > k {
            candidates.select_nth_unstable_by(k - 1, neighbor_order);
            candidates.truncate(k);
        }
        candidates.sort_by(neighbor_order);
        Self {
            entries: std::mem::take(candidates),
        }
    }

    pub fn entries(&self) -> &[Neighbor] {
        &self.entries
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Neighbor> {
        self.entries.iter()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Exact top-`k` by inner product over every other vector in the store.
pub fn embed_neighbors(store: &EmbeddingStore, probe: &str, k: usize) -> Result<NeighborList> {
    if k == 0 {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    let query = store
        .get(probe)
        .ok_or_else(|| Error::UnknownDocument(probe.to_owned()))?;
    let mut candidates: Vec<Neighbor> = store
        .iter()
        .filter(|(doc_id, _)| *doc_id != probe)
        .map(|(doc_id, v)| Neighbor {
            doc_id: doc_id.to_owned(),
            score: query.iter().zip(v).map(|(a, b)| a * b).sum(),
        })
        .collect();
    Ok(NeighborList::from_unsorted(&mut candidates, k))
}

/// Linearly degrading gain: the i-th neighbor (1-based) gets `(k - i) / k`.
/// Entries past position `k` are ignored; unlisted documents have gain 0.
pub fn maxrep_gains(neighbors: &NeighborList, k: usize) -> BTreeMap<String, f64> {
    neighbors
        .iter()
        .take(k)
        .enumerate()
        .map(|(i, n)| (n.doc_id.clone(), (k - (i + 1)) as f64 / k as f64))
        .collect()
}
