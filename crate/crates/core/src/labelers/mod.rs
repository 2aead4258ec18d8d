//! One-shot labelers: estimators of the gain of an unjudged document given
//! its query and the query's single known relevant document.

mod gain_table;
mod lexical;
mod neighbors;

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::pooling::{HoleSet, ShallowPool};
use crate::trec_io::{Qrels, ScoreCache, ScoreRecord};

pub use gain_table::{build_gain_table, GainTable};
pub use lexical::{
    bm25_neighbors, build_lexical_index, tokenize, Bm25Params, LexicalIndex, MAX_QUERY_TERMS,
};
pub use neighbors::{embed_neighbors, maxrep_gains, Neighbor, NeighborList};

/// Neighborhood size used by MaxRep.
pub const DEFAULT_MAXREP_K: usize = 128;

/// Labeler selection as written on the command line.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LabelerSpec {
    Zero,
    Oracle,
    MaxRepBm25,
    MaxRepEmbed,
    /// Scores produced by the external neural scorer.
    Bridge(PathBuf),
}

impl FromStr for LabelerSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "zero" => Ok(Self::Zero),
            "oracle" => Ok(Self::Oracle),
            "maxrep-bm25" => Ok(Self::MaxRepBm25),
            "maxrep-embed" => Ok(Self::MaxRepEmbed),
            _ => match s.strip_prefix("bridge:") {
                Some(path) if !path.is_empty() => Ok(Self::Bridge(PathBuf::from(path))),
                _ => Err(Error::InvalidArgument(format!(
                    "unknown labeler {s:?} (expected zero, oracle, maxrep-bm25, maxrep-embed or bridge:<path>)"
                ))),
            },
        }
    }
}

impl fmt::Display for LabelerSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Zero => f.write_str("zero"),
            Self::Oracle => f.write_str("oracle"),
            Self::MaxRepBm25 => f.write_str("maxrep-bm25"),
            Self::MaxRepEmbed => f.write_str("maxrep-embed"),
            Self::Bridge(path) => write!(f, "bridge:{}", path.display()),
        }
    }
}

/// An estimator `G(q, d+, d?) ∈ [0, 1]`.
pub trait OneShotLabeler: Sync {
    /// Identifier stored in score records.
    fn id(&self) -> &str;

    /// Scores `unknown` (ascending doc ids) for query `qid` anchored on `rel_doc`.
    /// Returns one score per unknown document, in the same order.
    fn score_query(&self, qid: &str, rel_doc: &str, unknown: &[&str]) -> Result<Vec<f64>>;
}

/// Treats every hole as non-relevant.
#[derive(Debug, Clone, Default)]
pub struct ZeroLabeler;

impl OneShotLabeler for ZeroLabeler {
    fn id(&self) -> &str {
        "zero"
    }

    fn score_query(&self, _qid: &str, _rel_doc: &str, unknown: &[&str]) -> Result<Vec<f64>> {
        Ok(vec![0.0; unknown.len()])
    }
}

/// Reads the true grade from reference judgments as `grade / max_grade`.
/// Unjudged documents score 0. Only meaningful as a test fixture.
#[derive(Debug, Clone)]
pub struct OracleLabeler<'a> {
    qrels: &'a Qrels,
    max_grade: u32,
}

impl<'a> OracleLabeler<'a> {
    pub fn new(qrels: &'a Qrels, max_grade: u32) -> Result<Self> {
        if max_grade == 0 {
            return Err(Error::InvalidArgument("max grade must be positive".into()));
        }
        Ok(Self { qrels, max_grade })
    }
}

impl OneShotLabeler for OracleLabeler<'_> {
    fn id(&self) -> &str {
        "oracle"
    }

    fn score_query(&self, qid: &str, _rel_doc: &str, unknown: &[&str]) -> Result<Vec<f64>> {
        let max = f64::from(self.max_grade);
        Ok(unknown
            .iter()
            .map(|d| {
                let g = self.qrels.grade(qid, d).unwrap_or(0);
                (f64::from(g) / max).min(1.0)
            })
            .collect())
    }
}

/// Source of neighbors for MaxRep.
#[derive(Debug, Clone)]
pub enum NeighborSource<'a> {
    Lexical {
        index: &'a LexicalIndex,
        params: Bm25Params,
    },
    Dense(&'a crate::trec_io::EmbeddingStore),
}

/// One-shot MaxRep: the `k` nearest neighbors of `d+` receive linearly
/// degrading gain, everything else 0. The query text is never consulted.
#[derive(Debug, Clone)]
pub struct MaxRepLabeler<'a> {
    id: String,
    source: NeighborSource<'a>,
    k: usize,
}

impl<'a> MaxRepLabeler<'a> {
    pub fn bm25(index: &'a LexicalIndex, params: Bm25Params, k: usize) -> Self {
        Self {
            id: "maxrep-bm25".into(),
            source: NeighborSource::Lexical { index, params },
            k,
        }
    }

    pub fn embedding(store: &'a crate::trec_io::EmbeddingStore, k: usize) -> Self {
        Self {
            id: "maxrep-embed".into(),
            source: NeighborSource::Dense(store),
            k,
        }
    }

    pub fn neighbors(&self, rel_doc: &str) -> Result<NeighborList> {
        match &self.source {
            NeighborSource::Lexical { index, params } => {
                index.bm25_neighbors(rel_doc, self.k, *params)
            }
            NeighborSource::Dense(store) => embed_neighbors(store, rel_doc, self.k),
        }
    }
}

impl OneShotLabeler for MaxRepLabeler<'_> {
    fn id(&self) -> &str {
        &self.id
    }

    fn score_query(&self, _qid: &str, rel_doc: &str, unknown: &[&str]) -> Result<Vec<f64>> {
        let gains = maxrep_gains(&self.neighbors(rel_doc)?, self.k);
        Ok(unknown
            .iter()
            .map(|d| gains.get(*d).copied().unwrap_or(0.0))
            .collect())
    }
}

/// Replays precomputed scores verbatim. A hole without a score is an error,
/// never a silent zero.
#[derive(Debug, Clone)]
pub struct CachedLabeler<'a> {
    id: String,
    scores: &'a ScoreCache,
}

impl<'a> CachedLabeler<'a> {
    pub fn new(id: impl Into<String>, scores: &'a ScoreCache) -> Self {
        Self {
            id: id.into(),
            scores,
        }
    }
}

impl OneShotLabeler for CachedLabeler<'_> {
    fn id(&self) -> &str {
        &self.id
    }

    fn score_query(&self, qid: &str, rel_doc: &str, unknown: &[&str]) -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(unknown.len());
        let mut missing = Vec::new();
        for d in unknown {
            match self.scores.get(&self.id, qid, d) {
                Some(r) if r.rel_docid == rel_doc => out.push(r.score),
                _ => missing.push((qid.to_owned(), (*d).to_owned())),
            }
        }
        if missing.is_empty() {
            Ok(out)
        } else {
            Err(Error::MissingScores(missing))
        }
    }
}

/// Records for every hole plus cache accounting.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelOutput {
    /// Sorted by `(qid, unk_docid)`.
    pub records: Vec<ScoreRecord>,
    pub cache_hits: usize,
    pub computed: usize,
}

/// Produces one record per hole. Holes already present in `cache` under the
/// labeler's id (with the same `d+`) are reused; the rest are computed.
/// Queries are processed in parallel but the output order is canonical.
pub fn label(
    labeler: &dyn OneShotLabeler,
    pool: &ShallowPool,
    holes: &HoleSet,
    cache: Option<&ScoreCache>,
) -> Result<LabelOutput> {
    let groups: Vec<(&str, Vec<&str>)> = holes.by_query().into_iter().collect();
    let id = labeler.id();

    let per_query: Vec<Result<(Vec<ScoreRecord>, usize)>> = groups
        .par_iter()
        .map(|(qid, docs)| {
            let rel = pool.rel_doc(qid).ok_or_else(|| {
                Error::InvalidArgument(format!("hole for query {qid} outside the pool"))
            })?;
            let mut scores: BTreeMap<&str, f64> = BTreeMap::new();
            let mut misses = Vec::new();
            for d in docs {
                match cache.and_then(|c| c.get(id, qid, d)) {
                    Some(r) if r.rel_docid == rel => {
                        scores.insert(d, r.score);
                    }
                    Some(r) => {
                        return Err(Error::InvalidArgument(format!(
                            "cached score for query {qid}, document {d} is anchored on {} but the pool holds {rel}",
                            r.rel_docid
                        )))
                    }
                    None => misses.push(*d),
                }
            }
            let hits = scores.len();
            if !misses.is_empty() {
                let computed = labeler.score_query(qid, rel, &misses)?;
                if computed.len() != misses.len() {
                    return Err(Error::InvalidArgument(format!(
                        "labeler {id} returned {} scores for {} documents",
                        computed.len(),
                        misses.len()
                    )));
                }
                for (d, s) in misses.iter().zip(computed) {
                    if !(0.0..=1.0).contains(&s) {
                        return Err(Error::InvalidArgument(format!(
                            "labeler {id} produced score {s} for query {qid}, document {d}"
                        )));
                    }
                    scores.insert(d, s);
                }
            }
            let records = scores
                .into_iter()
                .map(|(d, score)| ScoreRecord {
                    labeler: id.to_owned(),
                    qid: (*qid).to_owned(),
                    rel_docid: rel.to_owned(),
                    unk_docid: d.to_owned(),
                    score,
                })
                .collect();
            Ok((records, hits))
        })
        .collect();

    let mut records = Vec::with_capacity(holes.len());
    let mut cache_hits = 0;
    let mut missing = Vec::new();
    for result in per_query {
        match result {
            Ok((r, hits)) => {
                cache_hits += hits;
                records.extend(r);
            }
            Err(Error::MissingScores(m)) => missing.extend(m),
            Err(e) => return Err(e),
        }
    }
    if !missing.is_empty() {
        return Err(Error::MissingScores(missing));
    }
    let computed = records.len() - cache_hits;
    Ok(LabelOutput {
        records,
        cache_hits,
        computed,
    })
}
