//! Shallow-pool simulation and hole discovery.
//!
//! The simulated assessor walks the baseline run top-down and stops at the
//! first document whose grade reaches the relevance threshold. That document
//! becomes the single known relevant document (`d+`) of the query.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{BufRead, Read, Write};

use crate::error::{Error, Result};
use crate::trec_io::{parse_qrels, Qrels, Run};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PoolEntry {
    pub rel_doc_id: String,
    /// 1-based rank of `rel_doc_id` in the baseline run.
    pub examined: usize,
}

/// One known relevant document per query.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ShallowPool {
    entries: BTreeMap<String, PoolEntry>,
}

impl ShallowPool {
    pub fn new(entries: BTreeMap<String, PoolEntry>) -> Result<Self> {
        if let Some((qid, _)) = entries.iter().find(|(_, e)| e.examined == 0) {
            return Err(Error::InvalidArgument(format!(
                "examined count for {qid} must be positive"
            )));
        }
        Ok(Self { entries })
    }

    pub fn entries(&self) -> &BTreeMap<String, PoolEntry> {
        &self.entries
    }

    pub fn get(&self, qid: &str) -> Option<&PoolEntry> {
        self.entries.get(qid)
    }

    pub fn rel_doc(&self, qid: &str) -> Option<&str> {
        self.entries.get(qid).map(|e| e.rel_doc_id.as_str())
    }

    pub fn query_ids(&self) -> Vec<String> {
        self.entries.keys().cloned().collect()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn mean_examined(&self) -> Option<f64> {
        if self.entries.is_empty() {
            return None;
        }
        let total: usize = self.entries.values().map(|e| e.examined).sum();
        Some(total as f64 / self.entries.len() as f64)
    }

    /// The pooled `(qid, d+)` pairs.
    pub fn judged_pairs(&self) -> BTreeSet<(String, String)> {
        self.entries
            .iter()
            .map(|(q, e)| (q.clone(), e.rel_doc_id.clone()))
            .collect()
    }

    /// Documents the simulated assessor passed over before reaching `d+`,
    /// i.e. baseline ranks `1..examined`.
    pub fn examined_nonrelevant(&self, baseline: &Run) -> BTreeMap<String, Vec<String>> {
        self.entries
            .iter()
            .map(|(qid, e)| {
                let docs = baseline
                    .top(qid, e.examined.saturating_sub(1))
                    .map(str::to_owned)
                    .collect();
                (qid.clone(), docs)
            })
            .collect()
    }
}

/// Pool plus the queries that could not be pooled.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PoolSimulation {
    pub pool: ShallowPool,
    /// Judged queries whose baseline ranking holds no relevant document.
    pub dropped_no_relevant: Vec<String>,
    /// Baseline queries with no judgments at all.
    pub missing_from_qrels: Vec<String>,
}

/// Picks, for every baseline query, the first document graded at least
/// `rel_threshold`.
pub fn simulate_shallow_pool(
    baseline: &Run,
    full_qrels: &Qrels,
    rel_threshold: u32,
) -> Result<PoolSimulation> {
    if rel_threshold < 1 {
        return Err(Error::InvalidArgument(
            "relevance threshold must be at least 1".into(),
        ));
    }
    let mut entries = BTreeMap::new();
    let mut dropped_no_relevant = Vec::new();
    let mut missing_from_qrels = Vec::new();

    for (qid, ranking) in baseline.rankings() {
        let Some(grades) = full_qrels.query(qid) else {
            missing_from_qrels.push(qid.clone());
            continue;
        };
        let first = ranking
            .iter()
            .enumerate()
            .find(|(_, d)| grades.get(&d.doc_id).is_some_and(|&g| g >= rel_threshold));
        match first {
            Some((i, doc)) => {
                entries.insert(
                    qid.clone(),
                    PoolEntry {
                        rel_doc_id: doc.doc_id.clone(),
                        examined: i + 1,
                    },
                );
            }
            None => dropped_no_relevant.push(qid.clone()),
        }
    }

    Ok(PoolSimulation {
        pool: ShallowPool { entries },
        dropped_no_relevant,
        missing_from_qrels,
    })
}

/// Writes the pool as qrels (grade 1) and the `{qid: examined}` sidecar.
pub fn write_pool<W1: Write, W2: Write>(
    pool: &ShallowPool,
    mut qrels_out: W1,
    mut sidecar_out: W2,
) -> Result<()> {
    for (qid, e) in &pool.entries {
        writeln!(qrels_out, "{qid} 0 {} 1", e.rel_doc_id)?;
    }
    let examined: BTreeMap<&str, usize> = pool
        .entries
        .iter()
        .map(|(q, e)| (q.as_str(), e.examined))
        .collect();
    serde_json::to_writer_pretty(&mut sidecar_out, &examined).map_err(std::io::Error::from)?;
    sidecar_out.write_all(b"\n")?;
    Ok(())
}

/// Reads a pool written by [`write_pool`].
pub fn read_pool<R1: BufRead, R2: Read>(qrels_in: R1, sidecar_in: R2) -> Result<ShallowPool> {
    let qrels = parse_qrels(qrels_in)?;
    let examined: BTreeMap<String, usize> = serde_json::from_reader(sidecar_in)
        .map_err(|e| Error::InvalidArgument(format!("pool sidecar: {e}")))?;
    let mut entries = BTreeMap::new();
    for (qid, docs) in qrels.queries() {
        let mut relevant = docs.iter().filter(|(_, &g)| g > 0).map(|(d, _)| d);
        let (Some(doc), None) = (relevant.next(), relevant.next()) else {
            return Err(Error::InvalidArgument(format!(
                "pool must hold exactly one relevant document for {qid}"
            )));
        };
        let &n = examined
            .get(qid)
            .ok_or_else(|| Error::InvalidArgument(format!("pool sidecar lacks query {qid}")))?;
        entries.insert(
            qid.clone(),
            PoolEntry {
                rel_doc_id: doc.clone(),
                examined: n,
            },
        );
    }
    if let Some(extra) = examined.keys().find(|q| !entries.contains_key(*q)) {
        return Err(Error::InvalidArgument(format!(
            "pool sidecar names query {extra} that is not in the pool"
        )));
    }
    ShallowPool::new(entries)
}

/// Unjudged `(qid, doc_id)` pairs found in the top `depth` of the runs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HoleSet {
    pub holes: BTreeSet<(String, String)>,
    pub depth: usize,
}

impl HoleSet {
    pub fn len(&self) -> usize {
        self.holes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.holes.is_empty()
    }

    /// Holes grouped by query, both levels in ascending id order.
    pub fn by_query(&self) -> BTreeMap<&str, Vec<&str>> {
        let mut out: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
        for (q, d) in &self.holes {
            out.entry(q.as_str()).or_default().push(d.as_str());
        }
        out
    }
}

/// Collects every non-`d+` document in the top `depth` of any run, for pooled
/// queries only.
pub fn find_holes(runs: &[Run], pool: &ShallowPool, depth: usize) -> Result<HoleSet> {
    if depth == 0 {
        return Err(Error::InvalidArgument(
            "hole depth must be at least 1".into(),
        ));
    }
    let mut holes = BTreeSet::new();
    for run in runs {
        for (qid, entry) in &pool.entries {
            for doc in run.top(qid, depth) {
                if doc != entry.rel_doc_id {
                    holes.insert((qid.clone(), doc.to_owned()));
                }
            }
        }
    }
    Ok(HoleSet { holes, depth })
}

/// Per-query fraction of a top-k list, plus the mean over the run's queries.
#[derive(Debug, Clone, PartialEq)]
pub struct CoverageAtK {
    pub k: usize,
    pub per_query: BTreeMap<String, f64>,
    pub mean: f64,
}

/// Judged@k: the share of the top `min(k, len)` documents found in `judged`.
/// Queries with an empty ranking are skipped.
pub fn judged_at_k(
    run: &Run,
    judged: &BTreeSet<(String, String)>,
    k: usize,
) -> Result<CoverageAtK> {
    coverage_at_k(run, k, |qid, doc| {
        judged.contains(&(qid.to_owned(), doc.to_owned()))
    })
}

/// Hole@k, the complement of [`judged_at_k`].
pub fn hole_at_k(run: &Run, judged: &BTreeSet<(String, String)>, k: usize) -> Result<CoverageAtK> {
    coverage_at_k(run, k, |qid, doc| {
        !judged.contains(&(qid.to_owned(), doc.to_owned()))
    })
}

fn coverage_at_k(run: &Run, k: usize, hit: impl Fn(&str, &str) -> bool) -> Result<CoverageAtK> {
    if k == 0 {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    let mut per_query = BTreeMap::new();
    for qid in run.query_ids() {
        let top: Vec<&str> = run.top(qid, k).collect();
        if top.is_empty() {
            continue;
        }
        let hits = top.iter().filter(|d| hit(qid, d)).count();
        per_query.insert(qid.to_owned(), hits as f64 / top.len() as f64);
    }
    let mean = if per_query.is_empty() {
        0.0
    } else {
        per_query.values().sum::<f64>() / per_query.len() as f64
    };
    Ok(CoverageAtK { k, per_query, mean })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trec_io::{parse_run, RankedDoc};
    use proptest::prelude::*;

    fn run(system: &str, queries: &[(&str, &[&str])]) -> Run {
        let rankings = queries
            .iter()
            .map(|(q, docs)| {
                let n = docs.len();
                let docs = docs
                    .iter()
                    .enumerate()
                    .map(|(i, d)| RankedDoc::new(*d, (n - i) as f64))
                    .collect();
                (q.to_string(), docs)
            })
            .collect();
        Run::new(system, rankings).unwrap()
    }

    fn qrels(lines: &str) -> Qrels {
        parse_qrels(lines.as_bytes()).unwrap()
    }

    fn pool_of(entries: &[(&str, &str, usize)]) -> ShallowPool {
        ShallowPool::new(
            entries
                .iter()
                .map(|(q, d, n)| {
                    (
                        q.to_string(),
                        PoolEntry {
                            rel_doc_id: d.to_string(),
                            examined: *n,
                        },
                    )
                })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn first_relevant_document() {
        let baseline = run("bm25", &[("q1", &["dA", "dB", "dC"])]);
        let sim = simulate_shallow_pool(&baseline, &qrels("q1 0 dA 0\nq1 0 dB 2\nq1 0 dC 3\n"), 2)
            .unwrap();
        assert_eq!(
            sim.pool.get("q1"),
            Some(&PoolEntry {
                rel_doc_id: "dB".into(),
                examined: 2
            })
        );
    }

    #[test]
    fn relevant_at_rank_one() {
        let baseline = run("bm25", &[("q1", &["dA"])]);
        let sim = simulate_shallow_pool(&baseline, &qrels("q1 0 dA 2\n"), 2).unwrap();
        assert_eq!(sim.pool.get("q1").unwrap().examined, 1);
        assert_eq!(sim.pool.mean_examined(), Some(1.0));
    }

    #[test]
    fn dropped_and_missing_queries_are_reported() {
        let baseline = run("bm25", &[("q1", &["dA"]), ("q2", &["dB"]), ("q3", &["dC"])]);
        let sim = simulate_shallow_pool(&baseline, &qrels("q1 0 dA 1\nq1 0 dZ 3\nq2 0 dB 2\n"), 2)
            .unwrap();
        assert_eq!(sim.pool.query_ids(), ["q2"]);
        assert_eq!(sim.dropped_no_relevant, ["q1"]);
        assert_eq!(sim.missing_from_qrels, ["q3"]);
    }

    #[test]
    fn threshold_must_be_positive() {
        let baseline = run("bm25", &[("q1", &["dA"])]);
        assert!(simulate_shallow_pool(&baseline, &qrels("q1 0 dA 2\n"), 0).is_err());
    }

    #[test]
    fn pool_file_round_trip() {
        let pool = pool_of(&[("q1", "dB", 2), ("q2", "dX", 7)]);
        let (mut q, mut s) = (Vec::new(), Vec::new());
        write_pool(&pool, &mut q, &mut s).unwrap();
        assert_eq!(
            String::from_utf8(q.clone()).unwrap(),
            "q1 0 dB 1\nq2 0 dX 1\n"
        );
        assert_eq!(
            String::from_utf8(s.clone()).unwrap(),
            "{\n  \"q1\": 2,\n  \"q2\": 7\n}\n"
        );
        assert_eq!(read_pool(q.as_slice(), s.as_slice()).unwrap(), pool);
    }

    #[test]
    fn pool_file_mismatch() {
        assert!(read_pool("q1 0 dB 1\n".as_bytes(), "{}".as_bytes()).is_err());
        assert!(read_pool("q1 0 dB 1\nq1 0 dC 1\n".as_bytes(), "{\"q1\":1}".as_bytes()).is_err());
        assert!(read_pool("q1 0 dB 1\n".as_bytes(), "{\"q1\":1,\"q2\":3}".as_bytes()).is_err());
    }

    #[test]
    fn holes_exclude_known_relevant() {
        let pool = pool_of(&[("q1", "dB", 2)]);
        let r = run("s", &[("q1", &["dA", "dB", "dC", "dD"])]);
        let holes = find_holes(&[r], &pool, 3).unwrap();
        let expected: BTreeSet<_> = [("q1", "dA"), ("q1", "dC")]
            .iter()
            .map(|(q, d)| (q.to_string(), d.to_string()))
            .collect();
        assert_eq!(holes.holes, expected);
    }

    #[test]
    fn depth_one_with_relevant_first() {
        let pool = pool_of(&[("q1", "dA", 1)]);
        let r = run("s", &[("q1", &["dA", "dB"])]);
        assert!(find_holes(&[r], &pool, 1).unwrap().is_empty());
    }

    #[test]
    fn holes_are_a_union() {
        let pool = pool_of(&[("q1", "dZ", 1)]);
        let a = run("a", &[("q1", &["d1", "d2"]), ("q9", &["d5"])]);
        let b = run("b", &[("q1", &["d2", "d3"])]);
        let holes = find_holes(&[a, b], &pool, 2).unwrap();
        assert_eq!(holes.len(), 3);
        assert_eq!(holes.by_query()["q1"], ["d1", "d2", "d3"]);
        assert!(find_holes(&[], &pool, 0).is_err());
    }

    #[test]
    fn judged_fraction() {
        let docs: Vec<String> = (0..10).map(|i| format!("d{i}")).collect();
        let refs: Vec<&str> = docs.iter().map(String::as_str).collect();
        let r = run("s", &[("q1", &refs)]);
        let judged: BTreeSet<_> = ["d0", "d3", "d5", "d9"]
            .iter()
            .map(|d| ("q1".to_string(), d.to_string()))
            .collect();
        assert_eq!(judged_at_k(&r, &judged, 10).unwrap().per_query["q1"], 0.4);

        let all: BTreeSet<_> = docs.iter().map(|d| ("q1".to_string(), d.clone())).collect();
        assert_eq!(judged_at_k(&r, &all, 10).unwrap().mean, 1.0);
    }

    #[test]
    fn judged_short_ranking() {
        let r = run("s", &[("q1", &["a", "b", "c", "d", "e"])]);
        let judged: BTreeSet<_> = ["a", "b", "c", "d", "e"]
            .iter()
            .map(|d| ("q1".to_string(), d.to_string()))
            .collect();
        assert_eq!(judged_at_k(&r, &judged, 10).unwrap().per_query["q1"], 1.0);
    }

    #[test]
    fn examined_nonrelevant_prefix() {
        let baseline = run("bm25", &[("q1", &["dA", "dB", "dC"])]);
        let pool = pool_of(&[("q1", "dC", 3)]);
        assert_eq!(pool.examined_nonrelevant(&baseline)["q1"], ["dA", "dB"]);
    }

    fn arb_setup() -> impl Strategy<Value = (Run, Qrels)> {
        let ranking = prop::collection::btree_map("d[0-9]{1,2}", 0.0f64..10.0, 1..25);
        let rankings = prop::collection::btree_map("q[0-4]", ranking, 1..5);
        let grades = prop::collection::btree_map(("q[0-4]", "d[0-9]{1,2}"), 0u32..4, 0..80);
        (rankings, grades).prop_map(|(rankings, grades)| {
            let rankings = rankings
                .into_iter()
                .map(|(q, docs)| {
                    (
                        q,
                        docs.into_iter()
                            .map(|(d, s)| RankedDoc::new(d, s.round()))
                            .collect(),
                    )
                })
                .collect();
            let mut qrels = Qrels::new();
            for ((q, d), g) in grades {
                qrels.insert(&q, &d, g).unwrap();
            }
            (Run::new("base", rankings).unwrap(), qrels)
        })
    }

    proptest! {
        #[test]
        fn pool_invariants((baseline, qrels) in arb_setup(), threshold in 1u32..4, depth in 1usize..12) {
            let sim = simulate_shallow_pool(&baseline, &qrels, threshold).unwrap();
            for (qid, entry) in sim.pool.entries() {
                prop_assert!(qrels.grade(qid, &entry.rel_doc_id).unwrap() >= threshold);
                prop_assert_eq!(&baseline.ranking(qid)[entry.examined - 1].doc_id, &entry.rel_doc_id);
            }

            // Re-serializing and re-parsing the baseline does not change the pool.
            let mut text = Vec::new();
            crate::trec_io::write_run(&baseline, &mut text).unwrap();
            let reparsed = parse_run(text.as_slice()).unwrap();
            prop_assert_eq!(&simulate_shallow_pool(&reparsed, &qrels, threshold).unwrap(), &sim);

            let holes = find_holes(std::slice::from_ref(&baseline), &sim.pool, depth).unwrap();
            prop_assert!(holes.len() <= depth * baseline.rankings().len());
            for (q, d) in &holes.holes {
                prop_assert_ne!(sim.pool.rel_doc(q), Some(d.as_str()));
            }

            let judged = qrels.judged_pairs();
            let j = judged_at_k(&baseline, &judged, depth).unwrap();
            let h = hole_at_k(&baseline, &judged, depth).unwrap();
            for (q, v) in &j.per_query {
                prop_assert!((v + h.per_query[q] - 1.0).abs() < 1e-12);
            }
        }
    }
}
