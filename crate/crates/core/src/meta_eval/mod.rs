//! How faithfully an evaluation under filled judgments reproduces the
//! evaluation under full judgments: rank correlations between system
//! orderings, significance-test agreement, and labeler precision/recall.

mod correlation;
mod pr;
mod significance;
pub mod stats;

use std::cmp::Ordering;
use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::labelers::GainTable;
use crate::measures::{evaluate, Measure};
use crate::trec_io::Run;

pub use correlation::{average_ranks, kendall_tau, rbo, spearman_rho};
pub use pr::{labeler_pr_analysis, write_pr_csv, PrCurve, PrPoint};
pub use significance::{
    significance_against, significance_report, significance_with, t_error_rates,
    t_error_rates_with, Correction, PairTest, SignificanceReport, TErrorRates, TopFrom,
};
pub use stats::{paired_ttest, TTest};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SystemScore {
    /// Aligned to [`SystemScores::queries`].
    pub per_query: Vec<f64>,
    pub mean: f64,
}

/// Per-query scores of several systems over one shared query list.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SystemScores {
    queries: Vec<String>,
    systems: BTreeMap<String, SystemScore>,
}

impl SystemScores {
    pub fn new(queries: Vec<String>, per_system: BTreeMap<String, Vec<f64>>) -> Result<Self> {
        let mut systems = BTreeMap::new();
        for (id, per_query) in per_system {
            if per_query.len() != queries.len() {
                return Err(Error::InvalidArgument(format!(
                    "system {id} has {} scores for {} queries",
                    per_query.len(),
                    queries.len()
                )));
            }
            let mean = if per_query.is_empty() {
                0.0
            } else {
                per_query.iter().sum::<f64>() / per_query.len() as f64
            };
            systems.insert(id, SystemScore { per_query, mean });
        }
        Ok(Self { queries, systems })
    }

    pub fn queries(&self) -> &[String] {
        &self.queries
    }

    pub fn systems(&self) -> &BTreeMap<String, SystemScore> {
        &self.systems
    }

    pub fn get(&self, system_id: &str) -> Option<&SystemScore> {
        self.systems.get(system_id)
    }

    pub fn len(&self) -> usize {
        self.systems.len()
    }

    pub fn is_empty(&self) -> bool {
        self.systems.is_empty()
    }

    /// Means in system id order.
    pub fn means(&self) -> Vec<f64> {
        self.systems.values().map(|s| s.mean).collect()
    }

    /// System ids by mean descending, ties by id ascending.
    pub fn ranking(&self) -> Vec<String> {
        let mut ids: Vec<(&String, f64)> = self.systems.iter().map(|(k, v)| (k, v.mean)).collect();
        ids.sort_by(|a, b| {
            b.1.partial_cmp(&a.1)
                .unwrap_or(Ordering::Equal)
                .then_with(|| a.0.cmp(b.0))
        });
        ids.into_iter().map(|(k, _)| k.clone()).collect()
    }

    /// 1-based position of `system_id` in [`Self::ranking`].
    pub fn rank_of(&self, system_id: &str) -> Option<usize> {
        self.ranking()
            .iter()
            .position(|s| s == system_id)
            .map(|i| i + 1)
    }
}

/// Scores every run under `table` over `queries`.
pub fn rank_systems(
    runs: &[Run],
    table: &GainTable,
    measure: Measure,
    queries: &[String],
) -> Result<SystemScores> {
    let mut seen = std::collections::BTreeSet::new();
    for run in runs {
        if !seen.insert(run.system_id()) {
            return Err(Error::InvalidArgument(format!(
                "duplicate system id {}",
                run.system_id()
            )));
        }
    }
    let per_system: BTreeMap<String, Vec<f64>> = runs
        .par_iter()
        .map(|run| {
            let result = evaluate(run, table, measure, queries);
            let scores = queries.iter().map(|q| result.per_query[q]).collect();
            (run.system_id().to_owned(), scores)
        })
        .collect::<Vec<_>>()
        .into_iter()
        .collect();
    SystemScores::new(queries.to_vec(), per_system)
}

/// Ranking agreement between a candidate and a reference evaluation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Agreement {
    pub kendall_tau: f64,
    pub spearman_rho: f64,
    pub rbo: f64,
}

/// τ and ρ over system means (aligned by system id) and RBO over the two
/// system rankings.
pub fn ranking_agreement(
    candidate: &SystemScores,
    full: &SystemScores,
    rbo_p: f64,
) -> Result<Agreement> {
    if !candidate.systems.keys().eq(full.systems.keys()) {
        return Err(Error::InvalidArgument(
            "evaluations cover different systems".into(),
        ));
    }
    let (x, y) = (candidate.means(), full.means());
    Ok(Agreement {
        kendall_tau: kendall_tau(&x, &y)?,
        spearman_rho: spearman_rho(&x, &y)?,
        rbo: rbo(&candidate.ranking(), &full.ranking(), rbo_p)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trec_io::RankedDoc;

    fn run(system: &str, docs: &[&str]) -> Run {
        let n = docs.len();
        let ranking = docs
            .iter()
            .enumerate()
            .map(|(i, d)| RankedDoc::new(*d, (n - i) as f64))
            .collect();
        Run::new(system, BTreeMap::from([("q1".to_string(), ranking)])).unwrap()
    }

    fn table() -> GainTable {
        let mut t = GainTable::default();
        t.set("q1", "a", 1.0).unwrap();
        t.set("q1", "b", 0.5).unwrap();
        t
    }

    #[test]
    fn single_run() {
        let s = rank_systems(
            &[run("s1", &["a"])],
            &table(),
            Measure::Rbp { p: 0.8 },
            &["q1".into()],
        )
        .unwrap();
        assert_eq!(s.ranking(), ["s1"]);
    }

    #[test]
    fn ordering_and_ties() {
        let runs = [
            run("z", &["a", "b"]),
            run("y", &["b", "a"]),
            run("x", &["a", "b"]),
        ];
        let s = rank_systems(&runs, &table(), Measure::Sdcg { k: 10 }, &["q1".into()]).unwrap();
        assert_eq!(s.ranking(), ["x", "z", "y"]);
        assert_eq!(s.rank_of("y"), Some(3));
    }

    #[test]
    fn duplicate_system_ids() {
        let runs = [run("s", &["a"]), run("s", &["b"])];
        assert!(rank_systems(&runs, &table(), Measure::Sdcg { k: 10 }, &["q1".into()]).is_err());
    }

    #[test]
    fn same_inputs_agree_perfectly() {
        let runs = [
            run("s1", &["a", "b"]),
            run("s2", &["b", "a"]),
            run("s3", &["c", "a"]),
        ];
        let q = ["q1".to_string()];
        let a = rank_systems(&runs, &table(), Measure::Sdcg { k: 10 }, &q).unwrap();
        let agreement = ranking_agreement(&a, &a.clone(), 0.9).unwrap();
        assert_eq!(
            agreement,
            Agreement {
                kendall_tau: 1.0,
                spearman_rho: 1.0,
                rbo: 1.0
            }
        );
    }
}
