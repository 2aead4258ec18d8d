use rayon::prelude::*;
use serde::Serialize;

use super::stats::paired_ttest;
use super::SystemScores;
use crate::error::{Error, Result};

/// Top system versus one other system.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairTest {
    pub system: String,
    pub t: f64,
    pub p: f64,
    pub significant: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SignificanceReport {
    pub top_system: String,
    pub alpha: f64,
    pub correction: Correction,
    /// Number of pairwise comparisons (the Bonferroni factor).
    pub comparisons: usize,
    /// One entry per non-top system, in system id order.
    pub tests: Vec<PairTest>,
}

impl SignificanceReport {
    pub fn significant_systems(&self) -> Vec<&str> {
        self.tests
            .iter()
            .filter(|t| t.significant)
            .map(|t| t.system.as_str())
            .collect()
    }
}

/// Paired t-tests of the best system (highest mean) against every other,
/// Bonferroni-corrected: significant iff `p < alpha / (S - 1)`.
pub fn significance_report(scores: &SystemScores, alpha: f64) -> Result<SignificanceReport> {
    let top = scores
        .ranking()
        .into_iter()
        .next()
        .ok_or(Error::Empty("system set"))?;
    significance_against(scores, &top, alpha)
}

/// Multiple-comparison correction applied to the per-pair p-values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Correction {
    #[default]
    Bonferroni,
    None,
}

impl std::str::FromStr for Correction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bonferroni" => Ok(Self::Bonferroni),
            "none" => Ok(Self::None),
            _ => Err(Error::InvalidArgument(format!(
                "unknown correction {s:?} (expected bonferroni or none)"
            ))),
        }
    }
}

/// Like [`significance_report`] with a caller-chosen top system.
pub fn significance_against(
    scores: &SystemScores,
    top: &str,
    alpha: f64,
) -> Result<SignificanceReport> {
    significance_with(scores, top, alpha, Correction::Bonferroni)
}

/// Like [`significance_against`] with a selectable correction.
pub fn significance_with(
    scores: &SystemScores,
    top: &str,
    alpha: f64,
    correction: Correction,
) -> Result<SignificanceReport> {
    if scores.len() < 2 {
        return Err(Error::InvalidArgument(
            "significance testing needs at least two systems".into(),
        ));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "alpha {alpha} outside (0, 1)"
        )));
    }
    let top_scores = scores
        .get(top)
        .ok_or_else(|| Error::InvalidArgument(format!("unknown system {top}")))?;
    let comparisons = scores.len() - 1;
    let threshold = match correction {
        Correction::Bonferroni => alpha / comparisons as f64,
        Correction::None => alpha,
    };

    let others: Vec<(&String, &super::SystemScore)> = scores
        .systems()
        .iter()
        .filter(|(id, _)| id.as_str() != top)
        .collect();
    let tests = others
        .par_iter()
        .map(|(id, s)| {
            let r = paired_ttest(&top_scores.per_query, &s.per_query)?;
            Ok(PairTest {
                system: (*id).clone(),
                t: r.t,
                p: r.p,
                significant: r.p < threshold,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(SignificanceReport {
        top_system: top.to_owned(),
        alpha,
        correction,
        comparisons,
        tests,
    })
}

/// Which evaluation picks the top system for error-rate analysis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TopFrom {
    #[default]
    Candidate,
    Full,
}

/// Agreement of candidate-judgment significance decisions with full-judgment
/// decisions, the latter taken as ground truth.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TErrorRates {
    pub top_system: String,
    pub true_positives: usize,
    pub false_positives: usize,
    pub true_negatives: usize,
    pub false_negatives: usize,
    /// `FP / (FP + TN)`; absent when no pair is non-significant under full judgments.
    pub t_fpr: Option<f64>,
    /// `FN / (FN + TP)`; absent when no pair is significant under full judgments.
    pub t_fnr: Option<f64>,
}

pub fn t_error_rates(
    candidate: &SystemScores,
    full: &SystemScores,
    alpha: f64,
    top_from: TopFrom,
) -> Result<TErrorRates> {
    t_error_rates_with(candidate, full, alpha, top_from, Correction::Bonferroni)
}

pub fn t_error_rates_with(
    candidate: &SystemScores,
    full: &SystemScores,
    alpha: f64,
    top_from: TopFrom,
    correction: Correction,
) -> Result<TErrorRates> {
    if candidate.queries() != full.queries() {
        return Err(Error::InvalidArgument(
            "candidate and full evaluations cover different queries".into(),
        ));
    }
    if !candidate.systems().keys().eq(full.systems().keys()) {
        return Err(Error::InvalidArgument(
            "candidate and full evaluations cover different systems".into(),
        ));
    }
    let top = match top_from {
        TopFrom::Candidate => candidate.ranking(),
        TopFrom::Full => full.ranking(),
    }
    .into_iter()
    .next()
    .ok_or(Error::Empty("system set"))?;

    let cand = significance_with(candidate, &top, alpha, correction)?;
    let truth = significance_with(full, &top, alpha, correction)?;
    let (mut tp, mut fp, mut tn, mut fn_) = (0, 0, 0, 0);
    for (c, f) in cand.tests.iter().zip(&truth.tests) {
        match (c.significant, f.significant) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, false) => tn += 1,
            (false, true) => fn_ += 1,
        }
    }
    let rate = |num: usize, den: usize| (den > 0).then(|| num as f64 / den as f64);
    Ok(TErrorRates {
        top_system: top,
        true_positives: tp,
        false_positives: fp,
        true_negatives: tn,
        false_negatives: fn_,
        t_fpr: rate(fp, fp + tn),
        t_fnr: rate(fn_, fn_ + tp),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;

    fn scores(systems: &[(&str, &[f64])]) -> SystemScores {
        let n = systems[0].1.len();
        SystemScores::new(
            (0..n).map(|i| format!("q{i}")).collect(),
            systems
                .iter()
                .map(|(id, v)| (id.to_string(), v.to_vec()))
                .collect::<BTreeMap<_, _>>(),
        )
        .unwrap()
    }

    #[test]
    fn identical_systems() {
        let v = [0.2, 0.4, 0.6, 0.8];
        let r = significance_report(&scores(&[("a", &v), ("b", &v)]), 0.05).unwrap();
        assert_eq!(r.top_system, "a");
        assert_eq!(r.comparisons, 1);
        assert!(r.significant_systems().is_empty());
        assert_eq!(r.tests[0].p, 1.0);
    }

    #[test]
    fn bonferroni_threshold() {
        // Differences chosen so both raw p-values land near 0.01 < 0.05 / 2.
        let top = [0.9, 0.8, 0.85, 0.95, 0.7, 0.9];
        let b = [0.5, 0.55, 0.4, 0.6, 0.5, 0.45];
        let c = [0.6, 0.4, 0.5, 0.7, 0.3, 0.6];
        let r = significance_report(&scores(&[("top", &top), ("b", &b), ("c", &c)]), 0.05).unwrap();
        assert_eq!(r.top_system, "top");
        assert_eq!(r.comparisons, 2);
        for t in &r.tests {
            assert!(t.p < 0.025, "{t:?}");
        }
        assert_eq!(r.significant_systems(), ["b", "c"]);
    }

    #[test]
    fn correction_flips_marginal_results() {
        // p between 0.025 and 0.05: significant alone, not after correction with m = 2.
        let top = [0.5, 0.6, 0.7, 0.65, 0.55, 0.62];
        let b = [0.45, 0.58, 0.6, 0.66, 0.5, 0.55];
        let raw = significance_report(&scores(&[("top", &top), ("b", &b)]), 0.05).unwrap();
        let p = raw.tests[0].p;
        assert!(p > 0.025 && p < 0.05, "fixture p = {p}");
        assert!(raw.tests[0].significant);
        let three = scores(&[("top", &top), ("b", &b), ("c", &[0.0; 6])]);
        let corrected = significance_report(&three, 0.05).unwrap();
        assert!(
            !corrected
                .tests
                .iter()
                .find(|t| t.system == "b")
                .unwrap()
                .significant
        );
        let uncorrected = significance_with(&three, "top", 0.05, Correction::None).unwrap();
        assert!(
            uncorrected
                .tests
                .iter()
                .find(|t| t.system == "b")
                .unwrap()
                .significant
        );
    }

    #[test]
    fn identical_evaluations_have_no_errors() {
        let s = scores(&[
            ("a", &[0.9, 0.8, 0.85, 0.95]),
            ("b", &[0.1, 0.2, 0.15, 0.1]),
            ("c", &[0.88, 0.79, 0.86, 0.9]),
        ]);
        let r = t_error_rates(&s, &s, 0.05, TopFrom::Candidate).unwrap();
        assert_eq!(r.t_fpr.unwrap_or(0.0), 0.0);
        assert_eq!(r.t_fnr.unwrap_or(0.0), 0.0);
        assert_eq!(r.false_positives + r.false_negatives, 0);
    }

    #[test]
    fn candidate_significant_everywhere() {
        let cand = scores(&[
            ("a", &[0.9, 0.8, 0.85, 0.95, 0.9]),
            ("b", &[0.1, 0.2, 0.15, 0.1, 0.2]),
            ("c", &[0.2, 0.1, 0.2, 0.15, 0.1]),
        ]);
        let v = [0.5, 0.4, 0.6, 0.5, 0.45];
        let full = scores(&[("a", &v), ("b", &v), ("c", &v)]);
        let r = t_error_rates(&cand, &full, 0.05, TopFrom::Candidate).unwrap();
        assert_eq!(r.t_fpr, Some(1.0));
        assert_eq!(r.t_fnr, None);
    }

    #[test]
    fn mismatched_inputs() {
        let a = scores(&[("a", &[0.1, 0.2]), ("b", &[0.3, 0.1])]);
        let b = scores(&[("a", &[0.1, 0.2]), ("c", &[0.3, 0.1])]);
        assert!(t_error_rates(&a, &b, 0.05, TopFrom::Candidate).is_err());
        let single = scores(&[("a", &[0.1, 0.2])]);
        assert!(significance_report(&single, 0.05).is_err());
    }
}
