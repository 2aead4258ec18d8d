use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::BufReader;
use std::path::{Path, PathBuf};

use holefill::labelers::{
    build_gain_table, build_lexical_index, label, CachedLabeler, GainTable, LabelOutput,
    LabelerSpec, LexicalIndex, MaxRepLabeler, OneShotLabeler, OracleLabeler, ZeroLabeler,
};
use holefill::measures::{evaluate, Measure};
use holefill::meta_eval::{
    kendall_tau, labeler_pr_analysis, rank_systems, rbo, spearman_rho, t_error_rates_with,
    write_pr_csv, SystemScores, TErrorRates,
};
use holefill::pooling::{
    find_holes, read_pool, simulate_shallow_pool, write_pool, HoleSet, ShallowPool,
};
use holefill::trec_io::{
    bridge_records, load_corpus, load_embeddings, load_queries, parse_qrels, parse_run,
    read_bridge_scores, read_score_cache, task_id, write_score_cache, write_tasks, Corpus,
    EmbeddingStore, Qrels, Run, ScoreCache, ScoringTask,
};
use holefill::Error;
use serde::Serialize;

use crate::config::JobConfig;
use crate::error::{CliError, CliResult};
use crate::output::{write_atomic, write_string, Report};

pub const TASK_FILE: &str = "bridge_tasks.jsonl";

fn open(path: &Path) -> CliResult<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| CliError::io(format!("opening {}", path.display()), e))
}

fn data<T>(path: &Path, r: holefill::Result<T>) -> CliResult<T> {
    r.map_err(|source| CliError::Data {
        path: path.to_owned(),
        source,
    })
}

fn load_run(path: &Path) -> CliResult<Run> {
    data(path, parse_run(open(path)?))
}

fn load_qrels(path: &Path) -> CliResult<Qrels> {
    data(path, parse_qrels(open(path)?))
}

/// Every regular, non-hidden file in `dir`, in file name order.
fn load_runs(dir: &Path) -> CliResult<Vec<Run>> {
    let entries =
        fs::read_dir(dir).map_err(|e| CliError::io(format!("listing {}", dir.display()), e))?;
    let mut paths = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|e| CliError::io(format!("listing {}", dir.display()), e))?;
        let hidden = entry.file_name().to_string_lossy().starts_with('.');
        if !hidden && entry.path().is_file() {
            paths.push(entry.path());
        }
    }
    paths.sort();
    if paths.is_empty() {
        return Err(CliError::Usage(format!(
            "run_dir: {} holds no run files",
            dir.display()
        )));
    }
    let runs = paths
        .iter()
        .map(|p| load_run(p))
        .collect::<CliResult<Vec<_>>>()?;
    let mut seen = BTreeMap::new();
    for (run, path) in runs.iter().zip(&paths) {
        if let Some(first) = seen.insert(run.system_id().to_owned(), path) {
            return Err(CliError::Runtime(Error::InvalidArgument(format!(
                "system id {} appears in both {} and {}",
                run.system_id(),
                first.display(),
                path.display()
            ))));
        }
    }
    Ok(runs)
}

fn load_pool(cfg: &JobConfig) -> CliResult<ShallowPool> {
    let sidecar = cfg.pool_sidecar();
    for p in [&cfg.pool, &sidecar] {
        if !p.exists() {
            return Err(CliError::Usage(format!(
                "pool: {} does not exist (run simulate-pool first)",
                p.display()
            )));
        }
    }
    data(&cfg.pool, read_pool(open(&cfg.pool)?, open(&sidecar)?))
}

fn load_cache(cfg: &JobConfig) -> CliResult<ScoreCache> {
    let path = cfg.cache_file();
    if !path.exists() {
        return Ok(ScoreCache::new());
    }
    data(&path, read_score_cache(open(&path)?))
}

fn max_grade(cfg: &JobConfig, qrels: &Qrels) -> CliResult<u32> {
    match cfg.max_grade.or_else(|| qrels.max_grade()) {
        Some(g) if g > 0 => Ok(g),
        _ => Err(CliError::Runtime(Error::InvalidArgument(
            "qrels hold no positive grade; set max_grade".into(),
        ))),
    }
}

/// Score-record labeler id for a spec. Bridge scores are keyed by their file stem.
pub fn labeler_id(spec: &LabelerSpec) -> String {
    match spec {
        LabelerSpec::Bridge(path) => format!(
            "bridge:{}",
            path.file_stem()
                .map(|s| s.to_string_lossy())
                .unwrap_or_default()
        ),
        other => other.to_string(),
    }
}

/// Whatever the configured labeler needs, loaded before any computation.
enum LabelerInputs {
    Zero,
    Oracle {
        qrels: Qrels,
        max_grade: u32,
    },
    Lexical(LexicalIndex),
    Dense(EmbeddingStore),
    Bridge {
        id: String,
        scores: ScoreCache,
        texts: Option<Corpus>,
    },
}

fn load_texts(cfg: &JobConfig) -> CliResult<Corpus> {
    let path = cfg.require("corpus", &cfg.corpus)?;
    data(path, load_corpus(open(path)?, cfg.text_format))
}

fn load_labeler_inputs(cfg: &JobConfig, qrels: Option<&Qrels>) -> CliResult<LabelerInputs> {
    Ok(match &cfg.labeler_spec {
        LabelerSpec::Zero => LabelerInputs::Zero,
        LabelerSpec::Oracle => {
            let qrels = match qrels {
                Some(q) => q.clone(),
                None => load_qrels(cfg.require("qrels", &cfg.qrels)?)?,
            };
            let max_grade = max_grade(cfg, &qrels)?;
            LabelerInputs::Oracle { qrels, max_grade }
        }
        LabelerSpec::MaxRepBm25 => {
            let corpus = load_texts(cfg)?;
            LabelerInputs::Lexical(build_lexical_index(&corpus)?)
        }
        LabelerSpec::MaxRepEmbed => {
            let path = cfg.require("embeddings", &cfg.embeddings)?;
            LabelerInputs::Dense(data(path, load_embeddings(open(path)?))?)
        }
        LabelerSpec::Bridge(path) => {
            if !path.exists() {
                return Err(CliError::Usage(format!(
                    "labeler: {} does not exist",
                    path.display()
                )));
            }
            let id = labeler_id(&cfg.labeler_spec);
            let records = data(
                path,
                read_bridge_scores(open(path)?).and_then(|s| bridge_records(&s, &id)),
            )?;
            let scores = data(path, ScoreCache::try_from(records))?;
            let texts = match (&cfg.corpus, &cfg.queries) {
                (Some(_), Some(_)) => {
                    let qpath = cfg.require("queries", &cfg.queries)?;
                    let queries = data(qpath, load_queries(open(qpath)?, cfg.text_format))?;
                    Some(load_texts(cfg)?.with_queries(queries))
                }
                _ => None,
            };
            LabelerInputs::Bridge { id, scores, texts }
        }
    })
}

/// Pool, runs, cache and labeler inputs shared by every labeling command.
struct Workspace {
    pool: ShallowPool,
    runs: Vec<Run>,
    cache: ScoreCache,
    labeler: LabelerInputs,
}

impl Workspace {
    fn load(cfg: &JobConfig, qrels: Option<&Qrels>) -> CliResult<Self> {
        let run_dir = cfg.require("run_dir", &cfg.run_dir)?;
        Ok(Self {
            pool: load_pool(cfg)?,
            runs: load_runs(run_dir)?,
            cache: load_cache(cfg)?,
            labeler: load_labeler_inputs(cfg, qrels)?,
        })
    }

    fn holes(&self, depth: usize) -> CliResult<HoleSet> {
        Ok(find_holes(&self.runs, &self.pool, depth)?)
    }

    /// Scores every hole, reusing the on-disk cache, and writes new scores back.
    fn label(&mut self, cfg: &JobConfig, holes: &HoleSet) -> CliResult<LabelOutput> {
        let maxrep_bm25;
        let maxrep_embed;
        let oracle;
        let cached;
        let labeler: &dyn OneShotLabeler = match &self.labeler {
            LabelerInputs::Zero => &ZeroLabeler,
            LabelerInputs::Oracle { qrels, max_grade } => {
                oracle = OracleLabeler::new(qrels, *max_grade)?;
                &oracle
            }
            LabelerInputs::Lexical(index) => {
                maxrep_bm25 = MaxRepLabeler::bm25(index, cfg.bm25_params(), cfg.maxrep_k);
                &maxrep_bm25
            }
            LabelerInputs::Dense(store) => {
                maxrep_embed = MaxRepLabeler::embedding(store, cfg.maxrep_k);
                &maxrep_embed
            }
            LabelerInputs::Bridge { id, scores, .. } => {
                cached = CachedLabeler::new(id.clone(), scores);
                &cached
            }
        };
        let out = match label(labeler, &self.pool, holes, Some(&self.cache)) {
            Ok(out) => out,
            Err(Error::MissingScores(missing)) => return Err(self.coverage_error(cfg, missing)),
            Err(e) => return Err(e.into()),
        };
        if out.computed > 0 {
            for r in &out.records {
                self.cache.insert(r.clone())?;
            }
            let path = cfg.cache_file();
            write_atomic(&path, |w| data(&path, write_score_cache(&self.cache, w)))?;
        }
        Ok(out)
    }

    fn coverage_error(&self, cfg: &JobConfig, mut missing: Vec<(String, String)>) -> CliError {
        missing.sort();
        let LabelerInputs::Bridge {
            texts: Some(texts), ..
        } = &self.labeler
        else {
            return CliError::Coverage {
                missing,
                task_file: None,
            };
        };
        let tasks: Option<Vec<ScoringTask>> = missing
            .iter()
            .map(|(q, d)| {
                let rel = self.pool.rel_doc(q)?;
                Some(ScoringTask {
                    id: task_id(q, rel, d),
                    query: texts.query(q)?.to_owned(),
                    passage_a: texts.text(rel)?.to_owned(),
                    passage_b: texts.text(d)?.to_owned(),
                })
            })
            .collect();
        let Some(tasks) = tasks else {
            return CliError::Coverage {
                missing,
                task_file: None,
            };
        };
        let path = cfg.output_dir.join(TASK_FILE);
        match write_atomic(&path, |w| data(&path, write_tasks(&tasks, w))) {
            Ok(()) => CliError::Coverage {
                missing,
                task_file: Some(path),
            },
            Err(e) => e,
        }
    }

    /// Filled gain table for the labeled holes.
    fn filled_table(&self, cfg: &JobConfig, out: &LabelOutput) -> CliResult<GainTable> {
        let mut table = build_gain_table(&self.pool, &out.records, &labeler_id(&cfg.labeler_spec))?;
        if cfg.pin_examined_nonrelevant {
            let baseline = load_run(cfg.require("baseline_run", &cfg.baseline_run)?)?;
            table.pin_to_zero(&self.pool.examined_nonrelevant(&baseline));
        }
        Ok(table)
    }
}

fn check_pin_inputs(cfg: &JobConfig) -> CliResult<()> {
    if cfg.pin_examined_nonrelevant {
        cfg.require("baseline_run", &cfg.baseline_run)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct PoolSummary<'a> {
    queries_pooled: usize,
    mean_examined: Option<f64>,
    dropped_no_relevant: &'a [String],
    missing_from_qrels: &'a [String],
}

pub fn simulate_pool_cmd(cfg: &JobConfig) -> CliResult<String> {
    let baseline = load_run(cfg.require("baseline_run", &cfg.baseline_run)?)?;
    let qrels = load_qrels(cfg.require("qrels", &cfg.qrels)?)?;
    let sim = simulate_shallow_pool(&baseline, &qrels, cfg.rel_threshold)?;

    let (mut pool_bytes, mut sidecar_bytes) = (Vec::new(), Vec::new());
    write_pool(&sim.pool, &mut pool_bytes, &mut sidecar_bytes)?;
    write_atomic(&cfg.pool, |w| {
        w.write_all(&pool_bytes)
            .map_err(|e| CliError::io("writing pool", e))
    })?;
    write_atomic(&cfg.pool_sidecar(), |w| {
        w.write_all(&sidecar_bytes)
            .map_err(|e| CliError::io("writing pool sidecar", e))
    })?;

    let summary = PoolSummary {
        queries_pooled: sim.pool.len(),
        mean_examined: sim.pool.mean_examined(),
        dropped_no_relevant: &sim.dropped_no_relevant,
        missing_from_qrels: &sim.missing_from_qrels,
    };
    let json = Report::new("simulate-pool", cfg, summary).to_json()?;
    write_string(&cfg.output_dir.join("pool_summary.json"), &json)?;
    Ok(json)
}

#[derive(Serialize)]
struct LabelSummary {
    labeler_id: String,
    hole_depth: usize,
    holes: usize,
    cache_hits: usize,
    computed: usize,
    cache_file: PathBuf,
}

pub fn label_cmd(cfg: &JobConfig) -> CliResult<String> {
    let mut ws = Workspace::load(cfg, None)?;
    let holes = ws.holes(cfg.hole_depth)?;
    let out = ws.label(cfg, &holes)?;
    let summary = LabelSummary {
        labeler_id: labeler_id(&cfg.labeler_spec),
        hole_depth: cfg.hole_depth,
        holes: holes.len(),
        cache_hits: out.cache_hits,
        computed: out.computed,
        cache_file: cfg.cache_file(),
    };
    Report::new("label", cfg, summary).to_json()
}

#[derive(Serialize)]
struct EvalFile<'a> {
    system: &'a str,
    labeler_id: &'a str,
    measure: Measure,
    per_query: &'a BTreeMap<String, f64>,
    mean: f64,
}

#[derive(Serialize)]
struct EvalSummary {
    labeler_id: String,
    queries: usize,
    /// System → measure → mean.
    means: BTreeMap<String, BTreeMap<String, f64>>,
}

/// File-name-safe form of a system id.
fn file_safe(id: &str) -> String {
    id.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || "-_.".contains(c) {
                c
            } else {
                '_'
            }
        })
        .collect()
}

pub fn evaluate_cmd(cfg: &JobConfig) -> CliResult<String> {
    check_pin_inputs(cfg)?;
    let mut ws = Workspace::load(cfg, None)?;
    let holes = ws.holes(cfg.hole_depth)?;
    let out = ws.label(cfg, &holes)?;
    let table = ws.filled_table(cfg, &out)?;
    let queries = ws.pool.query_ids();
    let id = labeler_id(&cfg.labeler_spec);

    let mut means: BTreeMap<String, BTreeMap<String, f64>> = BTreeMap::new();
    for run in &ws.runs {
        for &measure in &cfg.parsed_measures {
            let result = evaluate(run, &table, measure, &queries);
            let body = EvalFile {
                system: run.system_id(),
                labeler_id: &id,
                measure,
                per_query: &result.per_query,
                mean: result.mean,
            };
            let path = cfg.output_dir.join("eval").join(format!(
                "{}.{}.json",
                file_safe(run.system_id()),
                measure.slug()
            ));
            write_string(&path, &Report::new("evaluate", cfg, body).to_json()?)?;
            means
                .entry(run.system_id().to_owned())
                .or_default()
                .insert(measure.to_string(), result.mean);
        }
    }
    let summary = EvalSummary {
        labeler_id: id,
        queries: queries.len(),
        means,
    };
    Report::new("evaluate", cfg, summary).to_json()
}

#[derive(Serialize)]
struct RankedSystem {
    system: String,
    mean: f64,
}

#[derive(Serialize)]
struct BaselineRank {
    system: String,
    candidate_rank: usize,
    full_rank: usize,
}

#[derive(Serialize)]
struct MeasureComparison {
    measure: String,
    kendall_tau: Option<f64>,
    spearman_rho: Option<f64>,
    rbo: f64,
    t_fnr: Option<f64>,
    t_fpr: Option<f64>,
    significance: TErrorRates,
    baseline: Option<BaselineRank>,
    candidate_ranking: Vec<RankedSystem>,
    full_ranking: Vec<RankedSystem>,
}

#[derive(Serialize)]
struct CompareSummary {
    labeler_id: String,
    queries: usize,
    systems: usize,
    measures: Vec<MeasureComparison>,
}

fn defined(r: holefill::Result<f64>) -> CliResult<Option<f64>> {
    match r {
        Ok(v) => Ok(Some(v)),
        Err(Error::Undefined(_)) => Ok(None),
        Err(e) => Err(e.into()),
    }
}

fn ranked(scores: &SystemScores) -> Vec<RankedSystem> {
    scores
        .ranking()
        .into_iter()
        .map(|s| {
            let mean = scores.get(&s).map_or(0.0, |x| x.mean);
            RankedSystem { system: s, mean }
        })
        .collect()
}

fn fmt_cell(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_owned(), |x| format!("{x:.4}"))
}

fn compare_table(summary: &CompareSummary) -> String {
    let width = summary
        .measures
        .iter()
        .map(|m| m.measure.len())
        .max()
        .unwrap_or(0)
        .max(7);
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{:<width$}  {:>7}  {:>7}  {:>7}  {:>7}  {:>7}",
        "measure", "tau", "rho", "rbo", "t-FNR", "t-FPR"
    );
    for m in &summary.measures {
        let _ = writeln!(
            s,
            "{:<width$}  {:>7}  {:>7}  {:>7}  {:>7}  {:>7}",
            m.measure,
            fmt_cell(m.kendall_tau),
            fmt_cell(m.spearman_rho),
            fmt_cell(Some(m.rbo)),
            fmt_cell(m.t_fnr),
            fmt_cell(m.t_fpr)
        );
    }
    for m in &summary.measures {
        if let Some(b) = &m.baseline {
            let _ = writeln!(
                s,
                "{}: baseline {} ranked {} (candidate) vs {} (full) of {}",
                m.measure, b.system, b.candidate_rank, b.full_rank, summary.systems
            );
        }
    }
    s
}

pub fn compare_cmd(cfg: &JobConfig) -> CliResult<String> {
    check_pin_inputs(cfg)?;
    let qrels = load_qrels(cfg.require("qrels", &cfg.qrels)?)?;
    let baseline_id = match &cfg.baseline_run {
        Some(_) => Some(
            load_run(cfg.require("baseline_run", &cfg.baseline_run)?)?
                .system_id()
                .to_owned(),
        ),
        None => None,
    };
    let full_table = GainTable::from_qrels(&qrels, max_grade(cfg, &qrels)?)?;
    let mut ws = Workspace::load(cfg, Some(&qrels))?;
    if ws.runs.len() < 2 {
        return Err(CliError::Usage("compare needs at least two runs".into()));
    }
    let holes = ws.holes(cfg.hole_depth)?;
    let out = ws.label(cfg, &holes)?;
    let table = ws.filled_table(cfg, &out)?;
    let queries = ws.pool.query_ids();

    let mut measures = Vec::new();
    for &measure in &cfg.parsed_measures {
        let candidate = rank_systems(&ws.runs, &table, measure, &queries)?;
        let full = rank_systems(&ws.runs, &full_table, measure, &queries)?;
        let (x, y) = (candidate.means(), full.means());
        let significance =
            t_error_rates_with(&candidate, &full, cfg.alpha, cfg.top_from, cfg.correction)?;
        let baseline = baseline_id.as_ref().and_then(|b| {
            Some(BaselineRank {
                system: b.clone(),
                candidate_rank: candidate.rank_of(b)?,
                full_rank: full.rank_of(b)?,
            })
        });
        measures.push(MeasureComparison {
            measure: measure.to_string(),
            kendall_tau: defined(kendall_tau(&x, &y))?,
            spearman_rho: defined(spearman_rho(&x, &y))?,
            rbo: rbo(&candidate.ranking(), &full.ranking(), cfg.rbo_p)?,
            t_fnr: significance.t_fnr,
            t_fpr: significance.t_fpr,
            significance,
            baseline,
            candidate_ranking: ranked(&candidate),
            full_ranking: ranked(&full),
        });
    }
    let summary = CompareSummary {
        labeler_id: labeler_id(&cfg.labeler_spec),
        queries: queries.len(),
        systems: ws.runs.len(),
        measures,
    };
    let table_text = compare_table(&summary);
    write_string(
        &cfg.output_dir.join("compare.json"),
        &Report::new("compare", cfg, &summary).to_json()?,
    )?;
    write_string(&cfg.output_dir.join("compare.txt"), &table_text)?;
    Ok(table_text)
}

#[derive(Serialize)]
struct PrSummary {
    labeler_id: String,
    pr_depth: usize,
    rel_threshold: u32,
    average_precision: f64,
    best_f1: f64,
    best_threshold: f64,
    relevant: usize,
    judged: usize,
    unjudged_excluded: usize,
    points: usize,
}

pub fn pr_curve_cmd(cfg: &JobConfig) -> CliResult<String> {
    let qrels = load_qrels(cfg.require("qrels", &cfg.qrels)?)?;
    let mut ws = Workspace::load(cfg, Some(&qrels))?;
    let holes = ws.holes(cfg.pr_depth)?;
    let out = ws.label(cfg, &holes)?;
    let curve = labeler_pr_analysis(&out.records, &qrels, cfg.rel_threshold)?;

    let csv_path = cfg.output_dir.join("pr_curve.csv");
    write_atomic(&csv_path, |w| data(&csv_path, write_pr_csv(&curve, w)))?;
    let summary = PrSummary {
        labeler_id: labeler_id(&cfg.labeler_spec),
        pr_depth: cfg.pr_depth,
        rel_threshold: cfg.rel_threshold,
        average_precision: curve.average_precision,
        best_f1: curve.best_f1,
        best_threshold: curve.best_threshold,
        relevant: curve.relevant,
        judged: curve.judged,
        unjudged_excluded: curve.unjudged_excluded,
        points: curve.points.len(),
    };
    let json = Report::new("pr-curve", cfg, summary).to_json()?;
    write_string(&cfg.output_dir.join("pr_summary.json"), &json)?;
    Ok(json)
}
