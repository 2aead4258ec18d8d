//! Declarative job configuration: a TOML file of flat keys, each of which can
//! be overridden by the command-line flag of the same name.

use std::env;
use std::fs;
use std::path::{Path, PathBuf};

use clap::Args;
use holefill::labelers::{Bm25Params, LabelerSpec, DEFAULT_MAXREP_K};
use holefill::measures::Measure;
use holefill::meta_eval::{Correction, TopFrom};
use holefill::trec_io::TextFormat;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

pub const CACHE_DIR_ENV: &str = "HOLEFILL_CACHE_DIR";
pub const CACHE_FILE: &str = "scores.jsonl";

/// Keys shared by the config file and the flags. Every field is optional so
/// that the two sources can be layered.
#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Settings {
    /// Passage collection (`docid<TAB>text` or JSON lines).
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    /// Format of the corpus and query files: tsv or jsonl.
    #[arg(long)]
    pub corpus_format: Option<String>,
    /// Query texts, same format as the corpus.
    #[arg(long)]
    pub queries: Option<PathBuf>,
    /// Dense vectors as JSON lines `{"docid", "vector"}`.
    #[arg(long)]
    pub embeddings: Option<PathBuf>,
    /// Full reference judgments.
    #[arg(long)]
    pub qrels: Option<PathBuf>,
    /// Run that contributes the shallow pool.
    #[arg(long)]
    pub baseline_run: Option<PathBuf>,
    /// Directory holding one TREC run file per system.
    #[arg(long)]
    pub run_dir: Option<PathBuf>,
    /// Score cache directory.
    #[arg(long)]
    pub cache_dir: Option<PathBuf>,
    /// Pool qrels file; the sidecar sits next to it as `<stem>.examined.json`.
    #[arg(long)]
    pub pool: Option<PathBuf>,
    /// zero, oracle, maxrep-bm25, maxrep-embed or bridge:<score file>.
    #[arg(long)]
    pub labeler: Option<String>,
    /// Measure such as SDCG@10, WP@10 or RBP(p=0.8). Repeatable.
    #[arg(long = "measure")]
    pub measures: Option<Vec<String>>,
    #[arg(long)]
    pub rel_threshold: Option<u32>,
    #[arg(long)]
    pub hole_depth: Option<usize>,
    #[arg(long)]
    pub pr_depth: Option<usize>,
    #[arg(long)]
    pub maxrep_k: Option<usize>,
    #[arg(long)]
    pub bm25_k1: Option<f64>,
    #[arg(long)]
    pub bm25_b: Option<f64>,
    /// Grade mapped to gain 1 in the full-judgment evaluation. Defaults to
    /// the largest grade in the qrels.
    #[arg(long)]
    pub max_grade: Option<u32>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub rbo_p: Option<f64>,
    /// bonferroni or none.
    #[arg(long)]
    pub correction: Option<String>,
    /// Which evaluation picks the top system for t-error rates: candidate or full.
    #[arg(long)]
    pub top_from: Option<String>,
    /// Force the examined non-relevant documents above d+ to gain 0.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub pin_examined_nonrelevant: Option<bool>,
    #[arg(long)]
    pub output_dir: Option<PathBuf>,
    /// Worker threads. Outputs do not depend on it.
    #[arg(long)]
    pub threads: Option<usize>,
}

macro_rules! layer {
    ($flags:expr, $file:expr, $($field:ident),+) => {
        Settings { $($field: $flags.$field.or($file.$field)),+ }
    };
}

impl Settings {
    /// Flags win over the file.
    fn layered(flags: Settings, file: Settings) -> Settings {
        layer!(
            flags,
            file,
            corpus,
            corpus_format,
            queries,
            embeddings,
            qrels,
            baseline_run,
            run_dir,
            cache_dir,
            pool,
            labeler,
            measures,
            rel_threshold,
            hole_depth,
            pr_depth,
            maxrep_k,
            bm25_k1,
            bm25_b,
            max_grade,
            alpha,
            rbo_p,
            correction,
            top_from,
            pin_examined_nonrelevant,
            output_dir,
            threads
        )
    }

    /// Makes relative paths in a config file relative to the file itself.
    fn rebase(mut self, base: &Path) -> Settings {
        let fix = |p: &mut Option<PathBuf>| {
            if let Some(path) = p {
                if path.is_relative() {
                    *path = base.join(&*path);
                }
            }
        };
        fix(&mut self.corpus);
        fix(&mut self.queries);
        fix(&mut self.embeddings);
        fix(&mut self.qrels);
        fix(&mut self.baseline_run);
        fix(&mut self.run_dir);
        fix(&mut self.cache_dir);
        fix(&mut self.pool);
        fix(&mut self.output_dir);
        if let Some(spec) = &self.labeler {
            if let Some(path) = spec.strip_prefix("bridge:") {
                let path = Path::new(path);
                if path.is_relative() && !path.as_os_str().is_empty() {
                    self.labeler = Some(format!("bridge:{}", base.join(path).display()));
                }
            }
        }
        self
    }
}

/// Fully resolved configuration. Serialized into every report.
#[derive(Debug, Clone, Serialize)]
pub struct JobConfig {
    pub corpus: Option<PathBuf>,
    pub corpus_format: &'static str,
    pub queries: Option<PathBuf>,
    pub embeddings: Option<PathBuf>,
    pub qrels: Option<PathBuf>,
    pub baseline_run: Option<PathBuf>,
    pub run_dir: Option<PathBuf>,
    pub cache_dir: PathBuf,
    pub pool: PathBuf,
    pub labeler: String,
    pub measures: Vec<String>,
    pub rel_threshold: u32,
    pub hole_depth: usize,
    pub pr_depth: usize,
    pub maxrep_k: usize,
    pub bm25_k1: f64,
    pub bm25_b: f64,
    pub max_grade: Option<u32>,
    pub alpha: f64,
    pub rbo_p: f64,
    pub correction: Correction,
    pub top_from: TopFrom,
    pub pin_examined_nonrelevant: bool,
    pub output_dir: PathBuf,

    #[serde(skip)]
    pub threads: Option<usize>,
    #[serde(skip)]
    pub text_format: TextFormat,
    #[serde(skip)]
    pub labeler_spec: LabelerSpec,
    #[serde(skip)]
    pub parsed_measures: Vec<Measure>,
}

impl JobConfig {
    /// Reads the optional config file, layers the flags on top and fills defaults.
    pub fn load(config_file: Option<&Path>, flags: Settings) -> CliResult<Self> {
        let file = match config_file {
            Some(path) => {
                let text = fs::read_to_string(path).map_err(|e| {
                    CliError::Usage(format!("cannot read config {}: {e}", path.display()))
                })?;
                let settings: Settings = toml::from_str(&text).map_err(|e| {
                    CliError::Usage(format!("invalid config {}: {e}", path.display()))
                })?;
                let base = path.parent().unwrap_or(Path::new(""));
                settings.rebase(base)
            }
            None => Settings::default(),
        };
        let env_cache = env::var_os(CACHE_DIR_ENV)
            .filter(|v| !v.is_empty())
            .map(PathBuf::from);
        Self::resolve(flags, file, env_cache)
    }

    /// Cache directory precedence: flag, environment, config file, `<output_dir>/cache`.
    fn resolve(flags: Settings, file: Settings, env_cache: Option<PathBuf>) -> CliResult<Self> {
        let flag_cache = flags.cache_dir.clone();
        let s = Settings::layered(flags, file);
        let output_dir = s.output_dir.unwrap_or_else(|| PathBuf::from("out"));
        let cache_dir = flag_cache
            .or(env_cache)
            .or(s.cache_dir)
            .unwrap_or_else(|| output_dir.join("cache"));
        let pool = s.pool.unwrap_or_else(|| output_dir.join("pool.qrels"));

        let corpus_format = s.corpus_format.as_deref().unwrap_or("tsv");
        let text_format: TextFormat = corpus_format.parse().map_err(usage)?;
        let labeler = s.labeler.unwrap_or_else(|| "zero".into());
        let labeler_spec: LabelerSpec = labeler.parse().map_err(usage)?;

        let measure_strings = s
            .measures
            .unwrap_or_else(|| vec!["SDCG@10".into(), "WP@10".into(), "RBP(p=0.8)".into()]);
        if measure_strings.is_empty() {
            return Err(CliError::Usage("at least one measure is required".into()));
        }
        let parsed_measures = measure_strings
            .iter()
            .map(|m| m.parse::<Measure>().map_err(usage))
            .collect::<CliResult<Vec<_>>>()?;

        let correction: Correction = s
            .correction
            .as_deref()
            .unwrap_or("bonferroni")
            .parse()
            .map_err(usage)?;
        let top_from = match s.top_from.as_deref().unwrap_or("candidate") {
            "candidate" => TopFrom::Candidate,
            "full" => TopFrom::Full,
            other => {
                return Err(CliError::Usage(format!(
                    "unknown top_from {other:?} (expected candidate or full)"
                )))
            }
        };

        let config = Self {
            corpus: s.corpus,
            corpus_format: match text_format {
                TextFormat::Tsv => "tsv",
                TextFormat::JsonLines => "jsonl",
            },
            queries: s.queries,
            embeddings: s.embeddings,
            qrels: s.qrels,
            baseline_run: s.baseline_run,
            run_dir: s.run_dir,
            cache_dir,
            pool,
            labeler: labeler_spec.to_string(),
            measures: parsed_measures.iter().map(ToString::to_string).collect(),
            rel_threshold: s.rel_threshold.unwrap_or(2),
            hole_depth: s.hole_depth.unwrap_or(10),
            pr_depth: s.pr_depth.unwrap_or(100),
            maxrep_k: s.maxrep_k.unwrap_or(DEFAULT_MAXREP_K),
            bm25_k1: s.bm25_k1.unwrap_or(Bm25Params::default().k1),
            bm25_b: s.bm25_b.unwrap_or(Bm25Params::default().b),
            max_grade: s.max_grade,
            alpha: s.alpha.unwrap_or(0.05),
            rbo_p: s.rbo_p.unwrap_or(0.9),
            correction,
            top_from,
            pin_examined_nonrelevant: s.pin_examined_nonrelevant.unwrap_or(false),
            output_dir,
            threads: s.threads,
            text_format,
            labeler_spec,
            parsed_measures,
        };
        config.check_ranges()?;
        Ok(config)
    }

    fn check_ranges(&self) -> CliResult<()> {
        let bad = |msg: String| Err(CliError::Usage(msg));
        if self.rel_threshold < 1 {
            return bad("rel_threshold must be at least 1".into());
        }
        if self.hole_depth == 0 || self.pr_depth == 0 {
            return bad("hole_depth and pr_depth must be at least 1".into());
        }
        if self.maxrep_k == 0 {
            return bad("maxrep_k must be at least 1".into());
        }
        if !(self.bm25_k1 >= 0.0 && self.bm25_k1.is_finite()) || !(0.0..=1.0).contains(&self.bm25_b)
        {
            return bad(format!(
                "invalid BM25 parameters k1={} b={}",
                self.bm25_k1, self.bm25_b
            ));
        }
        if self.max_grade == Some(0) {
            return bad("max_grade must be positive".into());
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return bad(format!("alpha {} outside (0, 1)", self.alpha));
        }
        if !(self.rbo_p > 0.0 && self.rbo_p < 1.0) {
            return bad(format!("rbo_p {} outside (0, 1)", self.rbo_p));
        }
        if self.threads == Some(0) {
            return bad("threads must be at least 1".into());
        }
        Ok(())
    }

    pub fn bm25_params(&self) -> Bm25Params {
        Bm25Params {
            k1: self.bm25_k1,
            b: self.bm25_b,
        }
    }

    pub fn cache_file(&self) -> PathBuf {
        self.cache_dir.join(CACHE_FILE)
    }

    /// `pool.qrels` → `pool.examined.json`.
    pub fn pool_sidecar(&self) -> PathBuf {
        let stem = self
            .pool
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "pool".into());
        self.pool.with_file_name(format!("{stem}.examined.json"))
    }

    /// Returns the configured path for `key`, or a usage error naming the key.
    pub fn require<'a>(&self, key: &str, value: &'a Option<PathBuf>) -> CliResult<&'a Path> {
        let path = value
            .as_deref()
            .ok_or_else(|| CliError::Usage(format!("missing required setting `{key}`")))?;
        if !path.exists() {
            return Err(CliError::Usage(format!(
                "{key}: {} does not exist",
                path.display()
            )));
        }
        Ok(path)
    }
}

fn usage(e: holefill::Error) -> CliError {
    CliError::Usage(e.to_string())
}
