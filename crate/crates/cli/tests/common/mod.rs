//! Seeded synthetic test collections and helpers for driving the binary.

#![allow(dead_code)]

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const QUERIES: usize = 20;
pub const DOCS: usize = 200;
pub const RUN_DEPTH: usize = 30;
pub const BASELINE: &str = "bm25";
pub const DIM: usize = 16;

/// Per-system strength of the relevance signal; `bm25` sits mid-pack.
pub const SYSTEMS: [(&str, f64); 10] = [
    ("sys-a", 3.0),
    ("sys-b", 2.6),
    ("sys-c", 2.2),
    ("sys-d", 1.8),
    (BASELINE, 1.2),
    ("sys-e", 1.0),
    ("sys-f", 0.8),
    ("sys-g", 0.5),
    ("sys-h", 0.3),
    ("sys-i", 0.1),
];

pub fn fixture_dir(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

pub fn qid(q: usize) -> String {
    format!("q{:02}", q + 1)
}

pub fn docid(d: usize) -> String {
    format!("d{d:03}")
}

fn topic_of(d: usize) -> usize {
    d % QUERIES
}

/// A written synthetic track: 20 queries, 200 documents, 10 runs and graded
/// qrels on a 0 to 3 scale.
pub struct Track {
    pub root: PathBuf,
    pub grades: BTreeMap<(String, String), u32>,
}

impl Track {
    pub fn config(&self) -> PathBuf {
        self.root.join("job.toml")
    }

    pub fn run_dir(&self) -> PathBuf {
        self.root.join("runs")
    }
}

/// Writes corpus, queries, embeddings, qrels, runs and a config under `root`.
pub fn synthetic_track(root: &Path, seed: u64) -> Track {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    fs::create_dir_all(root.join("runs")).unwrap();

    let topic_words = |t: usize, j: usize| format!("t{t}w{j}");
    let mut corpus = String::new();
    for d in 0..DOCS {
        let t = topic_of(d);
        let mut words: Vec<String> = (0..12)
            .map(|_| topic_words(t, rng.gen_range(0..15)))
            .collect();
        words.extend((0..8).map(|_| format!("g{}", rng.gen_range(0..100))));
        words.shuffle(&mut rng);
        writeln!(corpus, "{}\t{}", docid(d), words.join(" ")).unwrap();
    }
    fs::write(root.join("corpus.tsv"), corpus).unwrap();

    let mut queries = String::new();
    for q in 0..QUERIES {
        let words: Vec<String> = (0..3).map(|j| topic_words(q, j)).collect();
        writeln!(queries, "{}\t{}", qid(q), words.join(" ")).unwrap();
    }
    fs::write(root.join("queries.tsv"), queries).unwrap();

    let centroids: Vec<Vec<f64>> = (0..QUERIES)
        .map(|_| {
            (0..DIM)
                .map(|_| f64::from(rng.gen_range(-8i32..=8)) / 8.0)
                .collect()
        })
        .collect();
    let mut embeddings = String::new();
    for d in 0..DOCS {
        let v: Vec<f64> = centroids[topic_of(d)]
            .iter()
            .map(|c| c + f64::from(rng.gen_range(-2i32..=2)) / 8.0)
            .collect();
        writeln!(
            embeddings,
            "{}",
            serde_json::json!({"docid": docid(d), "vector": v})
        )
        .unwrap();
    }
    fs::write(root.join("embeddings.jsonl"), embeddings).unwrap();

    // On-topic documents get grades 1 to 3 (at least two 3s); a sample of
    // off-topic documents is judged 0 or 1.
    let mut grades = BTreeMap::new();
    for q in 0..QUERIES {
        let on_topic: Vec<usize> = (0..DOCS).filter(|&d| topic_of(d) == q).collect();
        for (i, &d) in on_topic.iter().enumerate() {
            let g = if i < 2 { 3 } else { rng.gen_range(1..=3) };
            grades.insert((qid(q), docid(d)), g);
        }
        let mut off: Vec<usize> = (0..DOCS).filter(|&d| topic_of(d) != q).collect();
        off.shuffle(&mut rng);
        for &d in off.iter().take(25) {
            grades.insert((qid(q), docid(d)), u32::from(rng.gen_bool(0.15)));
        }
    }
    let mut qrels = String::new();
    for ((q, d), g) in &grades {
        writeln!(qrels, "{q} 0 {d} {g}").unwrap();
    }
    fs::write(root.join("qrels.txt"), qrels).unwrap();

    for (system, strength) in SYSTEMS {
        let mut lines = String::new();
        for q in 0..QUERIES {
            let mut scored: Vec<(f64, usize)> = (0..DOCS)
                .map(|d| {
                    let g = grades.get(&(qid(q), docid(d))).copied().unwrap_or(0);
                    let noise: f64 = rng.gen_range(-2.0..2.0);
                    let s = strength * f64::from(g) + noise;
                    ((s * 1e4).round() / 1e4, d)
                })
                .collect();
            scored.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(b.1.cmp(&a.1)));
            for (rank, (score, d)) in scored.iter().take(RUN_DEPTH).enumerate() {
                writeln!(
                    lines,
                    "{} Q0 {} {} {} {}",
                    qid(q),
                    docid(*d),
                    rank + 1,
                    score,
                    system
                )
                .unwrap();
            }
        }
        fs::write(root.join("runs").join(format!("{system}.run")), lines).unwrap();
    }

    fs::write(
        root.join("job.toml"),
        format!(
            "corpus = \"corpus.tsv\"\nqueries = \"queries.tsv\"\nembeddings = \"embeddings.jsonl\"\n\
             qrels = \"qrels.txt\"\nbaseline_run = \"runs/{BASELINE}.run\"\nrun_dir = \"runs\"\n"
        ),
    )
    .unwrap();

    Track {
        root: root.to_owned(),
        grades,
    }
}

pub fn holefill(args: &[&str]) -> Output {
    holefill_env(args, &[])
}

pub fn holefill_env(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_holefill"));
    cmd.args(args).env_remove("HOLEFILL_CACHE_DIR");
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().expect("failed to spawn holefill")
}

/// Runs the binary and panics with its stderr unless it exits 0.
pub fn holefill_ok(args: &[&str]) -> String {
    let out = holefill(args);
    assert!(
        out.status.success(),
        "holefill {args:?} exited {:?}\n{}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

pub fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// All files under `dir` keyed by relative path.
pub fn snapshot(dir: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    fn walk(base: &Path, dir: &Path, out: &mut BTreeMap<PathBuf, Vec<u8>>) {
        for entry in fs::read_dir(dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                walk(base, &path, out);
            } else {
                out.insert(
                    path.strip_prefix(base).unwrap().to_owned(),
                    fs::read(&path).unwrap(),
                );
            }
        }
    }
    let mut out = BTreeMap::new();
    if dir.exists() {
        walk(dir, dir, &mut out);
    }
    out
}

pub fn read_json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}
