//! Readers and writers for the interchange formats: TREC runs and qrels,
//! passage/query collections, embedding stores, labeler score caches and the
//! neural-scorer bridge protocol.

mod bridge;
mod corpus;
mod embeddings;
mod qrels;
mod run;
mod score_cache;

pub use bridge::{
    bridge_records, parse_task_id, read_bridge_scores, task_id, write_bridge_scores, write_tasks,
    BridgeScore, ScoringTask,
};
pub use corpus::{load_corpus, load_queries, Corpus, TextFormat};
pub use embeddings::{load_embeddings, EmbeddingStore};
pub use qrels::{parse_qrels, write_qrels, Qrels};
pub use run::{evaluation_order, parse_run, write_run, RankedDoc, Run};
pub use score_cache::{read_score_cache, write_score_cache, CacheKey, ScoreCache, ScoreRecord};
