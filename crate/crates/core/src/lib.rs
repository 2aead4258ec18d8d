//! Fill holes in shallow relevance judgments with one-shot labelers and
//! measure how well the filled judgments reproduce full-judgment system
//! rankings and significance decisions.

pub mod error;
pub mod labelers;
pub mod measures;
pub mod meta_eval;
pub mod pooling;
pub mod trec_io;

pub use error::{Error, Result};
