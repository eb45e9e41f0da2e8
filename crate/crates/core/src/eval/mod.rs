//! Word similarity, entailment, directionality and lexical substitution
//! evaluations, plus the metrics behind them.

mod data;
mod metrics;
mod tasks;

pub use data::{
    open, read_entailment, read_lexsub, read_similarity, EntailmentPair, LexsubInstance,
    SimilarityPair,
};
pub use metrics::{average_ranks, best_f1_threshold, f1_at, gap, pearson, spearman};
pub use tasks::*;

use crate::corpus::WordId;
use crate::error::{Error, Result};
use crate::gauss::Gaussian;

/// Read-only view of a trained model used by the evaluations.
pub trait WordModel {
    fn vocab_size(&self) -> usize;

    fn lookup(&self, word: &str) -> Option<WordId>;

    fn word(&self, id: WordId) -> &str;

    /// Point embedding: the prior mean for Gaussian models.
    fn mean(&self, id: WordId) -> Vec<f64>;

    /// Context-free Gaussian of a word.
    fn prior(&self, id: WordId) -> Result<Gaussian> {
        let _ = id;
        Err(Error::Unsupported(
            "model has no Gaussian embeddings".into(),
        ))
    }

    /// Occurrence-specific Gaussian given in-vocabulary context ids.
    fn posterior(&self, center: WordId, contexts: &[WordId]) -> Result<Gaussian> {
        let _ = (center, contexts);
        Err(Error::Unsupported("no encoder".into()))
    }
}
