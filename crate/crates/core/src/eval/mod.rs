//! Retrieval metrics, annotator agreement, tuning objectives and
//! hyperparameter search.

mod alpha;
mod metrics;
mod objective;
mod search;

pub use alpha::{krippendorff_alpha_nominal, selection_matrix, Alpha};
pub use metrics::{erc, erc_mg, equal_retrieval_count, precision_recall_at_k, ErcReport, ErcTask, Padding, PrecisionRecall};
pub use objective::{objective_adapted, objective_synaptic, synaptic_task_term, FIRING_PENALTY};
pub use search::{search, Evaluation, ParamRange, SearchResult, SearchStrategy, TrialRecord, TrialStatus};

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum EvalError {
    #[error("k must be at least 1")]
    ZeroK,

    #[error("label set is empty")]
    EmptyLabels,

    #[error("agreement needs at least 2 annotators, got {0}")]
    TooFewAnnotators(usize),

    #[error("agreement needs at least 1 item")]
    NoItems,

    #[error("item {item} has {got} ratings, expected {expected}")]
    RaggedMatrix { item: usize, expected: usize, got: usize },

    #[error("search budget must be at least 1")]
    EmptyBudget,

    #[error("parameter {name}: invalid range [{low}, {high}]")]
    BadRange { name: String, low: f64, high: f64 },

    #[error("unknown search strategy {0:?}")]
    UnknownStrategy(String),
}
