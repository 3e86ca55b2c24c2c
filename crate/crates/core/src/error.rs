use thiserror::Error;

/// Errors raised by the retrieval engine and its building blocks.
#[derive(Debug, Error)]
pub enum Error {
    #[error("vector dimension {got} does not match store dimension {expected}")]
    Dimension { expected: usize, got: usize },

    #[error("similarity undefined for a zero-norm vector")]
    ZeroVector,

    #[error("spike train is empty")]
    EmptyTrain,

    #[error("time constant must be positive, got {0}")]
    NonPositiveTau(f64),

    #[error("stimulus strength must be positive, got {0}")]
    NonPositiveStimulus(f64),

    #[error("cannot evolve state backwards from turn {from} to turn {to}")]
    TimeTravel { from: u64, to: u64 },

    #[error("propagation exceeded {0} layers")]
    PropagationDepth(usize),

    #[error("unknown node id {0}")]
    UnknownNode(usize),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Eval(#[from] crate::eval::EvalError),

    #[error(transparent)]
    Embed(#[from] crate::embed::EmbedError),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
