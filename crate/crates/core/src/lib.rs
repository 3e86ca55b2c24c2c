//! Temporal-semantic memory retrieval for dialogue agents.
//!
//! Utterances are stored as [`MemoryNode`]s. A query stimulates its
//! semantic neighbours layer by layer; each edge's gain combines cosine
//! similarity with how well the two nodes' stimulus histories align in
//! time. Every stimulated node integrates its input as a leaky
//! integrate-and-fire neuron, and the nodes that fire are the retrieved
//! memories.
//!
//! ```
//! use synapse::{Engine, EngineConfig, HashEmbedder, Speaker};
//!
//! let embedder = HashEmbedder::new(64);
//! let mut engine = Engine::new(64, EngineConfig::default()).unwrap();
//! engine.ingest_turn(&embedder, "I had a banana smoothie at the cafe", Speaker::User).unwrap();
//! engine.ingest_turn(&embedder, "The weather was cold all week", Speaker::Assistant).unwrap();
//! let result = engine.retrieve(&embedder, "Should I get a smoothie at the cafe again?").unwrap();
//! assert_eq!(result.ranked.len(), 2);
//! ```

pub mod activation;
pub mod baselines;
pub mod config;
pub mod embed;
pub mod engine;
pub mod error;
pub mod eval;
pub mod memory;
pub mod par;
pub mod propagation;
pub mod scoring;
pub mod temporal;

pub use activation::{LifParams, LifState, Settle};
pub use config::{EngineConfig, ModelConfigs, Preset, PropagationVariant};
pub use embed::{EmbedError, EmbeddingProvider, HashEmbedder};
pub use engine::{Engine, RankedNode, RetrievalResult};
pub use error::{Error, Result};
pub use memory::{MemoryNode, MemoryStore, Speaker, SpikeEvent, SpikeTrain};
pub use propagation::{PropagationRound, ScanStats};
