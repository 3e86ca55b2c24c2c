//! End-to-end retrieval rounds over a memory store.

use serde::Serialize;

use crate::config::EngineConfig;
use crate::embed::EmbeddingProvider;
use crate::error::Result;
use crate::memory::{MemoryStore, Speaker};
use crate::propagation::{propagate, PropagationRound, ScanStats};

/// A node with the potential used to rank it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RankedNode {
    pub id: usize,
    pub potential: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RetrievalResult {
    /// Id the query was stored under.
    pub query: usize,
    /// Nodes that fired this round, by potential descending then id.
    pub fired: Vec<RankedNode>,
    /// Every memory that existed before the query, by potential descending then id.
    pub ranked: Vec<RankedNode>,
    pub trace: Option<PropagationRound>,
    pub stats: ScanStats,
}

impl RetrievalResult {
    pub fn fired_ids(&self) -> Vec<usize> {
        self.fired.iter().map(|n| n.id).collect()
    }

    pub fn ranked_ids(&self) -> Vec<usize> {
        self.ranked.iter().map(|n| n.id).collect()
    }
}

fn by_potential(a: &RankedNode, b: &RankedNode) -> std::cmp::Ordering {
    b.potential.total_cmp(&a.potential).then(a.id.cmp(&b.id))
}

/// Memory store plus configuration; one retrieval round at a time.
#[derive(Debug, Clone)]
pub struct Engine {
    store: MemoryStore,
    cfg: EngineConfig,
}

impl Engine {
    pub fn new(dim: usize, cfg: EngineConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self {
            store: MemoryStore::new(dim),
            cfg,
        })
    }

    pub fn store(&self) -> &MemoryStore {
        &self.store
    }

    pub fn store_mut(&mut self) -> &mut MemoryStore {
        &mut self.store
    }

    pub fn config(&self) -> &EngineConfig {
        &self.cfg
    }

    /// Stores an already-embedded utterance without retrieving.
    pub fn ingest_vector(&mut self, text: &str, speaker: Speaker, vector: Vec<f64>) -> Result<usize> {
        self.store.insert(text, speaker, vector, self.cfg.tau_init)
    }

    /// Embeds and stores an utterance without retrieving.
    pub fn ingest_turn(&mut self, embedder: &dyn EmbeddingProvider, text: &str, speaker: Speaker) -> Result<usize> {
        let v = embedder.embed_one(text)?;
        self.ingest_vector(text, speaker, v)
    }

    pub fn retrieve(&mut self, embedder: &dyn EmbeddingProvider, query: &str) -> Result<RetrievalResult> {
        let v = embedder.embed_one(query)?;
        self.retrieve_vector(query, v)
    }

    /// Runs one round for an embedded query. The query is stored as a
    /// permanent memory; LIF state and spike trains persist, fired flags
    /// do not.
    pub fn retrieve_vector(&mut self, query: &str, vector: Vec<f64>) -> Result<RetrievalResult> {
        self.store.clear_fired();
        let prior = self.store.len();
        let q = self.store.insert(query, Speaker::Query, vector, self.cfg.tau_init)?;
        let turn = self.store.node(q)?.turn;
        let round = propagate(&mut self.store, q, &self.cfg)?;

        let lif = self.cfg.lif_params();
        let mut ranked = Vec::with_capacity(prior);
        for node in &self.store.nodes()[..prior] {
            let potential = match round.peaks.get(&node.id) {
                Some(&p) => p,
                None => node.lif.probe_potential(turn, &lif)?,
            };
            ranked.push(RankedNode { id: node.id, potential });
        }
        ranked.sort_by(by_potential);
        let fired: Vec<RankedNode> = ranked
            .iter()
            .filter(|n| round.fire_set.contains(&n.id))
            .copied()
            .collect();

        self.store.clear_fired();
        Ok(RetrievalResult {
            query: q,
            fired,
            ranked,
            stats: round.stats,
            trace: Some(round),
        })
    }
}
