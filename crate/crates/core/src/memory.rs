//! Memory nodes, spike trains and the node store.
//!
//! Every dialogue utterance becomes a [`MemoryNode`] holding its embedding,
//! the history of stimuli it has received (its [`SpikeTrain`]) and its
//! leaky integrate-and-fire state. Edges are never materialized: the weight
//! between two nodes is their cosine similarity, computed when needed.

use serde::{Deserialize, Serialize};

use crate::activation::LifState;
use crate::error::{Error, Result};

/// One stimulus reception: the dialogue turn and its strength.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpikeEvent {
    pub turn: u64,
    pub strength: f64,
}

/// Turn-ordered stimulus history of a node.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SpikeTrain {
    events: Vec<SpikeEvent>,
}

impl SpikeTrain {
    /// A train holding the creation spike `(turn, 1.0)`.
    pub fn origin(turn: u64) -> Self {
        Self {
            events: vec![SpikeEvent { turn, strength: 1.0 }],
        }
    }

    /// Builds a train from raw events, sorting them by turn.
    pub fn from_events(mut events: Vec<SpikeEvent>) -> Self {
        events.sort_by_key(|e| e.turn);
        Self { events }
    }

    pub fn events(&self) -> &[SpikeEvent] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn last_turn(&self) -> Option<u64> {
        self.events.last().map(|e| e.turn)
    }

    /// Appends a stimulus. Turns must not go backwards.
    pub fn push(&mut self, event: SpikeEvent) -> Result<()> {
        if let Some(last) = self.last_turn() {
            if event.turn < last {
                return Err(Error::TimeTravel {
                    from: last,
                    to: event.turn,
                });
            }
        }
        self.events.push(event);
        Ok(())
    }

    /// Iterator over the event turns.
    pub fn turns(&self) -> impl ExactSizeIterator<Item = u64> + '_ {
        self.events.iter().map(|e| e.turn)
    }

    /// The trailing `window` events, or the whole train when `window` is `None`.
    pub fn tail(&self, window: Option<usize>) -> &[SpikeEvent] {
        match window {
            Some(w) if w > 0 && w < self.events.len() => &self.events[self.events.len() - w..],
            _ => &self.events,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Speaker {
    User,
    Assistant,
    Query,
}

#[derive(Debug, Clone, Serialize)]
pub struct MemoryNode {
    pub id: usize,
    pub turn: u64,
    pub speaker: Speaker,
    pub text: String,
    pub vector: Vec<f64>,
    #[serde(skip)]
    norm: f64,
    pub train: SpikeTrain,
    pub lif: LifState,
    /// Whether the node fired during the current retrieval round.
    pub fired: bool,
}

impl MemoryNode {
    pub fn norm(&self) -> f64 {
        self.norm
    }

    pub fn tau(&self) -> f64 {
        self.lif.tau
    }
}

/// Append-only collection of memory nodes sharing one embedding dimension.
#[derive(Debug, Clone)]
pub struct MemoryStore {
    nodes: Vec<MemoryNode>,
    dim: usize,
    next_turn: u64,
}

impl MemoryStore {
    pub fn new(dim: usize) -> Self {
        Self {
            nodes: Vec::new(),
            dim,
            next_turn: 0,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Turn the next stored node will receive.
    pub fn next_turn(&self) -> u64 {
        self.next_turn
    }

    /// Skips the turn counter forward, leaving a gap in dialogue time.
    pub fn advance_to(&mut self, turn: u64) {
        self.next_turn = self.next_turn.max(turn);
    }

    pub fn nodes(&self) -> &[MemoryNode] {
        &self.nodes
    }

    pub fn node(&self, id: usize) -> Result<&MemoryNode> {
        self.nodes.get(id).ok_or(Error::UnknownNode(id))
    }

    pub fn node_mut(&mut self, id: usize) -> Result<&mut MemoryNode> {
        self.nodes.get_mut(id).ok_or(Error::UnknownNode(id))
    }

    /// Stores an utterance at the current turn and advances the turn counter.
    ///
    /// The node starts with a single unit spike at its creation turn, time
    /// constant `tau_init` and a resting LIF state of `V = I = 0`.
    pub fn insert(
        &mut self,
        text: impl Into<String>,
        speaker: Speaker,
        vector: Vec<f64>,
        tau_init: f64,
    ) -> Result<usize> {
        if vector.len() != self.dim {
            return Err(Error::Dimension {
                expected: self.dim,
                got: vector.len(),
            });
        }
        let norm = l2_norm(&vector);
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::ZeroVector);
        }
        if tau_init <= 0.0 || !tau_init.is_finite() {
            return Err(Error::NonPositiveTau(tau_init));
        }
        let id = self.nodes.len();
        let turn = self.next_turn;
        self.nodes.push(MemoryNode {
            id,
            turn,
            speaker,
            text: text.into(),
            vector,
            norm,
            train: SpikeTrain::origin(turn),
            lif: LifState::new(tau_init, turn),
            fired: false,
        });
        self.next_turn += 1;
        Ok(id)
    }

    /// Cosine similarity between two stored nodes.
    pub fn similarity(&self, a: usize, b: usize) -> Result<f64> {
        let (na, nb) = (self.node(a)?, self.node(b)?);
        Ok(dot(&na.vector, &nb.vector) / (na.norm * nb.norm))
    }

    pub fn clear_fired(&mut self) {
        for n in &mut self.nodes {
            n.fired = false;
        }
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn l2_norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Cosine similarity `a·b / (|a||b|)`.
pub fn cosine(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::Dimension {
            expected: a.len(),
            got: b.len(),
        });
    }
    let (na, nb) = (l2_norm(a), l2_norm(b));
    if na == 0.0 || nb == 0.0 {
        return Err(Error::ZeroVector);
    }
    Ok((dot(a, b) / (na * nb)).clamp(-1.0, 1.0))
}
