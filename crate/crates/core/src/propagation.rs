//! Layered stimulus propagation from a query node.
//!
//! Layer 0 holds the query with stimulus 1. At each layer the qualified
//! parents (stimulus above `stim_th`, not fired this round) look for
//! unvisited nodes whose cosine exceeds `cos_th`. Every such child is
//! claimed by exactly one parent, the one maximizing
//! `S_parent * P_score(parent, child)`, with ties going to the lower id, and
//! receives that product as its stimulus. The stimulus is appended to the
//! child's spike train and integrated by its LIF state, which may fire.
//! Children form the next layer; the round ends when a layer has no
//! qualified parents or no children.
//!
//! The query is the stimulus source and always acts as a parent; the
//! threshold gates relaying from layer 1 onwards.
//!
//! The centroid variant replaces the per-parent scans with a single scan
//! against the normalized mean of the parents' directions.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::config::{CentroidWeighting, EngineConfig, PropagationVariant};
use crate::error::{Error, Result};
use crate::memory::{dot, MemoryNode, MemoryStore, SpikeEvent};
use crate::par;
use crate::scoring::{p_score_with_cosine, ScoreBreakdown, ScoreParams};

/// Instrumentation counters for one round.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct ScanStats {
    /// Cosine evaluations spent filtering candidates.
    pub scan_comparisons: u64,
    /// Propagation scores evaluated while choosing parents.
    pub score_evaluations: u64,
    /// Layers where the centroid vanished and per-parent scans were used.
    pub centroid_fallbacks: u32,
}

impl std::ops::AddAssign for ScanStats {
    fn add_assign(&mut self, rhs: Self) {
        self.scan_comparisons += rhs.scan_comparisons;
        self.score_evaluations += rhs.score_evaluations;
        self.centroid_fallbacks += rhs.centroid_fallbacks;
    }
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct PropagationRound {
    pub layers: Vec<Vec<usize>>,
    pub stimuli: BTreeMap<usize, f64>,
    pub delivering_parent: BTreeMap<usize, usize>,
    pub fire_set: BTreeSet<usize>,
    /// Score used on the edge that delivered each stimulus.
    #[serde(skip)]
    pub edge_scores: BTreeMap<usize, ScoreBreakdown>,
    /// Potential seen by the firing test for every stimulated node.
    #[serde(skip)]
    pub peaks: BTreeMap<usize, f64>,
    #[serde(skip)]
    pub stats: ScanStats,
}

impl PropagationRound {
    fn start(query: usize) -> Self {
        Self {
            layers: vec![vec![query]],
            stimuli: BTreeMap::from([(query, 1.0)]),
            ..Self::default()
        }
    }

    pub fn query(&self) -> usize {
        self.layers[0][0]
    }

    /// Ids on the delivering-parent chain from the query to `node`.
    pub fn path_to(&self, node: usize) -> Vec<usize> {
        let mut path = vec![node];
        let mut cur = node;
        while let Some(&p) = self.delivering_parent.get(&cur) {
            path.push(p);
            cur = p;
        }
        path.reverse();
        path
    }

    /// Trace form: `{layers, stimuli, delivering_parent, fire_set}`.
    pub fn to_trace_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("round serializes")
    }
}

/// A candidate child with the parents allowed to stimulate it and their cosines.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub child: usize,
    pub parents: Vec<(usize, f64)>,
}

/// A resolved delivery: the winning parent and the stimulus it sends.
#[derive(Debug, Clone, PartialEq)]
pub struct Assignment {
    pub child: usize,
    pub parent: usize,
    pub stimulus: f64,
    pub score: ScoreBreakdown,
}

/// Parents of layer `layer` that may propagate further.
pub fn qualified_parents(round: &PropagationRound, layer: usize, stim_th: f64) -> Vec<usize> {
    let Some(nodes) = round.layers.get(layer) else {
        return Vec::new();
    };
    if layer == 0 {
        return nodes.clone();
    }
    nodes
        .iter()
        .copied()
        .filter(|p| round.stimuli.get(p).is_some_and(|&s| s > stim_th) && !round.fire_set.contains(p))
        .collect()
}

fn cosine_nodes(a: &MemoryNode, b: &MemoryNode) -> f64 {
    (dot(&a.vector, &b.vector) / (a.norm() * b.norm())).clamp(-1.0, 1.0)
}

/// Unvisited nodes whose cosine with `parent` exceeds `cos_th`.
pub fn candidate_children(
    store: &MemoryStore,
    parent: usize,
    visited: &[bool],
    cos_th: f64,
) -> Result<Vec<usize>> {
    let p = store.node(parent)?;
    Ok(store
        .nodes()
        .iter()
        .filter(|c| !visited[c.id] && cosine_nodes(p, c) > cos_th)
        .map(|c| c.id)
        .collect())
}

/// Picks the best parent for each candidate. Deterministic: candidates are
/// processed in the given order and ties keep the lowest parent id.
pub fn assign_parents(
    store: &MemoryStore,
    candidates: &[Candidate],
    stimuli: &BTreeMap<usize, f64>,
    params: &ScoreParams,
    parallel: bool,
) -> Result<Vec<Assignment>> {
    let results = par::map(candidates, parallel, |cand| -> Result<Option<Assignment>> {
        let child = store.node(cand.child)?;
        let mut best: Option<Assignment> = None;
        let mut parents = cand.parents.clone();
        parents.sort_by_key(|&(p, _)| p);
        for (p, cos) in parents {
            let parent = store.node(p)?;
            let score = p_score_with_cosine(parent, child, cos, params)?;
            let s_p = stimuli.get(&p).copied().ok_or(Error::UnknownNode(p))?;
            let stimulus = s_p * score.p_score;
            if best.as_ref().is_none_or(|b| stimulus > b.stimulus) {
                best = Some(Assignment {
                    child: cand.child,
                    parent: p,
                    stimulus,
                    score,
                });
            }
        }
        Ok(best)
    });
    results.into_iter().filter_map(Result::transpose).collect()
}

fn scan_per_parent(
    store: &MemoryStore,
    parents: &[usize],
    unvisited: &[usize],
    cos_th: f64,
    parallel: bool,
) -> Vec<Candidate> {
    let nodes = store.nodes();
    par::filter_map(unvisited, parallel, |&c| {
        let child = &nodes[c];
        let eligible: Vec<(usize, f64)> = parents
            .iter()
            .filter_map(|&p| {
                let cos = cosine_nodes(&nodes[p], child);
                (cos > cos_th).then_some((p, cos))
            })
            .collect();
        (!eligible.is_empty()).then_some(Candidate {
            child: c,
            parents: eligible,
        })
    })
}

fn centroid(
    store: &MemoryStore,
    parents: &[usize],
    stimuli: &BTreeMap<usize, f64>,
    weighting: CentroidWeighting,
) -> Option<Vec<f64>> {
    let mut sum = vec![0.0; store.dim()];
    for &p in parents {
        let node = &store.nodes()[p];
        let w = match weighting {
            CentroidWeighting::Uniform => 1.0,
            CentroidWeighting::Stimulus => stimuli.get(&p).copied().unwrap_or(0.0),
        } / node.norm();
        for (s, x) in sum.iter_mut().zip(&node.vector) {
            *s += w * x;
        }
    }
    let norm = dot(&sum, &sum).sqrt();
    let scale = parents.len() as f64;
    if norm.is_nan() || norm / scale <= 1e-12 {
        return None;
    }
    sum.iter_mut().for_each(|x| *x /= norm);
    Some(sum)
}

fn scan_centroid(
    store: &MemoryStore,
    direction: &[f64],
    parents: &[usize],
    unvisited: &[usize],
    cos_th: f64,
    parallel: bool,
) -> Vec<Candidate> {
    let nodes = store.nodes();
    par::filter_map(unvisited, parallel, |&c| {
        let child = &nodes[c];
        let cos = (dot(direction, &child.vector) / child.norm()).clamp(-1.0, 1.0);
        (cos > cos_th).then(|| Candidate {
            child: c,
            parents: parents.iter().map(|&p| (p, cosine_nodes(&nodes[p], child))).collect(),
        })
    })
}

/// Runs one propagation round from `query` using the configured variant.
///
/// Mutates the store: stimulated nodes get a spike appended and their LIF
/// state advanced; fired nodes have `fired` set.
pub fn propagate(store: &mut MemoryStore, query: usize, cfg: &EngineConfig) -> Result<PropagationRound> {
    run(store, query, cfg, cfg.variant)
}

/// Centroid-scan propagation regardless of the configured variant.
pub fn propagate_centroid(
    store: &mut MemoryStore,
    query: usize,
    cfg: &EngineConfig,
) -> Result<PropagationRound> {
    run(store, query, cfg, PropagationVariant::Centroid)
}

fn run(
    store: &mut MemoryStore,
    query: usize,
    cfg: &EngineConfig,
    variant: PropagationVariant,
) -> Result<PropagationRound> {
    let turn = store.node(query)?.turn;
    let score_params = cfg.score_params();
    let lif = cfg.lif_params();
    let mut visited = vec![false; store.len()];
    visited[query] = true;
    let mut round = PropagationRound::start(query);

    loop {
        let layer = round.layers.len() - 1;
        let parents = qualified_parents(&round, layer, cfg.stim_th);
        if parents.is_empty() {
            break;
        }
        let unvisited: Vec<usize> = (0..store.len()).filter(|&c| !visited[c]).collect();
        if unvisited.is_empty() {
            break;
        }

        let direction = match variant {
            PropagationVariant::Original => None,
            PropagationVariant::Centroid => {
                let c = centroid(store, &parents, &round.stimuli, cfg.centroid_weighting);
                if c.is_none() {
                    log::warn!("centroid of {} parents vanished at layer {layer}; scanning per parent", parents.len());
                    round.stats.centroid_fallbacks += 1;
                }
                c
            }
        };
        let candidates = match &direction {
            Some(dir) => {
                round.stats.scan_comparisons += unvisited.len() as u64;
                scan_centroid(store, dir, &parents, &unvisited, cfg.cos_th, cfg.parallel)
            }
            None => {
                round.stats.scan_comparisons += (parents.len() * unvisited.len()) as u64;
                scan_per_parent(store, &parents, &unvisited, cfg.cos_th, cfg.parallel)
            }
        };
        if candidates.is_empty() {
            break;
        }
        round.stats.score_evaluations +=
            candidates.iter().map(|c| c.parents.len() as u64).sum::<u64>();

        let assignments = assign_parents(store, &candidates, &round.stimuli, &score_params, cfg.parallel)?;
        if round.layers.len() >= cfg.max_layers {
            return Err(Error::PropagationDepth(cfg.max_layers));
        }

        let mut next = Vec::with_capacity(assignments.len());
        for a in assignments {
            visited[a.child] = true;
            next.push(a.child);
            round.stimuli.insert(a.child, a.stimulus);
            round.delivering_parent.insert(a.child, a.parent);
            round.edge_scores.insert(a.child, a.score);
            if a.stimulus > 0.0 {
                let node = store.node_mut(a.child)?;
                node.train.push(SpikeEvent {
                    turn,
                    strength: a.stimulus,
                })?;
                let outcome = node.lif.receive_stimulus(a.stimulus, turn, &lif)?;
                round.peaks.insert(a.child, outcome.peak);
                if outcome.fired {
                    node.fired = true;
                    round.fire_set.insert(a.child);
                }
            }
        }
        round.layers.push(next);
    }
    Ok(round)
}
