//! Propagation traces for inspecting a single retrieval.

use serde_json::{json, Value};
use synapse::{EmbeddingProvider, Engine, EngineConfig, Speaker};

use crate::dataset::Task;

/// Runs one trigger of `task` and returns the propagation round with node
/// texts, edge scores and peak potentials.
pub fn trace_task(task: &Task, pair: usize, cfg: &EngineConfig, embedder: &dyn EmbeddingProvider) -> anyhow::Result<Value> {
    let p = task
        .pairs
        .get(pair)
        .ok_or_else(|| anyhow::anyhow!("task {} has no pair {pair}", task.id))?;
    let mut engine = Engine::new(embedder.dim(), cfg.clone())?;
    for u in &task.past {
        engine.ingest_turn(embedder, &u.text, Speaker::from(u.speaker))?;
    }
    engine.store_mut().advance_to((task.past.len() + p.trigger_turn) as u64);
    let trigger = &task.present[p.trigger_turn].text;
    let result = engine.retrieve(embedder, trigger)?;
    let round = result.trace.as_ref().expect("engine always returns a trace");

    let potentials: std::collections::BTreeMap<usize, f64> =
        result.ranked.iter().map(|n| (n.id, n.potential)).collect();
    let nodes: Vec<Value> = engine
        .store()
        .nodes()
        .iter()
        .map(|n| {
            json!({
                "id": n.id,
                "turn": n.turn,
                "speaker": n.speaker,
                "text": n.text,
                "potential": potentials.get(&n.id),
                "stimulus": round.stimuli.get(&n.id),
                "fired": round.fire_set.contains(&n.id),
                "label": p.memory_turns.contains(&n.id),
            })
        })
        .collect();
    let edges: Vec<Value> = round
        .delivering_parent
        .iter()
        .map(|(child, parent)| {
            let s = &round.edge_scores[child];
            json!({
                "parent": parent,
                "child": child,
                "t_score": s.t_score,
                "c_score": s.c_score,
                "p_score": s.p_score,
            })
        })
        .collect();
    Ok(json!({
        "task": task.id,
        "pair": pair,
        "trigger": trigger,
        "query": result.query,
        "labels": p.memory_turns,
        "round": round.to_trace_json(),
        "edges": edges,
        "nodes": nodes,
        "stats": result.stats,
    }))
}
