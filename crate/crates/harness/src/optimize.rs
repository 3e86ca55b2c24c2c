//! Hyperparameter tuning against the per-model objectives.

use std::collections::BTreeMap;

use synapse::baselines::{memorybank_rank, myagent_rank, rag_rank, MemoryBankParams, MemoryBankState, MyAgentParams, MyAgentState, Scored};
use synapse::config::{MemoryBankAdaptedConfig, MyAgentAdaptedConfig, MyAgentConfig};
use synapse::eval::{
    erc, objective_adapted, objective_synaptic, search, ErcTask, Evaluation, ParamRange, SearchResult, SearchStrategy,
    FIRING_PENALTY,
};
use synapse::{EmbeddingProvider, EngineConfig, MemoryStore, ModelConfigs};

use crate::bench::{embed_task, TaskInputs};
use crate::dataset::Dataset;
use crate::models::{run_model, Model, Query};

/// The default search box for `model`. MemoryBank and RAG have no tunable
/// parameters; their search evaluates the fixed configuration.
pub fn param_space(model: Model) -> Vec<ParamRange> {
    let r = ParamRange::new;
    match model {
        Model::SynapticRag => vec![
            r("cos_th", 0.0, 0.6),
            r("V_th", 0.001, 0.5),
            r("stim_th", 0.001, 0.5),
            r("tau_init", 1.0, 100.0),
            r("tau_scale", 0.5, 10.0),
            r("t_scale", 0.1, 20.0),
            r("P_scale", 0.1, 2.0),
            r("V_rest", -10.0, 10.0),
            r("I_rest", -10.0, 10.0),
        ],
        Model::MemoryBankAdapted => vec![
            r("Top_k", 1.0, 12.0),
            r("Theta", 0.0, 1.0),
            r("t_scale", -20.0, 20.0),
            r("s_scale", 0.1, 20.0),
            r("s_init", 0.01, 2.0),
        ],
        Model::MyAgent => vec![r("cos_th", 0.0, 1.0)],
        Model::MyAgentAdapted => vec![
            r("cos_th", 0.0, 1.0),
            r("r_scale", 0.1, 20.0),
            r("t_scale", -5.0, 5.0),
            r("g_scale", -5.0, 5.0),
        ],
        Model::Rag | Model::MemoryBank => Vec::new(),
    }
}

/// `configs` with `model`'s section overwritten by `params`.
pub fn apply_params(model: Model, configs: &ModelConfigs, params: &BTreeMap<String, f64>) -> ModelConfigs {
    let mut c = configs.clone();
    let get = |k: &str, d: f64| params.get(k).copied().unwrap_or(d);
    match model {
        Model::SynapticRag => {
            let s = &mut c.synaptic;
            *s = EngineConfig {
                cos_th: get("cos_th", s.cos_th),
                v_th: get("V_th", s.v_th),
                stim_th: get("stim_th", s.stim_th),
                tau_init: get("tau_init", s.tau_init),
                tau_scale: get("tau_scale", s.tau_scale),
                t_scale: get("t_scale", s.t_scale),
                p_scale: get("P_scale", s.p_scale),
                v_rest: get("V_rest", s.v_rest),
                i_rest: get("I_rest", s.i_rest),
                ..s.clone()
            };
        }
        Model::MemoryBankAdapted => {
            let m = &c.memorybank_adapted;
            c.memorybank_adapted = MemoryBankAdaptedConfig {
                top_k: get("Top_k", m.top_k as f64).round().max(1.0) as usize,
                theta: get("Theta", m.theta),
                t_scale: get("t_scale", m.t_scale),
                s_scale: get("s_scale", m.s_scale),
                s_init: get("s_init", m.s_init),
            };
        }
        Model::MyAgent => {
            c.myagent = MyAgentConfig {
                cos_th: get("cos_th", c.myagent.cos_th),
            };
        }
        Model::MyAgentAdapted => {
            let m = &c.myagent_adapted;
            c.myagent_adapted = MyAgentAdaptedConfig {
                cos_th: get("cos_th", m.cos_th),
                r_scale: get("r_scale", m.r_scale),
                t_scale: get("t_scale", m.t_scale),
                g_scale: get("g_scale", m.g_scale),
            };
        }
        Model::Rag | Model::MemoryBank => {}
    }
    c
}

struct Prepared {
    inputs: Vec<TaskInputs>,
    /// (task index, pair index, query turn, labels)
    triggers: Vec<(usize, usize, u64, Vec<usize>)>,
}

fn prepare(ds: &Dataset, embedder: &dyn EmbeddingProvider) -> anyhow::Result<Prepared> {
    let mut inputs = Vec::new();
    let mut triggers = Vec::new();
    for (t, task) in ds.tasks.iter().enumerate() {
        inputs.push(embed_task(task, embedder).map_err(|e| anyhow::anyhow!("task {}: {e}", task.id))?);
        for (p, pair) in task.pairs.iter().enumerate() {
            triggers.push((t, p, (task.past.len() + pair.trigger_turn) as u64, pair.memory_turns.clone()));
        }
    }
    Ok(Prepared { inputs, triggers })
}

fn dense(n: usize, scored: &[Scored]) -> Vec<f64> {
    let mut v = vec![0.0; n];
    for s in scored {
        // Negative or undefined scores carry no mass.
        v[s.id] = if s.score.is_nan() { 0.0 } else { s.score.max(0.0) };
    }
    v
}

fn fresh_store(inp: &TaskInputs, tau_init: f64) -> synapse::Result<MemoryStore> {
    let dim = inp.triggers.first().map_or(0, Vec::len);
    let mut s = MemoryStore::new(dim);
    for (text, sp, v) in &inp.past {
        s.insert(text.as_str(), *sp, v.clone(), tau_init)?;
    }
    Ok(s)
}

/// Objective and ERC of `model` under `configs` over every trigger.
fn evaluate(model: Model, configs: &ModelConfigs, prep: &Prepared, reference: &[Vec<usize>]) -> Result<Evaluation, String> {
    let labels: Vec<Vec<usize>> = prep.triggers.iter().map(|t| t.3.clone()).collect();
    if model == Model::SynapticRag {
        configs.synaptic.validate().map_err(|e| e.to_string())?;
        let fired = fired_sets(configs, prep).map_err(|e| e.to_string())?;
        let objective = objective_synaptic(&fired, &labels, FIRING_PENALTY);
        let tasks: Vec<ErcTask> = fired
            .iter()
            .zip(&labels)
            .enumerate()
            .map(|(i, (f, y))| ErcTask {
                id: i.to_string(),
                labels: y.clone(),
                fired: f.clone(),
                rankings: BTreeMap::new(),
            })
            .collect();
        return Ok(Evaluation {
            objective,
            erc: erc(&tasks).fired,
        });
    }
    let mut scores = Vec::new();
    let mut tasks = Vec::new();
    for (i, (t, p, turn, y)) in prep.triggers.iter().enumerate() {
        let inp = &prep.inputs[*t];
        let store = fresh_store(inp, configs.synaptic.tau_init).map_err(|e| e.to_string())?;
        let q = &inp.triggers[*p];
        let scored = match model {
            Model::Rag => rag_rank(&store, q),
            Model::MemoryBank | Model::MemoryBankAdapted => {
                let params = if model == Model::MemoryBank {
                    MemoryBankParams::from(&configs.memorybank)
                } else {
                    MemoryBankParams::from(&configs.memorybank_adapted)
                };
                // Only the Top_k selection carries score mass, so Top_k matters.
                memorybank_rank(&MemoryBankState::new(&params), &store, q, *turn, &params).map(|mut v| {
                    v.truncate(params.top_k);
                    v
                })
            }
            Model::MyAgent | Model::MyAgentAdapted => {
                let params = if model == Model::MyAgent {
                    MyAgentParams::from(&configs.myagent)
                } else {
                    MyAgentParams::from(&configs.myagent_adapted)
                };
                myagent_rank(&MyAgentState::new(), &store, q, *turn, &params)
            }
            Model::SynapticRag => unreachable!(),
        }
        .map_err(|e| e.to_string())?;
        scores.push(dense(store.len(), &scored));
        tasks.push(ErcTask {
            id: i.to_string(),
            labels: y.clone(),
            fired: reference[i].clone(),
            rankings: [(model.name().to_string(), scored.iter().map(|s| s.id).collect())].into(),
        });
    }
    Ok(Evaluation {
        objective: objective_adapted(&scores, &labels),
        erc: erc(&tasks).models.get(model.name()).copied().unwrap_or(0.0),
    })
}

fn fired_sets(configs: &ModelConfigs, prep: &Prepared) -> synapse::Result<Vec<Vec<usize>>> {
    prep.triggers
        .iter()
        .map(|(t, p, turn, _)| {
            let inp = &prep.inputs[*t];
            let q = Query {
                past: &inp.past,
                text: "",
                vector: &inp.triggers[*p],
                turn: *turn,
                match_count: None,
            };
            run_model(Model::SynapticRag, configs, inp.triggers[*p].len(), &q).map(|o| o.selected)
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct OptimizeOptions {
    pub budget: usize,
    pub strategy: SearchStrategy,
    pub seed: u64,
    pub parallel: bool,
}

/// Tunes `model` on `ds`. Baselines are compared against the fired counts
/// of the evaluated method under `configs` for ERC tie-breaking.
pub fn optimize(
    ds: &Dataset,
    model: Model,
    configs: &ModelConfigs,
    embedder: &dyn EmbeddingProvider,
    opts: &OptimizeOptions,
) -> anyhow::Result<SearchResult> {
    let prep = prepare(ds, embedder)?;
    let reference = if model == Model::SynapticRag {
        Vec::new()
    } else {
        fired_sets(configs, &prep)?
    };
    let space = param_space(model);
    let result = search(&space, opts.budget, opts.strategy, opts.seed, opts.parallel, |params| {
        let c = apply_params(model, configs, params);
        evaluate(model, &c, &prep, &reference)
    })?;
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{gen_synthetic, SynthConfig};
    use synapse::HashEmbedder;

    #[test]
    fn params_map_onto_config_names() {
        let p: BTreeMap<String, f64> = [("V_th".to_string(), 0.2), ("Top_k".to_string(), 3.6)].into();
        let c = apply_params(Model::SynapticRag, &ModelConfigs::default(), &p);
        assert_eq!(c.synaptic.v_th, 0.2);
        let c = apply_params(Model::MemoryBankAdapted, &ModelConfigs::default(), &p);
        assert_eq!(c.memorybank_adapted.top_k, 4);
        for m in Model::ALL {
            for r in param_space(m) {
                assert!(r.low < r.high, "{m} {}", r.name);
            }
        }
    }

    #[test]
    fn every_model_optimizes_and_replays() {
        let ds = gen_synthetic(6, 3, &SynthConfig::default()).unwrap();
        let e = HashEmbedder::new(256);
        let opts = OptimizeOptions {
            budget: 6,
            strategy: SearchStrategy::Random,
            seed: 2,
            parallel: true,
        };
        for m in Model::ALL {
            let a = optimize(&ds, m, &ModelConfigs::default(), &e, &opts).unwrap();
            let b = optimize(&ds, m, &ModelConfigs::default(), &e, &OptimizeOptions { parallel: false, ..opts.clone() }).unwrap();
            assert_eq!(a.to_jsonl(), b.to_jsonl(), "{m}");
            assert!(a.best.is_some(), "{m}");
        }
    }

    #[test]
    fn synaptic_objective_is_bounded_by_exact_retrieval() {
        let ds = gen_synthetic(6, 4, &SynthConfig::default()).unwrap();
        let e = HashEmbedder::new(256);
        let opts = OptimizeOptions {
            budget: 10,
            strategy: SearchStrategy::CoordinateDescent,
            seed: 0,
            parallel: false,
        };
        let r = optimize(&ds, Model::SynapticRag, &ModelConfigs::default(), &e, &opts).unwrap();
        let n: usize = ds.tasks.iter().map(|t| t.pairs.len()).sum();
        let best = r.best.unwrap().objective.unwrap();
        assert!(best <= -FIRING_PENALTY * n as f64 + 1e-12);
    }
}
