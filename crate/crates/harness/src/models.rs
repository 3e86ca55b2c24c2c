//! The compared retrieval models and a uniform way to run one query.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;
use synapse::baselines::{
    memorybank_rank, memorybank_retrieve, myagent_rank, myagent_retrieve, rag_rank, MemoryBankParams,
    MemoryBankState, MyAgentParams, MyAgentState, Scored,
};
use synapse::{Engine, MemoryStore, ModelConfigs, ScanStats, Speaker};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Model {
    #[serde(rename = "SynapticRAG")]
    SynapticRag,
    #[serde(rename = "RAG")]
    Rag,
    #[serde(rename = "MemoryBank")]
    MemoryBank,
    #[serde(rename = "MemoryBank (Adt)")]
    MemoryBankAdapted,
    #[serde(rename = "MyAgent")]
    MyAgent,
    #[serde(rename = "MyAgent (Adt)")]
    MyAgentAdapted,
}

impl Model {
    pub const ALL: [Model; 6] = [
        Model::SynapticRag,
        Model::Rag,
        Model::MemoryBank,
        Model::MemoryBankAdapted,
        Model::MyAgent,
        Model::MyAgentAdapted,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Model::SynapticRag => "SynapticRAG",
            Model::Rag => "RAG",
            Model::MemoryBank => "MemoryBank",
            Model::MemoryBankAdapted => "MemoryBank (Adt)",
            Model::MyAgent => "MyAgent",
            Model::MyAgentAdapted => "MyAgent (Adt)",
        }
    }

    /// Short form accepted on the command line.
    pub fn slug(self) -> &'static str {
        match self {
            Model::SynapticRag => "synaptic",
            Model::Rag => "rag",
            Model::MemoryBank => "memorybank",
            Model::MemoryBankAdapted => "memorybank-adt",
            Model::MyAgent => "myagent",
            Model::MyAgentAdapted => "myagent-adt",
        }
    }
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Model {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key = s.trim().to_ascii_lowercase();
        Model::ALL
            .into_iter()
            .find(|m| m.slug() == key || m.name().to_ascii_lowercase() == key || (key == "synapticrag" && *m == Model::SynapticRag))
            .ok_or_else(|| {
                let known: Vec<&str> = Model::ALL.iter().map(|m| m.slug()).collect();
                format!("unknown model {s:?} (known: {})", known.join(", "))
            })
    }
}

/// Parses a comma-separated model list; `all` selects every model.
pub fn parse_models(list: &str) -> Result<Vec<Model>, String> {
    if list.trim().eq_ignore_ascii_case("all") {
        return Ok(Model::ALL.to_vec());
    }
    let mut out: Vec<Model> = Vec::new();
    for part in list.split(',').filter(|p| !p.trim().is_empty()) {
        let m: Model = part.parse()?;
        if !out.contains(&m) {
            out.push(m);
        }
    }
    if out.is_empty() {
        return Err("no models selected".into());
    }
    Ok(out)
}

/// Embedded past dialogue plus one embedded trigger.
pub struct Query<'a> {
    pub past: &'a [(String, Speaker, Vec<f64>)],
    pub text: &'a str,
    pub vector: &'a [f64],
    /// Turn the query is issued at; past turns are `0..past.len()`.
    pub turn: u64,
    /// Fired count of the evaluated method, for models that match it.
    pub match_count: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ModelOutput {
    /// The model's own selection.
    pub selected: Vec<usize>,
    /// Full ranking used for fixed-k metrics.
    pub ranked: Vec<usize>,
    pub stats: ScanStats,
}

fn fresh_store(dim: usize, past: &[(String, Speaker, Vec<f64>)], tau_init: f64) -> synapse::Result<MemoryStore> {
    let mut store = MemoryStore::new(dim);
    for (text, speaker, v) in past {
        store.insert(text.as_str(), *speaker, v.clone(), tau_init)?;
    }
    Ok(store)
}

fn ids(s: &[Scored]) -> Vec<usize> {
    s.iter().map(|x| x.id).collect()
}

fn linear_stats(n: usize) -> ScanStats {
    ScanStats {
        scan_comparisons: n as u64,
        ..ScanStats::default()
    }
}

/// Runs `model` on a store freshly built from `q.past`.
pub fn run_model(model: Model, configs: &ModelConfigs, dim: usize, q: &Query) -> synapse::Result<ModelOutput> {
    let tau_init = configs.synaptic.tau_init;
    match model {
        Model::SynapticRag => {
            let mut engine = Engine::new(dim, configs.synaptic.clone())?;
            for (text, speaker, v) in q.past {
                engine.ingest_vector(text, *speaker, v.clone())?;
            }
            engine.store_mut().advance_to(q.turn);
            let r = engine.retrieve_vector(q.text, q.vector.to_vec())?;
            Ok(ModelOutput {
                selected: r.fired_ids(),
                ranked: r.ranked_ids(),
                stats: r.stats,
            })
        }
        Model::Rag => {
            let store = fresh_store(dim, q.past, tau_init)?;
            let ranked = ids(&rag_rank(&store, q.vector)?);
            let k = q.match_count.unwrap_or(ranked.len());
            Ok(ModelOutput {
                selected: ranked.iter().take(k).copied().collect(),
                ranked,
                stats: linear_stats(store.len()),
            })
        }
        Model::MemoryBank | Model::MemoryBankAdapted => {
            let params = if model == Model::MemoryBank {
                MemoryBankParams::from(&configs.memorybank)
            } else {
                MemoryBankParams::from(&configs.memorybank_adapted)
            };
            let store = fresh_store(dim, q.past, tau_init)?;
            let mut state = MemoryBankState::new(&params);
            let ranked = ids(&memorybank_rank(&state, &store, q.vector, q.turn, &params)?);
            let selected = memorybank_retrieve(&mut state, &store, q.vector, q.turn, &params)?;
            Ok(ModelOutput {
                selected,
                ranked,
                stats: linear_stats(store.len()),
            })
        }
        Model::MyAgent | Model::MyAgentAdapted => {
            let (params, k) = if model == Model::MyAgent {
                (MyAgentParams::from(&configs.myagent), None)
            } else {
                (MyAgentParams::from(&configs.myagent_adapted), q.match_count)
            };
            let store = fresh_store(dim, q.past, tau_init)?;
            let mut state = MyAgentState::new();
            let ranked = ids(&myagent_rank(&state, &store, q.vector, q.turn, &params)?);
            let selected = myagent_retrieve(&mut state, &store, q.vector, q.turn, &params, k)?;
            Ok(ModelOutput {
                selected,
                ranked,
                stats: linear_stats(store.len()),
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_parse_both_ways() {
        for m in Model::ALL {
            assert_eq!(m.name().parse::<Model>().unwrap(), m);
            assert_eq!(m.slug().parse::<Model>().unwrap(), m);
        }
        assert!("bm25".parse::<Model>().is_err());
        assert_eq!(parse_models("rag, synaptic,rag").unwrap(), vec![Model::Rag, Model::SynapticRag]);
        assert_eq!(parse_models("all").unwrap().len(), 6);
        assert!(parse_models(" , ").is_err());
    }
}
