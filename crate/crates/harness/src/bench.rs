//! End-to-end benchmark runs and report files.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::Serialize;
use synapse::eval::{erc, erc_mg, precision_recall_at_k, ErcTask};
use synapse::{par, EmbeddingProvider, ModelConfigs, Speaker};

use crate::clock;
use crate::dataset::{Dataset, Task};
use crate::models::{run_model, Model, ModelOutput, Query};

/// Cutoffs reported for precision and recall.
pub const K_RANGE: std::ops::RangeInclusive<usize> = 3..=12;

#[derive(Debug, Clone, PartialEq)]
pub struct RunOptions {
    pub parallel: bool,
    /// Measure per-retrieval CPU time. Off by default so reports stay
    /// byte-identical between runs.
    pub clock: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            parallel: true,
            clock: false,
        }
    }
}

/// One model's answer to one trigger.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Outcome {
    pub dataset: String,
    pub task: String,
    pub pair: usize,
    pub trigger_turn: usize,
    pub model: Model,
    pub labels: Vec<usize>,
    pub selected: Vec<usize>,
    pub ranked: Vec<usize>,
    pub scan_comparisons: u64,
    pub score_evaluations: u64,
    pub centroid_fallbacks: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cpu_seconds: Option<f64>,
    pub ok: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricRow {
    pub dataset: String,
    pub model: String,
    pub metric: String,
    pub k: Option<usize>,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimingRow {
    pub dataset: String,
    pub model: String,
    pub retrievals: usize,
    pub mean_scan_comparisons: f64,
    pub mean_score_evaluations: f64,
    pub centroid_fallbacks: u64,
    pub mean_cpu_seconds: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct BenchReport {
    pub outcomes: Vec<Outcome>,
    pub metrics: Vec<MetricRow>,
    pub timing: Vec<TimingRow>,
}

impl BenchReport {
    pub fn failures(&self) -> usize {
        self.outcomes.iter().filter(|o| !o.ok).count()
    }

    pub fn extend(&mut self, other: BenchReport) {
        self.outcomes.extend(other.outcomes);
        self.metrics.extend(other.metrics);
        self.timing.extend(other.timing);
    }
}

pub(crate) struct TaskInputs {
    pub past: Vec<(String, Speaker, Vec<f64>)>,
    pub triggers: Vec<Vec<f64>>,
}

pub(crate) fn embed_task(task: &Task, embedder: &dyn EmbeddingProvider) -> Result<TaskInputs, String> {
    let mut texts: Vec<String> = task.past.iter().map(|u| u.text.clone()).collect();
    texts.extend(task.pairs.iter().map(|p| task.present[p.trigger_turn].text.clone()));
    let mut vectors = embedder.embed(&texts).map_err(|e| e.to_string())?;
    let triggers = vectors.split_off(task.past.len());
    let past = task
        .past
        .iter()
        .zip(vectors)
        .map(|(u, v)| (u.text.clone(), Speaker::from(u.speaker), v))
        .collect();
    Ok(TaskInputs { past, triggers })
}

fn run_task(
    dataset: &str,
    task: &Task,
    models: &[Model],
    configs: &ModelConfigs,
    embedder: &dyn EmbeddingProvider,
    opts: &RunOptions,
) -> Vec<Outcome> {
    let inputs = embed_task(task, embedder);
    let mut out = Vec::new();
    for (p, pair) in task.pairs.iter().enumerate() {
        let base = |model: Model| Outcome {
            dataset: dataset.to_string(),
            task: task.id.clone(),
            pair: p,
            trigger_turn: pair.trigger_turn,
            model,
            labels: pair.memory_turns.clone(),
            selected: Vec::new(),
            ranked: Vec::new(),
            scan_comparisons: 0,
            score_evaluations: 0,
            centroid_fallbacks: 0,
            cpu_seconds: None,
            ok: false,
            error: None,
        };
        let inputs = match &inputs {
            Ok(i) => i,
            Err(e) => {
                log::error!("task {}: embedding failed: {e}", task.id);
                out.extend(models.iter().map(|&m| Outcome {
                    error: Some(format!("embedding failed: {e}")),
                    ..base(m)
                }));
                continue;
            }
        };
        // The evaluated method runs first so matched-count models can use its fired count.
        let mut order: Vec<Model> = models.to_vec();
        order.sort_by_key(|&m| m != Model::SynapticRag);
        let mut results: BTreeMap<Model, Outcome> = BTreeMap::new();
        let mut match_count = None;
        for model in order {
            let q = Query {
                past: &inputs.past,
                text: &task.present[pair.trigger_turn].text,
                vector: &inputs.triggers[p],
                turn: (task.past.len() + pair.trigger_turn) as u64,
                match_count,
            };
            let dim = inputs.triggers[p].len();
            let (res, secs) = clock::measure(opts.clock, || run_model(model, configs, dim, &q));
            let o = match res {
                Ok(ModelOutput { selected, ranked, stats }) => {
                    if model == Model::SynapticRag {
                        match_count = Some(selected.len());
                    }
                    Outcome {
                        selected,
                        ranked,
                        scan_comparisons: stats.scan_comparisons,
                        score_evaluations: stats.score_evaluations,
                        centroid_fallbacks: stats.centroid_fallbacks,
                        cpu_seconds: secs,
                        ok: true,
                        ..base(model)
                    }
                }
                Err(e) => {
                    log::error!("task {} pair {p} model {model}: {e}", task.id);
                    Outcome {
                        error: Some(e.to_string()),
                        ..base(model)
                    }
                }
            };
            results.insert(model, o);
        }
        out.extend(models.iter().map(|m| results.remove(m).expect("every model ran")));
    }
    out
}

fn mean(xs: impl Iterator<Item = f64>) -> f64 {
    let (mut s, mut n) = (0.0, 0usize);
    for x in xs {
        s += x;
        n += 1;
    }
    if n == 0 {
        0.0
    } else {
        s / n as f64
    }
}

fn metric_rows(dataset: &str, models: &[Model], outcomes: &[Outcome]) -> Vec<MetricRow> {
    let mut rows = Vec::new();
    let row = |model: Model, metric: &str, k: Option<usize>, value: f64| MetricRow {
        dataset: dataset.to_string(),
        model: model.name().to_string(),
        metric: metric.to_string(),
        k,
        value,
    };
    for &m in models {
        let mine: Vec<&Outcome> = outcomes.iter().filter(|o| o.model == m && o.ok).collect();
        for k in K_RANGE {
            let pr: Vec<_> = mine
                .iter()
                .filter_map(|o| precision_recall_at_k(&o.ranked, &o.labels, k).ok())
                .collect();
            rows.push(row(m, "precision", Some(k), mean(pr.iter().map(|x| x.precision))));
            rows.push(row(m, "recall", Some(k), mean(pr.iter().map(|x| x.recall))));
        }
    }
    if !models.contains(&Model::SynapticRag) {
        log::warn!("{dataset}: SynapticRAG not selected, ERC rows omitted");
        return rows;
    }
    // Equal-retrieval-count scores need the evaluated method's fired set per trigger.
    let mut tasks: BTreeMap<(String, usize), ErcTask> = BTreeMap::new();
    for o in outcomes.iter().filter(|o| o.ok) {
        let key = (o.task.clone(), o.pair);
        if o.model == Model::SynapticRag {
            let t = tasks.entry(key).or_insert_with(|| ErcTask {
                id: format!("{}#{}", o.task, o.pair),
                labels: o.labels.clone(),
                fired: Vec::new(),
                rankings: BTreeMap::new(),
            });
            t.fired = o.selected.clone();
        }
    }
    for o in outcomes.iter().filter(|o| o.ok && o.model != Model::SynapticRag) {
        if let Some(t) = tasks.get_mut(&(o.task.clone(), o.pair)) {
            t.rankings.insert(o.model.name().to_string(), o.ranked.clone());
        }
    }
    let tasks: Vec<ErcTask> = tasks.into_values().collect();
    for (metric, report) in [("erc", erc(&tasks)), ("erc_mg", erc_mg(&tasks))] {
        for &m in models {
            let v = if m == Model::SynapticRag {
                report.fired
            } else {
                report.models.get(m.name()).copied().unwrap_or(0.0)
            };
            rows.push(row(m, metric, None, v));
        }
    }
    rows
}

fn timing_rows(dataset: &str, models: &[Model], outcomes: &[Outcome], clock: bool) -> Vec<TimingRow> {
    models
        .iter()
        .map(|&m| {
            let mine: Vec<&Outcome> = outcomes.iter().filter(|o| o.model == m && o.ok).collect();
            TimingRow {
                dataset: dataset.to_string(),
                model: m.name().to_string(),
                retrievals: mine.len(),
                mean_scan_comparisons: mean(mine.iter().map(|o| o.scan_comparisons as f64)),
                mean_score_evaluations: mean(mine.iter().map(|o| o.score_evaluations as f64)),
                centroid_fallbacks: mine.iter().map(|o| u64::from(o.centroid_fallbacks)).sum(),
                mean_cpu_seconds: clock.then(|| mean(mine.iter().filter_map(|o| o.cpu_seconds))),
            }
        })
        .collect()
}

/// Evaluates every model on every trigger of `dataset`. Each (trigger,
/// model) pair gets a freshly built store. Failures are recorded in the
/// outcomes and do not stop the run.
pub fn run_benchmark(
    name: &str,
    dataset: &Dataset,
    models: &[Model],
    configs: &ModelConfigs,
    embedder: &dyn EmbeddingProvider,
    opts: &RunOptions,
) -> BenchReport {
    let per_task = par::map(&dataset.tasks, opts.parallel, |task| {
        run_task(name, task, models, configs, embedder, opts)
    });
    let outcomes: Vec<Outcome> = per_task.into_iter().flatten().collect();
    BenchReport {
        metrics: metric_rows(name, models, &outcomes),
        timing: timing_rows(name, models, &outcomes, opts.clock),
        outcomes,
    }
}

fn fmt_opt<T: ToString>(x: Option<T>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

/// Writes `metrics.csv`, `outcomes.jsonl`, `timing.csv` and `config.json`.
pub fn write_reports(report: &BenchReport, snapshot: &serde_json::Value, out_dir: &Path) -> anyhow::Result<()> {
    fs::create_dir_all(out_dir)?;

    let mut w = csv::Writer::from_path(out_dir.join("metrics.csv"))?;
    w.write_record(["dataset", "model", "metric", "k", "value"])?;
    for r in &report.metrics {
        w.write_record([&r.dataset, &r.model, &r.metric, &fmt_opt(r.k), &r.value.to_string()])?;
    }
    w.flush()?;

    let mut lines = String::new();
    for o in &report.outcomes {
        lines.push_str(&serde_json::to_string(o)?);
        lines.push('\n');
    }
    fs::write(out_dir.join("outcomes.jsonl"), lines)?;

    let mut w = csv::Writer::from_path(out_dir.join("timing.csv"))?;
    w.write_record([
        "dataset",
        "model",
        "retrievals",
        "mean_scan_comparisons",
        "mean_score_evaluations",
        "centroid_fallbacks",
        "mean_cpu_seconds",
    ])?;
    for t in &report.timing {
        w.write_record([
            t.dataset.clone(),
            t.model.clone(),
            t.retrievals.to_string(),
            t.mean_scan_comparisons.to_string(),
            t.mean_score_evaluations.to_string(),
            t.centroid_fallbacks.to_string(),
            fmt_opt(t.mean_cpu_seconds),
        ])?;
    }
    w.flush()?;

    let mut snap = serde_json::to_string_pretty(snapshot)?;
    snap.push('\n');
    fs::write(out_dir.join("config.json"), snap)?;
    Ok(())
}
