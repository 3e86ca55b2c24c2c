use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::EvalError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PrecisionRecall {
    pub precision: f64,
    pub recall: f64,
}

fn hits(retrieved: &[usize], labels: &BTreeSet<usize>) -> usize {
    retrieved.iter().collect::<BTreeSet<_>>().into_iter().filter(|i| labels.contains(i)).count()
}

/// Precision and recall of the first `k` entries of `ranked`. Precision
/// always divides by `k`, even if fewer than `k` items were ranked.
pub fn precision_recall_at_k(ranked: &[usize], labels: &[usize], k: usize) -> Result<PrecisionRecall, EvalError> {
    if k == 0 {
        return Err(EvalError::ZeroK);
    }
    let labels: BTreeSet<usize> = labels.iter().copied().collect();
    if labels.is_empty() {
        return Err(EvalError::EmptyLabels);
    }
    let h = hits(&ranked[..k.min(ranked.len())], &labels) as f64;
    Ok(PrecisionRecall {
        precision: h / k as f64,
        recall: h / labels.len() as f64,
    })
}

/// One trigger: its labels, the fired set of the evaluated method, and the
/// full ranking of each comparison model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErcTask {
    pub id: String,
    pub labels: Vec<usize>,
    pub fired: Vec<usize>,
    pub rankings: BTreeMap<String, Vec<usize>>,
}

/// How far comparison models may retrieve beyond the fired count.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Padding {
    /// Exactly `k = |fired|`.
    None,
    /// `max(k, |labels|)`.
    LabelCount,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TaskErc {
    pub id: String,
    pub k: usize,
    pub fired: f64,
    pub models: BTreeMap<String, f64>,
}

/// Dataset scores are means over scored tasks, times 100.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErcReport {
    pub fired: f64,
    pub models: BTreeMap<String, f64>,
    pub tasks: Vec<TaskErc>,
    pub skipped: Vec<String>,
}

pub fn equal_retrieval_count(tasks: &[ErcTask], padding: Padding) -> ErcReport {
    let mut per_task = Vec::new();
    let mut skipped = Vec::new();
    for t in tasks {
        let labels: BTreeSet<usize> = t.labels.iter().copied().collect();
        if labels.is_empty() {
            log::warn!("task {}: no labels, skipped", t.id);
            skipped.push(t.id.clone());
            continue;
        }
        let m = labels.len() as f64;
        let fired_set: BTreeSet<usize> = t.fired.iter().copied().collect();
        let k = fired_set.len();
        let budget = match padding {
            Padding::None => k,
            Padding::LabelCount => k.max(labels.len()),
        };
        let models = t
            .rankings
            .iter()
            .map(|(name, ranked)| {
                let top = &ranked[..budget.min(ranked.len())];
                (name.clone(), hits(top, &labels) as f64 / m)
            })
            .collect();
        per_task.push(TaskErc {
            id: t.id.clone(),
            k,
            fired: fired_set.intersection(&labels).count() as f64 / m,
            models,
        });
    }
    let n = per_task.len();
    let mean = |f: &dyn Fn(&TaskErc) -> f64| {
        if n == 0 {
            0.0
        } else {
            per_task.iter().map(f).sum::<f64>() * 100.0 / n as f64
        }
    };
    let names: BTreeSet<&String> = per_task.iter().flat_map(|t| t.models.keys()).collect();
    let models = names
        .into_iter()
        .map(|name| (name.clone(), mean(&|t: &TaskErc| t.models.get(name).copied().unwrap_or(0.0))))
        .collect();
    ErcReport {
        fired: mean(&|t: &TaskErc| t.fired),
        models,
        tasks: per_task,
        skipped,
    }
}

pub fn erc(tasks: &[ErcTask]) -> ErcReport {
    equal_retrieval_count(tasks, Padding::None)
}

pub fn erc_mg(tasks: &[ErcTask]) -> ErcReport {
    equal_retrieval_count(tasks, Padding::LabelCount)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn precision_recall_examples() {
        let pr = precision_recall_at_k(&[1, 5, 2], &[1, 2], 3).unwrap();
        assert_eq!((pr.precision, pr.recall), (2.0 / 3.0, 1.0));
        let pr = precision_recall_at_k(&[7, 8, 9], &[1, 2], 3).unwrap();
        assert_eq!((pr.precision, pr.recall), (0.0, 0.0));
        assert_eq!(precision_recall_at_k(&[1], &[], 1), Err(EvalError::EmptyLabels));
        assert_eq!(precision_recall_at_k(&[1], &[1], 0), Err(EvalError::ZeroK));
    }

    fn task(id: &str, labels: &[usize], fired: &[usize], rag: &[usize], mb: &[usize]) -> ErcTask {
        ErcTask {
            id: id.into(),
            labels: labels.to_vec(),
            fired: fired.to_vec(),
            rankings: [("RAG".to_string(), rag.to_vec()), ("MB".to_string(), mb.to_vec())].into(),
        }
    }

    #[test]
    fn three_task_hand_computed() {
        // t1: k=2, RAG top2 {3,4} hits 1 of 2, MB top2 {9,8} hits 0.
        // t2: k=0, everything 0; MG pads to 1: RAG {5} hit, MB {6} miss.
        // t3: k=3 exact fire; RAG top3 {1,2,0} hits 2/3, MB {2,1,0} hits 2/3.
        let tasks = vec![
            task("t1", &[3, 7], &[3, 7], &[3, 4, 7], &[9, 8, 3]),
            task("t2", &[5], &[], &[5, 6], &[6, 5]),
            task("t3", &[0, 1, 9], &[0, 1, 9], &[1, 2, 0], &[2, 1, 0]),
        ];
        let e = erc(&tasks);
        let g = erc_mg(&tasks);
        let close = |a: f64, b: f64| assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        close(e.fired, (1.0 + 0.0 + 1.0) / 3.0 * 100.0);
        close(e.models["RAG"], (0.5 + 0.0 + 2.0 / 3.0) / 3.0 * 100.0);
        close(e.models["MB"], (0.0 + 0.0 + 2.0 / 3.0) / 3.0 * 100.0);
        close(g.fired, e.fired);
        close(g.models["RAG"], (0.5 + 1.0 + 2.0 / 3.0) / 3.0 * 100.0);
        close(g.models["MB"], (0.0 + 0.0 + 2.0 / 3.0) / 3.0 * 100.0);
    }

    #[test]
    fn exact_fire_scores_one_and_empty_labels_skip() {
        let tasks = vec![task("a", &[1, 2], &[2, 1], &[], &[]), task("b", &[], &[1], &[1], &[1])];
        let e = erc(&tasks);
        assert_eq!(e.fired, 100.0);
        assert_eq!(e.skipped, vec!["b".to_string()]);
    }

    fn arb_task() -> impl Strategy<Value = ErcTask> {
        (
            prop::collection::btree_set(0usize..10, 1..4),
            prop::collection::btree_set(0usize..10, 0..6),
            Just((0..10).collect::<Vec<usize>>()).prop_shuffle(),
        )
            .prop_map(|(labels, fired, ranked)| ErcTask {
                id: "x".into(),
                labels: labels.into_iter().collect(),
                fired: fired.into_iter().collect(),
                rankings: [("R".to_string(), ranked)].into(),
            })
    }

    proptest! {
        #[test]
        fn padding_never_hurts(tasks in prop::collection::vec(arb_task(), 1..10)) {
            let e = erc(&tasks);
            let g = erc_mg(&tasks);
            prop_assert_eq!(e.fired, g.fired);
            for (a, b) in e.tasks.iter().zip(&g.tasks) {
                prop_assert!(b.models["R"] >= a.models["R"]);
                prop_assert_eq!(a.fired, b.fired);
            }
        }

        #[test]
        fn precision_recall_match_set_oracle(
            ranked in Just((0..20).collect::<Vec<usize>>()).prop_shuffle(),
            labels in prop::collection::btree_set(0usize..25, 1..8),
            k in 1usize..25,
        ) {
            let labels: Vec<usize> = labels.into_iter().collect();
            let pr = precision_recall_at_k(&ranked, &labels, k).unwrap();
            let mut h = 0;
            for (pos, id) in ranked.iter().enumerate() {
                if pos < k && labels.contains(id) {
                    h += 1;
                }
            }
            prop_assert_eq!(pr.precision, h as f64 / k as f64);
            prop_assert_eq!(pr.recall, h as f64 / labels.len() as f64);
        }
    }
}
