use std::collections::BTreeMap;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::par;

/// Inclusive bounds for one tunable parameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamRange {
    pub name: String,
    pub low: f64,
    pub high: f64,
}

impl ParamRange {
    pub fn new(name: impl Into<String>, low: f64, high: f64) -> Self {
        Self {
            name: name.into(),
            low,
            high,
        }
    }

    fn clamp(&self, x: f64) -> f64 {
        x.clamp(self.low, self.high)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SearchStrategy {
    /// Independent uniform samples from the box.
    #[default]
    Random,
    /// Axis-aligned steps from the box centre, halving the step when no
    /// axis improves.
    CoordinateDescent,
}

impl FromStr for SearchStrategy {
    type Err = EvalError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "random" => Ok(Self::Random),
            "coordinate" | "coordinate-descent" => Ok(Self::CoordinateDescent),
            other => Err(EvalError::UnknownStrategy(other.to_string())),
        }
    }
}

/// What a trial reports back: the value being maximized and the ERC score
/// used to break ties.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub objective: f64,
    pub erc: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrialStatus {
    Ok,
    Failed,
}

/// One line of the trial log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub params: BTreeMap<String, f64>,
    pub objective: Option<f64>,
    pub erc: Option<f64>,
    pub status: TrialStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl TrialRecord {
    fn new(trial: usize, params: BTreeMap<String, f64>, outcome: Result<Evaluation, String>) -> Self {
        match outcome {
            Ok(e) if e.objective.is_finite() => Self {
                trial,
                params,
                objective: Some(e.objective),
                erc: Some(e.erc),
                status: TrialStatus::Ok,
                error: None,
            },
            Ok(e) => Self {
                trial,
                params,
                objective: None,
                erc: None,
                status: TrialStatus::Failed,
                error: Some(format!("non-finite objective {}", e.objective)),
            },
            Err(msg) => Self {
                trial,
                params,
                objective: None,
                erc: None,
                status: TrialStatus::Failed,
                error: Some(msg),
            },
        }
    }

    /// Higher objective wins, then higher ERC, then the earlier trial.
    fn beats(&self, other: &Self) -> bool {
        match (self.objective, other.objective) {
            (Some(a), Some(b)) => {
                a > b || (a == b && self.erc.unwrap_or(f64::NEG_INFINITY) > other.erc.unwrap_or(f64::NEG_INFINITY))
            }
            (Some(_), None) => true,
            _ => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SearchResult {
    pub best: Option<TrialRecord>,
    pub trials: Vec<TrialRecord>,
}

impl SearchResult {
    /// The trial log as JSON lines.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for t in &self.trials {
            out.push_str(&serde_json::to_string(t).expect("trial serializes"));
            out.push('\n');
        }
        out
    }
}

fn point(space: &[ParamRange], values: &[f64]) -> BTreeMap<String, f64> {
    space.iter().zip(values).map(|(r, &v)| (r.name.clone(), v)).collect()
}

/// Maximizes `objective` over the box `space` using at most `budget`
/// evaluations. A trial whose objective errors or is not finite is logged
/// as failed and the search continues. Random search evaluates its
/// samples in parallel when `parallel` is set; the log order is the
/// sampling order either way.
pub fn search<F>(
    space: &[ParamRange],
    budget: usize,
    strategy: SearchStrategy,
    seed: u64,
    parallel: bool,
    objective: F,
) -> Result<SearchResult, EvalError>
where
    F: Fn(&BTreeMap<String, f64>) -> Result<Evaluation, String> + Sync + Send,
{
    if budget == 0 {
        return Err(EvalError::EmptyBudget);
    }
    for r in space {
        if !(r.low.is_finite() && r.high.is_finite() && r.low <= r.high) {
            return Err(EvalError::BadRange {
                name: r.name.clone(),
                low: r.low,
                high: r.high,
            });
        }
    }
    let trials = match strategy {
        SearchStrategy::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let points: Vec<BTreeMap<String, f64>> = (0..budget)
                .map(|_| {
                    let v: Vec<f64> = space
                        .iter()
                        .map(|r| if r.low == r.high { r.low } else { rng.random_range(r.low..=r.high) })
                        .collect();
                    point(space, &v)
                })
                .collect();
            let outcomes = par::map(&points, parallel, &objective);
            points
                .into_iter()
                .zip(outcomes)
                .enumerate()
                .map(|(i, (p, o))| TrialRecord::new(i, p, o))
                .collect()
        }
        SearchStrategy::CoordinateDescent => coordinate_descent(space, budget, &objective),
    };
    let mut best: Option<&TrialRecord> = None;
    for t in &trials {
        if t.status == TrialStatus::Ok && best.is_none_or(|b| t.beats(b)) {
            best = Some(t);
        }
    }
    Ok(SearchResult {
        best: best.cloned(),
        trials,
    })
}

fn coordinate_descent<F>(space: &[ParamRange], budget: usize, objective: &F) -> Vec<TrialRecord>
where
    F: Fn(&BTreeMap<String, f64>) -> Result<Evaluation, String>,
{
    let mut trials: Vec<TrialRecord> = Vec::new();
    let run = |values: &[f64], trials: &mut Vec<TrialRecord>| {
        let p = point(space, values);
        let rec = TrialRecord::new(trials.len(), p.clone(), objective(&p));
        trials.push(rec.clone());
        rec
    };
    let mut current: Vec<f64> = space.iter().map(|r| 0.5 * (r.low + r.high)).collect();
    let mut incumbent = run(&current, &mut trials);
    let mut steps: Vec<f64> = space.iter().map(|r| 0.25 * (r.high - r.low)).collect();
    while trials.len() < budget && !space.is_empty() {
        let mut improved = false;
        for axis in 0..space.len() {
            for dir in [1.0, -1.0] {
                if trials.len() >= budget {
                    break;
                }
                let mut cand = current.clone();
                cand[axis] = space[axis].clamp(current[axis] + dir * steps[axis]);
                if cand[axis] == current[axis] {
                    continue;
                }
                let rec = run(&cand, &mut trials);
                if rec.beats(&incumbent) {
                    incumbent = rec;
                    current = cand;
                    improved = true;
                    break;
                }
            }
        }
        if !improved {
            steps.iter_mut().for_each(|s| *s *= 0.5);
            if steps.iter().all(|&s| s < 1e-12) {
                break;
            }
        }
    }
    trials
}
