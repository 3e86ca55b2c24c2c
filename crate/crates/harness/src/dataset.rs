//! Canonical dataset schema, loading and validation.

use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use synapse::Speaker;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    User,
    Assistant,
}

impl From<Role> for Speaker {
    fn from(r: Role) -> Self {
        match r {
            Role::User => Speaker::User,
            Role::Assistant => Speaker::Assistant,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Utterance {
    pub turn: usize,
    pub speaker: Role,
    pub text: String,
}

/// A trigger in the present segment and the past turns it should recall.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Pair {
    pub trigger_turn: usize,
    pub memory_turns: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Task {
    pub id: String,
    pub past: Vec<Utterance>,
    pub present: Vec<Utterance>,
    pub pairs: Vec<Pair>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Dataset {
    pub tasks: Vec<Task>,
}

/// One schema violation, located by task id and JSON path.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub task: String,
    pub path: String,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "task {:?}: {}: {}", self.task, self.path, self.message)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum DatasetError {
    #[error("cannot read {path}")]
    Io { path: String, source: std::io::Error },

    #[error("malformed dataset JSON")]
    Json(#[from] serde_json::Error),

    #[error("{} schema violation(s):\n{}", .0.len(), .0.iter().map(|v| format!("  {v}")).collect::<Vec<_>>().join("\n"))]
    Invalid(Vec<Violation>),
}

fn check_segment(task: &Task, name: &str, segment: &[Utterance], out: &mut Vec<Violation>) {
    let mut push = |path: String, message: String| {
        out.push(Violation {
            task: task.id.clone(),
            path,
            message,
        })
    };
    if segment.is_empty() {
        push(name.to_string(), "dialogue is empty".into());
    }
    for (i, u) in segment.iter().enumerate() {
        if u.turn != i {
            push(format!("{name}[{i}].turn"), format!("expected {i}, got {}", u.turn));
        }
    }
}

impl Dataset {
    /// Every violation in the dataset, in task order.
    pub fn violations(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let mut seen = BTreeSet::new();
        for (t, task) in self.tasks.iter().enumerate() {
            let at = |path: String, message: String| Violation {
                task: task.id.clone(),
                path: format!("tasks[{t}].{path}"),
                message,
            };
            if task.id.is_empty() {
                out.push(at("id".into(), "id is empty".into()));
            } else if !seen.insert(task.id.as_str()) {
                out.push(at("id".into(), "duplicate task id".into()));
            }
            let mut seg = Vec::new();
            check_segment(task, "past", &task.past, &mut seg);
            check_segment(task, "present", &task.present, &mut seg);
            out.extend(seg.into_iter().map(|v| at(v.path, v.message)));
            if task.pairs.is_empty() {
                out.push(at("pairs".into(), "no trigger-memory pairs".into()));
            }
            for (p, pair) in task.pairs.iter().enumerate() {
                if pair.trigger_turn >= task.present.len() {
                    out.push(at(
                        format!("pairs[{p}].trigger_turn"),
                        format!("{} is out of range for {} present turns", pair.trigger_turn, task.present.len()),
                    ));
                }
                if pair.memory_turns.is_empty() {
                    out.push(at(format!("pairs[{p}].memory_turns"), "label set is empty".into()));
                }
                for (m, &turn) in pair.memory_turns.iter().enumerate() {
                    if turn >= task.past.len() {
                        out.push(at(
                            format!("pairs[{p}].memory_turns[{m}]"),
                            format!("{turn} is out of range for {} past turns", task.past.len()),
                        ));
                    }
                }
            }
        }
        out
    }

    pub fn validate(&self) -> Result<(), DatasetError> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(DatasetError::Invalid(v))
        }
    }

    pub fn from_json(text: &str) -> Result<Self, DatasetError> {
        let ds: Dataset = serde_json::from_str(text)?;
        ds.validate()?;
        Ok(ds)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("dataset serializes");
        s.push('\n');
        s
    }

    pub fn task(&self, id: &str) -> Option<&Task> {
        self.tasks.iter().find(|t| t.id == id)
    }
}

pub fn load_dataset(path: impl AsRef<Path>) -> Result<Dataset, DatasetError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| DatasetError::Io {
        path: path.display().to_string(),
        source,
    })?;
    Dataset::from_json(&text)
}

/// Writes `ds` as pretty JSON, creating missing parent directories.
pub fn save_dataset(ds: &Dataset, path: impl AsRef<Path>) -> std::io::Result<()> {
    let path = path.as_ref();
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(path, ds.to_json())
}
