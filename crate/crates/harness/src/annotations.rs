//! Annotation files for the agreement command.

use serde::Deserialize;
use synapse::eval::{krippendorff_alpha_nominal, selection_matrix, Alpha, EvalError};

/// Either a raw items-by-annotators matrix (`null` for a missing rating)
/// or per-task selections expanded to one binary item per utterance.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
pub enum Annotations {
    Matrix {
        matrix: Vec<Vec<Option<u32>>>,
    },
    Selections {
        items_per_task: usize,
        /// `selections[task][annotator]` = chosen utterance indices.
        selections: Vec<Vec<Vec<usize>>>,
    },
}

impl Annotations {
    pub fn matrix(&self) -> Vec<Vec<Option<u32>>> {
        match self {
            Annotations::Matrix { matrix } => matrix.clone(),
            Annotations::Selections {
                items_per_task,
                selections,
            } => selection_matrix(selections, *items_per_task),
        }
    }

    pub fn alpha(&self) -> Result<Alpha, EvalError> {
        krippendorff_alpha_nominal(&self.matrix())
    }
}
