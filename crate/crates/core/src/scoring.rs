//! Propagation score: temporal association times semantic similarity.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::memory::{dot, MemoryNode};
use crate::temporal::{t_score, TemporalParams};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScoreBreakdown {
    pub t_score: f64,
    pub c_score: f64,
    pub p_score: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoreParams {
    pub temporal: TemporalParams,
    pub p_scale: f64,
    /// When false the temporal factor is pinned to 1.
    pub use_temporal: bool,
}

/// Cosine between two nodes using their cached norms.
pub fn node_cosine(a: &MemoryNode, b: &MemoryNode) -> Result<f64> {
    if a.norm() == 0.0 || b.norm() == 0.0 {
        return Err(Error::ZeroVector);
    }
    Ok((dot(&a.vector, &b.vector) / (a.norm() * b.norm())).clamp(-1.0, 1.0))
}

/// Combines a precomputed cosine with the temporal association of two nodes.
pub fn p_score_with_cosine(
    a: &MemoryNode,
    b: &MemoryNode,
    c_score: f64,
    params: &ScoreParams,
) -> Result<ScoreBreakdown> {
    let t = if params.use_temporal {
        t_score(&a.train, a.tau(), &b.train, b.tau(), &params.temporal)?
    } else {
        1.0
    };
    Ok(ScoreBreakdown {
        t_score: t,
        c_score,
        p_score: params.p_scale * t * c_score,
    })
}

pub fn p_score(a: &MemoryNode, b: &MemoryNode, params: &ScoreParams) -> Result<ScoreBreakdown> {
    p_score_with_cosine(a, b, node_cosine(a, b)?, params)
}
