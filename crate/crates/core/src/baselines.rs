//! Comparison retrievers: plain vector search, MemoryBank and MyAgent, each
//! in its original and adapted form.
//!
//! All baselines read vectors and creation turns from a [`MemoryStore`] and
//! keep their own per-memory strength state, indexed by node id.

use std::cmp::Ordering;

use serde::Serialize;

use crate::activation::tau_increment;
use crate::config::{MemoryBankAdaptedConfig, MemoryBankConfig, MyAgentAdaptedConfig, MyAgentConfig};
use crate::error::{Error, Result};
use crate::memory::{dot, l2_norm, MemoryStore};

/// A node id with the score it was ranked by.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Scored {
    pub id: usize,
    pub score: f64,
}

fn desc_then_id(a: &Scored, b: &Scored) -> Ordering {
    b.score.total_cmp(&a.score).then(a.id.cmp(&b.id))
}

/// Cosine of `query` against every stored node, in id order.
pub fn query_cosines(store: &MemoryStore, query: &[f64]) -> Result<Vec<f64>> {
    if query.len() != store.dim() {
        return Err(Error::Dimension {
            expected: store.dim(),
            got: query.len(),
        });
    }
    let qn = l2_norm(query);
    if qn == 0.0 || !qn.is_finite() {
        return Err(Error::ZeroVector);
    }
    Ok(store
        .nodes()
        .iter()
        .map(|n| (dot(query, &n.vector) / (qn * n.norm())).clamp(-1.0, 1.0))
        .collect())
}

fn elapsed(turn: u64, created: u64) -> f64 {
    turn.saturating_sub(created) as f64
}

/// Every node ranked by cosine to the query, ties by id.
pub fn rag_rank(store: &MemoryStore, query: &[f64]) -> Result<Vec<Scored>> {
    let mut out: Vec<Scored> = query_cosines(store, query)?
        .into_iter()
        .enumerate()
        .map(|(id, score)| Scored { id, score })
        .collect();
    out.sort_by(desc_then_id);
    Ok(out)
}

pub fn rag_retrieve(store: &MemoryStore, query: &[f64], k: usize) -> Result<Vec<usize>> {
    Ok(rag_rank(store, query)?.into_iter().take(k).map(|s| s.id).collect())
}

/// Forgetting-curve parameters. The original model is the special case
/// `t_scale = 1`, `s_scale = 5`, `s_init = 1`, `top_k = 6`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MemoryBankParams {
    pub theta: f64,
    pub top_k: usize,
    pub t_scale: f64,
    pub s_scale: f64,
    pub s_init: f64,
}

impl From<&MemoryBankConfig> for MemoryBankParams {
    fn from(c: &MemoryBankConfig) -> Self {
        Self {
            theta: c.theta,
            top_k: c.top_k,
            t_scale: 1.0,
            s_scale: 5.0,
            s_init: 1.0,
        }
    }
}

impl From<&MemoryBankAdaptedConfig> for MemoryBankParams {
    fn from(c: &MemoryBankAdaptedConfig) -> Self {
        Self {
            theta: c.theta,
            top_k: c.top_k,
            t_scale: c.t_scale,
            s_scale: c.s_scale,
            s_init: c.s_init,
        }
    }
}

/// Retention score `exp(t_scale·Δt / (s_scale·s))`.
pub fn retention_score(dt: f64, strength: f64, p: &MemoryBankParams) -> f64 {
    (p.t_scale * dt / (p.s_scale * strength)).exp()
}

/// Per-memory strengths for one MemoryBank run.
#[derive(Debug, Clone, PartialEq)]
pub struct MemoryBankState {
    strengths: Vec<f64>,
    s_init: f64,
}

impl MemoryBankState {
    pub fn new(params: &MemoryBankParams) -> Self {
        Self {
            strengths: Vec::new(),
            s_init: params.s_init,
        }
    }

    pub fn strength(&self, id: usize) -> f64 {
        self.strengths.get(id).copied().unwrap_or(self.s_init)
    }

    fn grow(&mut self, n: usize) {
        if self.strengths.len() < n {
            self.strengths.resize(n, self.s_init);
        }
    }
}

/// Retained memories ranked by cosine. Scores are cosines.
pub fn memorybank_rank(
    state: &MemoryBankState,
    store: &MemoryStore,
    query: &[f64],
    turn: u64,
    params: &MemoryBankParams,
) -> Result<Vec<Scored>> {
    let cos = query_cosines(store, query)?;
    let mut out: Vec<Scored> = store
        .nodes()
        .iter()
        .filter(|n| retention_score(elapsed(turn, n.turn), state.strength(n.id), params) >= params.theta)
        .map(|n| Scored { id: n.id, score: cos[n.id] })
        .collect();
    out.sort_by(desc_then_id);
    Ok(out)
}

/// Selects the top `top_k` retained memories and strengthens each by one.
pub fn memorybank_retrieve(
    state: &mut MemoryBankState,
    store: &MemoryStore,
    query: &[f64],
    turn: u64,
    params: &MemoryBankParams,
) -> Result<Vec<usize>> {
    let ranked = memorybank_rank(state, store, query, turn, params)?;
    let picked: Vec<usize> = ranked.into_iter().take(params.top_k).map(|s| s.id).collect();
    state.grow(store.len());
    for &id in &picked {
        state.strengths[id] += 1.0;
    }
    Ok(picked)
}

/// Recall-probability parameters. The original model has all scales 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MyAgentParams {
    pub cos_th: f64,
    pub r_scale: f64,
    pub t_scale: f64,
    pub g_scale: f64,
}

impl From<&MyAgentConfig> for MyAgentParams {
    fn from(c: &MyAgentConfig) -> Self {
        Self {
            cos_th: c.cos_th,
            r_scale: 1.0,
            t_scale: 1.0,
            g_scale: 1.0,
        }
    }
}

impl From<&MyAgentAdaptedConfig> for MyAgentParams {
    fn from(c: &MyAgentAdaptedConfig) -> Self {
        Self {
            cos_th: c.cos_th,
            r_scale: c.r_scale,
            t_scale: c.t_scale,
            g_scale: c.g_scale,
        }
    }
}

/// Exponent `a = r_scale·r·e^(−t_scale·Δt) / (g_scale·g)` of the recall curve.
pub fn recall_exponent(relevance: f64, dt: f64, strength: f64, p: &MyAgentParams) -> f64 {
    p.r_scale * relevance * (-p.t_scale * dt).exp() / (p.g_scale * strength)
}

/// `p = (1 − e^(−a)) / (1 − e^(−1))`.
pub fn recall_probability(a: f64) -> f64 {
    -(-a).exp_m1() / -(-1.0f64).exp_m1()
}

/// Strength gain after a recall: `(1 − e^(−x)) / (1 + e^(−x))` with `x = t_scale·Δt`.
pub fn strength_increment(dt: f64, t_scale: f64) -> f64 {
    tau_increment(t_scale * dt)
}

/// Sort key equivalent to ordering by `a`, computed in log space so large
/// elapsed times do not overflow into ties.
#[derive(Debug, Clone, Copy, PartialEq)]
struct RecallKey {
    sign: f64,
    log_mag: f64,
}

impl RecallKey {
    fn new(relevance: f64, dt: f64, strength: f64, p: &MyAgentParams) -> Self {
        let num = p.r_scale * relevance;
        let den = p.g_scale * strength;
        let sign = num.signum() * den.signum();
        if num == 0.0 {
            return Self { sign: 0.0, log_mag: 0.0 };
        }
        Self {
            sign,
            log_mag: num.abs().ln() - p.t_scale * dt - den.abs().ln(),
        }
    }

    fn cmp(&self, other: &Self) -> Ordering {
        self.sign.total_cmp(&other.sign).then_with(|| {
            if self.sign > 0.0 {
                self.log_mag.total_cmp(&other.log_mag)
            } else if self.sign < 0.0 {
                other.log_mag.total_cmp(&self.log_mag)
            } else {
                Ordering::Equal
            }
        })
    }
}

/// Per-memory strengths for one MyAgent run.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MyAgentState {
    strengths: Vec<f64>,
}

impl MyAgentState {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn strength(&self, id: usize) -> f64 {
        self.strengths.get(id).copied().unwrap_or(1.0)
    }

    fn grow(&mut self, n: usize) {
        if self.strengths.len() < n {
            self.strengths.resize(n, 1.0);
        }
    }
}

/// Memories with cosine at least `cos_th`, ranked by recall probability
/// (ties by id). Relevance is the query cosine. Scores are probabilities
/// and may be non-finite for extreme scales; the order stays exact.
pub fn myagent_rank(
    state: &MyAgentState,
    store: &MemoryStore,
    query: &[f64],
    turn: u64,
    params: &MyAgentParams,
) -> Result<Vec<Scored>> {
    let cos = query_cosines(store, query)?;
    let mut keyed: Vec<(RecallKey, Scored)> = store
        .nodes()
        .iter()
        .filter(|n| cos[n.id] >= params.cos_th)
        .map(|n| {
            let (r, dt, g) = (cos[n.id], elapsed(turn, n.turn), state.strength(n.id));
            let p = recall_probability(recall_exponent(r, dt, g, params));
            (RecallKey::new(r, dt, g, params), Scored { id: n.id, score: p })
        })
        .collect();
    keyed.sort_by(|(ka, a), (kb, b)| kb.cmp(ka).then(a.id.cmp(&b.id)));
    Ok(keyed.into_iter().map(|(_, s)| s).collect())
}

/// Retrieves the single most probable memory (`k = None`) or the top `k`,
/// then applies the strength gain to each selected memory.
pub fn myagent_retrieve(
    state: &mut MyAgentState,
    store: &MemoryStore,
    query: &[f64],
    turn: u64,
    params: &MyAgentParams,
    k: Option<usize>,
) -> Result<Vec<usize>> {
    let ranked = myagent_rank(state, store, query, turn, params)?;
    let picked: Vec<usize> = ranked.into_iter().take(k.unwrap_or(1)).map(|s| s.id).collect();
    state.grow(store.len());
    for &id in &picked {
        let dt = elapsed(turn, store.node(id)?.turn);
        state.strengths[id] += strength_increment(dt, params.t_scale);
    }
    Ok(picked)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::memory::Speaker;
    use proptest::prelude::*;

    fn store_of(vectors: &[Vec<f64>]) -> MemoryStore {
        let mut s = MemoryStore::new(vectors[0].len());
        for v in vectors {
            s.insert("", Speaker::User, v.clone(), 1.0).unwrap();
        }
        s
    }

    fn planar() -> MemoryStore {
        store_of(&[
            vec![1.0, 0.0],
            vec![0.8, 0.6],
            vec![0.0, 1.0],
            vec![-1.0, 0.0],
            vec![0.6, 0.8],
        ])
    }

    #[test]
    fn rag_edges() {
        let s = planar();
        assert!(rag_retrieve(&s, &[1.0, 0.0], 0).unwrap().is_empty());
        assert_eq!(rag_retrieve(&s, &[0.0, 1.0], 1).unwrap(), vec![2]);
        assert_eq!(rag_retrieve(&s, &[1.0, 0.0], 99).unwrap(), vec![0, 1, 4, 2, 3]);
    }

    #[test]
    fn rag_ties_break_by_id() {
        let s = store_of(&[vec![0.0, 1.0], vec![1.0, 0.0], vec![2.0, 0.0]]);
        assert_eq!(rag_retrieve(&s, &[1.0, 0.0], 2).unwrap(), vec![1, 2]);
    }

    #[test]
    fn retention_at_zero_elapsed_is_one() {
        for p in [
            MemoryBankParams::from(&MemoryBankConfig::default()),
            MemoryBankParams::from(&MemoryBankAdaptedConfig::default()),
        ] {
            for s in [0.05, 1.0, 7.0] {
                assert_eq!(retention_score(0.0, s, &p), 1.0);
            }
        }
    }

    #[test]
    fn theta_above_every_score_retains_nothing() {
        let s = planar();
        let p = MemoryBankParams {
            theta: f64::INFINITY,
            ..MemoryBankParams::from(&MemoryBankConfig::default())
        };
        let mut st = MemoryBankState::new(&p);
        assert!(memorybank_retrieve(&mut st, &s, &[1.0, 0.0], 5, &p).unwrap().is_empty());
        assert!((0..5).all(|i| st.strength(i) == 1.0));
    }

    #[test]
    fn memorybank_selects_by_cosine_and_strengthens_only_selected() {
        let s = planar();
        let p = MemoryBankParams {
            top_k: 2,
            ..MemoryBankParams::from(&MemoryBankAdaptedConfig::default())
        };
        let mut st = MemoryBankState::new(&p);
        let got = memorybank_retrieve(&mut st, &s, &[1.0, 0.0], 5, &p).unwrap();
        assert_eq!(got, vec![0, 1]);
        assert_eq!(st.strength(0), 1.05);
        assert_eq!(st.strength(1), 1.05);
        for i in 2..5 {
            assert_eq!(st.strength(i), 0.05);
        }
    }

    #[test]
    fn memorybank_threshold_filters_by_score() {
        // Decaying variant: exp(-dt/5) >= 0.36 holds for dt <= 5.
        let s = planar();
        let p = MemoryBankParams {
            theta: 0.36,
            top_k: 10,
            t_scale: -1.0,
            s_scale: 5.0,
            s_init: 1.0,
        };
        let st = MemoryBankState::new(&p);
        // Nodes were created at turns 0..4; at turn 7 nodes 2, 3 and 4 survive.
        let ids: Vec<usize> = memorybank_rank(&st, &s, &[1.0, 0.0], 7, &p)
            .unwrap()
            .iter()
            .map(|x| x.id)
            .collect();
        assert_eq!(ids, vec![4, 2, 3]);
    }

    #[test]
    fn recall_normalization_point() {
        let p = MyAgentParams::from(&MyAgentConfig::default());
        let a = recall_exponent(1.0, 0.0, 1.0, &p);
        assert_eq!(a, 1.0);
        assert!((recall_probability(a) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn strength_increment_closed_forms() {
        assert_eq!(strength_increment(0.0, 1.0), 0.0);
        assert!((strength_increment(3f64.ln(), 1.0) - 0.5).abs() < 1e-12);
        let x: f64 = 2.0;
        let direct = (1.0 - (-x).exp()) / (1.0 + (-x).exp());
        assert!((strength_increment(x, 1.0) - direct).abs() < 1e-15);
    }

    #[test]
    fn original_myagent_retrieves_at_most_one() {
        let s = planar();
        let p = MyAgentParams::from(&MyAgentConfig::default());
        let mut st = MyAgentState::new();
        let got = myagent_retrieve(&mut st, &s, &[1.0, 0.0], 5, &p, None).unwrap();
        assert_eq!(got.len(), 1);
        let none = myagent_retrieve(&mut st, &s, &[0.0, -1.0], 5, &p, None).unwrap();
        assert!(none.is_empty());
    }

    #[test]
    fn myagent_prefers_recent_relevant_memory() {
        // Same cosine, different age: with positive t_scale the newer one wins.
        let s = store_of(&[vec![1.0, 0.0], vec![1.0, 0.0]]);
        let p = MyAgentParams::from(&MyAgentConfig::default());
        let mut st = MyAgentState::new();
        assert_eq!(myagent_retrieve(&mut st, &s, &[1.0, 0.0], 4, &p, None).unwrap(), vec![1]);
        let gain = strength_increment(3.0, 1.0);
        assert_eq!(st.strength(1), 1.0 + gain);
        assert_eq!(st.strength(0), 1.0);
    }

    #[test]
    fn adapted_negative_scales_are_used_verbatim() {
        let p = MyAgentParams::from(&MyAgentAdaptedConfig::default());
        assert_eq!((p.t_scale, p.g_scale), (-1.72, -2.05));
        // Negative g_scale makes a negative, so older memories (larger |a|) rank lower.
        let s = store_of(&[vec![1.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]]);
        let st = MyAgentState::new();
        let ranked = myagent_rank(&st, &s, &[1.0, 0.0], 500, &p).unwrap();
        assert_eq!(ranked.iter().map(|x| x.id).collect::<Vec<_>>(), vec![1, 0]);
        // Δt = 500 overflows p to -inf for both, but the order is still exact.
        assert!(ranked.iter().all(|x| x.score == f64::NEG_INFINITY));
        let mut st = MyAgentState::new();
        myagent_retrieve(&mut st, &s, &[1.0, 0.0], 3, &p, Some(2)).unwrap();
        assert!(st.strength(0) < 1.0);
    }

    fn vectors(n: usize, dim: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
        prop::collection::vec(
            prop::collection::vec(-1.0f64..1.0, dim).prop_filter("nonzero", |v| l2_norm(v) > 1e-3),
            1..n,
        )
    }

    proptest! {
        #[test]
        fn rag_matches_exhaustive_oracle(vs in vectors(100, 4), q in prop::collection::vec(-1.0f64..1.0, 4), k in 0usize..120) {
            prop_assume!(l2_norm(&q) > 1e-3);
            let s = store_of(&vs);
            let got = rag_retrieve(&s, &q, k).unwrap();
            // Oracle: for each id count how many others strictly beat it.
            let cos: Vec<f64> = vs.iter().map(|v| crate::memory::cosine(v, &q).unwrap()).collect();
            let mut want: Vec<usize> = (0..vs.len()).collect();
            want.sort_by_key(|&i| (0..vs.len()).filter(|&j| cos[j] > cos[i] || (cos[j] == cos[i] && j < i)).count());
            want.truncate(k);
            prop_assert_eq!(got, want);
        }

        #[test]
        fn rag_invariant_under_positive_rescaling(vs in vectors(30, 3), c in 0.01f64..100.0, k in 0usize..30) {
            let q = vec![0.3, -0.2, 0.9];
            let scaled: Vec<Vec<f64>> = vs.iter().map(|v| v.iter().map(|x| x * c).collect()).collect();
            let a = rag_retrieve(&store_of(&vs), &q, k).unwrap();
            let b = rag_retrieve(&store_of(&scaled), &q, k).unwrap();
            // Rescaling can perturb the last bit of a cosine; compare cosine sequences instead of ids.
            let ca: Vec<f64> = a.iter().map(|&i| crate::memory::cosine(&vs[i], &q).unwrap()).collect();
            let cb: Vec<f64> = b.iter().map(|&i| crate::memory::cosine(&vs[i], &q).unwrap()).collect();
            for (x, y) in ca.iter().zip(&cb) {
                prop_assert!((x - y).abs() < 1e-12);
            }
        }

        #[test]
        fn memorybank_strengths_monotone(vs in vectors(20, 3), rounds in 1usize..6) {
            let s = store_of(&vs);
            let p = MemoryBankParams::from(&MemoryBankAdaptedConfig { top_k: 2, ..Default::default() });
            let mut st = MemoryBankState::new(&p);
            let mut selected = std::collections::BTreeSet::new();
            for r in 0..rounds {
                let before: Vec<f64> = (0..vs.len()).map(|i| st.strength(i)).collect();
                let q = vs[r % vs.len()].clone();
                let got = memorybank_retrieve(&mut st, &s, &q, (vs.len() + r) as u64, &p).unwrap();
                selected.extend(got.iter().copied());
                for (i, &b) in before.iter().enumerate() {
                    prop_assert!(st.strength(i) >= b);
                    prop_assert!(st.strength(i) >= p.s_init.min(1.0));
                }
            }
            for i in 0..vs.len() {
                if !selected.contains(&i) {
                    prop_assert_eq!(st.strength(i), p.s_init);
                }
            }
        }

        #[test]
        fn strength_increment_in_unit_range(dt in 0.0f64..1e6) {
            let g = strength_increment(dt, 1.0);
            prop_assert!((0.0..1.0).contains(&g));
        }

        #[test]
        fn myagent_order_matches_exponent(vs in vectors(20, 3), turn in 20u64..60) {
            let s = store_of(&vs);
            let p = MyAgentParams { cos_th: -1.0, r_scale: 2.0, t_scale: 0.1, g_scale: 1.5 };
            let q = vec![1.0, 0.5, -0.25];
            let ranked = myagent_rank(&MyAgentState::new(), &s, &q, turn, &p).unwrap();
            let cos = query_cosines(&s, &q).unwrap();
            let a = |id: usize| recall_exponent(cos[id], (turn - id as u64) as f64, 1.0, &p);
            for w in ranked.windows(2) {
                prop_assert!(a(w[0].id) >= a(w[1].id) - 1e-12);
            }
        }
    }
}
