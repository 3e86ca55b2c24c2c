//! Seeded synthetic dialogues with known trigger-memory structure.
//!
//! Each task draws disjoint pseudo-word vocabularies per topic. Label
//! utterances share a topic with their trigger; every other past utterance
//! uses its own topic. A task is kept only if, under the offline embedder,
//! every label is closer to its trigger than `cos_th` and every distractor
//! is further, so the ground truth is recoverable by construction.

use std::collections::BTreeSet;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use synapse::memory::cosine;
use synapse::HashEmbedder;

use crate::dataset::{Dataset, Pair, Role, Task, Utterance};

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub past_len: usize,
    pub present_len: usize,
    /// Embedding dimension used for the separation check.
    pub dim: usize,
    /// Labels must score above and distractors below this cosine.
    pub cos_th: f64,
    pub max_attempts: usize,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            past_len: 10,
            present_len: 10,
            dim: 256,
            cos_th: 0.26,
            max_attempts: 1000,
        }
    }
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum SynthError {
    #[error("number of tasks must be at least 1")]
    NoTasks,
    #[error("past and present dialogues need at least 4 and 1 turns")]
    TooShort,
    #[error("task {0}: no separable draw after {1} attempts")]
    Exhausted(usize, usize),
}

const CONSONANTS: &[&str] = &["b", "d", "f", "g", "k", "l", "m", "n", "p", "r", "s", "t", "v", "z"];
const VOWELS: &[&str] = &["a", "e", "i", "o", "u"];

struct Vocab<'a> {
    rng: &'a mut ChaCha8Rng,
    used: BTreeSet<String>,
}

impl Vocab<'_> {
    fn word(&mut self) -> String {
        loop {
            let syllables = self.rng.random_range(2..=3);
            let mut w = String::new();
            for _ in 0..syllables {
                w.push_str(CONSONANTS.choose(self.rng).unwrap());
                w.push_str(VOWELS.choose(self.rng).unwrap());
            }
            if self.used.insert(w.clone()) {
                return w;
            }
        }
    }

    fn topic(&mut self, size: usize) -> Vec<String> {
        (0..size).map(|_| self.word()).collect()
    }

    fn sentence(&mut self, topic: &[String], from_topic: usize, noise: usize) -> String {
        let mut words: Vec<String> = topic.choose_multiple(self.rng, from_topic).cloned().collect();
        words.extend((0..noise).map(|_| self.word()));
        words.shuffle(self.rng);
        words.join(" ")
    }
}

fn role(i: usize) -> Role {
    if i.is_multiple_of(2) {
        Role::User
    } else {
        Role::Assistant
    }
}

fn draw_task(rng: &mut ChaCha8Rng, index: usize, cfg: &SynthConfig) -> Task {
    let mut v = Vocab {
        rng,
        used: BTreeSet::new(),
    };
    let n_pairs = v.rng.random_range(1..=2);
    let mut past: Vec<Option<String>> = vec![None; cfg.past_len];
    let mut present: Vec<Option<String>> = vec![None; cfg.present_len];
    let mut free_past: Vec<usize> = (0..cfg.past_len).collect();
    free_past.shuffle(v.rng);
    let mut free_present: Vec<usize> = (0..cfg.present_len).collect();
    free_present.shuffle(v.rng);
    let mut pairs = Vec::new();
    for _ in 0..n_pairs {
        let Some(trigger) = free_present.pop() else { break };
        let n_labels = v.rng.random_range(1..=3).min(free_past.len().saturating_sub(1));
        if n_labels == 0 {
            break;
        }
        let topic = v.topic(8);
        let mut labels: Vec<usize> = free_past.split_off(free_past.len() - n_labels);
        labels.sort_unstable();
        for &l in &labels {
            past[l] = Some(v.sentence(&topic, 5, 1));
        }
        present[trigger] = Some(v.sentence(&topic, 5, 1));
        pairs.push(Pair {
            trigger_turn: trigger,
            memory_turns: labels,
        });
    }
    pairs.sort_by_key(|p| p.trigger_turn);
    for slot in past.iter_mut().chain(present.iter_mut()) {
        if slot.is_none() {
            let topic = v.topic(6);
            *slot = Some(v.sentence(&topic, 4, 2));
        }
    }
    let utter = |texts: Vec<Option<String>>| {
        texts
            .into_iter()
            .enumerate()
            .map(|(turn, t)| Utterance {
                turn,
                speaker: role(turn),
                text: t.expect("every slot filled"),
            })
            .collect()
    };
    Task {
        id: format!("synth-{index:04}"),
        past: utter(past),
        present: utter(present),
        pairs,
    }
}

/// Whether every label beats `cos_th` and every distractor falls below it.
pub fn separable(task: &Task, embedder: &HashEmbedder, cos_th: f64) -> bool {
    let past: Vec<Vec<f64>> = task.past.iter().map(|u| embedder.embed_text(&u.text)).collect();
    task.pairs.iter().all(|pair| {
        let q = embedder.embed_text(&task.present[pair.trigger_turn].text);
        past.iter().enumerate().all(|(i, v)| {
            let c = cosine(&q, v).expect("unit vectors");
            if pair.memory_turns.contains(&i) {
                c > cos_th
            } else {
                c < cos_th
            }
        })
    })
}

pub fn gen_synthetic(seed: u64, n_tasks: usize, cfg: &SynthConfig) -> Result<Dataset, SynthError> {
    if n_tasks == 0 {
        return Err(SynthError::NoTasks);
    }
    if cfg.past_len < 4 || cfg.present_len < 1 {
        return Err(SynthError::TooShort);
    }
    let embedder = HashEmbedder::new(cfg.dim);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut tasks = Vec::with_capacity(n_tasks);
    for index in 0..n_tasks {
        let mut attempt = 0;
        let task = loop {
            let t = draw_task(&mut rng, index, cfg);
            if separable(&t, &embedder, cfg.cos_th) {
                break t;
            }
            attempt += 1;
            if attempt >= cfg.max_attempts {
                return Err(SynthError::Exhausted(index, attempt));
            }
        };
        tasks.push(task);
    }
    Ok(Dataset { tasks })
}
