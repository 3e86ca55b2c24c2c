use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use super::{EmbedError, EmbeddingProvider};

/// Deterministic offline embedder.
///
/// Each lower-cased alphanumeric token is hashed to seed a fixed random
/// direction; a text's vector is the normalized sum of its token
/// directions. Texts sharing tokens therefore point in similar directions.
/// Output depends only on the text bytes and the dimension.
#[derive(Debug, Clone)]
pub struct HashEmbedder {
    dim: usize,
    model: String,
}

impl HashEmbedder {
    pub fn new(dim: usize) -> Self {
        assert!(dim > 0, "embedding dimension must be positive");
        Self {
            dim,
            model: format!("offline-hash-v1-d{dim}"),
        }
    }

    fn token_direction(&self, token: &str, out: &mut [f64]) {
        let digest = Sha256::digest(token.as_bytes());
        let mut seed = [0u8; 32];
        seed.copy_from_slice(&digest);
        let mut rng = ChaCha8Rng::from_seed(seed);
        for x in out.iter_mut() {
            *x += rng.random_range(-1.0..1.0);
        }
    }

    pub fn embed_text(&self, text: &str) -> Vec<f64> {
        let mut v = vec![0.0; self.dim];
        let lower = text.to_lowercase();
        let mut any = false;
        for token in lower.split(|c: char| !c.is_alphanumeric()).filter(|t| !t.is_empty()) {
            self.token_direction(token, &mut v);
            any = true;
        }
        if !any {
            // Punctuation-only or empty text still needs a direction.
            self.token_direction(&format!("\u{0}{text}"), &mut v);
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        v.iter_mut().for_each(|x| *x /= norm);
        v
    }
}

impl EmbeddingProvider for HashEmbedder {
    fn model_id(&self) -> &str {
        &self.model
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f64>>, EmbedError> {
        Ok(texts.iter().map(|t| self.embed_text(t)).collect())
    }
}
