//! Text embedding providers and the on-disk vector cache.

mod cache;
#[cfg(feature = "http")]
mod http;
mod offline;

pub use cache::{cache_key, embed_cached, CacheRecord, CachedProvider, EmbeddingCache};
#[cfg(feature = "http")]
pub use http::{HttpEmbedder, EMBED_API_KEY_VAR, EMBED_API_URL_VAR};
pub use offline::HashEmbedder;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum EmbedError {
    #[error("embedding provider failed for {} text(s): {message}", failed.len())]
    Provider { failed: Vec<String>, message: String },

    #[error("provider returned {got} vectors for {expected} texts")]
    Count { expected: usize, got: usize },

    #[error("provider returned a vector of dimension {got}, expected {expected}")]
    Dimension { expected: usize, got: usize },

    #[error("provider returned a zero or non-finite vector for {text:?}")]
    Degenerate { text: String },

    #[error("missing environment variable {0}")]
    MissingEnv(&'static str),

    #[error("cache I/O: {0}")]
    Io(#[from] std::io::Error),
}

/// Anything that turns texts into fixed-dimension vectors.
pub trait EmbeddingProvider: Send + Sync {
    /// Identifier stored alongside cached vectors.
    fn model_id(&self) -> &str;

    fn dim(&self) -> usize;

    /// Embeds `texts`, returning one vector per text in input order.
    fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f64>>, EmbedError>;

    fn embed_one(&self, text: &str) -> Result<Vec<f64>, EmbedError> {
        let mut out = self.embed(&[text.to_string()])?;
        out.pop().ok_or(EmbedError::Count { expected: 1, got: 0 })
    }
}

impl<P: EmbeddingProvider + ?Sized> EmbeddingProvider for &P {
    fn model_id(&self) -> &str {
        (**self).model_id()
    }

    fn dim(&self) -> usize {
        (**self).dim()
    }

    fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f64>>, EmbedError> {
        (**self).embed(texts)
    }
}

/// Checks a provider's batch response against the request.
pub(crate) fn check_batch(
    texts: &[String],
    vectors: &[Vec<f64>],
    dim: usize,
) -> Result<(), EmbedError> {
    if vectors.len() != texts.len() {
        return Err(EmbedError::Count {
            expected: texts.len(),
            got: vectors.len(),
        });
    }
    for (text, v) in texts.iter().zip(vectors) {
        if v.len() != dim {
            return Err(EmbedError::Dimension {
                expected: dim,
                got: v.len(),
            });
        }
        if !v.iter().all(|x| x.is_finite()) || v.iter().all(|&x| x == 0.0) {
            return Err(EmbedError::Degenerate { text: text.clone() });
        }
    }
    Ok(())
}
