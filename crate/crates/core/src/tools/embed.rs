//! Text embedding providers used by similarity search.

use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EmbedError {
    #[error("embedding request failed: {0}")]
    Transport(String),
    #[error("malformed embedding response: {0}")]
    Malformed(String),
}

pub trait EmbeddingProvider: Send + Sync {
    fn name(&self) -> &str;
    fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f64>>, EmbedError>;
}

/// Bag-of-words over hashed tokens. Deterministic and offline; tokens are
/// lower-cased alphanumeric runs.
#[derive(Debug, Clone)]
pub struct HashTokenEmbedder {
    pub dimension: usize,
}

pub const DEFAULT_DIMENSION: usize = 256;

impl Default for HashTokenEmbedder {
    fn default() -> Self {
        HashTokenEmbedder {
            dimension: DEFAULT_DIMENSION,
        }
    }
}

pub(crate) fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for b in bytes {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

pub fn tokenize(text: &str) -> impl Iterator<Item = String> + '_ {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
}

impl HashTokenEmbedder {
    pub fn embed_one(&self, text: &str) -> Vec<f64> {
        let mut v = vec![0.0; self.dimension.max(1)];
        let n = v.len() as u64;
        for token in tokenize(text) {
            v[(fnv1a(token.as_bytes()) % n) as usize] += 1.0;
        }
        v
    }
}

impl EmbeddingProvider for HashTokenEmbedder {
    fn name(&self) -> &str {
        "hash-token"
    }

    fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f64>>, EmbedError> {
        Ok(texts.iter().map(|t| self.embed_one(t)).collect())
    }
}

/// HTTP provider: POST `{"texts": [...]}`, expects `{"vectors": [[...]]}`.
#[derive(Debug, Clone)]
pub struct RemoteEmbedder {
    pub url: String,
    pub token: Option<String>,
    pub timeout: Duration,
}

#[derive(Serialize)]
struct EmbedRequest<'a> {
    texts: &'a [String],
}

#[derive(Deserialize)]
struct EmbedResponse {
    vectors: Vec<Vec<f64>>,
}

impl RemoteEmbedder {
    pub fn new(url: impl Into<String>, token: Option<String>) -> Self {
        RemoteEmbedder {
            url: url.into(),
            token,
            timeout: Duration::from_secs(30),
        }
    }

    fn agent(&self) -> ureq::Agent {
        ureq::Agent::config_builder()
            .timeout_global(Some(self.timeout))
            .build()
            .into()
    }
}

impl EmbeddingProvider for RemoteEmbedder {
    fn name(&self) -> &str {
        "remote"
    }

    fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f64>>, EmbedError> {
        let mut req = self.agent().post(&self.url);
        if let Some(token) = &self.token {
            req = req.header("Authorization", &format!("Bearer {token}"));
        }
        let mut resp = req
            .send_json(EmbedRequest { texts })
            .map_err(|e| EmbedError::Transport(e.to_string()))?;
        let body: EmbedResponse = resp
            .body_mut()
            .read_json()
            .map_err(|e| EmbedError::Malformed(e.to_string()))?;
        if body.vectors.len() != texts.len() {
            return Err(EmbedError::Malformed(format!(
                "{} vectors for {} texts",
                body.vectors.len(),
                texts.len()
            )));
        }
        if let Some(first) = body.vectors.first() {
            if body.vectors.iter().any(|v| v.len() != first.len()) {
                return Err(EmbedError::Malformed("vectors differ in length".into()));
            }
        }
        Ok(body.vectors)
    }
}
