//! Text-embedding providers and the cosine similarity used everywhere else.
//!
//! Two providers implement [`TextEmbedder`]: a signed feature-hashing
//! encoder that needs nothing but the text, and an HTTP client for hosted
//! embedding models that persists every response in an on-disk cache.

mod cache;
mod hash;
mod remote;

use std::ops::Deref;

use serde::{Deserialize, Serialize};

use crate::error::EmbedError;

pub use cache::EmbeddingCache;
pub use hash::{hash_embed, tokenize, HashEmbedder};
pub use remote::{RemoteEmbedder, RemoteOptions};

/// Dense embedding vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EmbeddingVector(Vec<f64>);

impl EmbeddingVector {
    pub fn new(values: Vec<f64>) -> Self {
        Self(values)
    }

    pub fn zeros(dim: usize) -> Self {
        Self(vec![0.0; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn norm(&self) -> f64 {
        norm(&self.0)
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|x| x.is_finite())
    }

    pub fn normalized(mut self) -> Self {
        let n = self.norm();
        if n > 0.0 {
            self.0.iter_mut().for_each(|x| *x /= n);
        }
        self
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    /// Component-wise mean; `None` for an empty slice.
    pub fn mean(vectors: &[EmbeddingVector]) -> Option<EmbeddingVector> {
        let first = vectors.first()?;
        let mut acc = vec![0.0; first.dim()];
        for v in vectors {
            for (a, x) in acc.iter_mut().zip(v.iter()) {
                *a += x;
            }
        }
        let n = vectors.len() as f64;
        acc.iter_mut().for_each(|a| *a /= n);
        Some(EmbeddingVector(acc))
    }
}

impl Deref for EmbeddingVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl From<Vec<f64>> for EmbeddingVector {
    fn from(v: Vec<f64>) -> Self {
        Self(v)
    }
}

pub(crate) fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Cosine similarity on raw slices; zero when either side has zero norm.
/// Callers guarantee equal lengths.
pub fn cosine_slices(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let (na, nb) = (norm(a), norm(b));
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    (dot(a, b) / (na * nb)).clamp(-1.0, 1.0)
}

pub fn cosine(a: &EmbeddingVector, b: &EmbeddingVector) -> Result<f64, EmbedError> {
    if a.dim() != b.dim() {
        return Err(EmbedError::DimensionMismatch { expected: a.dim(), got: b.dim() });
    }
    Ok(cosine_slices(a, b))
}

/// Gradient of `cosine(a, b)` with respect to `a`, added into `out` scaled by
/// `scale`. Zero when either norm is zero.
pub(crate) fn add_cosine_grad(a: &[f64], b: &[f64], scale: f64, out: &mut [f64]) {
    let (na, nb) = (norm(a), norm(b));
    if na == 0.0 || nb == 0.0 {
        return;
    }
    let c = dot(a, b) / (na * nb);
    let inv = 1.0 / (na * nb);
    let self_coef = c / (na * na);
    for ((o, &ai), &bi) in out.iter_mut().zip(a).zip(b) {
        *o += scale * (bi * inv - self_coef * ai);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProviderKind {
    Hash,
    Remote,
}

/// Identifies an embedding provider; persisted in checkpoints.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProviderDescriptor {
    pub kind: ProviderKind,
    pub dimension: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model_name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub endpoint: Option<String>,
    #[serde(default = "default_true")]
    pub normalize: bool,
}

fn default_true() -> bool {
    true
}

impl ProviderDescriptor {
    pub fn hash(dimension: usize) -> Self {
        Self { kind: ProviderKind::Hash, dimension, model_name: None, endpoint: None, normalize: true }
    }

    pub fn remote(model_name: &str, endpoint: &str, dimension: usize) -> Self {
        Self {
            kind: ProviderKind::Remote,
            dimension,
            model_name: Some(model_name.to_string()),
            endpoint: Some(endpoint.to_string()),
            normalize: true,
        }
    }

    pub fn validate(&self) -> Result<(), EmbedError> {
        if self.dimension == 0 {
            return Err(EmbedError::Descriptor("dimension must be at least 1".into()));
        }
        if self.kind == ProviderKind::Remote && (self.model_name.is_none() || self.endpoint.is_none()) {
            return Err(EmbedError::Descriptor("remote providers need a model name and an endpoint".into()));
        }
        Ok(())
    }
}

/// The language-model stand-in: maps texts to fixed-dimension vectors.
pub trait TextEmbedder: Send + Sync {
    fn descriptor(&self) -> &ProviderDescriptor;

    fn dimension(&self) -> usize {
        self.descriptor().dimension
    }

    /// Embeds every text, returning vectors in input order.
    fn embed(&self, texts: &[String]) -> Result<Vec<EmbeddingVector>, EmbedError>;

    fn embed_one(&self, text: &str) -> Result<EmbeddingVector, EmbedError> {
        let mut v = self.embed(&[text.to_string()])?;
        Ok(v.pop().expect("one input yields one output"))
    }
}

/// Builds the provider a descriptor names.
pub fn provider_from_descriptor(
    desc: &ProviderDescriptor,
    options: RemoteOptions,
) -> Result<Box<dyn TextEmbedder>, EmbedError> {
    desc.validate()?;
    Ok(match desc.kind {
        ProviderKind::Hash => Box::new(HashEmbedder::new(desc.dimension)),
        ProviderKind::Remote => Box::new(RemoteEmbedder::new(desc.clone(), options)?),
    })
}
