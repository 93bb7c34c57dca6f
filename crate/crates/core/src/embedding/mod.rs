//! Unit-norm embedding vectors, the EMB1 interchange file, and a
//! deterministic hash-based reference embedder.

mod format;
mod manifest;
mod reference;

use std::collections::HashMap;

use crate::error::{Error, Result};

pub use format::{
    decode_embeddings, encode_embeddings, read_embedding_file, write_embedding_file, HEADER_LEN,
    MAGIC, VERSION,
};
pub use manifest::{read_image_manifest, write_image_manifest, ManifestEntry};
pub use reference::reference_embed;

/// Default dimensionality, matching a ViT-Base [CLS] representation.
pub const DEFAULT_DIM: usize = 768;

/// Norm tolerance applied to vectors arriving from files or callers.
pub const BOUNDARY_NORM_TOLERANCE: f64 = 1e-4;

/// Norm tolerance guaranteed by [`normalize`].
pub const INTERNAL_NORM_TOLERANCE: f64 = 1e-6;

/// A dense vector of unit Euclidean length.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingVector {
    values: Vec<f32>,
}

impl EmbeddingVector {
    /// Wrap values that are already unit length, within `tolerance`.
    pub fn from_unit(values: Vec<f32>, tolerance: f64) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::norm(None, "empty vector"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::norm(None, "non-finite component"));
        }
        let norm = l2_norm(&values);
        if (norm - 1.0).abs() > tolerance {
            return Err(Error::norm(
                None,
                format!("norm {norm} deviates from 1 by more than {tolerance}"),
            ));
        }
        Ok(Self { values })
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn as_slice(&self) -> &[f32] {
        &self.values
    }

    pub fn into_inner(self) -> Vec<f32> {
        self.values
    }

    pub fn norm(&self) -> f64 {
        l2_norm(&self.values)
    }
}

impl AsRef<[f32]> for EmbeddingVector {
    fn as_ref(&self) -> &[f32] {
        &self.values
    }
}

pub(crate) fn l2_norm(values: &[f32]) -> f64 {
    values
        .iter()
        .map(|&v| f64::from(v) * f64::from(v))
        .sum::<f64>()
        .sqrt()
}

/// Scale `values` to unit length.
pub fn normalize(values: &[f32]) -> Result<EmbeddingVector> {
    let wide: Vec<f64> = values.iter().map(|&v| f64::from(v)).collect();
    normalize_f64(&wide)
}

pub(crate) fn normalize_f64(values: &[f64]) -> Result<EmbeddingVector> {
    if values.is_empty() {
        return Err(Error::norm(None, "empty vector"));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::norm(None, "non-finite component"));
    }
    let norm = values.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm == 0.0 || !norm.is_finite() {
        return Err(Error::norm(
            None,
            "vector has zero or unrepresentable length",
        ));
    }
    let out: Vec<f32> = values.iter().map(|v| (v / norm) as f32).collect();
    EmbeddingVector::from_unit(out, INTERNAL_NORM_TOLERANCE)
}

/// An ordered set of embeddings sharing one dimensionality.
#[derive(Debug, Clone)]
pub struct EmbeddingBatch {
    dim: usize,
    entries: Vec<(String, EmbeddingVector)>,
    lookup: HashMap<String, usize>,
}

impl PartialEq for EmbeddingBatch {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim && self.entries == other.entries
    }
}

impl EmbeddingBatch {
    pub fn new(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Parameter("embedding dim must be positive".into()));
        }
        Ok(Self {
            dim,
            entries: Vec::new(),
            lookup: HashMap::new(),
        })
    }

    pub fn push(&mut self, item_id: impl Into<String>, vector: EmbeddingVector) -> Result<()> {
        let item_id = item_id.into();
        if vector.dim() != self.dim {
            return Err(Error::Format(format!(
                "item {item_id:?} has dim {} but batch dim is {}",
                vector.dim(),
                self.dim
            )));
        }
        if self.lookup.contains_key(&item_id) {
            return Err(Error::Format(format!("duplicate item id {item_id:?}")));
        }
        self.lookup.insert(item_id.clone(), self.entries.len());
        self.entries.push((item_id, vector));
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, item_id: &str) -> Option<&EmbeddingVector> {
        self.lookup.get(item_id).map(|&i| &self.entries[i].1)
    }

    pub fn entries(&self) -> &[(String, EmbeddingVector)] {
        &self.entries
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &EmbeddingVector)> {
        self.entries.iter().map(|(id, v)| (id.as_str(), v))
    }
}
