use sha2::{Digest, Sha256};

use super::{normalize_f64, EmbeddingVector};
use crate::error::{Error, Result};

/// Deterministic stand-in for a learned image encoder.
///
/// `seed = SHA-256(bytes)`; block `i` is `SHA-256(seed || i as u32 LE)` and
/// contributes four raw values, one per 8-byte little-endian word `u`,
/// mapped to `(u / 2^64) * 2 - 1`. The first `dim` raw values are
/// normalized. Identical bytes always give identical vectors.
pub fn reference_embed(image_bytes: &[u8], dim: usize) -> Result<EmbeddingVector> {
    if image_bytes.is_empty() {
        return Err(Error::Embed("image bytes are empty".into()));
    }
    if dim == 0 {
        return Err(Error::Embed("dim must be positive".into()));
    }
    let seed = Sha256::digest(image_bytes);
    let mut raw = Vec::with_capacity(dim);
    let mut block_index: u32 = 0;
    while raw.len() < dim {
        let mut hasher = Sha256::new();
        hasher.update(seed);
        hasher.update(block_index.to_le_bytes());
        let block = hasher.finalize();
        for word in block.chunks_exact(8) {
            let u = u64::from_le_bytes(word.try_into().expect("8-byte word"));
            raw.push((u as f64 / 18_446_744_073_709_551_616.0) * 2.0 - 1.0);
        }
        block_index = block_index
            .checked_add(1)
            .ok_or_else(|| Error::Embed("dim too large".into()))?;
    }
    raw.truncate(dim);
    normalize_f64(&raw).map_err(|e| Error::Embed(e.to_string()))
}
