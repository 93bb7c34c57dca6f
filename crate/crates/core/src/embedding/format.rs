//! EMB1: a little-endian binary container for embedding batches.
//!
//! ```text
//! header   "EMB1" | version u8 = 1 | dim u32 | count u64        (17 bytes)
//! record   id_len u16 | id (UTF-8) | dim x f32
//! ```

use std::fs;
use std::path::Path;

use super::{EmbeddingBatch, EmbeddingVector, BOUNDARY_NORM_TOLERANCE};
use crate::error::{Error, Result};

pub const MAGIC: [u8; 4] = *b"EMB1";
pub const VERSION: u8 = 1;
pub const HEADER_LEN: usize = 4 + 1 + 4 + 8;

pub fn encode_embeddings(batch: &EmbeddingBatch) -> Result<Vec<u8>> {
    let dim = u32::try_from(batch.dim())
        .map_err(|_| Error::Format(format!("dim {} exceeds u32", batch.dim())))?;
    let mut out = Vec::with_capacity(HEADER_LEN + batch.len() * (2 + 16 + 4 * batch.dim()));
    out.extend_from_slice(&MAGIC);
    out.push(VERSION);
    out.extend_from_slice(&dim.to_le_bytes());
    out.extend_from_slice(&(batch.len() as u64).to_le_bytes());
    for (id, vector) in batch.iter() {
        let len = u16::try_from(id.len())
            .map_err(|_| Error::Format(format!("item id of {} bytes exceeds u16", id.len())))?;
        out.extend_from_slice(&len.to_le_bytes());
        out.extend_from_slice(id.as_bytes());
        for v in vector.as_slice() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    Ok(out)
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&end| end <= self.bytes.len());
        match end {
            Some(end) => {
                let out = &self.bytes[self.pos..end];
                self.pos = end;
                Ok(out)
            }
            None => Err(Error::Format(format!(
                "truncated file: need {n} bytes for {what} at offset {}",
                self.pos
            ))),
        }
    }

    fn array<const N: usize>(&mut self, what: &str) -> Result<[u8; N]> {
        Ok(self.take(N, what)?.try_into().expect("length checked"))
    }
}

pub fn decode_embeddings(bytes: &[u8]) -> Result<EmbeddingBatch> {
    let mut cur = Cursor { bytes, pos: 0 };
    let magic: [u8; 4] = cur.array("magic")?;
    if magic != MAGIC {
        return Err(Error::Format(format!(
            "bad magic {:?}",
            String::from_utf8_lossy(&magic)
        )));
    }
    let [version] = cur.array::<1>("version")?;
    if version != VERSION {
        return Err(Error::Format(format!("unsupported version {version}")));
    }
    let dim = u32::from_le_bytes(cur.array("dim")?) as usize;
    if dim == 0 {
        return Err(Error::Format("dim must be positive".into()));
    }
    let count = u64::from_le_bytes(cur.array("count")?);

    let mut batch = EmbeddingBatch::new(dim)?;
    for record in 0..count {
        let len = u16::from_le_bytes(cur.array("id length")?) as usize;
        let id = std::str::from_utf8(cur.take(len, "item id")?)
            .map_err(|_| Error::Format(format!("record {record}: item id is not UTF-8")))?
            .to_owned();
        let raw = cur.take(dim * 4, "vector")?;
        let values: Vec<f32> = raw
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().expect("chunk of 4")))
            .collect();
        let vector =
            EmbeddingVector::from_unit(values, BOUNDARY_NORM_TOLERANCE).map_err(|e| match e {
                Error::Normalization { reason, .. } => Error::Normalization {
                    item_id: Some(id.clone()),
                    reason,
                },
                other => other,
            })?;
        batch.push(id, vector)?;
    }
    if cur.pos != bytes.len() {
        return Err(Error::Format(format!(
            "{} trailing bytes after {count} records",
            bytes.len() - cur.pos
        )));
    }
    Ok(batch)
}

pub fn write_embedding_file(batch: &EmbeddingBatch, path: &Path) -> Result<()> {
    let bytes = encode_embeddings(batch)?;
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn read_embedding_file(path: &Path) -> Result<EmbeddingBatch> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_embeddings(&bytes)
}
