//! Checkpoint file: `"ULWM"`, version byte, length-prefixed JSON config,
//! trainable arrays then running statistics as little-endian `f32`, and a
//! trailing CRC-32 over everything after the magic.

use std::io::{Read, Write};
use std::path::Path;

use super::config::ModelConfig;
use super::params::{build_model, ModelParams};
use super::ModelError;

pub const MAGIC: &[u8; 4] = b"ULWM";
pub const VERSION: u8 = 1;

pub fn encode_checkpoint(params: &ModelParams<f32>) -> Vec<u8> {
    let mut body = vec![VERSION];
    let config = serde_json::to_vec(&params.config).expect("config serializes");
    body.extend_from_slice(&(config.len() as u32).to_le_bytes());
    body.extend_from_slice(&config);
    let trainable = params.trainable();
    let n: usize = trainable.iter().map(|v| v.values.len()).sum();
    body.extend_from_slice(&(n as u64).to_le_bytes());
    for v in &trainable {
        for x in v.values {
            body.extend_from_slice(&x.to_le_bytes());
        }
    }
    let buffers = params.buffers();
    let n: usize = buffers.iter().map(|b| b.len()).sum();
    body.extend_from_slice(&(n as u64).to_le_bytes());
    for b in &buffers {
        for x in b.iter() {
            body.extend_from_slice(&x.to_le_bytes());
        }
    }
    let crc = crc32fast::hash(&body);
    let mut out = Vec::with_capacity(body.len() + 8);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&body);
    out.extend_from_slice(&crc.to_le_bytes());
    out
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], ModelError> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or(ModelError::CorruptCheckpoint("truncated".into()))?;
        let out = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn u32(&mut self) -> Result<u32, ModelError> {
        Ok(u32::from_le_bytes(
            self.take(4)?.try_into().expect("4 bytes"),
        ))
    }

    fn u64(&mut self) -> Result<u64, ModelError> {
        Ok(u64::from_le_bytes(
            self.take(8)?.try_into().expect("8 bytes"),
        ))
    }

    fn fill(&mut self, dst: &mut [f32]) -> Result<(), ModelError> {
        let raw = self.take(dst.len() * 4)?;
        for (d, chunk) in dst.iter_mut().zip(raw.chunks_exact(4)) {
            *d = f32::from_le_bytes(chunk.try_into().expect("4 bytes"));
        }
        Ok(())
    }
}

pub fn decode_checkpoint(bytes: &[u8]) -> Result<ModelParams<f32>, ModelError> {
    if bytes.len() < 4 || &bytes[..4] != MAGIC {
        return Err(ModelError::BadMagic);
    }
    if bytes.len() < 4 + 1 + 4 {
        return Err(ModelError::CorruptCheckpoint("truncated".into()));
    }
    let body = &bytes[4..bytes.len() - 4];
    let stored = u32::from_le_bytes(bytes[bytes.len() - 4..].try_into().expect("4 bytes"));
    if crc32fast::hash(body) != stored {
        return Err(ModelError::ChecksumMismatch);
    }
    if body[0] != VERSION {
        return Err(ModelError::VersionMismatch {
            expected: VERSION,
            found: body[0],
        });
    }
    let mut cur = Cursor {
        bytes: body,
        pos: 1,
    };
    let len = cur.u32()? as usize;
    let config: ModelConfig = serde_json::from_slice(cur.take(len)?)
        .map_err(|e| ModelError::CorruptCheckpoint(format!("config: {e}")))?;
    let mut params: ModelParams<f32> = build_model(&config, 0)?;
    let n = cur.u64()? as usize;
    if n != params.trainable_count() {
        return Err(ModelError::CorruptCheckpoint(format!(
            "{n} trainable values stored, config implies {}",
            params.trainable_count()
        )));
    }
    for v in params.trainable_mut() {
        cur.fill(v.values)?;
    }
    let n = cur.u64()? as usize;
    let expected: usize = params.buffers().iter().map(|b| b.len()).sum();
    if n != expected {
        return Err(ModelError::CorruptCheckpoint(format!(
            "{n} buffer values stored, config implies {expected}"
        )));
    }
    for b in params.buffers_mut() {
        cur.fill(b)?;
    }
    if cur.pos != body.len() {
        return Err(ModelError::CorruptCheckpoint("trailing bytes".into()));
    }
    Ok(params)
}

pub fn save_checkpoint(params: &ModelParams<f32>, path: &Path) -> Result<(), ModelError> {
    let mut f = std::fs::File::create(path)?;
    f.write_all(&encode_checkpoint(params))?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<ModelParams<f32>, ModelError> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut bytes)?;
    decode_checkpoint(&bytes)
}
