//! Binary epoch-dataset cache.
//!
//! Layout (little-endian): `"ULWS"`, version byte, `u64` N, C, T, `u32`
//! sample rate, `C` channel labels and `N` subject keys each as `u32` length
//! plus UTF-8 bytes, `N·C·T` `f32` samples, `N` `u8` labels, then a CRC-32 of
//! everything between the magic and the checksum.

use std::fs;
use std::path::Path;

use super::dataset::EpochDataset;
use super::labels::StageClass;
use super::PreprocessError;
use crate::nn::Tensor3;

pub const CACHE_MAGIC: &[u8; 4] = b"ULWS";
pub const CACHE_VERSION: u8 = 0x01;

fn push_str(out: &mut Vec<u8>, s: &str) {
    out.extend_from_slice(&(s.len() as u32).to_le_bytes());
    out.extend_from_slice(s.as_bytes());
}

pub fn encode_cache(dataset: &EpochDataset) -> Result<Vec<u8>, PreprocessError> {
    dataset.validate()?;
    let (n, c, t) = dataset.x.shape();
    let mut out = Vec::with_capacity(64 + 4 * n * c * t + 8 * n);
    out.extend_from_slice(CACHE_MAGIC);
    out.push(CACHE_VERSION);
    for v in [n, c, t] {
        out.extend_from_slice(&(v as u64).to_le_bytes());
    }
    out.extend_from_slice(&dataset.sample_rate_hz.to_le_bytes());
    for s in dataset.channel_labels.iter().chain(&dataset.subject_keys) {
        push_str(&mut out, s);
    }
    for v in dataset.x.data() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out.extend(dataset.y.iter().map(|&s| s as u8));
    let crc = crc32fast::hash(&out[CACHE_MAGIC.len()..]);
    out.extend_from_slice(&crc.to_le_bytes());
    Ok(out)
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], PreprocessError> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| PreprocessError::CorruptCache("unexpected end of data".into()))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32, PreprocessError> {
        Ok(u32::from_le_bytes(
            self.take(4)?.try_into().expect("4 bytes"),
        ))
    }

    fn u64(&mut self) -> Result<usize, PreprocessError> {
        let v = u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes"));
        usize::try_from(v).map_err(|_| PreprocessError::CorruptCache(format!("size {v} too large")))
    }

    fn string(&mut self) -> Result<String, PreprocessError> {
        let len = self.u32()? as usize;
        String::from_utf8(self.take(len)?.to_vec())
            .map_err(|_| PreprocessError::CorruptCache("label is not UTF-8".into()))
    }
}

pub fn decode_cache(bytes: &[u8]) -> Result<EpochDataset, PreprocessError> {
    if bytes.len() < 4 || &bytes[..4] != CACHE_MAGIC {
        return Err(PreprocessError::BadMagic);
    }
    let version = *bytes
        .get(4)
        .ok_or_else(|| PreprocessError::CorruptCache("missing version".into()))?;
    if version != CACHE_VERSION {
        return Err(PreprocessError::VersionMismatch {
            expected: CACHE_VERSION,
            found: version,
        });
    }
    if bytes.len() < 9 {
        return Err(PreprocessError::CorruptCache("missing checksum".into()));
    }
    let (body, crc) = bytes.split_at(bytes.len() - 4);
    let stored = u32::from_le_bytes(crc.try_into().expect("4 bytes"));
    if crc32fast::hash(&body[4..]) != stored {
        return Err(PreprocessError::ChecksumMismatch);
    }

    let mut r = Reader {
        bytes: body,
        pos: 5,
    };
    let (n, c, t) = (r.u64()?, r.u64()?, r.u64()?);
    let sample_rate_hz = r.u32()?;
    let channel_labels = (0..c).map(|_| r.string()).collect::<Result<Vec<_>, _>>()?;
    let subject_keys = (0..n).map(|_| r.string()).collect::<Result<Vec<_>, _>>()?;
    let count = n
        .checked_mul(c)
        .and_then(|v| v.checked_mul(t))
        .ok_or_else(|| PreprocessError::CorruptCache("payload size overflows".into()))?;
    let payload = r.take(
        count
            .checked_mul(4)
            .ok_or_else(|| PreprocessError::CorruptCache("payload size overflows".into()))?,
    )?;
    let data = payload
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes(b.try_into().expect("4 bytes")))
        .collect();
    let y = r
        .take(n)?
        .iter()
        .map(|&b| {
            StageClass::from_index(b as usize)
                .ok_or_else(|| PreprocessError::CorruptCache(format!("label byte {b}")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    if r.pos != body.len() {
        return Err(PreprocessError::CorruptCache("trailing bytes".into()));
    }
    let x = Tensor3::from_vec(n, c, t, data)
        .map_err(|e| PreprocessError::CorruptCache(e.to_string()))?;
    EpochDataset::new(x, y, subject_keys, channel_labels, sample_rate_hz)
}

pub fn write_cache(dataset: &EpochDataset, path: &Path) -> Result<(), PreprocessError> {
    fs::write(path, encode_cache(dataset)?)?;
    Ok(())
}

pub fn read_cache(path: &Path) -> Result<EpochDataset, PreprocessError> {
    decode_cache(&fs::read(path)?)
}

/// CRC-32 of a cache file's bytes, used to identify datasets in run manifests.
pub fn cache_checksum(bytes: &[u8]) -> u32 {
    crc32fast::hash(bytes)
}
