//! Binary checkpoint container.
//!
//! Layout (all integers little-endian); see `docs/checkpoint.md`:
//!
//! ```text
//! magic "SVBRDFCK" | version u32 | arch fingerprint u64 | config fingerprint u64
//! metadata length u32 | metadata UTF-8 (key=value lines)
//! array count u32 | per array: name length u16, name, rank u8, dims u64 × rank, f32 × product
//! SHA-256 of everything above (32 bytes)
//! ```

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::error::{ForgeError, Result};

/// File signature.
pub const MAGIC: &[u8; 8] = b"SVBRDFCK";
/// Format version this build reads and writes.
pub const FORMAT_VERSION: u32 = 1;
const DIGEST_LEN: usize = 32;
const HEADER_LEN: usize = 8 + 4 + 8 + 8;

/// One named f32 tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct NamedArray {
    /// Parameter or state name.
    pub name: String,
    /// Dimensions.
    pub shape: Vec<usize>,
    /// Row-major values.
    pub data: Vec<f32>,
}

/// Decoded checkpoint contents.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Checkpoint {
    /// Architecture fingerprint (tile size and widths).
    pub arch_fingerprint: u64,
    /// Fingerprint of the full training configuration.
    pub config_fingerprint: u64,
    /// Free-form string metadata.
    pub metadata: BTreeMap<String, String>,
    /// Tensors in write order.
    pub arrays: Vec<NamedArray>,
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.buf.len())
            .ok_or_else(|| ForgeError::CorruptCheckpoint(format!("truncated at byte {}", self.pos)))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().expect("2 bytes")))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn string(&mut self, n: usize) -> Result<String> {
        String::from_utf8(self.take(n)?.to_vec())
            .map_err(|_| ForgeError::CorruptCheckpoint("invalid UTF-8".into()))
    }
}

fn encode_metadata(meta: &BTreeMap<String, String>) -> Result<String> {
    let mut out = String::new();
    for (k, v) in meta {
        if k.contains(['=', '\n']) || v.contains('\n') {
            return Err(ForgeError::Config(format!("metadata entry {k:?} cannot be encoded")));
        }
        out.push_str(k);
        out.push('=');
        out.push_str(v);
        out.push('\n');
    }
    Ok(out)
}

fn decode_metadata(text: &str) -> Result<BTreeMap<String, String>> {
    text.lines()
        .map(|line| {
            line.split_once('=')
                .map(|(k, v)| (k.to_string(), v.to_string()))
                .ok_or_else(|| ForgeError::CorruptCheckpoint(format!("bad metadata line {line:?}")))
        })
        .collect()
}

impl Checkpoint {
    /// Array by name.
    pub fn array(&self, name: &str) -> Option<&NamedArray> {
        self.arrays.iter().find(|a| a.name == name)
    }

    /// Arrays whose name starts with `prefix`, with the prefix stripped.
    pub fn arrays_with_prefix(&self, prefix: &str) -> Vec<NamedArray> {
        self.arrays
            .iter()
            .filter_map(|a| {
                a.name.strip_prefix(prefix).map(|rest| NamedArray {
                    name: rest.to_string(),
                    shape: a.shape.clone(),
                    data: a.data.clone(),
                })
            })
            .collect()
    }

    /// Metadata value by key.
    pub fn meta(&self, key: &str) -> Result<&str> {
        self.metadata
            .get(key)
            .map(String::as_str)
            .ok_or_else(|| ForgeError::CorruptCheckpoint(format!("missing metadata {key}")))
    }

    /// Serialized bytes, digest included.
    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        out.extend_from_slice(&self.arch_fingerprint.to_le_bytes());
        out.extend_from_slice(&self.config_fingerprint.to_le_bytes());
        let meta = encode_metadata(&self.metadata)?;
        out.extend_from_slice(&(meta.len() as u32).to_le_bytes());
        out.extend_from_slice(meta.as_bytes());
        out.extend_from_slice(&(self.arrays.len() as u32).to_le_bytes());
        for a in &self.arrays {
            let count: usize = a.shape.iter().product();
            if count != a.data.len() || a.name.len() > u16::MAX as usize || a.shape.len() > u8::MAX as usize {
                return Err(ForgeError::Shape(format!("array {} is inconsistent with shape {:?}", a.name, a.shape)));
            }
            out.extend_from_slice(&(a.name.len() as u16).to_le_bytes());
            out.extend_from_slice(a.name.as_bytes());
            out.push(a.shape.len() as u8);
            for &d in &a.shape {
                out.extend_from_slice(&(d as u64).to_le_bytes());
            }
            for v in &a.data {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        let digest = Sha256::digest(&out);
        out.extend_from_slice(&digest);
        Ok(out)
    }

    /// Parses bytes, checking signature, version and digest.
    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < HEADER_LEN + DIGEST_LEN {
            return Err(ForgeError::CorruptCheckpoint(format!("file is only {} bytes", bytes.len())));
        }
        if &bytes[..8] != MAGIC {
            return Err(ForgeError::CorruptCheckpoint("bad signature".into()));
        }
        let found = u32::from_le_bytes(bytes[8..12].try_into().expect("4 bytes"));
        if found != FORMAT_VERSION {
            return Err(ForgeError::CheckpointVersion {
                expected: FORMAT_VERSION,
                found,
            });
        }
        let (body, digest) = bytes.split_at(bytes.len() - DIGEST_LEN);
        if Sha256::digest(body).as_slice() != digest {
            return Err(ForgeError::CorruptCheckpoint("checksum mismatch".into()));
        }
        let mut r = Reader { buf: body, pos: 12 };
        let arch_fingerprint = r.u64()?;
        let config_fingerprint = r.u64()?;
        let meta_len = r.u32()? as usize;
        let metadata = decode_metadata(&r.string(meta_len)?)?;
        let count = r.u32()? as usize;
        let mut arrays = Vec::with_capacity(count.min(4096));
        for _ in 0..count {
            let name_len = r.u16()? as usize;
            let name = r.string(name_len)?;
            let rank = r.u8()? as usize;
            let mut shape = Vec::with_capacity(rank);
            for _ in 0..rank {
                shape.push(r.u64()? as usize);
            }
            let n = shape
                .iter()
                .try_fold(1usize, |acc, &d| acc.checked_mul(d))
                .and_then(|n| n.checked_mul(4))
                .ok_or_else(|| ForgeError::CorruptCheckpoint(format!("array {name} is too large")))?;
            let data = r
                .take(n)?
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")))
                .collect();
            arrays.push(NamedArray { name, shape, data });
        }
        if r.pos != body.len() {
            return Err(ForgeError::CorruptCheckpoint("trailing bytes".into()));
        }
        Ok(Self {
            arch_fingerprint,
            config_fingerprint,
            metadata,
            arrays,
        })
    }

    /// Writes to a temporary file next to `path`, then renames it into place.
    pub fn write_atomic(&self, path: &Path) -> Result<()> {
        let bytes = self.to_bytes()?;
        let dir = match path.parent() {
            Some(p) if !p.as_os_str().is_empty() => p,
            _ => Path::new("."),
        };
        let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| ForgeError::io(dir, e))?;
        tmp.write_all(&bytes).map_err(|e| ForgeError::io(tmp.path(), e))?;
        tmp.as_file().sync_all().map_err(|e| ForgeError::io(tmp.path(), e))?;
        tmp.persist(path).map_err(|e| ForgeError::io(path, e.error))?;
        Ok(())
    }

    /// Reads and validates a checkpoint file.
    pub fn read(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| ForgeError::io(path, e))?;
        Self::from_bytes(&bytes)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Checkpoint {
        let mut metadata = BTreeMap::new();
        metadata.insert("iteration".to_string(), "12".to_string());
        Checkpoint {
            arch_fingerprint: 0xdead_beef,
            config_fingerprint: 7,
            metadata,
            arrays: vec![
                NamedArray {
                    name: "a".into(),
                    shape: vec![2, 2],
                    data: vec![1.0, -0.0, f32::MIN_POSITIVE, 3.5],
                },
                NamedArray {
                    name: "scalar".into(),
                    shape: vec![],
                    data: vec![0.25],
                },
            ],
        }
    }

    #[test]
    fn bytes_round_trip() {
        let c = sample();
        let back = Checkpoint::from_bytes(&c.to_bytes().unwrap()).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.array("a").unwrap().data[1].to_bits(), (-0.0f32).to_bits());
    }

    #[test]
    fn any_flipped_byte_is_detected() {
        let bytes = sample().to_bytes().unwrap();
        for i in 0..bytes.len() {
            let mut b = bytes.clone();
            b[i] ^= 0x40;
            assert!(Checkpoint::from_bytes(&b).is_err(), "flip at {i} accepted");
        }
    }

    #[test]
    fn truncation_is_detected() {
        let bytes = sample().to_bytes().unwrap();
        for n in [0, 10, bytes.len() / 2, bytes.len() - 1] {
            assert!(Checkpoint::from_bytes(&bytes[..n]).is_err());
        }
    }

    #[test]
    fn version_error_names_both_versions() {
        let mut bytes = sample().to_bytes().unwrap();
        bytes[8..12].copy_from_slice(&9u32.to_le_bytes());
        let err = Checkpoint::from_bytes(&bytes).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains('9') && msg.contains(&FORMAT_VERSION.to_string()), "{msg}");
    }
}
