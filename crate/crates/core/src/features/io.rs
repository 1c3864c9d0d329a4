//! Binary feature files.
//!
//! Layout, all integers little-endian:
//!
//! | offset | size | field                                  |
//! |--------|------|----------------------------------------|
//! | 0      | 4    | magic `SPKF`                           |
//! | 4      | 2    | format version (`1`)                   |
//! | 6      | 1    | method tag (see [`Method::code`])      |
//! | 7      | 1    | reserved, zero                         |
//! | 8      | 4    | `dim` (u32)                            |
//! | 12     | 4    | frame count (u32)                      |
//! | 16     | 8·n  | `f64` values, row-major, one row/frame |

use std::io::{Read, Write};
use std::path::Path;

use super::{FeatureError, FeatureSequence, Method};

pub const FEATURE_MAGIC: [u8; 4] = *b"SPKF";
pub const FEATURE_VERSION: u16 = 1;

pub fn encode_features(fs: &FeatureSequence) -> Vec<u8> {
    let mut out = Vec::with_capacity(16 + 8 * fs.len() * fs.dim());
    out.extend_from_slice(&FEATURE_MAGIC);
    out.extend_from_slice(&FEATURE_VERSION.to_le_bytes());
    out.push(fs.method().code());
    out.push(0);
    out.extend_from_slice(&(fs.dim() as u32).to_le_bytes());
    out.extend_from_slice(&(fs.len() as u32).to_le_bytes());
    for v in fs.vectors().iter().flatten() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode_features(bytes: &[u8]) -> Result<FeatureSequence, FeatureError> {
    let bad = |m: &str| FeatureError::Format(m.to_string());
    if bytes.len() < 16 || bytes[..4] != FEATURE_MAGIC {
        return Err(bad("missing SPKF header"));
    }
    let version = u16::from_le_bytes([bytes[4], bytes[5]]);
    if version != FEATURE_VERSION {
        return Err(FeatureError::Format(format!("unsupported version {version}")));
    }
    let method = Method::from_code(bytes[6]).ok_or_else(|| bad("unknown method tag"))?;
    let dim = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    let frames = u32::from_le_bytes(bytes[12..16].try_into().unwrap()) as usize;
    let body = &bytes[16..];
    if body.len() != 8 * dim * frames {
        return Err(FeatureError::Format(format!(
            "expected {} value bytes, found {}",
            8 * dim * frames,
            body.len()
        )));
    }
    let values: Vec<f64> = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    let vectors = if dim == 0 {
        vec![Vec::new(); frames]
    } else {
        values.chunks(dim).map(<[f64]>::to_vec).collect()
    };
    FeatureSequence::new(vectors, dim, method)
}

pub fn write_features(path: impl AsRef<Path>, fs: &FeatureSequence) -> Result<(), FeatureError> {
    let mut file = std::fs::File::create(path).map_err(|e| FeatureError::Io(e.to_string()))?;
    file.write_all(&encode_features(fs))
        .map_err(|e| FeatureError::Io(e.to_string()))
}

pub fn read_features(path: impl AsRef<Path>) -> Result<FeatureSequence, FeatureError> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|e| FeatureError::Io(e.to_string()))?;
    decode_features(&bytes)
}
