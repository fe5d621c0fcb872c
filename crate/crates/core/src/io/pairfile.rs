//! Binary pair files.
//!
//! All integers and floats are little-endian.
//!
//! ```text
//! header   magic "SUFP" | version u16 | flags u8 | reserved u8 | dim u32 | count u64
//! inline   a: dim × f64 | b: dim × f64 | t u8          (flags bit 0 set)
//! by id    a_id u64 | b_id u64 | t u8                    (flags bit 0 clear)
//! trailer  SHA-256 of every preceding byte
//! ```
//!
//! Inline files carry features only: no ids and no class labels.

use std::fs;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::data::{InlinePair, PairDataset, SufficientLabel, SufficientPair};
use crate::error::{Error, Result};

pub const MAGIC: [u8; 4] = *b"SUFP";
pub const VERSION: u16 = 1;
pub const FLAG_INLINE: u8 = 1;
pub const HEADER_LEN: usize = 20;
pub const DIGEST_LEN: usize = 32;

pub fn encode_pairs(pd: &PairDataset) -> Vec<u8> {
    let (flags, dim) = match pd {
        PairDataset::Inline { dim, .. } => (FLAG_INLINE, *dim as u32),
        PairDataset::Referenced(_) => (0, 0),
    };
    let mut out = Vec::new();
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.push(flags);
    out.push(0);
    out.extend_from_slice(&dim.to_le_bytes());
    out.extend_from_slice(&(pd.len() as u64).to_le_bytes());
    match pd {
        PairDataset::Inline { pairs, .. } => {
            for p in pairs {
                for v in p.a.iter().chain(&p.b) {
                    out.extend_from_slice(&v.to_le_bytes());
                }
                out.push(p.t.as_u8());
            }
        }
        PairDataset::Referenced(pairs) => {
            for p in pairs {
                out.extend_from_slice(&p.a().to_le_bytes());
                out.extend_from_slice(&p.b().to_le_bytes());
                out.push(p.t.as_u8());
            }
        }
    }
    let digest = Sha256::digest(&out);
    out.extend_from_slice(&digest);
    out
}

pub fn decode_pairs(bytes: &[u8], path: &Path) -> Result<PairDataset> {
    let malformed = |m: String| Error::Malformed { path: path.into(), message: m };
    if bytes.len() < HEADER_LEN + DIGEST_LEN {
        return Err(Error::Truncated {
            path: path.into(),
            expected: (HEADER_LEN + DIGEST_LEN) as u64,
            found: bytes.len() as u64,
        });
    }
    if bytes[..4] != MAGIC {
        return Err(Error::MagicMismatch {
            path: path.into(),
            expected: u32::from_be_bytes(MAGIC),
            found: u32::from_be_bytes(bytes[..4].try_into().expect("4 bytes")),
        });
    }
    let version = u16::from_le_bytes([bytes[4], bytes[5]]);
    if version != VERSION {
        return Err(Error::VersionMismatch { expected: VERSION.into(), found: version.into() });
    }
    let (body, digest) = bytes.split_at(bytes.len() - DIGEST_LEN);
    if Sha256::digest(body).as_slice() != digest {
        return Err(Error::ChecksumFailure(path.into()));
    }
    let flags = bytes[6];
    if flags & !FLAG_INLINE != 0 || bytes[7] != 0 {
        return Err(malformed(format!("unknown flags {flags:#04x}")));
    }
    let dim = u32::from_le_bytes(bytes[8..12].try_into().expect("4 bytes")) as usize;
    let count = u64::from_le_bytes(bytes[12..20].try_into().expect("8 bytes"));
    let inline = flags & FLAG_INLINE != 0;
    let record = if inline { 16 * dim + 1 } else { 17 } as u64;
    let expected = HEADER_LEN as u64 + count.saturating_mul(record) + DIGEST_LEN as u64;
    if expected != bytes.len() as u64 {
        return Err(malformed(format!("{count} records need {expected} bytes, file has {}", bytes.len())));
    }
    let label = |b: u8| SufficientLabel::from_u8(b).ok_or_else(|| malformed(format!("label byte {b}")));
    let recs = body[HEADER_LEN..].chunks_exact(record as usize);
    if inline {
        let f = |c: &[u8]| -> Vec<f64> {
            c.chunks_exact(8).map(|b| f64::from_le_bytes(b.try_into().expect("8 bytes"))).collect()
        };
        let pairs = recs
            .map(|r| Ok(InlinePair { a: f(&r[..8 * dim]), b: f(&r[8 * dim..16 * dim]), t: label(r[16 * dim])? }))
            .collect::<Result<Vec<_>>>()?;
        PairDataset::inline(dim, pairs)
    } else {
        let id = |c: &[u8]| u64::from_le_bytes(c.try_into().expect("8 bytes"));
        let pairs =
            recs.map(|r| SufficientPair::new(id(&r[..8]), id(&r[8..16]), label(r[16])?)).collect::<Result<Vec<_>>>()?;
        PairDataset::referenced(pairs)
    }
}

pub fn save_pairs(pd: &PairDataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_pairs(pd)).map_err(|e| Error::io(path, e))
}

pub fn load_pairs(path: impl AsRef<Path>) -> Result<PairDataset> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_pairs(&bytes, path)
}
