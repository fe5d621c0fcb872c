//! IDX files as used by the MNIST family: big-endian magic
//! `0x0000_08DD` (`DD` = number of dimensions), one big-endian `u32` per
//! dimension, then unsigned bytes in row-major order.

use std::fs;
use std::path::Path;

use crate::data::{Example, FullyLabeledDataset};
use crate::error::{Error, Result};

pub const IMAGE_MAGIC: u32 = 0x0000_0803;
pub const LABEL_MAGIC: u32 = 0x0000_0801;

fn read_u32(bytes: &[u8], at: usize) -> u32 {
    u32::from_be_bytes(bytes[at..at + 4].try_into().expect("4 bytes"))
}

/// Validates the header and returns the dimensions and the payload.
fn parse<'a>(path: &Path, bytes: &'a [u8], magic: u32) -> Result<(Vec<usize>, &'a [u8])> {
    if bytes.len() < 4 {
        return Err(Error::Truncated { path: path.into(), expected: 4, found: bytes.len() as u64 });
    }
    let found = read_u32(bytes, 0);
    if found != magic {
        return Err(Error::MagicMismatch { path: path.into(), expected: magic, found });
    }
    let ndim = (magic & 0xff) as usize;
    let header = 4 + 4 * ndim;
    if bytes.len() < header {
        return Err(Error::Truncated { path: path.into(), expected: header as u64, found: bytes.len() as u64 });
    }
    let dims: Vec<usize> = (0..ndim).map(|k| read_u32(bytes, 4 + 4 * k) as usize).collect();
    let expected = header as u64 + dims.iter().map(|&d| d as u64).product::<u64>();
    if (bytes.len() as u64) < expected {
        return Err(Error::Truncated { path: path.into(), expected, found: bytes.len() as u64 });
    }
    if bytes.len() as u64 > expected {
        return Err(Error::Malformed {
            path: path.into(),
            message: format!("{} trailing bytes", bytes.len() as u64 - expected),
        });
    }
    Ok((dims, &bytes[header..]))
}

fn read(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}

/// Loads an image/label file pair. Pixels are scaled to `[0, 1]` and
/// flattened row-major; ids are positions; the class count is one more than
/// the largest label (at least 2).
pub fn load_idx(images: impl AsRef<Path>, labels: impl AsRef<Path>) -> Result<FullyLabeledDataset> {
    let (ip, lp) = (images.as_ref(), labels.as_ref());
    let ib = read(ip)?;
    let lb = read(lp)?;
    let (idims, pixels) = parse(ip, &ib, IMAGE_MAGIC)?;
    let (ldims, ys) = parse(lp, &lb, LABEL_MAGIC)?;
    if idims[0] != ldims[0] {
        return Err(Error::CountMismatch { images: idims[0], labels: ldims[0] });
    }
    let d = idims[1] * idims[2];
    let class_count = ys.iter().map(|&y| y as usize + 1).max().unwrap_or(0).max(2);
    let examples = pixels
        .chunks_exact(d.max(1))
        .zip(ys)
        .enumerate()
        .map(|(i, (px, &y))| Example {
            id: i as u64,
            x: px.iter().map(|&b| f64::from(b) / 255.0).collect(),
            y: y as usize,
        })
        .collect();
    FullyLabeledDataset::new(examples, class_count, d)
}

/// Writes `ds` as square images (`d` must be a perfect square) with
/// features quantized to bytes via `round(255·x)`, clamped to `[0, 255]`.
pub fn save_idx(ds: &FullyLabeledDataset, images: impl AsRef<Path>, labels: impl AsRef<Path>) -> Result<()> {
    let side = (ds.dim() as f64).sqrt().round() as usize;
    if side * side != ds.dim() {
        return Err(Error::InvalidConfig(format!("dimension {} is not a square image", ds.dim())));
    }
    if ds.class_count() > 256 {
        return Err(Error::InvalidConfig("IDX labels hold at most 256 classes".into()));
    }
    let n = ds.len() as u32;
    let mut ib = Vec::with_capacity(16 + ds.len() * ds.dim());
    for v in [IMAGE_MAGIC, n, side as u32, side as u32] {
        ib.extend_from_slice(&v.to_be_bytes());
    }
    let mut lb = Vec::with_capacity(8 + ds.len());
    for v in [LABEL_MAGIC, n] {
        lb.extend_from_slice(&v.to_be_bytes());
    }
    for e in ds.examples() {
        ib.extend(e.x.iter().map(|v| (v * 255.0).round().clamp(0.0, 255.0) as u8));
        lb.push(e.y as u8);
    }
    let (ip, lp) = (images.as_ref(), labels.as_ref());
    fs::write(ip, ib).map_err(|e| Error::io(ip, e))?;
    fs::write(lp, lb).map_err(|e| Error::io(lp, e))
}
