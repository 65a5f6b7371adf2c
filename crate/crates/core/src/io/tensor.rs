//! Binary tensor files.
//!
//! ```text
//! offset  size    field
//! 0       4       magic "SMAP"
//! 4       2       format version, u16 LE (currently 1)
//! 6       1       rank r, u8
//! 7       4r      dims, u32 LE each, outermost first
//! 7+4r    4n      payload, f32 LE, row-major, n = product of dims
//! 7+4r+4n 4       CRC-32 (IEEE) of the payload bytes, u32 LE
//! ```

use crate::stack::{RepresentationStack, StackError};
use ndarray::{Array3, ArrayD, ArrayViewD, IxDyn};
use std::path::Path;
use thiserror::Error;

pub const MAGIC: [u8; 4] = *b"SMAP";
pub const VERSION: u16 = 1;

#[derive(Debug, Error)]
pub enum TensorError {
    #[error("bad magic at byte 0: expected \"SMAP\", found {found:?}")]
    BadMagic { found: Vec<u8> },
    #[error("unsupported format version {version} at byte 4")]
    Version { version: u16 },
    #[error("file ends at byte {len} but the {what} needs bytes up to {needed}")]
    Truncated { what: &'static str, needed: u64, len: u64 },
    #[error("{extra} unexpected bytes after the checksum at byte {offset}")]
    Trailing { offset: u64, extra: u64 },
    #[error("checksum mismatch at byte {offset}: stored {stored:#010x}, payload hashes to {computed:#010x}")]
    Crc { offset: u64, stored: u32, computed: u32 },
    #[error("dims {dims:?} overflow the addressable size")]
    Overflow { dims: Vec<u32> },
    #[error("tensor rank {0} does not fit the format")]
    Rank(usize),
    #[error("dimension {0} does not fit in u32")]
    Dim(usize),
    #[error("expected a rank-3 stack, got dims {0:?}")]
    NotAStack(Vec<usize>),
    #[error(transparent)]
    Stack(#[from] StackError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Serializes any f32 tensor.
pub fn to_bytes(t: ArrayViewD<f32>) -> Result<Vec<u8>, TensorError> {
    let rank = u8::try_from(t.ndim()).map_err(|_| TensorError::Rank(t.ndim()))?;
    let mut out = Vec::with_capacity(7 + 4 * t.ndim() + 4 * t.len() + 4);
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.push(rank);
    for &d in t.shape() {
        let d32 = u32::try_from(d).map_err(|_| TensorError::Dim(d))?;
        out.extend_from_slice(&d32.to_le_bytes());
    }
    let start = out.len();
    // iter() walks in logical row-major order whatever the memory layout
    for v in t.iter() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    let crc = crc32fast::hash(&out[start..]);
    out.extend_from_slice(&crc.to_le_bytes());
    Ok(out)
}

fn take<'a>(bytes: &'a [u8], at: usize, n: usize, what: &'static str) -> Result<&'a [u8], TensorError> {
    bytes.get(at..at + n).ok_or(TensorError::Truncated {
        what,
        needed: (at + n) as u64,
        len: bytes.len() as u64,
    })
}

pub fn from_bytes(bytes: &[u8]) -> Result<ArrayD<f32>, TensorError> {
    let magic = take(bytes, 0, 4, "magic").map_err(|_| TensorError::BadMagic {
        found: bytes[..bytes.len().min(4)].to_vec(),
    })?;
    if magic != MAGIC {
        return Err(TensorError::BadMagic { found: magic.to_vec() });
    }
    let version = u16::from_le_bytes(take(bytes, 4, 2, "version")?.try_into().unwrap());
    if version != VERSION {
        return Err(TensorError::Version { version });
    }
    let rank = take(bytes, 6, 1, "rank")?[0] as usize;
    let dims: Vec<u32> = take(bytes, 7, 4 * rank, "dims")?
        .chunks_exact(4)
        .map(|c| u32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    let n = dims
        .iter()
        .try_fold(1usize, |acc, &d| acc.checked_mul(d as usize))
        .filter(|n| n.checked_mul(4).is_some())
        .ok_or_else(|| TensorError::Overflow { dims: dims.clone() })?;
    let start = 7 + 4 * rank;
    let payload = take(bytes, start, 4 * n, "payload")?;
    let crc_at = start + 4 * n;
    let stored = u32::from_le_bytes(take(bytes, crc_at, 4, "checksum")?.try_into().unwrap());
    let computed = crc32fast::hash(payload);
    if stored != computed {
        return Err(TensorError::Crc {
            offset: crc_at as u64,
            stored,
            computed,
        });
    }
    if bytes.len() > crc_at + 4 {
        return Err(TensorError::Trailing {
            offset: (crc_at + 4) as u64,
            extra: (bytes.len() - crc_at - 4) as u64,
        });
    }
    let data: Vec<f32> = payload
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    let shape: Vec<usize> = dims.iter().map(|&d| d as usize).collect();
    Ok(ArrayD::from_shape_vec(IxDyn(&shape), data).expect("length checked against dims"))
}

pub fn stack_to_bytes(stack: &RepresentationStack) -> Result<Vec<u8>, TensorError> {
    to_bytes(stack.data().view().into_dyn())
}

pub fn stack_from_bytes(bytes: &[u8]) -> Result<RepresentationStack, TensorError> {
    let t = from_bytes(bytes)?;
    let shape = t.shape().to_vec();
    let a: Array3<f32> = t.into_dimensionality().map_err(|_| TensorError::NotAStack(shape))?;
    Ok(RepresentationStack::from_channels(a)?)
}

pub fn write_stack(path: impl AsRef<Path>, stack: &RepresentationStack) -> Result<(), TensorError> {
    std::fs::write(path, stack_to_bytes(stack)?)?;
    Ok(())
}

pub fn read_stack(path: impl AsRef<Path>) -> Result<RepresentationStack, TensorError> {
    stack_from_bytes(&std::fs::read(path)?)
}
