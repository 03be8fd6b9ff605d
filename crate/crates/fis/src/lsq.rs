//! `.lsq` latent dumps: a 16-byte header of four little-endian `u32`
//! (frames, height, width, channels) followed by the `f32` payload in
//! little-endian, row-major `(frame, height, width, channel)` order.

use std::path::Path;

use fis_core::LatentSequence;

use crate::report::write_atomic;

pub const HEADER_LEN: usize = 16;

#[derive(Debug, thiserror::Error)]
pub enum LsqError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("file is {0} bytes, shorter than the 16-byte header")]
    Truncated(usize),
    #[error("header declares {expected} payload bytes, found {found}")]
    PayloadLength { expected: usize, found: usize },
    #[error("dimension {0} does not fit in u32")]
    DimensionOverflow(usize),
    #[error(transparent)]
    Latent(#[from] fis_core::Error),
}

pub fn encode(x: &LatentSequence) -> Result<Vec<u8>, LsqError> {
    let (f, h, w, d) = x.shape();
    let mut out = Vec::with_capacity(HEADER_LEN + 4 * x.data().len());
    for dim in [f, h, w, d] {
        let dim = u32::try_from(dim).map_err(|_| LsqError::DimensionOverflow(dim))?;
        out.extend_from_slice(&dim.to_le_bytes());
    }
    for v in x.data() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    Ok(out)
}

pub fn decode(bytes: &[u8]) -> Result<LatentSequence, LsqError> {
    if bytes.len() < HEADER_LEN {
        return Err(LsqError::Truncated(bytes.len()));
    }
    let (header, payload) = bytes.split_at(HEADER_LEN);
    let dims: Vec<usize> = header
        .chunks_exact(4)
        .map(|c| u32::from_le_bytes([c[0], c[1], c[2], c[3]]) as usize)
        .collect();
    let expected = dims.iter().product::<usize>() * 4;
    if payload.len() != expected {
        return Err(LsqError::PayloadLength {
            expected,
            found: payload.len(),
        });
    }
    let data = payload
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect();
    Ok(LatentSequence::new(
        dims[0], dims[1], dims[2], dims[3], data,
    )?)
}

pub fn write(path: &Path, x: &LatentSequence) -> Result<(), LsqError> {
    write_atomic(path, &encode(x)?)?;
    Ok(())
}

pub fn read(path: &Path) -> Result<LatentSequence, LsqError> {
    decode(&std::fs::read(path)?)
}
