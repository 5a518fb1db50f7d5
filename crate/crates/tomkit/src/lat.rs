//! `.lat` latent files.
//!
//! Layout: the line `TOMLAT1`, then `C H W` in ASCII decimal, each line
//! terminated by `\n`, then `C·H·W` little-endian `f32` values in C, H, W
//! row-major order.

use std::path::Path;

use tomkit_core::fusion::Latent;

use crate::error::{Error, FormatError, Result};

pub const LAT_MAGIC: &[u8] = b"TOMLAT1\n";

pub fn encode_lat(latent: &Latent) -> Vec<u8> {
    let [c, h, w] = latent.dims();
    let mut out = LAT_MAGIC.to_vec();
    out.extend_from_slice(format!("{c} {h} {w}\n").as_bytes());
    out.reserve(latent.data().len() * 4);
    for v in latent.data() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode_lat(bytes: &[u8]) -> Result<Latent, FormatError> {
    let rest = bytes
        .strip_prefix(LAT_MAGIC)
        .ok_or_else(|| FormatError::Header("missing TOMLAT1 magic line".into()))?;
    let end = rest
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| FormatError::Header("unterminated dimension line".into()))?;
    let line = std::str::from_utf8(&rest[..end]).map_err(|_| FormatError::Header("non-ASCII dimension line".into()))?;
    let dims: Vec<usize> = line
        .split(' ')
        .map(str::parse)
        .collect::<Result<_, _>>()
        .map_err(|_| FormatError::Header(format!("bad dimension line {line:?}")))?;
    let [c, h, w] = dims[..] else {
        return Err(FormatError::Header(format!("expected three dimensions, got {line:?}")));
    };
    let payload = &rest[end + 1..];
    let expected = c * h * w * 4;
    if payload.len() != expected {
        return Err(FormatError::Payload {
            expected,
            actual: payload.len(),
        });
    }
    let data = payload
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
        .collect();
    Ok(Latent::new([c, h, w], data)?)
}

pub fn read_lat(path: impl AsRef<Path>) -> Result<Latent> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_lat(&bytes).map_err(|e| Error::format(path, e))
}

pub fn write_lat(latent: &Latent, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, encode_lat(latent)).map_err(|e| Error::io(path, e))
}
