//! Portable Float Map reader and writer.
//!
//! Header: `PF` (RGB) or `Pf` (grey), then width and height, then a scale
//! whose sign selects the byte order (negative = little-endian), each token
//! separated by whitespace and the scale followed by exactly one whitespace
//! byte. Rows are stored bottom-up. The writer always emits
//! `Pf\n<w> <h>\n-1.0\n` (or `PF`) with a little-endian payload.

use std::path::Path;

use tomkit_core::{DepthMap, Grid};

use crate::error::{Error, FormatError, Result};

struct Header {
    channels: usize,
    width: usize,
    height: usize,
    little_endian: bool,
    payload_offset: usize,
}

fn parse_header(bytes: &[u8]) -> Result<Header, FormatError> {
    let bad = |msg: &str| FormatError::Header(msg.to_owned());
    let channels = match bytes.get(..2) {
        Some(b"PF") => 3,
        Some(b"Pf") => 1,
        _ => return Err(bad("missing PF/Pf magic")),
    };
    let mut pos = 2;
    let mut token = |what: &str| -> Result<&str, FormatError> {
        let start_ws = pos;
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if pos == start_ws {
            return Err(bad(&format!("expected whitespace before {what}")));
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(bad(&format!("missing {what}")));
        }
        std::str::from_utf8(&bytes[start..pos]).map_err(|_| bad(&format!("non-ASCII {what}")))
    };
    let width: usize = token("width")?.parse().map_err(|_| bad("width is not an integer"))?;
    let height: usize = token("height")?.parse().map_err(|_| bad("height is not an integer"))?;
    let scale: f64 = token("scale")?.parse().map_err(|_| bad("scale is not a number"))?;
    if width == 0 || height == 0 {
        return Err(bad("zero dimension"));
    }
    if scale == 0.0 || !scale.is_finite() {
        return Err(bad("scale must be finite and non-zero"));
    }
    match bytes.get(pos) {
        Some(b) if b.is_ascii_whitespace() => pos += 1,
        _ => return Err(bad("scale must be followed by a single whitespace byte")),
    }
    Ok(Header {
        channels,
        width,
        height,
        little_endian: scale < 0.0,
        payload_offset: pos,
    })
}

/// Decodes a PFM byte stream into a top-down grid.
pub fn decode_pfm(bytes: &[u8]) -> Result<Grid<f32>, FormatError> {
    let header = parse_header(bytes)?;
    let row_len = header.width * header.channels;
    let expected = row_len * header.height * 4;
    let payload = &bytes[header.payload_offset..];
    if payload.len() != expected {
        return Err(FormatError::Payload {
            expected,
            actual: payload.len(),
        });
    }
    let decode = |chunk: &[u8]| {
        let raw = [chunk[0], chunk[1], chunk[2], chunk[3]];
        if header.little_endian {
            f32::from_le_bytes(raw)
        } else {
            f32::from_be_bytes(raw)
        }
    };
    let mut data = Vec::with_capacity(row_len * header.height);
    for file_row in payload.chunks_exact(row_len * 4).rev() {
        data.extend(file_row.chunks_exact(4).map(decode));
    }
    Ok(Grid::new(header.height, header.width, header.channels, data)?)
}

/// Encodes a grid as little-endian PFM. Non-finite samples are refused.
pub fn encode_pfm(grid: &Grid<f32>) -> Result<Vec<u8>, FormatError> {
    if let Some(index) = grid.data().iter().position(|v| !v.is_finite()) {
        return Err(FormatError::NonFinite(index));
    }
    Ok(encode_unchecked(grid))
}

fn encode_unchecked(grid: &Grid<f32>) -> Vec<u8> {
    let magic = if grid.channels() == 3 { "PF" } else { "Pf" };
    let mut out = format!("{magic}\n{} {}\n-1.0\n", grid.width(), grid.height()).into_bytes();
    let row_len = grid.width() * grid.channels();
    out.reserve(grid.data().len() * 4);
    for row in grid.data().chunks_exact(row_len).rev() {
        for v in row {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

pub fn read_pfm(path: impl AsRef<Path>) -> Result<Grid<f32>> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_pfm(&bytes).map_err(|e| Error::format(path, e))
}

pub fn write_pfm(grid: &Grid<f32>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let bytes = encode_pfm(grid).map_err(|e| Error::format(path, e))?;
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// Reads a single-channel PFM as a depth map; non-finite samples are
/// marked invalid.
pub fn read_depth_pfm(path: impl AsRef<Path>) -> Result<DepthMap<f32>> {
    let path = path.as_ref();
    let grid = read_pfm(path)?;
    DepthMap::from_grid(grid).map_err(|e| Error::format(path, e))
}

/// Writes a depth map; invalid samples are stored as `+inf`.
pub fn write_depth_pfm(depth: &DepthMap<f32>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let grid = Grid::new(
        depth.height(),
        depth.width(),
        1,
        depth
            .values()
            .iter()
            .zip(depth.validity().bits())
            .map(|(&v, &ok)| if ok { v } else { f32::INFINITY })
            .collect(),
    )?;
    std::fs::write(path, encode_unchecked(&grid)).map_err(|e| Error::io(path, e))
}
