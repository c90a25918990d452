//! `.fr` float rasters: ASCII line `FR <w> <h> <c>\n` followed by
//! `w*h*c` little-endian `f32` values, row-major and channel-interleaved.

use std::fs;
use std::path::Path;

use super::{FloatRaster, MAX_CHANNELS};
use crate::error::{Error, Result};

pub fn encode_float_raster(r: &FloatRaster) -> Vec<u8> {
    let header = format!("FR {} {} {}\n", r.width(), r.height(), r.channels());
    let mut out = Vec::with_capacity(header.len() + r.data().len() * 4);
    out.extend_from_slice(header.as_bytes());
    for v in r.data() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode_float_raster(bytes: &[u8]) -> Result<FloatRaster> {
    let nl = bytes
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| Error::MalformedHeader("missing FR header line".into()))?;
    let header = std::str::from_utf8(&bytes[..nl])
        .map_err(|_| Error::MalformedHeader("FR header is not ASCII".into()))?;
    let fields: Vec<&str> = header.split(' ').collect();
    if fields.len() != 4 || fields[0] != "FR" {
        return Err(Error::MalformedHeader(format!("bad FR header {header:?}")));
    }
    let num = |s: &str, what: &str| -> Result<usize> {
        s.parse()
            .map_err(|_| Error::MalformedHeader(format!("bad {what} {s:?}")))
    };
    let (w, h, c) = (
        num(fields[1], "width")?,
        num(fields[2], "height")?,
        num(fields[3], "channels")?,
    );
    if c == 0 || c > MAX_CHANNELS {
        return Err(Error::UnsupportedChannels(c));
    }
    if w == 0 || h == 0 {
        return Err(Error::MalformedHeader(format!("zero dimension {w}x{h}")));
    }
    let expected = w
        .checked_mul(h)
        .and_then(|n| n.checked_mul(c))
        .and_then(|n| n.checked_mul(4))
        .ok_or_else(|| Error::MalformedHeader("dimensions overflow".into()))?;
    let payload = &bytes[nl + 1..];
    if payload.len() < expected {
        return Err(Error::TruncatedPayload {
            expected,
            found: payload.len(),
        });
    }
    if payload.len() > expected {
        return Err(Error::DimensionMismatch(format!(
            "{} bytes of payload for a {w}x{h}x{c} raster",
            payload.len()
        )));
    }
    let data = payload
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
        .collect();
    FloatRaster::new(w, h, c, data)
}

pub fn write_float_raster(r: &FloatRaster, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_float_raster(r)).map_err(|e| Error::io(path, e))
}

pub fn read_float_raster(path: impl AsRef<Path>) -> Result<FloatRaster> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_float_raster(&bytes)
}
