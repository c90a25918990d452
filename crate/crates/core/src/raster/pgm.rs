//! Binary 16-bit PGM (P5, maxval 65535, big-endian samples).

use std::fs;
use std::path::Path;

use super::RasterImage;
use crate::error::{Error, Result};

pub fn read_raster(path: impl AsRef<Path>) -> Result<RasterImage> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_pgm(&bytes)
}

pub fn write_raster(img: &RasterImage, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_pgm(img)).map_err(|e| Error::io(path, e))
}

pub fn encode_pgm(img: &RasterImage) -> Vec<u8> {
    let header = format!("P5\n{} {}\n65535\n", img.width(), img.height());
    let mut out = Vec::with_capacity(header.len() + img.data().len() * 2);
    out.extend_from_slice(header.as_bytes());
    for v in img.data() {
        out.extend_from_slice(&v.to_be_bytes());
    }
    out
}

struct HeaderCursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl HeaderCursor<'_> {
    fn skip_whitespace_and_comments(&mut self) {
        while self.pos < self.bytes.len() {
            let b = self.bytes[self.pos];
            if b.is_ascii_whitespace() {
                self.pos += 1;
            } else if b == b'#' {
                while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                    self.pos += 1;
                }
            } else {
                break;
            }
        }
    }

    fn number(&mut self, what: &str) -> Result<u64> {
        self.skip_whitespace_and_comments();
        let start = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(Error::MalformedHeader(format!("expected {what}")));
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::MalformedHeader(format!("{what} out of range")))
    }
}

pub fn decode_pgm(bytes: &[u8]) -> Result<RasterImage> {
    if bytes.len() < 2 || &bytes[..2] != b"P5" {
        return Err(Error::MalformedHeader("missing P5 magic".into()));
    }
    let mut cur = HeaderCursor { bytes, pos: 2 };
    let width = cur.number("width")?;
    let height = cur.number("height")?;
    let maxval = cur.number("maxval")?;
    if width == 0 || height == 0 {
        return Err(Error::MalformedHeader(format!(
            "zero dimension {width}x{height}"
        )));
    }
    if maxval != 65535 {
        return Err(Error::UnsupportedMaxval(maxval));
    }
    // Exactly one whitespace byte separates the header from the raster.
    match bytes.get(cur.pos) {
        Some(b) if b.is_ascii_whitespace() => cur.pos += 1,
        _ => {
            return Err(Error::MalformedHeader(
                "missing whitespace after maxval".into(),
            ))
        }
    }
    let (width, height) = (width as usize, height as usize);
    let expected = width
        .checked_mul(height)
        .and_then(|n| n.checked_mul(2))
        .ok_or_else(|| Error::MalformedHeader("dimensions overflow".into()))?;
    let payload = &bytes[cur.pos..];
    if payload.len() < expected {
        return Err(Error::TruncatedPayload {
            expected,
            found: payload.len(),
        });
    }
    if payload.len() > expected {
        return Err(Error::MalformedHeader(format!(
            "{} trailing bytes after raster",
            payload.len() - expected
        )));
    }
    let data = payload
        .chunks_exact(2)
        .map(|b| u16::from_be_bytes([b[0], b[1]]))
        .collect();
    RasterImage::new(width, height, data)
}
