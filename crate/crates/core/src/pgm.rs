//! Binary PGM (P5) reader and writer.
//!
//! The writer always emits the canonical header `P5\n<w> <h>\n255\n`. Files
//! in that form round-trip byte for byte. Comments and other header
//! whitespace are accepted on read but not preserved.

use std::fs;
use std::path::Path;

use thiserror::Error;

use crate::imaging::{GrayFrame, ImageError};

#[derive(Debug, Error)]
pub enum PgmError {
    #[error("unsupported magic number {0:?}, expected P5")]
    UnsupportedMagic(String),
    #[error("malformed PGM header: {0}")]
    MalformedHeader(&'static str),
    #[error("maxval {0} exceeds 255")]
    MaxvalTooLarge(u32),
    #[error("truncated pixel data: expected {expected} bytes, found {actual}")]
    Truncated { expected: usize, actual: usize },
    #[error(transparent)]
    Image(#[from] ImageError),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

struct HeaderReader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> HeaderReader<'a> {
    fn skip_whitespace_and_comments(&mut self) {
        while let Some(&b) = self.bytes.get(self.pos) {
            if b == b'#' {
                while let Some(&b) = self.bytes.get(self.pos) {
                    self.pos += 1;
                    if b == b'\n' || b == b'\r' {
                        break;
                    }
                }
            } else if b.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn read_number(&mut self, what: &'static str) -> Result<u32, PgmError> {
        self.skip_whitespace_and_comments();
        let start = self.pos;
        while self.bytes.get(self.pos).is_some_and(u8::is_ascii_digit) {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(PgmError::MalformedHeader(what));
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or(PgmError::MalformedHeader(what))
    }
}

pub fn decode_pgm(bytes: &[u8]) -> Result<GrayFrame, PgmError> {
    if bytes.len() < 2 {
        return Err(PgmError::MalformedHeader("missing magic number"));
    }
    if &bytes[..2] != b"P5" {
        return Err(PgmError::UnsupportedMagic(
            String::from_utf8_lossy(&bytes[..2]).into_owned(),
        ));
    }
    let mut reader = HeaderReader { bytes, pos: 2 };
    if !reader
        .bytes
        .get(2)
        .is_some_and(|b| b.is_ascii_whitespace() || *b == b'#')
    {
        return Err(PgmError::MalformedHeader("no separator after magic number"));
    }
    let width = reader.read_number("width")?;
    let height = reader.read_number("height")?;
    let maxval = reader.read_number("maxval")?;
    if width == 0 || height == 0 {
        return Err(PgmError::MalformedHeader("zero dimension"));
    }
    if maxval == 0 {
        return Err(PgmError::MalformedHeader("zero maxval"));
    }
    if maxval > 255 {
        return Err(PgmError::MaxvalTooLarge(maxval));
    }
    // exactly one whitespace byte separates the header from the raster
    match reader.bytes.get(reader.pos) {
        Some(b) if b.is_ascii_whitespace() => reader.pos += 1,
        _ => return Err(PgmError::MalformedHeader("missing raster separator")),
    }
    let expected = width as usize * height as usize;
    let raster = &bytes[reader.pos..];
    if raster.len() < expected {
        return Err(PgmError::Truncated {
            expected,
            actual: raster.len(),
        });
    }
    Ok(GrayFrame::new(
        width as usize,
        height as usize,
        raster[..expected].to_vec(),
    )?)
}

pub fn encode_pgm(frame: &GrayFrame) -> Vec<u8> {
    let header = format!("P5\n{} {}\n255\n", frame.width(), frame.height());
    let mut out = Vec::with_capacity(header.len() + frame.data().len());
    out.extend_from_slice(header.as_bytes());
    out.extend_from_slice(frame.data());
    out
}

pub fn load_pgm(path: &Path) -> Result<GrayFrame, PgmError> {
    let bytes = fs::read(path).map_err(|source| PgmError::Io {
        path: path.display().to_string(),
        source,
    })?;
    decode_pgm(&bytes)
}

pub fn save_pgm(path: &Path, frame: &GrayFrame) -> Result<(), PgmError> {
    fs::write(path, encode_pgm(frame)).map_err(|source| PgmError::Io {
        path: path.display().to_string(),
        source,
    })
}
