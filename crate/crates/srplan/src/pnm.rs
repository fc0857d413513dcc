//! Binary PGM (`P5`) and PPM (`P6`) with 8-bit samples.

use std::fs;
use std::path::Path;

use srplan_core::{Image, ImageError};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PnmError {
    #[error("not a binary PGM/PPM file (magic {0:?})")]
    Magic(String),
    #[error("malformed header: {0}")]
    Header(&'static str),
    #[error("maxval {0} is not supported, only 255")]
    MaxVal(u32),
    #[error("pixel data truncated: expected {expected} bytes, found {found}")]
    Truncated { expected: usize, found: usize },
    #[error("{0} trailing bytes after pixel data")]
    Trailing(usize),
    #[error(transparent)]
    Image(#[from] ImageError),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Cursor<'_> {
    fn skip_space_and_comments(&mut self) {
        while let Some(&b) = self.bytes.get(self.pos) {
            if b == b'#' {
                while self.bytes.get(self.pos).is_some_and(|&c| c != b'\n' && c != b'\r') {
                    self.pos += 1;
                }
            } else if b.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn number(&mut self, what: &'static str) -> Result<u32, PnmError> {
        self.skip_space_and_comments();
        let start = self.pos;
        while self.bytes.get(self.pos).is_some_and(u8::is_ascii_digit) {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(PnmError::Header(what));
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or(PnmError::Header(what))
    }
}

pub fn decode(bytes: &[u8]) -> Result<Image, PnmError> {
    let channels = match bytes.get(..2) {
        Some(b"P5") => 1,
        Some(b"P6") => 3,
        other => return Err(PnmError::Magic(String::from_utf8_lossy(other.unwrap_or(bytes)).into_owned())),
    };
    let mut cur = Cursor { bytes, pos: 2 };
    let width = cur.number("width")? as usize;
    let height = cur.number("height")? as usize;
    let maxval = cur.number("maxval")?;
    if maxval != 255 {
        return Err(PnmError::MaxVal(maxval));
    }
    // Exactly one whitespace byte separates the header from the raster.
    match bytes.get(cur.pos) {
        Some(b) if b.is_ascii_whitespace() => cur.pos += 1,
        _ => return Err(PnmError::Header("missing whitespace after maxval")),
    }
    let expected = width * height * channels;
    let data = &bytes[cur.pos..];
    if data.len() < expected {
        return Err(PnmError::Truncated { expected, found: data.len() });
    }
    if data.len() > expected {
        return Err(PnmError::Trailing(data.len() - expected));
    }
    Ok(Image::new(width, height, channels, data.to_vec())?)
}

pub fn encode(image: &Image) -> Vec<u8> {
    let magic = if image.channels() == 1 { "P5" } else { "P6" };
    let mut out = format!("{magic}\n{} {}\n255\n", image.width(), image.height()).into_bytes();
    out.extend_from_slice(image.data());
    out
}

pub fn read(path: &Path) -> Result<Image, PnmError> {
    let bytes = fs::read(path).map_err(|source| PnmError::Io { path: path.display().to_string(), source })?;
    decode(&bytes)
}

pub fn write(path: &Path, image: &Image) -> Result<(), PnmError> {
    fs::write(path, encode(image)).map_err(|source| PnmError::Io { path: path.display().to_string(), source })
}
