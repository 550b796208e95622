//! Grayscale images and binary PGM (P5) I/O.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

const MAXVAL: u16 = u16::MAX;

/// A row-major grayscale image with intensities nominally in `[0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Image {
    width: usize,
    height: usize,
    pixels: Vec<f64>,
}

impl Image {
    pub fn new(width: usize, height: usize, pixels: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidArgument(format!(
                "image dimensions must be positive, got {width}x{height}"
            )));
        }
        if pixels.len() != width * height {
            return Err(Error::DimensionMismatch {
                context: "image pixel count",
                expected: width * height,
                found: pixels.len(),
            });
        }
        Ok(Self { width, height, pixels })
    }

    pub fn zeros(width: usize, height: usize) -> Result<Self> {
        Self::new(width, height, vec![0.0; width * height])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    pub fn into_pixels(self) -> Vec<f64> {
        self.pixels
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.pixels[row * self.width + col]
    }

    /// Encodes as 16-bit binary PGM with big-endian samples. Values are
    /// clamped to `[0, 1]`; NaN is written as 0.
    pub fn to_pgm_bytes(&self) -> Vec<u8> {
        let header = format!("P5\n{} {}\n{}\n", self.width, self.height, MAXVAL);
        let mut out = Vec::with_capacity(header.len() + 2 * self.pixels.len());
        out.extend_from_slice(header.as_bytes());
        for &p in &self.pixels {
            out.extend_from_slice(&quantize(p).to_be_bytes());
        }
        out
    }

    /// Decodes a binary PGM with 8-bit (`maxval < 256`) or 16-bit samples.
    pub fn from_pgm_bytes(bytes: &[u8]) -> Result<Self> {
        let mut pos = 0usize;
        let magic = header_token(bytes, &mut pos)?;
        if magic.1 != b"P5" {
            return Err(parse_error(magic.0, "expected magic number P5"));
        }
        let width = header_number(bytes, &mut pos, "width")?;
        let height = header_number(bytes, &mut pos, "height")?;
        let maxval_at = pos;
        let maxval = header_number(bytes, &mut pos, "maxval")?;
        if width == 0 || height == 0 {
            return Err(parse_error(maxval_at, "image dimensions must be positive"));
        }
        if maxval == 0 || maxval > usize::from(MAXVAL) {
            return Err(parse_error(maxval_at, "maxval must be in 1..=65535"));
        }
        // Exactly one whitespace byte separates the header from the raster.
        match bytes.get(pos) {
            Some(b) if b.is_ascii_whitespace() => pos += 1,
            _ => return Err(parse_error(pos, "expected whitespace after maxval")),
        }
        let sample_bytes = if maxval < 256 { 1 } else { 2 };
        let count = width
            .checked_mul(height)
            .ok_or_else(|| parse_error(maxval_at, "image dimensions overflow"))?;
        let needed = count * sample_bytes;
        let raster = &bytes[pos..];
        if raster.len() < needed {
            return Err(parse_error(
                bytes.len(),
                format!("raster truncated: expected {needed} bytes, found {}", raster.len()),
            ));
        }
        let scale = maxval as f64;
        let mut pixels = Vec::with_capacity(count);
        for i in 0..count {
            let v = if sample_bytes == 1 {
                u16::from(raster[i])
            } else {
                u16::from_be_bytes([raster[2 * i], raster[2 * i + 1]])
            };
            if usize::from(v) > maxval {
                return Err(parse_error(pos + i * sample_bytes, "sample exceeds maxval"));
            }
            pixels.push(f64::from(v) / scale);
        }
        Image::new(width, height, pixels)
    }

    /// Writes atomically via a temporary sibling file.
    pub fn save_pgm(&self, path: &Path) -> Result<()> {
        let tmp = path.with_extension("pgm.tmp");
        fs::write(&tmp, self.to_pgm_bytes())?;
        fs::rename(&tmp, path)?;
        Ok(())
    }

    pub fn load_pgm(path: &Path) -> Result<Self> {
        Self::from_pgm_bytes(&fs::read(path)?)
    }
}

fn quantize(p: f64) -> u16 {
    if p.is_nan() {
        return 0;
    }
    (p.clamp(0.0, 1.0) * f64::from(MAXVAL)).round() as u16
}

fn parse_error(offset: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        offset,
        message: message.into(),
    }
}

/// Next whitespace-delimited header token, skipping `#` comments.
fn header_token<'a>(bytes: &'a [u8], pos: &mut usize) -> Result<(usize, &'a [u8])> {
    loop {
        match bytes.get(*pos) {
            None => return Err(parse_error(*pos, "unexpected end of header")),
            Some(b'#') => {
                while let Some(&b) = bytes.get(*pos) {
                    *pos += 1;
                    if b == b'\n' {
                        break;
                    }
                }
            }
            Some(b) if b.is_ascii_whitespace() => *pos += 1,
            Some(_) => break,
        }
    }
    let start = *pos;
    while let Some(b) = bytes.get(*pos) {
        if b.is_ascii_whitespace() || *b == b'#' {
            break;
        }
        *pos += 1;
    }
    Ok((start, &bytes[start..*pos]))
}

fn header_number(bytes: &[u8], pos: &mut usize, what: &str) -> Result<usize> {
    let (at, tok) = header_token(bytes, pos)?;
    std::str::from_utf8(tok)
        .ok()
        .filter(|s| s.bytes().all(|b| b.is_ascii_digit()))
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| parse_error(at, format!("invalid {what}")))
}
