//! Minimal binary PGM (P5) reader and writer.
//!
//! Only 8-bit binary PGM is supported: magic `P5`, ASCII width/height/maxval
//! with `#` comments allowed between tokens, a single whitespace byte, then
//! `width * height` intensity bytes. Writing always emits the canonical
//! header `P5\n{w} {h}\n255\n`, so a canonical file survives a load/save
//! round trip byte for byte.

use std::io::{self, Write};
use std::path::Path;

use thiserror::Error;

use crate::image::Image;

#[derive(Debug, Error)]
pub enum PgmError {
    #[error("not a binary PGM: expected magic \"P5\"")]
    BadMagic,
    #[error("malformed PGM header: {0}")]
    Header(String),
    #[error("unsupported maxval {0} (only maxval <= 255 is supported)")]
    MaxvalTooLarge(u32),
    #[error("truncated PGM payload: expected {expected} pixel bytes, found {actual}")]
    Truncated { expected: usize, actual: usize },
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Parses a binary PGM byte stream into an [`Image`].
pub fn load_pgm(bytes: &[u8]) -> Result<Image, PgmError> {
    if bytes.len() < 2 || &bytes[0..2] != b"P5" {
        return Err(PgmError::BadMagic);
    }
    let mut pos = 2;
    let width = read_header_number(bytes, &mut pos)? as usize;
    let height = read_header_number(bytes, &mut pos)? as usize;
    let maxval = read_header_number(bytes, &mut pos)?;
    if maxval > 255 {
        return Err(PgmError::MaxvalTooLarge(maxval));
    }
    if maxval == 0 {
        return Err(PgmError::Header("maxval must be positive".into()));
    }
    if width == 0 || height == 0 {
        return Err(PgmError::Header(format!(
            "dimensions must be positive, got {width}x{height}"
        )));
    }
    // Exactly one whitespace byte separates the header from the payload.
    match bytes.get(pos) {
        Some(b) if b.is_ascii_whitespace() => pos += 1,
        _ => {
            return Err(PgmError::Header(
                "missing whitespace between header and pixel data".into(),
            ))
        }
    }
    let expected = width * height;
    let payload = &bytes[pos..];
    if payload.len() < expected {
        return Err(PgmError::Truncated {
            expected,
            actual: payload.len(),
        });
    }
    let image = Image::from_raw(width, height, payload[..expected].to_vec())
        .expect("dimensions validated above");
    Ok(image)
}

/// Serializes an image as binary PGM with the canonical header.
pub fn write_pgm(img: &Image) -> Vec<u8> {
    let mut out = Vec::with_capacity(img.width() * img.height() + 32);
    out.extend_from_slice(format!("P5\n{} {}\n255\n", img.width(), img.height()).as_bytes());
    out.extend_from_slice(img.as_bytes());
    out
}

/// Reads a PGM image from a file.
pub fn load_pgm_file<P: AsRef<Path>>(path: P) -> Result<Image, PgmError> {
    let bytes = std::fs::read(path)?;
    load_pgm(&bytes)
}

/// Writes an image to a PGM file.
pub fn write_pgm_file<P: AsRef<Path>>(img: &Image, path: P) -> Result<(), PgmError> {
    let mut file = std::fs::File::create(path)?;
    file.write_all(&write_pgm(img))?;
    Ok(())
}

/// Reads the next ASCII integer token, skipping whitespace and `#` comments.
fn read_header_number(bytes: &[u8], pos: &mut usize) -> Result<u32, PgmError> {
    loop {
        match bytes.get(*pos) {
            Some(b) if b.is_ascii_whitespace() => *pos += 1,
            Some(b'#') => {
                while let Some(b) = bytes.get(*pos) {
                    *pos += 1;
                    if *b == b'\n' {
                        break;
                    }
                }
            }
            Some(b) if b.is_ascii_digit() => break,
            Some(b) => {
                return Err(PgmError::Header(format!(
                    "unexpected byte 0x{b:02x} in header"
                )))
            }
            None => return Err(PgmError::Header("header ended early".into())),
        }
    }
    let mut value: u64 = 0;
    while let Some(b) = bytes.get(*pos) {
        if !b.is_ascii_digit() {
            break;
        }
        value = value * 10 + u64::from(b - b'0');
        if value > u64::from(u32::MAX) {
            return Err(PgmError::Header("numeric header field overflows".into()));
        }
        *pos += 1;
    }
    Ok(value as u32)
}
