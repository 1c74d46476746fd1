//! Grayscale 8-bit image container, row-major.

use thiserror::Error;

/// Errors produced while constructing an [`Image`].
#[derive(Debug, Error, PartialEq, Eq)]
pub enum ImageError {
    #[error("image dimensions must be at least 1x1, got {width}x{height}")]
    ZeroDimension { width: usize, height: usize },
    #[error("pixel buffer length {actual} does not match {width}x{height} = {expected}")]
    DataLength {
        width: usize,
        height: usize,
        expected: usize,
        actual: usize,
    },
}

/// An 8-bit grayscale raster. Pixel (x, y) lives at `data[y * width + x]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Image {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl Image {
    /// Builds an image from a row-major pixel buffer.
    pub fn from_raw(width: usize, height: usize, data: Vec<u8>) -> Result<Self, ImageError> {
        if width == 0 || height == 0 {
            return Err(ImageError::ZeroDimension { width, height });
        }
        let expected = width * height;
        if data.len() != expected {
            return Err(ImageError::DataLength {
                width,
                height,
                expected,
                actual: data.len(),
            });
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    /// A width x height image filled with a constant intensity.
    pub fn filled(width: usize, height: usize, value: u8) -> Result<Self, ImageError> {
        Self::from_raw(width, height, vec![value; width * height])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u8 {
        debug_assert!(x < self.width && y < self.height);
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, value: u8) {
        debug_assert!(x < self.width && y < self.height);
        self.data[y * self.width + x] = value;
    }

    /// One full pixel row.
    #[inline]
    pub fn row(&self, y: usize) -> &[u8] {
        &self.data[y * self.width..(y + 1) * self.width]
    }

    /// The raw row-major pixel buffer.
    pub fn as_bytes(&self) -> &[u8] {
        &self.data
    }

    /// True when every border of a `half`-wide window around (x, y) stays in bounds.
    #[inline]
    pub fn window_fits(&self, x: usize, y: usize, half: usize) -> bool {
        x >= half && y >= half && x + half < self.width && y + half < self.height
    }
}
