//! Multi-level image pyramid with bilinear downsampling.

use thiserror::Error;

use crate::image::Image;

/// Smallest level side the detectors can still work with.
pub const MIN_LEVEL_SIDE: usize = 16;

#[derive(Debug, Error, PartialEq)]
pub enum PyramidError {
    #[error("pyramid needs at least one level")]
    NoLevels,
    #[error("scale factor must be > 1, got {0}")]
    BadScaleFactor(f64),
    #[error("level {level} would be {width}x{height}, below the {MIN_LEVEL_SIDE}x{MIN_LEVEL_SIDE} minimum")]
    LevelTooSmall {
        level: usize,
        width: usize,
        height: usize,
    },
}

/// An ordered stack of progressively downsampled images. Level 0 is the
/// input unmodified; level L is `floor(dim / scale_factor^L)` per side.
#[derive(Debug, Clone)]
pub struct Pyramid {
    levels: Vec<Image>,
    scale_factor: f64,
    level_scales: Vec<f64>,
}

impl Pyramid {
    pub fn levels(&self) -> &[Image] {
        &self.levels
    }

    pub fn level(&self, l: usize) -> &Image {
        &self.levels[l]
    }

    pub fn num_levels(&self) -> usize {
        self.levels.len()
    }

    pub fn scale_factor(&self) -> f64 {
        self.scale_factor
    }

    /// Cumulative scale of level `l` relative to level 0.
    pub fn level_scale(&self, l: usize) -> f64 {
        self.level_scales[l]
    }
}

/// Builds a pyramid by resampling level 0 at each cumulative scale.
///
/// Every level is interpolated directly from the input (not from the previous
/// level), bilinearly, with pixel centers aligned between source and target.
pub fn build_pyramid(img: &Image, levels: usize, scale_factor: f64) -> Result<Pyramid, PyramidError> {
    if levels == 0 {
        return Err(PyramidError::NoLevels);
    }
    if scale_factor <= 1.0 || !scale_factor.is_finite() {
        return Err(PyramidError::BadScaleFactor(scale_factor));
    }

    let mut stack = Vec::with_capacity(levels);
    let mut level_scales = Vec::with_capacity(levels);
    stack.push(img.clone());
    level_scales.push(1.0);

    for l in 1..levels {
        let scale = scale_factor.powi(l as i32);
        let width = (img.width() as f64 / scale).floor() as usize;
        let height = (img.height() as f64 / scale).floor() as usize;
        if width < MIN_LEVEL_SIDE || height < MIN_LEVEL_SIDE {
            return Err(PyramidError::LevelTooSmall {
                level: l,
                width,
                height,
            });
        }
        stack.push(resample_bilinear(img, width, height, scale));
        level_scales.push(scale);
    }

    Ok(Pyramid {
        levels: stack,
        scale_factor,
        level_scales,
    })
}

/// Bilinear resampling with pixel-center alignment at a fixed scale.
fn resample_bilinear(src: &Image, width: usize, height: usize, scale: f64) -> Image {
    let max_x = src.width() - 1;
    let max_y = src.height() - 1;
    let mut data = Vec::with_capacity(width * height);
    for y in 0..height {
        let sy = ((y as f64 + 0.5) * scale - 0.5).clamp(0.0, max_y as f64);
        let y0 = sy.floor() as usize;
        let y1 = (y0 + 1).min(max_y);
        let fy = sy - y0 as f64;
        for x in 0..width {
            let sx = ((x as f64 + 0.5) * scale - 0.5).clamp(0.0, max_x as f64);
            let x0 = sx.floor() as usize;
            let x1 = (x0 + 1).min(max_x);
            let fx = sx - x0 as f64;

            let tl = src.get(x0, y0) as f64;
            let tr = src.get(x1, y0) as f64;
            let bl = src.get(x0, y1) as f64;
            let br = src.get(x1, y1) as f64;
            // This form interpolates a constant patch exactly.
            let top = tl + (tr - tl) * fx;
            let bottom = bl + (br - bl) * fx;
            let value = top + (bottom - top) * fy;
            data.push(value.round().clamp(0.0, 255.0) as u8);
        }
    }
    Image::from_raw(width, height, data).expect("dimensions checked by caller")
}
