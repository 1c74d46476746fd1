//! Intensity-centroid orientation over a discrete circular patch.

use std::f64::consts::PI;

use thiserror::Error;

use crate::counters::Tally;
use crate::image::Image;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CentroidError {
    #[error("radius must be at least 1")]
    ZeroRadius,
    #[error("patch of radius {radius} at ({x}, {y}) leaves the {width}x{height} image")]
    PatchOutOfBounds {
        x: usize,
        y: usize,
        radius: usize,
        width: usize,
        height: usize,
    },
}

/// Per-row half-widths of the discrete disc, index 0 at the equator.
///
/// The rows above the diagonal are mirrored from the columns so the patch is
/// its own transpose: `u <= hw[v]` iff `v <= hw[u]`. That makes the first
/// moments swap exactly under 90-degree grid rotations.
pub fn patch_half_widths(radius: usize) -> Vec<usize> {
    let r = radius as f64;
    let vmax = (r * std::f64::consts::FRAC_1_SQRT_2 + 1.0).floor() as usize;
    let vmin = (r * std::f64::consts::FRAC_1_SQRT_2).ceil() as usize;
    let mut hw = vec![0usize; radius + 2];
    for (v, slot) in hw.iter_mut().enumerate().take(vmax.min(radius) + 1) {
        *slot = (r * r - (v * v) as f64).sqrt().round() as usize;
    }
    let mut v0 = 0;
    for v in (vmin..=radius).rev() {
        while hw[v0] == hw[v0 + 1] {
            v0 += 1;
        }
        hw[v] = v0;
        v0 += 1;
    }
    hw.truncate(radius + 1);
    hw
}

/// Orientation from the first image moments of the circular patch around
/// (x, y): `atan2(m01, m10)` mapped into `[0, 2*pi)`, zero when both moments
/// vanish.
pub fn centroid_angle<T: Tally>(
    img: &Image,
    x: usize,
    y: usize,
    radius: usize,
    tally: &mut T,
) -> Result<f64, CentroidError> {
    if radius == 0 {
        return Err(CentroidError::ZeroRadius);
    }
    if !img.window_fits(x, y, radius) {
        return Err(CentroidError::PatchOutOfBounds {
            x,
            y,
            radius,
            width: img.width(),
            height: img.height(),
        });
    }

    let hw = patch_half_widths(radius);
    let mut m10: i64 = 0;
    let mut m01: i64 = 0;
    for dy in -(radius as i64)..=radius as i64 {
        let half = hw[dy.unsigned_abs() as usize] as i64;
        let row = img.row((y as i64 + dy) as usize);
        for dx in -half..=half {
            let intensity = row[(x as i64 + dx) as usize] as i64;
            tally.image_read(1);
            tally.mac(2);
            m10 += dx * intensity;
            m01 += dy * intensity;
        }
    }

    if m10 == 0 && m01 == 0 {
        return Ok(0.0);
    }
    let angle = (m01 as f64).atan2(m10 as f64);
    Ok(if angle < 0.0 { angle + 2.0 * PI } else { angle })
}
