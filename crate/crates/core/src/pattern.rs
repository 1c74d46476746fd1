//! Synthetic segment-test patterns.
//!
//! Each case tiles the image with `grid x grid` cells and places one
//! candidate pixel at every cell center. The candidate keeps the background
//! intensity (100) while selected ring neighbors read bright (200):
//!
//! * case 1 - neighbors 1..9 bright (nine continuous from the start),
//! * case 2 - neighbors 6..14 bright (nine continuous, mid-ring),
//! * case 3 - neighbors 14..16 and 1..6 bright (nine continuous across the
//!   index-16 wrap),
//! * case 4 - neighbors 1..8 bright (eight continuous, one short),
//! * case 5 - alternating bright/similar, no two adjacent bright.
//!
//! The bright pixels are drawn as straight bands and one-pixel lines that
//! run border to border. A straight band crosses any radius-3 ring in at
//! most eight consecutive positions, and a line in two nearly antipodal
//! ones, so the band pixels themselves never pass the segment test: the
//! cell centers are the only pixels the detectors respond to. Cases that
//! would otherwise paint the candidate (or, for case 4, its ninth neighbor)
//! carve that pixel back to background.

use thiserror::Error;

use crate::image::{Image, ImageError};

/// Background intensity of every pattern.
pub const PATTERN_BACKGROUND: u8 = 100;
/// Intensity of the bright ring neighbors.
pub const PATTERN_BRIGHT: u8 = 200;
/// Smallest cell size keeping neighboring band copies out of every ring.
pub const MIN_CELL: usize = 21;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PatternError {
    #[error("unknown test case {0}, expected 1-5")]
    UnknownCase(u8),
    #[error("grid must be at least 1")]
    BadGrid,
    #[error("cell size {cell} too small, bands need at least {MIN_CELL}")]
    CellTooSmall { cell: usize },
}

impl From<ImageError> for PatternError {
    fn from(_: ImageError) -> Self {
        PatternError::BadGrid
    }
}

/// Cell-center candidate positions in row-major order.
pub fn pattern_centers(grid: usize, cell: usize) -> Vec<(usize, usize)> {
    let h = cell / 2;
    let mut centers = Vec::with_capacity(grid * grid);
    for i in 0..grid {
        for j in 0..grid {
            centers.push((j * cell + h, i * cell + h));
        }
    }
    centers
}

/// Bright mask over ring positions 1..=16 (index 0 is neighbor 1).
pub fn case_ring_profile(case_id: u8) -> Result<[bool; 16], PatternError> {
    let mut profile = [false; 16];
    match case_id {
        1 => profile[0..9].fill(true),
        2 => profile[5..14].fill(true),
        3 => {
            profile[13..16].fill(true);
            profile[0..6].fill(true);
        }
        4 => profile[0..8].fill(true),
        5 => (0..16).step_by(2).for_each(|i| profile[i] = true),
        other => return Err(PatternError::UnknownCase(other)),
    }
    Ok(profile)
}

/// Whether the candidate centers of a case pass the FAST-9 test.
pub fn case_center_is_feature(case_id: u8) -> Result<bool, PatternError> {
    case_ring_profile(case_id)?;
    Ok(matches!(case_id, 1..=3))
}

/// Renders a test case into a `grid*cell` square image.
pub fn generate_test_pattern(case_id: u8, grid: usize, cell: usize) -> Result<Image, PatternError> {
    case_ring_profile(case_id)?;
    if grid == 0 {
        return Err(PatternError::BadGrid);
    }
    if cell < MIN_CELL {
        return Err(PatternError::CellTooSmall { cell });
    }

    let side = grid * cell;
    let h = (cell / 2) as i64;
    let period = cell as i64;
    let mut img = Image::filled(side, side, PATTERN_BACKGROUND)?;

    for y in 0..side {
        let yi = y as i64;
        for x in 0..side {
            let xi = x as i64;
            let bright = match case_id {
                // Vertical bands over ring columns 0..=3: neighbors 1..9
                // bright; case 4 trims neighbor 9 with an extra hole below.
                1 | 4 => (0..=3).contains(&(xi - h).rem_euclid(period)),
                // A band with normal (-1, 3). Its footprint on the
                // d = 3*dy - dx axis is [0, 10], which meets the ring at
                // exactly neighbors 6..14, and the center hole never extends
                // a boundary pixel's dark run past eight.
                2 => {
                    let d = (3 * (yi - h) - (xi - h)).rem_euclid(period);
                    d <= 10
                }
                // Mirror band with footprint [-10, 0]: neighbors 14..16, 1..6.
                3 => {
                    let d = (3 * (yi - h) - (xi - h)).rem_euclid(period);
                    d == 0 || d >= period - 10
                }
                // Four one-pixel lines through every center: vertical,
                // horizontal and both diagonals hit the ring at the eight
                // odd neighbors.
                5 => {
                    (xi - h).rem_euclid(period) == 0
                        || (yi - h).rem_euclid(period) == 0
                        || (xi + yi - 2 * h).rem_euclid(period) == 0
                        || (xi - yi).rem_euclid(period) == 0
                }
                _ => unreachable!("case id validated above"),
            };
            if bright {
                img.set(x, y, PATTERN_BRIGHT);
            }
        }
    }

    // Candidates stay at background intensity; case 4 also blanks neighbor 9
    // so the bright run stops at eight.
    for (cx, cy) in pattern_centers(grid, cell) {
        img.set(cx, cy, PATTERN_BACKGROUND);
        if case_id == 4 {
            img.set(cx, cy + 3, PATTERN_BACKGROUND);
        }
    }
    Ok(img)
}
