//! 3x3 non-maximum suppression over a response plane.

use thiserror::Error;

use crate::counters::Tally;
use crate::fast::FlagMap;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum NmsError {
    #[error("score plane has {actual} entries, flags are {width}x{height}")]
    PlaneSizeMismatch {
        width: usize,
        height: usize,
        actual: usize,
    },
}

/// Keeps a flagged pixel only when its score beats every 8-neighbor.
///
/// Unflagged pixels carry `f64::NEG_INFINITY` in the score plane. Exact ties
/// go to the lexicographically smallest (y, x), so of two equal adjacent
/// responses exactly one survives and no two survivors are ever 8-adjacent.
pub fn nms_3x3<T: Tally>(
    flags: &FlagMap,
    scores: &[f64],
    tally: &mut T,
) -> Result<FlagMap, NmsError> {
    let (width, height) = (flags.width(), flags.height());
    if scores.len() != width * height {
        return Err(NmsError::PlaneSizeMismatch {
            width,
            height,
            actual: scores.len(),
        });
    }

    let mut kept = FlagMap::new(width, height);
    'candidates: for (x, y) in flags.iter_flagged() {
        let score = scores[y * width + x];
        for dy in -1i64..=1 {
            for dx in -1i64..=1 {
                if dx == 0 && dy == 0 {
                    continue;
                }
                let nx = x as i64 + dx;
                let ny = y as i64 + dy;
                if nx < 0 || ny < 0 || nx >= width as i64 || ny >= height as i64 {
                    continue;
                }
                let neighbor = scores[ny as usize * width + nx as usize];
                tally.branch(1);
                let wins = score > neighbor
                    || (score == neighbor && (y, x) < (ny as usize, nx as usize));
                if !wins {
                    continue 'candidates;
                }
            }
        }
        kept.set(x, y, true);
    }
    Ok(kept)
}
