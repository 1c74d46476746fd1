//! Harris corner response over a square window of Sobel gradients.
//!
//! Three kernels compute the same score:
//!
//! * [`harris_direct`] applies the full 3x3 Sobel operator at every window
//!   cell independently;
//! * [`harris_separable_full`] runs the two 1-D passes of the separated
//!   operator over a tile, storing every intermediate plane;
//! * [`harris_semiseparable`] interleaves the two passes with a three-row
//!   circular buffer so only three rows of intermediates ever exist, and
//!   shares per-column gradient sums across the tile's scoring columns.
//!
//! All moment arithmetic is exact 64-bit integer math and the final floating
//! multiply happens in one shared routine, so the three kernels agree bit
//! for bit.

use thiserror::Error;

use crate::counters::Tally;
use crate::image::Image;

/// Harris response parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HarrisParams {
    /// Trace weight, conventionally 0.04.
    pub k: f64,
    /// Side of the gradient window, odd.
    pub window: usize,
    /// Scale applied once to the raw integer score.
    pub norm_factor: f64,
}

#[derive(Debug, Error, PartialEq)]
pub enum HarrisError {
    #[error("k = {0} outside the accepted 0.04..=0.06 range")]
    BadK(f64),
    #[error("window must be odd and within 3..=31, got {0}")]
    BadWindow(usize),
    #[error("pixel ({x}, {y}) needs {needed} pixels of border, image is {width}x{height}")]
    WindowOutOfBounds {
        x: usize,
        y: usize,
        needed: usize,
        width: usize,
        height: usize,
    },
    #[error("tile {x0},{y0} size {width}x{height} does not fit the image or its apron")]
    TileOutOfBounds {
        x0: usize,
        y0: usize,
        width: usize,
        height: usize,
    },
}

/// Default normalization keeping scores in a comparable floating range.
pub fn default_norm_factor(window: usize) -> f64 {
    (1.0 / (4.0 * window as f64 * 255.0)).powi(4)
}

impl HarrisParams {
    pub fn new(k: f64, window: usize, norm_factor: f64) -> Result<Self, HarrisError> {
        if !(0.04..=0.06).contains(&k) {
            return Err(HarrisError::BadK(k));
        }
        if !(3..=31).contains(&window) || window.is_multiple_of(2) {
            return Err(HarrisError::BadWindow(window));
        }
        Ok(Self {
            k,
            window,
            norm_factor,
        })
    }

    /// Window pixels plus the one-pixel Sobel support on each side.
    pub fn apron(&self) -> usize {
        self.window / 2 + 1
    }
}

impl Default for HarrisParams {
    fn default() -> Self {
        Self {
            k: 0.04,
            window: 7,
            norm_factor: default_norm_factor(7),
        }
    }
}

/// Sums of gradient products over one window. With |g| <= 1020 and windows
/// up to 31, every sum stays below 2^30 and the score products below 2^60,
/// so the arithmetic is exact.
#[derive(Debug, Default, Clone, Copy, PartialEq, Eq)]
pub struct GradientMoments {
    pub gxx: i64,
    pub gyy: i64,
    pub gxy: i64,
}

impl GradientMoments {
    /// `(det(M) - k * trace(M)^2) * norm_factor`, the one floating-point
    /// path shared by every kernel.
    pub fn score<T: Tally>(&self, p: &HarrisParams, tally: &mut T) -> f64 {
        tally.mac(6);
        let det = self.gxx * self.gyy - self.gxy * self.gxy;
        let trace = self.gxx + self.gyy;
        (det as f64 - p.k * (trace as f64) * (trace as f64)) * p.norm_factor
    }
}

/// 3x3 Sobel response at (x, y): `gx` for the horizontal derivative,
/// `gy` for the vertical, both exact integers within +-1020.
pub fn sobel_at(img: &Image, x: usize, y: usize) -> Result<(i32, i32), HarrisError> {
    if x < 1 || y < 1 || x + 1 >= img.width() || y + 1 >= img.height() {
        return Err(HarrisError::WindowOutOfBounds {
            x,
            y,
            needed: 1,
            width: img.width(),
            height: img.height(),
        });
    }
    Ok(sobel_at_unchecked(img, x, y, &mut crate::counters::NoTally))
}

#[inline]
fn sobel_at_unchecked<T: Tally>(img: &Image, x: usize, y: usize, tally: &mut T) -> (i32, i32) {
    let tl = img.get(x - 1, y - 1) as i32;
    let tm = img.get(x, y - 1) as i32;
    let tr = img.get(x + 1, y - 1) as i32;
    let ml = img.get(x - 1, y) as i32;
    let mr = img.get(x + 1, y) as i32;
    let bl = img.get(x - 1, y + 1) as i32;
    let bm = img.get(x, y + 1) as i32;
    let br = img.get(x + 1, y + 1) as i32;
    tally.image_read(9);
    // Each gradient is charged as a full nine-tap correlation.
    tally.mac(18);
    let gx = (tr + 2 * mr + br) - (tl + 2 * ml + bl);
    let gy = (bl + 2 * bm + br) - (tl + 2 * tm + tr);
    (gx, gy)
}

/// Direct windowed Harris score at (x, y): every window cell recomputes its
/// own 2-D Sobel response.
pub fn harris_direct<T: Tally>(
    img: &Image,
    x: usize,
    y: usize,
    p: &HarrisParams,
    tally: &mut T,
) -> Result<f64, HarrisError> {
    let reach = p.apron();
    if !img.window_fits(x, y, reach) {
        return Err(HarrisError::WindowOutOfBounds {
            x,
            y,
            needed: reach,
            width: img.width(),
            height: img.height(),
        });
    }
    let half = (p.window / 2) as i64;
    let mut m = GradientMoments::default();
    for dy in -half..=half {
        for dx in -half..=half {
            let (gx, gy) = sobel_at_unchecked(
                img,
                (x as i64 + dx) as usize,
                (y as i64 + dy) as usize,
                tally,
            );
            let (gx, gy) = (gx as i64, gy as i64);
            tally.mac(3);
            m.gxx += gx * gx;
            m.gyy += gy * gy;
            m.gxy += gx * gy;
        }
    }
    Ok(m.score(p, tally))
}

/// A rectangle of image pixels handed to the tile kernels.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TileRect {
    pub x0: usize,
    pub y0: usize,
    pub width: usize,
    pub height: usize,
}

impl TileRect {
    fn fits(&self, img: &Image) -> bool {
        self.x0 + self.width <= img.width() && self.y0 + self.height <= img.height()
    }
}

/// Scores for the interior pixels of a tile, addressed in image coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct ScorePlane {
    origin: (usize, usize),
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl ScorePlane {
    pub fn origin(&self) -> (usize, usize) {
        self.origin
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    /// Score at absolute image coordinates.
    pub fn at(&self, x: usize, y: usize) -> f64 {
        assert!(
            x >= self.origin.0 && y >= self.origin.1,
            "({x},{y}) outside plane"
        );
        let (dx, dy) = (x - self.origin.0, y - self.origin.1);
        assert!(dx < self.width && dy < self.height, "({x},{y}) outside plane");
        self.data[dy * self.width + dx]
    }
}

/// Fully separated Harris over a tile, storing every intermediate plane.
///
/// The horizontal pass materializes both 1-D responses for the whole tile,
/// the vertical pass materializes both gradient planes, and each scored
/// pixel then sums its own window of products. Scores cover every pixel at
/// least one apron away from the tile edge.
pub fn harris_separable_full<T: Tally>(
    img: &Image,
    tile: TileRect,
    p: &HarrisParams,
    tally: &mut T,
) -> Result<ScorePlane, HarrisError> {
    let apron = p.apron();
    let min_side = 2 * apron + 1;
    if !tile.fits(img) || tile.width < min_side || tile.height < min_side {
        return Err(HarrisError::TileOutOfBounds {
            x0: tile.x0,
            y0: tile.y0,
            width: tile.width,
            height: tile.height,
        });
    }

    // Horizontal 1-D pass over all tile rows; one column lost per side.
    let hw = tile.width - 2;
    let mut hx = vec![0i32; hw * tile.height];
    let mut hy = vec![0i32; hw * tile.height];
    for r in 0..tile.height {
        let row = img.row(tile.y0 + r);
        for c in 0..hw {
            let x = tile.x0 + c + 1;
            let (left, mid, right) = (row[x - 1] as i32, row[x] as i32, row[x + 1] as i32);
            tally.image_read(3);
            tally.mac(5);
            hx[r * hw + c] = right - left;
            hy[r * hw + c] = left + 2 * mid + right;
            tally.scratch_write(2);
        }
    }

    // Vertical 1-D pass completing both gradient planes.
    let gh = tile.height - 2;
    let mut gx = vec![0i64; hw * gh];
    let mut gy = vec![0i64; hw * gh];
    for r in 0..gh {
        for c in 0..hw {
            let above = r * hw + c;
            let mid = (r + 1) * hw + c;
            let below = (r + 2) * hw + c;
            tally.scratch_read(6);
            tally.mac(5);
            gx[r * hw + c] = (hx[above] + 2 * hx[mid] + hx[below]) as i64;
            gy[r * hw + c] = (hy[below] - hy[above]) as i64;
            tally.scratch_write(2);
        }
    }

    // Window sums per scored pixel.
    let half = p.window / 2;
    let sw = tile.width - 2 * apron;
    let sh = tile.height - 2 * apron;
    let mut data = Vec::with_capacity(sw * sh);
    for sy in 0..sh {
        for sx in 0..sw {
            let mut m = GradientMoments::default();
            // Gradient plane origin is (tile.x0 + 1, tile.y0 + 1); the
            // scored pixel center sits at gradient index (sx + half, sy + half).
            for wy in 0..p.window {
                for wx in 0..p.window {
                    let idx = (sy + wy) * hw + sx + wx;
                    tally.scratch_read(2);
                    tally.mac(3);
                    m.gxx += gx[idx] * gx[idx];
                    m.gyy += gy[idx] * gy[idx];
                    m.gxy += gx[idx] * gy[idx];
                }
            }
            let _ = half;
            data.push(m.score(p, tally));
        }
    }

    Ok(ScorePlane {
        origin: (tile.x0 + apron, tile.y0 + apron),
        width: sw,
        height: sh,
        data,
    })
}

/// Three row-slots of partial 1-D convolution results. The slot for logical
/// row `r` lives at `r % 3`; loading a row overwrites exactly that slot.
pub struct CircularRowBuffer {
    sgx: [Vec<i32>; 3],
    sgy: [Vec<i32>; 3],
    cols: usize,
}

impl CircularRowBuffer {
    pub fn new(cols: usize) -> Self {
        Self {
            sgx: [vec![0; cols], vec![0; cols], vec![0; cols]],
            sgy: [vec![0; cols], vec![0; cols], vec![0; cols]],
            cols,
        }
    }

    /// Runs both horizontal 1-D kernels over one pixel row. `pixels` spans
    /// one extra pixel on each side of the `cols` results.
    pub fn load_row<T: Tally>(&mut self, logical_row: usize, pixels: &[u8], tally: &mut T) {
        assert_eq!(pixels.len(), self.cols + 2, "row slice must cover the support");
        let slot = logical_row % 3;
        for c in 0..self.cols {
            let (left, mid, right) = (
                pixels[c] as i32,
                pixels[c + 1] as i32,
                pixels[c + 2] as i32,
            );
            tally.image_read(3);
            tally.mac(5);
            self.sgx[slot][c] = right - left;
            self.sgy[slot][c] = left + 2 * mid + right;
        }
    }

    pub fn sgx(&self, logical_row: usize) -> &[i32] {
        &self.sgx[logical_row % 3]
    }

    pub fn sgy(&self, logical_row: usize) -> &[i32] {
        &self.sgy[logical_row % 3]
    }
}

/// Semi-separable Harris over one tile row: scores for all `w_cols` scoring
/// columns centered on row `y`, starting at column `x0`.
pub fn harris_semiseparable<T: Tally>(
    img: &Image,
    x0: usize,
    y: usize,
    w_cols: usize,
    p: &HarrisParams,
    tally: &mut T,
) -> Result<Vec<f64>, HarrisError> {
    let mask = vec![true; w_cols];
    harris_semiseparable_masked(img, x0, y, &mask, p, tally)
}

/// Semi-separable kernel with per-column gating: the shared gradient tile is
/// always computed in full, but window sums and scores only for columns whose
/// mask bit is set. Unscored columns return `f64::NEG_INFINITY`.
pub fn harris_semiseparable_masked<T: Tally>(
    img: &Image,
    x0: usize,
    y: usize,
    mask: &[bool],
    p: &HarrisParams,
    tally: &mut T,
) -> Result<Vec<f64>, HarrisError> {
    let w_cols = mask.len();
    let apron = p.apron();
    let fits = w_cols >= 1
        && x0 >= apron
        && y >= apron
        && x0 + w_cols - 1 + apron < img.width()
        && y + apron < img.height();
    if !fits {
        return Err(HarrisError::TileOutOfBounds {
            x0,
            y0: y,
            width: w_cols,
            height: 1,
        });
    }

    let window = p.window;
    let cols = w_cols + window - 1; // gradient columns
    let gx_origin = x0 - window / 2; // leftmost gradient column
    let top_row = y - apron;

    let mut buf = CircularRowBuffer::new(cols);
    let mut sxx = vec![0i64; cols];
    let mut syy = vec![0i64; cols];
    let mut sxy = vec![0i64; cols];

    let row_slice = |r: usize| {
        let row = img.row(top_row + r);
        &row[gx_origin - 1..gx_origin + cols + 1]
    };

    // Step 1: seed the circular buffer with the top three pixel rows.
    for r in 0..3 {
        buf.load_row(r, row_slice(r), tally);
    }

    // Step 2: complete the cross-direction convolution row by row, loading
    // one new pixel row per gradient row and accumulating per-column sums.
    for grad_row in 0..window {
        let bottom = grad_row + 2; // logical pixel row completing this gradient row
        if grad_row > 0 {
            buf.load_row(bottom, row_slice(bottom), tally);
        }
        let (sgx0, sgx1, sgx2) = (buf.sgx(bottom - 2), buf.sgx(bottom - 1), buf.sgx(bottom));
        let (sgy0, sgy2) = (buf.sgy(bottom - 2), buf.sgy(bottom));
        for c in 0..cols {
            tally.mac(8);
            let gx = (sgx0[c] + 2 * sgx1[c] + sgx2[c]) as i64;
            let gy = (sgy2[c] - sgy0[c]) as i64;
            sxx[c] += gx * gx;
            syy[c] += gy * gy;
            sxy[c] += gx * gy;
        }
    }
    // Column sums land in tile-local scratch, one store per column and plane.
    tally.scratch_write(3 * cols as u64);

    // Step 3: per scoring column, sum `window` consecutive column entries.
    let mut scores = vec![f64::NEG_INFINITY; w_cols];
    for (xi, scored) in mask.iter().enumerate() {
        if !*scored {
            continue;
        }
        let mut m = GradientMoments::default();
        for j in 0..window {
            tally.scratch_read(3);
            tally.mac(3);
            m.gxx += sxx[xi + j];
            m.gyy += syy[xi + j];
            m.gxy += sxy[xi + j];
        }
        scores[xi] = m.score(p, tally);
    }
    Ok(scores)
}
