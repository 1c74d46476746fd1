//! FAST-9-16 segment test in three variants: a brute-force oracle, a
//! branch-heavy baseline with tone prejudgment, and the binary-encoding
//! variant that packs all sixteen classifications into one 32-bit word and
//! tests shifted 9-bit windows instead of branching per pixel.

use thiserror::Error;

use crate::counters::Tally;
use crate::image::Image;

/// Pixel offsets of the radius-3 ring, index 0 at (0, -3), clockwise.
pub const RING_OFFSETS: [(i32, i32); 16] = [
    (0, -3),
    (1, -3),
    (2, -2),
    (3, -1),
    (3, 0),
    (3, 1),
    (2, 2),
    (1, 3),
    (0, 3),
    (-1, 3),
    (-2, 2),
    (-3, 1),
    (-3, 0),
    (-3, -1),
    (-2, -2),
    (-1, -3),
];

/// Pixels on the ring must be at least this far from every image border.
pub const RING_RADIUS: usize = 3;

/// Number of consecutive matching ring pixels required for a feature.
pub const RUN_LENGTH: u32 = 9;

/// Classification of a ring pixel against the candidate center.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DtState {
    Dark,
    Similar,
    Bright,
}

/// Classifies one ring pixel: dark when `neighbor <= center - t`, bright when
/// `neighbor >= center + t`, similar otherwise. Arithmetic is widened so the
/// subtraction never wraps. At `t = 0` the dark test wins the overlap.
#[inline]
pub fn classify_pixel(center: u8, neighbor: u8, t: u8) -> DtState {
    let c = center as i32;
    let n = neighbor as i32;
    let t = t as i32;
    if n <= c - t {
        DtState::Dark
    } else if n >= c + t {
        DtState::Bright
    } else {
        DtState::Similar
    }
}

/// The sixteen dark flags (high half) and sixteen bright flags (low half)
/// packed into one word; neighbor `i` (1-based) sits at bit `i - 1` of its
/// half. A similar neighbor sets neither flag, so the halves never overlap.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SegmentBuffer(u32);

impl SegmentBuffer {
    pub fn new(bits: u32) -> Self {
        debug_assert_eq!((bits >> 16) & bits & 0xFFFF, 0, "dark and bright flags overlap");
        Self(bits)
    }

    pub fn bits(self) -> u32 {
        self.0
    }

    pub fn dark_half(self) -> u16 {
        (self.0 >> 16) as u16
    }

    pub fn bright_half(self) -> u16 {
        self.0 as u16
    }
}

/// Packs the sixteen classifications into a [`SegmentBuffer`]. Every bit is a
/// pure comparison result; no branching is involved.
pub fn buffer_generation(center: u8, ring: &[u8; 16], t: u8) -> SegmentBuffer {
    let c = center as i32;
    let t = t as i32;
    let mut bits = 0u32;
    for (i, &neighbor) in ring.iter().enumerate() {
        let n = neighbor as i32;
        let dark = (n <= c - t) as u32;
        let bright = (1 - dark) & ((n >= c + t) as u32);
        bits |= (dark << (16 + i)) | (bright << i);
    }
    SegmentBuffer::new(bits)
}

/// True when either half of the buffer, read cyclically, contains at least
/// nine consecutive set bits. Each half is extended to 24 bits by stacking
/// its low 8 bits on top, then sixteen shifted 9-bit windows are compared
/// against `0x1FF`.
pub fn segment_check(buf: SegmentBuffer) -> bool {
    segment_check_counted(buf, &mut crate::counters::NoTally)
}

pub(crate) fn segment_check_counted<T: Tally>(buf: SegmentBuffer, tally: &mut T) -> bool {
    for half in [buf.dark_half() as u32, buf.bright_half() as u32] {
        let mut buf24 = ((half & 0xFF) << 16) | half;
        for _ in 0..16 {
            tally.branch(1);
            if buf24 & 0x1FF == 0x1FF {
                return true;
            }
            buf24 >>= 1;
        }
    }
    false
}

/// Ground-truth FAST-9 decision by direct rotation scan, no encoding.
pub fn oracle_fast(center: u8, ring: &[u8; 16], t: u8) -> bool {
    let states: [DtState; 16] = core::array::from_fn(|i| classify_pixel(center, ring[i], t));
    for target in [DtState::Dark, DtState::Bright] {
        for start in 0..16 {
            if (0..RUN_LENGTH as usize).all(|k| states[(start + k) % 16] == target) {
                return true;
            }
        }
    }
    false
}

/// Per-pixel boolean plane produced by the detectors.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FlagMap {
    width: usize,
    height: usize,
    flags: Vec<bool>,
}

impl FlagMap {
    pub fn new(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            flags: vec![false; width * height],
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        self.flags[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, value: bool) {
        self.flags[y * self.width + x] = value;
    }

    pub fn count(&self) -> usize {
        self.flags.iter().filter(|&&f| f).count()
    }

    /// Flagged positions in row-major (y, then x) order.
    pub fn iter_flagged(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let width = self.width;
        self.flags
            .iter()
            .enumerate()
            .filter(|(_, &f)| f)
            .map(move |(i, _)| (i % width, i / width))
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FastError {
    #[error("margin {0} is below the ring radius {RING_RADIUS}")]
    MarginTooSmall(usize),
    #[error("image {width}x{height} is smaller than 2*margin+1 = {min} per side")]
    ImageTooSmall {
        width: usize,
        height: usize,
        min: usize,
    },
}

fn check_detect_args(img: &Image, margin: usize) -> Result<(), FastError> {
    if margin < RING_RADIUS {
        return Err(FastError::MarginTooSmall(margin));
    }
    let min = 2 * margin + 1;
    if img.width() < min || img.height() < min {
        return Err(FastError::ImageTooSmall {
            width: img.width(),
            height: img.height(),
            min,
        });
    }
    Ok(())
}

/// Reads the sixteen ring pixels around (x, y). The caller keeps the ring in
/// bounds (x and y at least [`RING_RADIUS`] from every border).
#[inline]
pub fn ring_at(img: &Image, x: usize, y: usize) -> [u8; 16] {
    core::array::from_fn(|i| {
        let (dx, dy) = RING_OFFSETS[i];
        img.get(
            (x as i64 + dx as i64) as usize,
            (y as i64 + dy as i64) as usize,
        )
    })
}

/// Binary-encoding FAST test for a single candidate pixel.
///
/// Charged costs: 17 image reads (center plus ring), one branch per 9-bit
/// window test, no multiply-accumulates.
#[inline]
pub fn fast_check_binary<T: Tally>(img: &Image, x: usize, y: usize, t: u8, tally: &mut T) -> bool {
    let center = img.get(x, y);
    tally.image_read(1);
    let ring = ring_at(img, x, y);
    tally.image_read(16);
    let buf = buffer_generation(center, &ring, t);
    segment_check_counted(buf, tally)
}

/// Baseline FAST test: classify the ring, prejudge the dominant tone, then
/// run the 25-step early-exit scan over that tone only.
///
/// The prejudged tone is the majority of dark versus bright states; a nine
/// long run forces its state into the strict majority, so the prejudgment
/// never picks the losing tone and the decision matches the oracle. Charged
/// costs follow the branch-heavy shape: one or two branches per prejudgment
/// classification, one image read per scan step (the scan re-reads the ring
/// rather than caching it), and one or two branches per scan step.
pub fn fast_check_baseline<T: Tally>(
    img: &Image,
    x: usize,
    y: usize,
    t: u8,
    tally: &mut T,
) -> bool {
    let center = img.get(x, y);
    tally.image_read(1);

    let mut dark = 0u32;
    let mut bright = 0u32;
    for &(dx, dy) in RING_OFFSETS.iter() {
        let n = img.get((x as i64 + dx as i64) as usize, (y as i64 + dy as i64) as usize);
        tally.image_read(1);
        match classify_pixel(center, n, t) {
            DtState::Dark => {
                tally.branch(1);
                dark += 1;
            }
            DtState::Bright => {
                tally.branch(2);
                bright += 1;
            }
            DtState::Similar => tally.branch(2),
        }
    }

    tally.branch(1);
    let flag = if dark >= bright {
        DtState::Dark
    } else {
        DtState::Bright
    };

    let mut run = 0u32;
    for k in 0..25 {
        let (dx, dy) = RING_OFFSETS[k % 16];
        let n = img.get((x as i64 + dx as i64) as usize, (y as i64 + dy as i64) as usize);
        tally.image_read(1);
        tally.branch(1);
        if classify_pixel(center, n, t) == flag {
            run += 1;
            tally.branch(1);
            if run >= RUN_LENGTH {
                return true;
            }
        } else {
            run = 0;
        }
    }
    false
}

/// Full-image sweep with the binary-encoding test. Pixels within `margin` of
/// any border are never flagged.
pub fn detect_fast_binary(img: &Image, t: u8, margin: usize) -> Result<FlagMap, FastError> {
    detect_fast_binary_counted(img, t, margin, &mut crate::counters::NoTally)
}

pub fn detect_fast_binary_counted<T: Tally>(
    img: &Image,
    t: u8,
    margin: usize,
    tally: &mut T,
) -> Result<FlagMap, FastError> {
    check_detect_args(img, margin)?;
    let mut flags = FlagMap::new(img.width(), img.height());
    for y in margin..img.height() - margin {
        for x in margin..img.width() - margin {
            if fast_check_binary(img, x, y, t, tally) {
                flags.set(x, y, true);
            }
        }
    }
    Ok(flags)
}

/// Full-image sweep with the baseline test. Decision-equivalent to
/// [`detect_fast_binary`]; only the charged cost profile differs.
pub fn detect_fast_baseline(img: &Image, t: u8, margin: usize) -> Result<FlagMap, FastError> {
    detect_fast_baseline_counted(img, t, margin, &mut crate::counters::NoTally)
}

pub fn detect_fast_baseline_counted<T: Tally>(
    img: &Image,
    t: u8,
    margin: usize,
    tally: &mut T,
) -> Result<FlagMap, FastError> {
    check_detect_args(img, margin)?;
    let mut flags = FlagMap::new(img.width(), img.height());
    for y in margin..img.height() - margin {
        for x in margin..img.width() - margin {
            if fast_check_baseline(img, x, y, t, tally) {
                flags.set(x, y, true);
            }
        }
    }
    Ok(flags)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::counters::NoTally;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    fn random_image(width: usize, height: usize, seed: u64) -> Image {
        let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
        let data = (0..width * height).map(|_| rng.gen()).collect();
        Image::from_raw(width, height, data).unwrap()
    }

    /// Naive cyclic scan for >= 9 consecutive set bits in a 16-bit mask.
    fn has_cyclic_run9(mask: u16) -> bool {
        (0..16).any(|start| (0..9).all(|k| mask & (1 << ((start + k) % 16)) != 0))
    }

    #[test]
    fn ring_offsets_trace_the_radius_3_circle() {
        let mut seen = std::collections::HashSet::new();
        for &(dx, dy) in RING_OFFSETS.iter() {
            let valid = dx.abs().max(dy.abs()) == 3 || (dx.abs(), dy.abs()) == (2, 2);
            assert!(valid, "({dx},{dy}) is not on the ring");
            assert!(seen.insert((dx, dy)), "({dx},{dy}) repeats");
        }
        assert_eq!(seen.len(), 16);
        assert_eq!(RING_OFFSETS[0], (0, -3));
        assert_eq!(RING_OFFSETS[8], (0, 3));
    }

    #[test]
    fn classify_boundaries_are_inclusive() {
        assert_eq!(classify_pixel(100, 80, 20), DtState::Dark);
        assert_eq!(classify_pixel(100, 100, 20), DtState::Similar);
        assert_eq!(classify_pixel(100, 120, 20), DtState::Bright);
        assert_eq!(classify_pixel(100, 81, 20), DtState::Similar);
        assert_eq!(classify_pixel(100, 119, 20), DtState::Similar);
        // Widened arithmetic: center 0 minus t must not wrap.
        assert_eq!(classify_pixel(0, 200, 20), DtState::Bright);
        assert_eq!(classify_pixel(0, 0, 20), DtState::Similar);
        assert_eq!(classify_pixel(255, 0, 20), DtState::Dark);
    }

    #[test]
    fn buffer_packs_flags_per_half() {
        let all_bright = [200u8; 16];
        assert_eq!(buffer_generation(100, &all_bright, 20).bits(), 0x0000_FFFF);

        let all_similar = [100u8; 16];
        assert_eq!(buffer_generation(100, &all_similar, 20).bits(), 0x0000_0000);

        let mut ring = [100u8; 16];
        for slot in ring.iter_mut().take(9) {
            *slot = 70;
        }
        assert_eq!(buffer_generation(100, &ring, 20).bits(), 0x01FF_0000);
    }

    #[test]
    fn segment_check_finds_runs_and_wraparounds() {
        assert!(segment_check(SegmentBuffer::new(0x0000_FFFF)));
        assert!(segment_check(SegmentBuffer::new(0b0000_0001_1111_1111)));
        assert!(segment_check(SegmentBuffer::new(0b1111_1111_0000_0001)));
        assert!(!segment_check(SegmentBuffer::new(0)));
        assert!(!segment_check(SegmentBuffer::new(0b0000_0000_1111_1111)));
        // Dark half works the same way.
        assert!(segment_check(SegmentBuffer::new(0x01FF_0000)));
    }

    #[test]
    fn oracle_matches_case_shapes() {
        let mut case1 = [100u8; 16];
        for slot in case1.iter_mut().take(9) {
            *slot = 200;
        }
        assert!(oracle_fast(100, &case1, 20));

        let mut case4 = [100u8; 16];
        for slot in case4.iter_mut().take(8) {
            *slot = 200;
        }
        assert!(!oracle_fast(100, &case4, 20));

        assert!(!oracle_fast(100, &[100u8; 16], 20));
    }

    #[test]
    fn detectors_error_on_bad_arguments() {
        let img = Image::filled(32, 32, 0).unwrap();
        assert_eq!(
            detect_fast_binary(&img, 20, 2),
            Err(FastError::MarginTooSmall(2))
        );
        let tiny = Image::filled(8, 8, 0).unwrap();
        assert_eq!(
            detect_fast_binary(&tiny, 20, 4),
            Err(FastError::ImageTooSmall {
                width: 8,
                height: 8,
                min: 9
            })
        );
        assert!(detect_fast_baseline(&tiny, 20, 4).is_err());
    }

    #[test]
    fn constant_image_has_no_features() {
        let img = Image::filled(64, 64, 131).unwrap();
        assert_eq!(detect_fast_binary(&img, 20, 3).unwrap().count(), 0);
        assert_eq!(detect_fast_baseline(&img, 20, 3).unwrap().count(), 0);
    }

    #[test]
    fn variants_match_the_oracle_sweep_on_random_images() {
        for seed in 0..100 {
            let img = random_image(48, 40, seed);
            let binary = detect_fast_binary(&img, 20, 3).unwrap();
            let baseline = detect_fast_baseline(&img, 20, 3).unwrap();
            for y in 3..img.height() - 3 {
                for x in 3..img.width() - 3 {
                    let expect = oracle_fast(img.get(x, y), &ring_at(&img, x, y), 20);
                    assert_eq!(binary.get(x, y), expect, "binary at ({x},{y}) seed {seed}");
                    assert_eq!(baseline.get(x, y), expect, "baseline at ({x},{y}) seed {seed}");
                }
            }
        }
    }

    #[test]
    fn baseline_handles_low_thresholds() {
        for t in [0u8, 1, 2] {
            let img = random_image(32, 32, 99 + t as u64);
            let binary = detect_fast_binary(&img, t, 3).unwrap();
            let baseline = detect_fast_baseline(&img, t, 3).unwrap();
            assert_eq!(binary, baseline, "t = {t}");
        }
    }

    #[test]
    fn binary_charges_fewer_branches_and_reads() {
        let img = random_image(96, 96, 7);
        let mut bin = crate::counters::Counters::default();
        let mut base = crate::counters::Counters::default();
        detect_fast_binary_counted(&img, 20, 3, &mut bin).unwrap();
        detect_fast_baseline_counted(&img, 20, 3, &mut base).unwrap();
        assert!(bin.branch_evals < base.branch_evals);
        assert!(bin.image_reads < base.image_reads);
        assert_eq!(bin.mac_ops, 0);
    }

    proptest! {
        /// The shifted-window check agrees with a naive cyclic scan for any
        /// pair of non-overlapping half masks.
        #[test]
        fn segment_check_equals_naive_scan(dark in any::<u16>(), bright in any::<u16>()) {
            let bright = bright & !dark;
            let buf = SegmentBuffer::new(((dark as u32) << 16) | bright as u32);
            let expect = has_cyclic_run9(dark) || has_cyclic_run9(bright);
            prop_assert_eq!(segment_check(buf), expect);
        }

        /// Raising the threshold never adds a flagged pixel.
        #[test]
        fn raising_threshold_shrinks_flag_sets(seed in 0u64..32, t1 in 5u8..40, dt in 1u8..40) {
            let img = random_image(32, 32, seed);
            let low = detect_fast_binary(&img, t1, 3).unwrap();
            let high = detect_fast_binary(&img, t1.saturating_add(dt), 3).unwrap();
            for (x, y) in high.iter_flagged() {
                prop_assert!(low.get(x, y), "pixel ({x},{y}) flagged at t={} but not t={}", t1 + dt, t1);
            }
        }

        /// No flagged pixel ever lands within the margin.
        #[test]
        fn flags_respect_the_margin(seed in 0u64..16, margin in 3usize..10) {
            let img = random_image(40, 36, seed);
            let flags = detect_fast_binary(&img, 10, margin).unwrap();
            for (x, y) in flags.iter_flagged() {
                prop_assert!(x >= margin && y >= margin);
                prop_assert!(x < img.width() - margin && y < img.height() - margin);
            }
        }

        /// A single pixel decision is the same through every path.
        #[test]
        fn per_pixel_paths_agree(seed in 0u64..64, t in 0u8..60) {
            let img = random_image(16, 16, seed);
            let (x, y) = (8, 8);
            let ring = ring_at(&img, x, y);
            let center = img.get(x, y);
            let expect = oracle_fast(center, &ring, t);
            prop_assert_eq!(segment_check(buffer_generation(center, &ring, t)), expect);
            prop_assert_eq!(fast_check_binary(&img, x, y, t, &mut NoTally), expect);
            prop_assert_eq!(fast_check_baseline(&img, x, y, t, &mut NoTally), expect);
        }
    }
}
