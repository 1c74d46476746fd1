//! Fused tile-based detection pipeline: FAST, Harris, NMS, centroid.
//!
//! A tile is one row of `tile_width` scoring columns, the software analogue
//! of a warp with private scratch. The fused executor runs the FAST test on
//! every column of a tile and, only when at least one column fires, computes
//! the tile's shared gradient field and scores the firing columns. Tiles are
//! independent work units; results merge in tile order, so output is
//! identical for every tile width and worker count.

use std::time::{Duration, Instant};

use rayon::prelude::*;
use thiserror::Error;

use crate::centroid::{centroid_angle, CentroidError};
use crate::counters::{CountReport, Counters, NoTally, Tally};
use crate::fast::{
    fast_check_baseline, fast_check_binary, FastError, FlagMap, RING_RADIUS,
};
use crate::harris::{
    harris_direct, harris_semiseparable_masked, harris_separable_full, HarrisError, HarrisParams,
    TileRect,
};
use crate::image::Image;
use crate::nms::{nms_3x3, NmsError};
use crate::pyramid::{build_pyramid, PyramidError};

/// Which FAST decision procedure a variant runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FastVariant {
    Baseline,
    Binary,
}

/// Which Harris kernel a variant runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HarrisKernel {
    Direct,
    SeparableFull,
    SemiSeparable,
}

/// Named pipeline configurations compared against each other.
///
/// `Baseline` pairs the branch-heavy FAST with the unfused direct Harris.
/// `Binary` swaps in the binary-encoded FAST. `DirectHarris`, `ParaSep` and
/// `SemiSep` all use the binary FAST and differ only in the Harris kernel,
/// so the Harris family is compared on a fixed FAST front end.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PipelineVariant {
    Baseline,
    Binary,
    DirectHarris,
    ParaSep,
    #[default]
    SemiSep,
}

impl PipelineVariant {
    pub const ALL: [PipelineVariant; 5] = [
        PipelineVariant::Baseline,
        PipelineVariant::Binary,
        PipelineVariant::DirectHarris,
        PipelineVariant::ParaSep,
        PipelineVariant::SemiSep,
    ];

    pub fn fast_variant(self) -> FastVariant {
        match self {
            PipelineVariant::Baseline => FastVariant::Baseline,
            _ => FastVariant::Binary,
        }
    }

    pub fn harris_kernel(self) -> HarrisKernel {
        match self {
            PipelineVariant::Baseline | PipelineVariant::Binary | PipelineVariant::DirectHarris => {
                HarrisKernel::Direct
            }
            PipelineVariant::ParaSep => HarrisKernel::SeparableFull,
            PipelineVariant::SemiSep => HarrisKernel::SemiSeparable,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            PipelineVariant::Baseline => "baseline",
            PipelineVariant::Binary => "binary",
            PipelineVariant::DirectHarris => "direct-harris",
            PipelineVariant::ParaSep => "para-sep",
            PipelineVariant::SemiSep => "semi-sep",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|v| v.name() == name)
    }
}

/// Detector configuration shared by every stage.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectorConfig {
    /// FAST intensity threshold.
    pub t: u8,
    pub harris: HarrisParams,
    pub levels: usize,
    pub scale_factor: f64,
    /// Scoring columns per tile.
    pub tile_width: usize,
    /// Detection margin kept clear of every level border.
    pub margin: usize,
    pub nms: bool,
    pub centroid_radius: usize,
    /// Worker threads for the tile pool.
    pub workers: usize,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        Self {
            t: 20,
            harris: HarrisParams::default(),
            levels: 4,
            scale_factor: 1.2,
            tile_width: 32,
            margin: 16,
            nms: true,
            centroid_radius: 15,
            workers: 1,
        }
    }
}

impl DetectorConfig {
    pub fn validate(&self) -> Result<(), PipelineError> {
        HarrisParams::new(self.harris.k, self.harris.window, self.harris.norm_factor)?;
        let needed = self
            .harris
            .apron()
            .max(self.centroid_radius)
            .max(RING_RADIUS);
        if self.margin < needed {
            return Err(PipelineError::Config(format!(
                "margin {} below the required {needed}",
                self.margin
            )));
        }
        if self.tile_width == 0 {
            return Err(PipelineError::Config("tile_width must be >= 1".into()));
        }
        if self.workers == 0 {
            return Err(PipelineError::Config("workers must be >= 1".into()));
        }
        if self.centroid_radius == 0 {
            return Err(PipelineError::Config("centroid_radius must be >= 1".into()));
        }
        Ok(())
    }
}

/// A keypoint in level-0 coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Keypoint {
    pub x: f64,
    pub y: f64,
    pub level: usize,
    /// Harris response at the keypoint in its level.
    pub response: f64,
    /// Orientation in radians, within [0, 2*pi).
    pub angle: f64,
}

/// Wall time spent per pipeline stage.
#[derive(Debug, Default, Clone, Copy)]
pub struct StageTimes {
    pub fast: Duration,
    pub harris: Duration,
    pub nms: Duration,
    pub centroid: Duration,
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Fast(#[from] FastError),
    #[error(transparent)]
    Harris(#[from] HarrisError),
    #[error(transparent)]
    Pyramid(#[from] PyramidError),
    #[error(transparent)]
    Nms(#[from] NmsError),
    #[error(transparent)]
    Centroid(#[from] CentroidError),
}

/// Flags and scores for one tile row. Scores are `NEG_INFINITY` at columns
/// that did not fire.
#[derive(Debug, Clone, PartialEq)]
pub struct TileOutput {
    pub flags: Vec<bool>,
    pub scores: Vec<f64>,
}

impl TileOutput {
    pub fn any_flag(&self) -> bool {
        self.flags.iter().any(|&f| f)
    }
}

/// Runs FAST over the tile's columns and, when any column fires, the
/// semi-separable Harris kernel over the tile's shared gradient field,
/// scoring only the firing columns. A tile with no FAST point never touches
/// the Harris kernel.
#[allow(clippy::too_many_arguments)]
pub fn detect_tile_fused<T: Tally>(
    img: &Image,
    y: usize,
    x0: usize,
    w_cols: usize,
    cfg: &DetectorConfig,
    fast: FastVariant,
    fast_tally: &mut T,
    harris_tally: &mut T,
) -> Result<TileOutput, PipelineError> {
    let apron = cfg.harris.apron();
    let fits = w_cols >= 1
        && x0 >= apron
        && y >= apron
        && x0 + w_cols - 1 + apron < img.width()
        && y + apron < img.height();
    if !fits {
        return Err(PipelineError::Harris(HarrisError::TileOutOfBounds {
            x0,
            y0: y,
            width: w_cols,
            height: 1,
        }));
    }

    let flags = run_fast_columns(img, y, x0, w_cols, cfg.t, fast, fast_tally);
    let scores = if flags.iter().any(|&f| f) {
        harris_semiseparable_masked(img, x0, y, &flags, &cfg.harris, harris_tally)?
    } else {
        vec![f64::NEG_INFINITY; w_cols]
    };
    Ok(TileOutput { flags, scores })
}

fn run_fast_columns<T: Tally>(
    img: &Image,
    y: usize,
    x0: usize,
    w_cols: usize,
    t: u8,
    fast: FastVariant,
    tally: &mut T,
) -> Vec<bool> {
    (0..w_cols)
        .map(|i| match fast {
            FastVariant::Binary => fast_check_binary(img, x0 + i, y, t, tally),
            FastVariant::Baseline => fast_check_baseline(img, x0 + i, y, t, tally),
        })
        .collect()
}

/// Tile kernel selection for one tile row; Harris work is gated on the tile
/// having at least one FAST point.
#[allow(clippy::too_many_arguments)]
fn run_tile<T: Tally + Default>(
    img: &Image,
    y: usize,
    x0: usize,
    w_cols: usize,
    cfg: &DetectorConfig,
    variant: PipelineVariant,
    fast_tally: &mut T,
    harris_tally: &mut T,
    harris_time: &mut Duration,
) -> TileOutput {
    match variant.harris_kernel() {
        HarrisKernel::SemiSeparable => {
            let flags = run_fast_columns(img, y, x0, w_cols, cfg.t, variant.fast_variant(), fast_tally);
            let scores = if flags.iter().any(|&f| f) {
                let start = Instant::now();
                let scores =
                    harris_semiseparable_masked(img, x0, y, &flags, &cfg.harris, harris_tally)
                        .expect("tile bounds hold by construction");
                *harris_time += start.elapsed();
                scores
            } else {
                vec![f64::NEG_INFINITY; w_cols]
            };
            TileOutput { flags, scores }
        }
        HarrisKernel::SeparableFull => {
            let flags = run_fast_columns(img, y, x0, w_cols, cfg.t, variant.fast_variant(), fast_tally);
            let apron = cfg.harris.apron();
            let scores = if flags.iter().any(|&f| f) {
                let start = Instant::now();
                let rect = TileRect {
                    x0: x0 - apron,
                    y0: y - apron,
                    width: w_cols + 2 * apron,
                    height: 1 + 2 * apron,
                };
                let plane = harris_separable_full(img, rect, &cfg.harris, harris_tally)
                    .expect("tile bounds hold by construction");
                let scores = (0..w_cols)
                    .map(|i| {
                        if flags[i] {
                            plane.at(x0 + i, y)
                        } else {
                            f64::NEG_INFINITY
                        }
                    })
                    .collect();
                *harris_time += start.elapsed();
                scores
            } else {
                vec![f64::NEG_INFINITY; w_cols]
            };
            TileOutput { flags, scores }
        }
        // The unfused baseline: tiles only run FAST here, Harris happens in
        // a separate pass over the stored flag plane.
        HarrisKernel::Direct => {
            let flags = run_fast_columns(img, y, x0, w_cols, cfg.t, variant.fast_variant(), fast_tally);
            let scores = vec![f64::NEG_INFINITY; w_cols];
            TileOutput { flags, scores }
        }
    }
}

struct StageTallies<T> {
    fast: T,
    harris: T,
    nms: T,
    centroid: T,
}

impl<T: Tally + Default> Default for StageTallies<T> {
    fn default() -> Self {
        Self {
            fast: T::default(),
            harris: T::default(),
            nms: T::default(),
            centroid: T::default(),
        }
    }
}

/// Full pipeline: pyramid, fused tile detection, NMS, centroid orientation.
/// Keypoints come back sorted by (level, y, x) in level coordinates.
pub fn run_pipeline(
    img: &Image,
    cfg: &DetectorConfig,
    variant: PipelineVariant,
) -> Result<Vec<Keypoint>, PipelineError> {
    run_engine::<NoTally>(img, cfg, variant).map(|(kps, _, _)| kps)
}

/// As [`run_pipeline`], also reporting wall time per stage. Harris time is
/// measured around the kernel invocations; with one worker the split is
/// exact, with more workers it is an aggregate.
pub fn run_pipeline_timed(
    img: &Image,
    cfg: &DetectorConfig,
    variant: PipelineVariant,
) -> Result<(Vec<Keypoint>, StageTimes), PipelineError> {
    run_engine::<NoTally>(img, cfg, variant).map(|(kps, times, _)| (kps, times))
}

/// As [`run_pipeline`], with every data-dependent decision, pixel fetch,
/// scratch access and multiply-accumulate tallied per stage. Counting never
/// alters results.
pub fn run_counted(
    img: &Image,
    cfg: &DetectorConfig,
    variant: PipelineVariant,
) -> Result<(Vec<Keypoint>, CountReport), PipelineError> {
    run_engine::<Counters>(img, cfg, variant).map(|(kps, _, tallies)| {
        (
            kps,
            CountReport {
                fast: tallies.fast,
                harris: tallies.harris,
                nms: tallies.nms,
                centroid: tallies.centroid,
            },
        )
    })
}

fn run_engine<T: Tally + Default + Send>(
    img: &Image,
    cfg: &DetectorConfig,
    variant: PipelineVariant,
) -> Result<(Vec<Keypoint>, StageTimes, StageTallies<T>), PipelineError> {
    cfg.validate()?;
    let pyramid = build_pyramid(img, cfg.levels, cfg.scale_factor)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| PipelineError::Config(e.to_string()))?;

    let mut keypoints = Vec::new();
    let mut times = StageTimes::default();
    let mut tallies = StageTallies::<T>::default();
    for (level, level_img) in pyramid.levels().iter().enumerate() {
        let scale = pyramid.level_scale(level);
        let level_kps = process_level(
            level_img,
            level,
            scale,
            cfg,
            variant,
            &pool,
            &mut tallies,
            &mut times,
        )?;
        keypoints.extend(level_kps);
    }
    Ok((keypoints, times, tallies))
}

#[allow(clippy::too_many_arguments)]
fn process_level<T: Tally + Default + Send>(
    img: &Image,
    level: usize,
    scale: f64,
    cfg: &DetectorConfig,
    variant: PipelineVariant,
    pool: &rayon::ThreadPool,
    tallies: &mut StageTallies<T>,
    times: &mut StageTimes,
) -> Result<Vec<Keypoint>, PipelineError> {
    let (width, height) = (img.width(), img.height());
    let min = 2 * cfg.margin + 1;
    if width < min || height < min {
        return Err(PipelineError::Fast(FastError::ImageTooSmall {
            width,
            height,
            min,
        }));
    }

    let mut tiles = Vec::new();
    for y in cfg.margin..height - cfg.margin {
        let mut x0 = cfg.margin;
        while x0 < width - cfg.margin {
            let w_cols = cfg.tile_width.min(width - cfg.margin - x0);
            tiles.push((y, x0, w_cols));
            x0 += w_cols;
        }
    }

    // FAST plus fused Harris over all tiles.
    type TileResult<T> = (TileOutput, T, T, Duration);
    let phase_start = Instant::now();
    let tile_results: Vec<TileResult<T>> = pool.install(|| {
        tiles
            .par_iter()
            .map(|&(y, x0, w_cols)| {
                let mut fast_tally = T::default();
                let mut harris_tally = T::default();
                let mut harris_time = Duration::ZERO;
                let out = run_tile(
                    img,
                    y,
                    x0,
                    w_cols,
                    cfg,
                    variant,
                    &mut fast_tally,
                    &mut harris_tally,
                    &mut harris_time,
                );
                (out, fast_tally, harris_tally, harris_time)
            })
            .collect()
    });
    let phase_wall = phase_start.elapsed();

    let mut flags = FlagMap::new(width, height);
    let mut scores = vec![f64::NEG_INFINITY; width * height];
    let mut harris_tile_time = Duration::ZERO;
    for ((y, x0, w_cols), (out, fast_tally, harris_tally, harris_time)) in
        tiles.into_iter().zip(tile_results)
    {
        for i in 0..w_cols {
            if out.flags[i] {
                flags.set(x0 + i, y, true);
            }
            scores[y * width + x0 + i] = out.scores[i];
        }
        tallies.fast.absorb(fast_tally);
        tallies.harris.absorb(harris_tally);
        harris_tile_time += harris_time;
    }
    times.fast += phase_wall.saturating_sub(harris_tile_time);
    times.harris += harris_tile_time;

    // Unfused direct Harris: scan the stored flag plane and score each
    // feature point with its own windowed kernel.
    if variant.harris_kernel() == HarrisKernel::Direct {
        let start = Instant::now();
        for y in cfg.margin..height - cfg.margin {
            for x in cfg.margin..width - cfg.margin {
                tallies.harris.branch(1);
                if flags.get(x, y) {
                    scores[y * width + x] =
                        harris_direct(img, x, y, &cfg.harris, &mut tallies.harris)?;
                }
            }
        }
        times.harris += start.elapsed();
    }

    let nms_start = Instant::now();
    let kept = if cfg.nms {
        nms_3x3(&flags, &scores, &mut tallies.nms)?
    } else {
        flags
    };
    times.nms += nms_start.elapsed();

    let centroid_start = Instant::now();
    let mut keypoints = Vec::with_capacity(kept.count());
    for (x, y) in kept.iter_flagged() {
        let angle = centroid_angle(img, x, y, cfg.centroid_radius, &mut tallies.centroid)?;
        keypoints.push(Keypoint {
            x: x as f64 * scale,
            y: y as f64 * scale,
            level,
            response: scores[y * width + x],
            angle,
        });
    }
    times.centroid += centroid_start.elapsed();
    Ok(keypoints)
}

/// CSV serialization, header `level,x,y,response,angle`, rows sorted by
/// (level, y, x). Fixed formatting makes re-runs byte-identical.
pub fn keypoints_to_csv(keypoints: &[Keypoint]) -> String {
    let mut out = String::from("level,x,y,response,angle\n");
    for kp in keypoints {
        out.push_str(&format!(
            "{},{:.4},{:.4},{:.9e},{:.8}\n",
            kp.level, kp.x, kp.y, kp.response, kp.angle
        ));
    }
    out
}

const KEYPOINT_MAGIC: &[u8; 4] = b"OFKP";

/// Compact binary record stream: magic, u32 count, then per keypoint a u32
/// level and four little-endian f64 fields.
pub fn keypoints_to_binary(keypoints: &[Keypoint]) -> Vec<u8> {
    let mut out = Vec::with_capacity(8 + keypoints.len() * 36);
    out.extend_from_slice(KEYPOINT_MAGIC);
    out.extend_from_slice(&(keypoints.len() as u32).to_le_bytes());
    for kp in keypoints {
        out.extend_from_slice(&(kp.level as u32).to_le_bytes());
        out.extend_from_slice(&kp.x.to_le_bytes());
        out.extend_from_slice(&kp.y.to_le_bytes());
        out.extend_from_slice(&kp.response.to_le_bytes());
        out.extend_from_slice(&kp.angle.to_le_bytes());
    }
    out
}

/// Parses the binary record stream written by [`keypoints_to_binary`].
pub fn keypoints_from_binary(bytes: &[u8]) -> Result<Vec<Keypoint>, PipelineError> {
    let bad = |msg: &str| PipelineError::Config(format!("keypoint stream: {msg}"));
    if bytes.len() < 8 || &bytes[0..4] != KEYPOINT_MAGIC {
        return Err(bad("missing magic"));
    }
    let count = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
    let record = 4 + 4 * 8;
    if bytes.len() != 8 + count * record {
        return Err(bad("length mismatch"));
    }
    let mut keypoints = Vec::with_capacity(count);
    for i in 0..count {
        let base = 8 + i * record;
        let f = |o: usize| f64::from_le_bytes(bytes[base + o..base + o + 8].try_into().unwrap());
        keypoints.push(Keypoint {
            level: u32::from_le_bytes(bytes[base..base + 4].try_into().unwrap()) as usize,
            x: f(4),
            y: f(12),
            response: f(20),
            angle: f(28),
        });
    }
    Ok(keypoints)
}

/// Median and minimum stage times over repeated runs, warm-up excluded.
#[derive(Debug, Clone, Copy)]
pub struct BenchStage {
    pub stage: &'static str,
    pub median_ms: f64,
    pub min_ms: f64,
}

/// Runs the pipeline `reps` times (plus one unmeasured warm-up) and reports
/// per-stage medians and minima in milliseconds.
pub fn bench_stage_times(
    img: &Image,
    cfg: &DetectorConfig,
    variant: PipelineVariant,
    reps: usize,
) -> Result<Vec<BenchStage>, PipelineError> {
    if reps < 3 {
        return Err(PipelineError::Config(format!(
            "benchmark needs at least 3 repetitions, got {reps}"
        )));
    }
    run_pipeline_timed(img, cfg, variant)?; // warm-up
    let mut samples: Vec<StageTimes> = Vec::with_capacity(reps);
    for _ in 0..reps {
        let (_, times) = run_pipeline_timed(img, cfg, variant)?;
        samples.push(times);
    }
    type StagePick = fn(&StageTimes) -> Duration;
    let stages: [(&'static str, StagePick); 4] = [
        ("fast", |t| t.fast),
        ("harris", |t| t.harris),
        ("nms", |t| t.nms),
        ("centroid", |t| t.centroid),
    ];
    Ok(stages
        .iter()
        .map(|(stage, pick)| {
            let mut ms: Vec<f64> = samples.iter().map(|t| pick(t).as_secs_f64() * 1e3).collect();
            ms.sort_by(|a, b| a.total_cmp(b));
            let median = if ms.len() % 2 == 1 {
                ms[ms.len() / 2]
            } else {
                (ms[ms.len() / 2 - 1] + ms[ms.len() / 2]) / 2.0
            };
            BenchStage {
                stage,
                median_ms: median,
                min_ms: ms[0],
            }
        })
        .collect())
}
