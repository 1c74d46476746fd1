//! Oriented FAST keypoint detection.
//!
//! The pipeline runs the FAST-9-16 segment test, Harris response scoring,
//! 3x3 non-maximum suppression and intensity-centroid orientation over an
//! image pyramid. The FAST test ships in a branch-heavy baseline and a
//! binary-encoded variant, and the Harris window in direct, fully separable
//! and semi-separable kernels; every variant combination produces identical
//! keypoints, and software cost counters expose what each one charges.

pub mod centroid;
pub mod counters;
pub mod fast;
pub mod harris;
pub mod image;
pub mod nms;
pub mod pattern;
pub mod pgm;
pub mod pipeline;
pub mod pyramid;

pub use counters::{CountReport, Counters, NoTally, Tally};
pub use fast::{FlagMap, SegmentBuffer};
pub use harris::HarrisParams;
pub use image::Image;
pub use pipeline::{DetectorConfig, Keypoint, PipelineVariant};
pub use pyramid::Pyramid;
