//! Shared helpers for the integration suites: seeded random images and a
//! naive reference pipeline kept independent of the fused tile executor.

use ofast_core::centroid::centroid_angle;
use ofast_core::counters::NoTally;
use ofast_core::fast::{oracle_fast, ring_at};
use ofast_core::harris::harris_direct;
use ofast_core::image::Image;
use ofast_core::pipeline::{DetectorConfig, Keypoint};
use ofast_core::pyramid::build_pyramid;
use rand::{Rng, SeedableRng};

pub fn random_image(width: usize, height: usize, seed: u64) -> Image {
    let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
    let data = (0..width * height).map(|_| rng.gen()).collect();
    Image::from_raw(width, height, data).unwrap()
}

/// Unfused reference pipeline: a per-pixel brute-force FAST sweep, the
/// direct Harris kernel at every flagged pixel, a straightforward NMS
/// re-implementation and centroid orientation, with coordinates rescaled to
/// level 0. No tiles, no gating, no shared gradient work.
pub fn oracle_pipeline(img: &Image, cfg: &DetectorConfig) -> Vec<Keypoint> {
    let pyramid = build_pyramid(img, cfg.levels, cfg.scale_factor).expect("pyramid");
    let mut keypoints = Vec::new();
    for (level, level_img) in pyramid.levels().iter().enumerate() {
        let scale = pyramid.level_scale(level);
        let (width, height) = (level_img.width(), level_img.height());
        let margin = cfg.margin;

        let mut flagged = Vec::new();
        let mut scores = vec![f64::NEG_INFINITY; width * height];
        for y in margin..height - margin {
            for x in margin..width - margin {
                let ring = ring_at(level_img, x, y);
                if oracle_fast(level_img.get(x, y), &ring, cfg.t) {
                    flagged.push((x, y));
                }
            }
        }
        for &(x, y) in &flagged {
            scores[y * width + x] =
                harris_direct(level_img, x, y, &cfg.harris, &mut NoTally).expect("window fits");
        }

        let survivors: Vec<(usize, usize)> = if cfg.nms {
            flagged
                .iter()
                .copied()
                .filter(|&(x, y)| {
                    let score = scores[y * width + x];
                    for dy in -1i64..=1 {
                        for dx in -1i64..=1 {
                            if dx == 0 && dy == 0 {
                                continue;
                            }
                            let (nx, ny) = (x as i64 + dx, y as i64 + dy);
                            if nx < 0 || ny < 0 || nx >= width as i64 || ny >= height as i64 {
                                continue;
                            }
                            let other = scores[ny as usize * width + nx as usize];
                            let wins = score > other
                                || (score == other && (y, x) < (ny as usize, nx as usize));
                            if !wins {
                                return false;
                            }
                        }
                    }
                    true
                })
                .collect()
        } else {
            flagged
        };

        for (x, y) in survivors {
            let angle = centroid_angle(level_img, x, y, cfg.centroid_radius, &mut NoTally)
                .expect("patch fits");
            keypoints.push(Keypoint {
                x: x as f64 * scale,
                y: y as f64 * scale,
                level,
                response: scores[y * width + x],
                angle,
            });
        }
    }
    keypoints
}

/// Exact keypoint-list equality, comparing floats bit for bit.
pub fn keypoint_lists_equal(a: &[Keypoint], b: &[Keypoint]) -> bool {
    a.len() == b.len()
        && a.iter().zip(b).all(|(x, y)| {
            x.level == y.level
                && x.x.to_bits() == y.x.to_bits()
                && x.y.to_bits() == y.y.to_bits()
                && x.response.to_bits() == y.response.to_bits()
                && x.angle.to_bits() == y.angle.to_bits()
        })
}
