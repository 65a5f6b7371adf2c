//! Peak extraction from keypoint heatmaps.

use super::AssocConfig;
use crate::geometry::Point2D;
use ndarray::{ArrayView2, ArrayView3, Axis};
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KeypointCandidate {
    pub joint: usize,
    /// Sub-pixel location in map pixels.
    pub pos: Point2D,
    /// Integer peak pixel `(x, y)`.
    pub pixel: (usize, usize),
    pub score: f32,
}

/// Neighborhood offsets within `radius`, excluding the center.
fn disk_offsets(radius: f64) -> Vec<(isize, isize)> {
    let r = radius.floor() as isize;
    let mut out = Vec::new();
    for dy in -r..=r {
        for dx in -r..=r {
            if (dx, dy) != (0, 0) && ((dx * dx + dy * dy) as f64) <= radius * radius {
                out.push((dx, dy));
            }
        }
    }
    out
}

/// Vertex offset of the parabola through `(-1, l), (0, c), (1, r)`.
fn parabola_offset(l: f32, c: f32, r: f32) -> f64 {
    let (l, c, r) = (l as f64, c as f64, r as f64);
    let denom = l - 2.0 * c + r;
    if denom < 0.0 {
        (0.5 * (l - r) / denom).clamp(-0.5, 0.5)
    } else {
        0.0
    }
}

fn channel_peaks(
    map: ArrayView2<f32>,
    joint: usize,
    offsets: &[(isize, isize)],
    threshold: f32,
) -> Vec<KeypointCandidate> {
    let (h, w) = map.dim();
    let mut out = Vec::new();
    let Some(slice) = map.as_slice() else {
        return channel_peaks(map.as_standard_layout().view(), joint, offsets, threshold);
    };
    for y in 0..h {
        let row = &slice[y * w..(y + 1) * w];
        for (x, &v) in row.iter().enumerate() {
            if !(v >= threshold && v > 0.0) {
                continue;
            }
            let suppressed = offsets.iter().any(|&(dx, dy)| {
                let (nx, ny) = (x as isize + dx, y as isize + dy);
                if nx < 0 || ny < 0 || nx >= w as isize || ny >= h as isize {
                    return false;
                }
                let n = slice[ny as usize * w + nx as usize];
                // equal neighbors earlier in scan order win the tie
                n > v || (n == v && (dy < 0 || (dy == 0 && dx < 0)))
            });
            if suppressed {
                continue;
            }
            let at = |xx: usize, yy: usize| slice[yy * w + xx];
            let ox = if x > 0 && x + 1 < w {
                parabola_offset(at(x - 1, y), v, at(x + 1, y))
            } else {
                0.0
            };
            let oy = if y > 0 && y + 1 < h {
                parabola_offset(at(x, y - 1), v, at(x, y + 1))
            } else {
                0.0
            };
            out.push(KeypointCandidate {
                joint,
                pos: Point2D::new(x as f64 + ox, y as f64 + oy),
                pixel: (x, y),
                score: v,
            });
        }
    }
    out
}

/// Local maxima at or above `detect_threshold`, one list per joint type in
/// scan order. A pixel survives if it is at least as large as every pixel
/// within `nms_radius`; among equal values the earliest in scan order wins.
/// Locations are refined with a separable quadratic fit over the 3x3
/// neighborhood.
pub fn extract_keypoints(heatmaps: ArrayView3<f32>, cfg: &AssocConfig) -> Vec<Vec<KeypointCandidate>> {
    let offsets = disk_offsets(cfg.nms_radius);
    let threshold = cfg.detect_threshold as f32;
    heatmaps
        .axis_iter(Axis(0))
        .into_par_iter()
        .enumerate()
        .map(|(j, map)| channel_peaks(map, j, &offsets, threshold))
        .collect()
}
