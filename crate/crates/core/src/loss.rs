//! Scoring a predicted stack against ground truth.
//!
//! ```text
//! L_2D    = sum_j sum_p (H_j(p) - H*_j(p))^2 + sum_c sum_p (C_c(p) - C*_c(p))^2
//! L_dZ    = sum_k sum_p (dZ_k(p) - dZ*_k(p))^2
//! L_RZ    = sum_i |H_RZ(root_i) - Z~*_i|
//! L_total = w_2D L_2D + w_dZ L_dZ + w_RZ L_RZ
//! ```

use crate::geometry::{NormalizedDepth, Point2D};
use crate::stack::{RepresentationStack, StackError};
use ndarray::{ArrayView3, Zip};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossWeights {
    pub w_2d: f64,
    pub w_dz: f64,
    pub w_rz: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        Self {
            w_2d: 0.1,
            w_dz: 5.0,
            w_rz: 10.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossReport {
    pub l_2d: f64,
    pub l_dz: f64,
    pub l_rz: f64,
    pub total: f64,
}

fn squared_error(a: ArrayView3<f32>, b: ArrayView3<f32>) -> f64 {
    let mut acc = 0.0f64;
    Zip::from(a).and(b).for_each(|&x, &y| {
        let d = x as f64 - y as f64;
        acc += d * d;
    });
    acc
}

/// `gt_roots` are root locations in map pixels with their ground-truth
/// normalized depths; the prediction is read at the nearest pixel, and roots
/// outside the map are skipped.
pub fn compute_losses(
    pred: &RepresentationStack,
    gt: &RepresentationStack,
    gt_roots: &[(Point2D, NormalizedDepth)],
    weights: &LossWeights,
) -> Result<LossReport, StackError> {
    if pred.shape() != gt.shape() {
        return Err(StackError::ShapeMismatch {
            a: pred.shape(),
            b: gt.shape(),
        });
    }
    let l_2d = squared_error(pred.heatmaps(), gt.heatmaps()) + squared_error(pred.pafs(), gt.pafs());
    let l_dz = squared_error(pred.rel_depths(), gt.rel_depths());

    let root_map = pred.root_depth();
    let (h, w) = root_map.dim();
    let l_rz = gt_roots
        .iter()
        .filter_map(|(p, zt)| {
            let (x, y) = (p.u.round(), p.v.round());
            (x >= 0.0 && y >= 0.0 && (x as usize) < w && (y as usize) < h)
                .then(|| (root_map[[y as usize, x as usize]] as f64 - zt.value()).abs())
        })
        .sum::<f64>();

    Ok(LossReport {
        l_2d,
        l_dz,
        l_rz,
        total: weights.w_2d * l_2d + weights.w_dz * l_dz + weights.w_rz * l_rz,
    })
}
