//! From a map stack back to absolute 3D poses.
//!
//! The pipeline is `extract_keypoints -> depth_aware_associate ->
//! read_depths -> reconstruct_3d`. Everything up to reconstruction works in
//! map pixels; the camera only enters when depths are denormalized and
//! joints are back-projected.

mod assoc;
mod keypoints;
mod reconstruct;

pub use assoc::{
    associate_2d, depth_aware_associate, link_threshold, paf_score, read_root_depth, AcceptedLink, LinkCandidate,
    PersonHypothesis, TrackedJoint,
};
pub use keypoints::{extract_keypoints, KeypointCandidate};
pub use reconstruct::{decode, read_depths, reconstruct_3d, Decoder, IdentityRefiner, PoseRefiner};

use crate::geometry::GeometryError;
use crate::stack::StackError;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DecodeError {
    #[error("zero-length segment")]
    ZeroLength,
    #[error("invalid association config: {0}")]
    Config(String),
    #[error(transparent)]
    Stack(#[from] StackError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("bone stats do not match the skeleton: {0}")]
    Stats(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum AssocMethod {
    /// Near-to-far greedy association with the adaptive bone-length limit.
    #[default]
    Dapa,
    /// Plain PAF-score greedy association with a fixed half-image cap.
    #[serde(rename = "2dpa")]
    TwoD,
}

impl std::str::FromStr for AssocMethod {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "dapa" => Ok(Self::Dapa),
            "2dpa" => Ok(Self::TwoD),
            other => Err(format!("unknown association method `{other}` (expected dapa or 2dpa)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AssocConfig {
    /// Relaxation factor on the adaptive bone-length limit.
    pub lambda: f64,
    /// Points sampled along a segment for PAF and relative-depth integrals.
    pub paf_samples: usize,
    pub min_paf_score: f64,
    /// Non-maximum suppression radius, map pixels.
    pub nms_radius: f64,
    pub detect_threshold: f64,
}

impl Default for AssocConfig {
    fn default() -> Self {
        Self {
            lambda: 1.5,
            paf_samples: 10,
            min_paf_score: 0.2,
            nms_radius: 2.0,
            detect_threshold: 0.1,
        }
    }
}

impl AssocConfig {
    pub fn validate(&self) -> Result<(), DecodeError> {
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(DecodeError::Config(format!(
                "lambda must be positive, got {}",
                self.lambda
            )));
        }
        if self.paf_samples < 2 {
            return Err(DecodeError::Config(format!(
                "paf_samples must be at least 2, got {}",
                self.paf_samples
            )));
        }
        if !(self.nms_radius >= 0.0) {
            return Err(DecodeError::Config("nms_radius must be non-negative".into()));
        }
        Ok(())
    }
}
