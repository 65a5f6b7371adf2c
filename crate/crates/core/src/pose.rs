//! People and scenes in camera coordinates.

use crate::geometry::{CameraIntrinsics, Point2D, Point3D};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Joint3D {
    pub pos: Point3D,
    pub visible: bool,
}

impl Joint3D {
    pub fn visible(pos: Point3D) -> Self {
        Self { pos, visible: true }
    }

    pub fn hidden(pos: Point3D) -> Self {
        Self { pos, visible: false }
    }

    /// A joint the decoder could not resolve.
    pub fn absent() -> Self {
        Self::default()
    }
}

/// One person's joints in camera coordinates (mm), indexed like the skeleton.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct AbsolutePose3D {
    pub joints: Vec<Joint3D>,
}

impl AbsolutePose3D {
    pub fn new(joints: Vec<Joint3D>) -> Self {
        Self { joints }
    }

    pub fn from_points(points: &[Point3D]) -> Self {
        Self::new(points.iter().copied().map(Joint3D::visible).collect())
    }

    pub fn len(&self) -> usize {
        self.joints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.joints.is_empty()
    }

    pub fn visible_count(&self) -> usize {
        self.joints.iter().filter(|j| j.visible).count()
    }

    pub fn translated(&self, offset: Point3D) -> Self {
        Self::new(
            self.joints
                .iter()
                .map(|j| Joint3D {
                    pos: j.pos + offset,
                    visible: j.visible,
                })
                .collect(),
        )
    }
}

/// Injected map artifacts that model unreliable network responses. They
/// live in the scene so that occlusion corpora can round-trip through
/// files and the command line; the encoder applies them after rendering.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Distractor {
    /// A false heatmap peak of `joint` at an image location.
    SpuriousKeypoint { joint: usize, at: Point2D },
    /// A false limb response for `part`, painted over the field between two
    /// image locations with unit vectors pointing `from -> to`.
    SpuriousLimb { part: usize, from: Point2D, to: Point2D },
    /// Scales one person's field contribution for `part` by `factor`.
    LimbAttenuation { person: usize, part: usize, factor: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub cam: CameraIntrinsics,
    pub people: Vec<AbsolutePose3D>,
    pub distractors: Vec<Distractor>,
}

impl Scene {
    pub fn new(cam: CameraIntrinsics, people: Vec<AbsolutePose3D>) -> Self {
        Self {
            cam,
            people,
            distractors: Vec::new(),
        }
    }
}
