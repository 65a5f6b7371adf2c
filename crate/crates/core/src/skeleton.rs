//! Joint trees, directed parts and bone-length statistics.
//!
//! A skeleton with `J` joints has `J - 1` directed parts (parent -> child),
//! enumerated breadth-first from the root. The map stack for a skeleton
//! always has `J + 2(J - 1) + 1 + (J - 1) = 4J - 2` channels.

use crate::pose::AbsolutePose3D;
use serde::{Deserialize, Serialize};
use std::collections::VecDeque;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SkeletonError {
    #[error("skeleton needs at least one joint")]
    Empty,
    #[error("joint_names has {names} entries but parents has {parents}")]
    LengthMismatch { names: usize, parents: usize },
    #[error("skeleton must have exactly one root, found {0}")]
    RootCount(usize),
    #[error("joint {joint} has out-of-range parent {parent}")]
    BadParent { joint: usize, parent: usize },
    #[error("joints not reachable from the root (cycle or forest): {0:?}")]
    Unreachable(Vec<String>),
    #[error("listed parts do not enumerate the tree edges in breadth-first order")]
    PartsMismatch,
    #[error("bone stats have {got} entries, skeleton has {expected} parts")]
    StatsLength { expected: usize, got: usize },
    #[error("bone length for part {0} is not positive")]
    NonPositiveBone(usize),
    #[error("no pose has both endpoints visible for parts: {0:?}")]
    NoSamples(Vec<String>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Part {
    pub parent: usize,
    pub child: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SkeletonDef", into = "SkeletonDef")]
pub struct SkeletonSpec {
    name: String,
    joint_names: Vec<String>,
    parent: Vec<Option<usize>>,
    parts: Vec<Part>,
    root: usize,
    // part index whose child is the joint; None for the root
    part_of_child: Vec<Option<usize>>,
}

#[derive(Serialize, Deserialize)]
struct SkeletonDef {
    name: String,
    joints: Vec<String>,
    parents: Vec<Option<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    parts: Option<Vec<Part>>,
}

impl TryFrom<SkeletonDef> for SkeletonSpec {
    type Error = SkeletonError;
    fn try_from(def: SkeletonDef) -> Result<Self, SkeletonError> {
        let spec = SkeletonSpec::new(def.name, def.joints, def.parents)?;
        if let Some(parts) = def.parts {
            if parts != spec.parts {
                return Err(SkeletonError::PartsMismatch);
            }
        }
        Ok(spec)
    }
}

impl From<SkeletonSpec> for SkeletonDef {
    fn from(spec: SkeletonSpec) -> Self {
        SkeletonDef {
            name: spec.name,
            joints: spec.joint_names,
            parents: spec.parent,
            parts: Some(spec.parts),
        }
    }
}

impl SkeletonSpec {
    /// Builds a skeleton from a parent array; exactly one entry is `None` (the
    /// root). Parts are ordered breadth-first, siblings by joint index.
    pub fn new(
        name: impl Into<String>,
        joint_names: Vec<String>,
        parent: Vec<Option<usize>>,
    ) -> Result<Self, SkeletonError> {
        let n = joint_names.len();
        if n == 0 {
            return Err(SkeletonError::Empty);
        }
        if parent.len() != n {
            return Err(SkeletonError::LengthMismatch {
                names: n,
                parents: parent.len(),
            });
        }
        let roots: Vec<usize> = (0..n).filter(|&j| parent[j].is_none()).collect();
        if roots.len() != 1 {
            return Err(SkeletonError::RootCount(roots.len()));
        }
        let root = roots[0];
        let mut children = vec![Vec::new(); n];
        for (j, p) in parent.iter().enumerate() {
            if let Some(p) = *p {
                if p >= n || p == j {
                    return Err(SkeletonError::BadParent { joint: j, parent: p });
                }
                children[p].push(j);
            }
        }

        let mut parts = Vec::with_capacity(n - 1);
        let mut part_of_child = vec![None; n];
        let mut seen = vec![false; n];
        seen[root] = true;
        let mut queue = VecDeque::from([root]);
        while let Some(j) = queue.pop_front() {
            for &c in &children[j] {
                if seen[c] {
                    continue;
                }
                seen[c] = true;
                part_of_child[c] = Some(parts.len());
                parts.push(Part { parent: j, child: c });
                queue.push_back(c);
            }
        }
        let unreachable: Vec<String> = (0..n).filter(|&j| !seen[j]).map(|j| joint_names[j].clone()).collect();
        if !unreachable.is_empty() {
            return Err(SkeletonError::Unreachable(unreachable));
        }

        Ok(Self {
            name: name.into(),
            joint_names,
            parent,
            parts,
            root,
            part_of_child,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn joint_count(&self) -> usize {
        self.joint_names.len()
    }

    pub fn part_count(&self) -> usize {
        self.parts.len()
    }

    pub fn joint_names(&self) -> &[String] {
        &self.joint_names
    }

    pub fn joint_index(&self, name: &str) -> Option<usize> {
        self.joint_names.iter().position(|n| n == name)
    }

    pub fn parent(&self, joint: usize) -> Option<usize> {
        self.parent[joint]
    }

    /// Parts in breadth-first order from the root.
    pub fn parts(&self) -> &[Part] {
        &self.parts
    }

    pub fn part_of_child(&self, joint: usize) -> Option<usize> {
        self.part_of_child[joint]
    }

    pub fn part_name(&self, part: usize) -> String {
        let p = self.parts[part];
        format!("{}->{}", self.joint_names[p.parent], self.joint_names[p.child])
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn channel_count(&self) -> usize {
        channel_count(self.joint_count())
    }
}

/// Total map channels for a `joints`-joint skeleton: `4J - 2`.
pub const fn channel_count(joints: usize) -> usize {
    joints + 2 * (joints - 1) + 1 + (joints - 1)
}

pub const DEFAULT_JOINTS: [&str; 15] = [
    "pelvis",
    "neck",
    "head",
    "l_shoulder",
    "r_shoulder",
    "l_elbow",
    "r_elbow",
    "l_wrist",
    "r_wrist",
    "l_hip",
    "r_hip",
    "l_knee",
    "r_knee",
    "l_ankle",
    "r_ankle",
];

const DEFAULT_PARENTS: [Option<usize>; 15] = [
    None,
    Some(0),
    Some(1),
    Some(1),
    Some(1),
    Some(3),
    Some(4),
    Some(5),
    Some(6),
    Some(0),
    Some(0),
    Some(9),
    Some(10),
    Some(11),
    Some(12),
];

/// The built-in 15-joint whole-body skeleton rooted at the pelvis.
pub fn default_skeleton() -> SkeletonSpec {
    SkeletonSpec::new(
        "body15",
        DEFAULT_JOINTS.iter().map(|s| s.to_string()).collect(),
        DEFAULT_PARENTS.to_vec(),
    )
    .expect("built-in skeleton is a tree")
}

/// Mean 3D length per part, in millimeters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoneStats {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub skeleton: Option<String>,
    #[serde(rename = "mean_length_mm")]
    pub mean_length: Vec<f64>,
}

impl BoneStats {
    pub fn new(mean_length: Vec<f64>, spec: &SkeletonSpec) -> Result<Self, SkeletonError> {
        let stats = Self {
            skeleton: Some(spec.name().to_string()),
            mean_length,
        };
        stats.validate(spec)?;
        Ok(stats)
    }

    pub fn validate(&self, spec: &SkeletonSpec) -> Result<(), SkeletonError> {
        if self.mean_length.len() != spec.part_count() {
            return Err(SkeletonError::StatsLength {
                expected: spec.part_count(),
                got: self.mean_length.len(),
            });
        }
        match self.mean_length.iter().position(|&l| !(l > 0.0 && l.is_finite())) {
            Some(p) => Err(SkeletonError::NonPositiveBone(p)),
            None => Ok(()),
        }
    }

    pub fn length(&self, part: usize) -> f64 {
        self.mean_length[part]
    }
}

const DEFAULT_STATS_JSON: &str = include_str!("../data/bone_stats_body15.json");

/// Anthropometric means for [`default_skeleton`]. The synthetic generator
/// samples bone lengths around these values.
pub fn default_bone_stats() -> BoneStats {
    serde_json::from_str(DEFAULT_STATS_JSON).expect("shipped bone stats parse")
}

/// Per-part mean bone length over every pose where both endpoints are visible.
pub fn mean_bone_lengths(poses: &[AbsolutePose3D], spec: &SkeletonSpec) -> Result<BoneStats, SkeletonError> {
    let mut sum = vec![0.0; spec.part_count()];
    let mut count = vec![0usize; spec.part_count()];
    for pose in poses {
        for (i, part) in spec.parts().iter().enumerate() {
            let (Some(a), Some(b)) = (pose.joints.get(part.parent), pose.joints.get(part.child)) else {
                continue;
            };
            if a.visible && b.visible {
                sum[i] += a.pos.distance(b.pos);
                count[i] += 1;
            }
        }
    }
    let missing: Vec<String> = (0..spec.part_count())
        .filter(|&i| count[i] == 0)
        .map(|i| spec.part_name(i))
        .collect();
    if !missing.is_empty() {
        return Err(SkeletonError::NoSamples(missing));
    }
    let means = sum.iter().zip(&count).map(|(s, &c)| s / c as f64).collect();
    BoneStats::new(means, spec)
}

/// Parts whose length deviates from the mean by more than `tol` (a fraction
/// of the mean). Only parts with both endpoints visible are checked.
pub fn validate_pose(pose: &AbsolutePose3D, spec: &SkeletonSpec, stats: &BoneStats, tol: f64) -> Vec<usize> {
    spec.parts()
        .iter()
        .enumerate()
        .filter_map(|(i, part)| {
            let a = pose.joints.get(part.parent)?;
            let b = pose.joints.get(part.child)?;
            if !(a.visible && b.visible) {
                return None;
            }
            let mean = stats.length(i);
            let dev = (a.pos.distance(b.pos) - mean).abs() / mean;
            (dev > tol).then_some(i)
        })
        .collect()
}
