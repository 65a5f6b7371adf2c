use super::assoc::{associate_2d, depth_aware_associate, mean_along, PersonHypothesis};
use super::{extract_keypoints, AssocConfig, AssocMethod, DecodeError};
use crate::geometry::{back_project, denormalize_depth, CameraIntrinsics, Point2D, Point3D};
use crate::pose::{AbsolutePose3D, Joint3D};
use crate::skeleton::{BoneStats, SkeletonSpec};
use crate::stack::RepresentationStack;

/// Post-processing hook on each decoded person. Receives the 2D pose (image
/// pixels) and the root-relative 3D pose (mm) with `None` for unresolved
/// joints, and returns a root-relative pose of the same length. The root
/// depth is never changed: the returned root entry is ignored.
pub trait PoseRefiner: Sync {
    fn refine(&self, pose_2d: &[Option<Point2D>], relative: &[Option<Point3D>]) -> Vec<Option<Point3D>>;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct IdentityRefiner;

impl PoseRefiner for IdentityRefiner {
    fn refine(&self, _pose_2d: &[Option<Point2D>], relative: &[Option<Point3D>]) -> Vec<Option<Point3D>> {
        relative.to_vec()
    }
}

/// Fills in metric joint depths: the root from its normalized depth, every
/// other connected joint as parent depth plus the mean relative depth
/// sampled along the parent -> child segment.
pub fn read_depths(
    person: &PersonHypothesis,
    stack: &RepresentationStack,
    spec: &SkeletonSpec,
    cam: &CameraIntrinsics,
    cfg: &AssocConfig,
) -> Result<PersonHypothesis, DecodeError> {
    let mut out = person.clone();
    out.joint_depths = vec![None; spec.joint_count()];
    out.joint_depths[spec.root()] = Some(denormalize_depth(person.root_depth, cam)?);
    for (p, part) in spec.parts().iter().enumerate() {
        let (Some(parent_z), Some(a), Some(b)) = (
            out.joint_depths[part.parent],
            person.joints_2d[part.parent],
            person.joints_2d[part.child],
        ) else {
            continue;
        };
        let dz = mean_along(&stack.rel_depth(p), a.pos, b.pos, cfg.paf_samples);
        out.joint_depths[part.child] = Some(parent_z + dz);
    }
    Ok(out)
}

fn image_scale(person: &PersonHypothesis, cam: &CameraIntrinsics) -> f64 {
    cam.width / person.map_size.1 as f64
}

/// Back-projects every joint with both a 2D location and a positive depth;
/// the rest are marked absent.
pub fn reconstruct_3d(person: &PersonHypothesis, cam: &CameraIntrinsics) -> AbsolutePose3D {
    let s = image_scale(person, cam);
    AbsolutePose3D::new(
        person
            .joints_2d
            .iter()
            .zip(&person.joint_depths)
            .map(|(j, z)| match (j, z) {
                (Some(j), Some(z)) => back_project(j.pos.scale(s), *z, cam)
                    .map(Joint3D::visible)
                    .unwrap_or_else(|_| Joint3D::absent()),
                _ => Joint3D::absent(),
            })
            .collect(),
    )
}

pub struct Decoder<'a> {
    pub spec: &'a SkeletonSpec,
    pub stats: &'a BoneStats,
    pub cfg: AssocConfig,
    pub method: AssocMethod,
    pub refiner: Option<&'a dyn PoseRefiner>,
}

impl<'a> Decoder<'a> {
    pub fn new(spec: &'a SkeletonSpec, stats: &'a BoneStats, cfg: AssocConfig) -> Self {
        Self {
            spec,
            stats,
            cfg,
            method: AssocMethod::Dapa,
            refiner: None,
        }
    }

    pub fn with_method(mut self, method: AssocMethod) -> Self {
        self.method = method;
        self
    }

    pub fn with_refiner(mut self, refiner: &'a dyn PoseRefiner) -> Self {
        self.refiner = Some(refiner);
        self
    }

    /// Keypoint extraction and association only, with depths read.
    pub fn hypotheses(
        &self,
        stack: &RepresentationStack,
        cam: &CameraIntrinsics,
    ) -> Result<Vec<PersonHypothesis>, DecodeError> {
        cam.validate()?;
        let candidates = extract_keypoints(stack.heatmaps(), &self.cfg);
        let hyps = match self.method {
            AssocMethod::Dapa => depth_aware_associate(&candidates, stack, self.spec, self.stats, &self.cfg)?,
            AssocMethod::TwoD => associate_2d(&candidates, stack, self.spec, &self.cfg)?,
        };
        hyps.iter()
            .map(|h| read_depths(h, stack, self.spec, cam, &self.cfg))
            .collect()
    }

    /// People near-to-far.
    pub fn decode(
        &self,
        stack: &RepresentationStack,
        cam: &CameraIntrinsics,
    ) -> Result<Vec<AbsolutePose3D>, DecodeError> {
        let hyps = self.hypotheses(stack, cam)?;
        Ok(hyps
            .iter()
            .map(|h| {
                let pose = reconstruct_3d(h, cam);
                match self.refiner {
                    Some(r) => self.refine(r, h, pose, cam),
                    None => pose,
                }
            })
            .collect())
    }

    fn refine(
        &self,
        r: &dyn PoseRefiner,
        h: &PersonHypothesis,
        pose: AbsolutePose3D,
        cam: &CameraIntrinsics,
    ) -> AbsolutePose3D {
        let root_idx = self.spec.root();
        let root = pose.joints[root_idx].pos;
        let s = image_scale(h, cam);
        let pose_2d: Vec<Option<Point2D>> = h.joints_2d.iter().map(|j| j.map(|j| j.pos.scale(s))).collect();
        let relative: Vec<Option<Point3D>> = pose.joints.iter().map(|j| j.visible.then(|| j.pos - root)).collect();
        let refined = r.refine(&pose_2d, &relative);
        AbsolutePose3D::new(
            (0..pose.len())
                .map(|i| {
                    if i == root_idx {
                        return pose.joints[i];
                    }
                    match refined.get(i).copied().flatten() {
                        Some(rel) if (root + rel).is_finite() => Joint3D::visible(root + rel),
                        _ => Joint3D::absent(),
                    }
                })
                .collect(),
        )
    }
}

/// Full pipeline with depth-aware association and no refinement.
pub fn decode(
    stack: &RepresentationStack,
    cam: &CameraIntrinsics,
    spec: &SkeletonSpec,
    stats: &BoneStats,
    cfg: &AssocConfig,
) -> Result<Vec<AbsolutePose3D>, DecodeError> {
    Decoder::new(spec, stats, *cfg).decode(stack, cam)
}
