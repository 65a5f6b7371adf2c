//! Seeded synthetic scenes.
//!
//! Each person is a standing template with perturbed joint angles, a random
//! yaw and bone lengths jittered around the bone statistics, placed at a
//! random root depth and image location. People are kept apart in the image
//! unless the scene is drawn in overlap mode, where two people are pushed
//! together until their root disks intersect. A truncated person has some
//! joints outside the frame; those joints are marked not visible.

use crate::geometry::{back_project, project, CameraIntrinsics, Point2D, Point3D};
use crate::pose::{AbsolutePose3D, Scene};
use crate::skeleton::{BoneStats, SkeletonSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_PI_3;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SynthError {
    #[error("invalid synth config: {0}")]
    Config(String),
    #[error("could not place {people} people after {attempts} attempts; widen the depth range or shrink the count")]
    Placement { people: usize, attempts: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    /// Inclusive person count range.
    pub people: (usize, usize),
    /// Root depth range, mm.
    pub depth_mm: (f64, f64),
    /// Chance that a scene with two or more people forces one pair to overlap.
    pub overlap_prob: f64,
    /// Per-person chance of being placed partly outside the frame.
    pub truncation_prob: f64,
    /// Relative bone-length jitter, uniform in `±bone_jitter`.
    pub bone_jitter: f64,
    pub seed: u64,
    pub camera: CameraIntrinsics,
    /// Number of scenes for multi-frame runs.
    pub frames: usize,
    /// Minimum gap between the projected boxes of separate people, px.
    pub margin_px: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            people: (1, 5),
            depth_mm: (2000.0, 6000.0),
            overlap_prob: 0.0,
            truncation_prob: 0.0,
            bone_jitter: 0.05,
            seed: 0,
            camera: CameraIntrinsics::new(500.0, 416.0, 256.0, 832.0, 512.0).expect("valid default camera"),
            frames: 1,
            margin_px: 16.0,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |m: String| Err(SynthError::Config(m));
        let (lo, hi) = self.people;
        if lo > hi {
            return bad(format!("person count range {lo}..={hi} is empty"));
        }
        let (z0, z1) = self.depth_mm;
        if !(z0 > 0.0 && z0 <= z1 && z1.is_finite()) {
            return bad(format!("depth range {z0}..{z1} must be positive and non-empty"));
        }
        for (name, p) in [
            ("overlap_prob", self.overlap_prob),
            ("truncation_prob", self.truncation_prob),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return bad(format!("{name} must be in [0, 1], got {p}"));
            }
        }
        if self.overlap_prob > 0.0 && hi < 2 {
            return bad("overlap needs at least two people in the count range".into());
        }
        if !(0.0..1.0).contains(&self.bone_jitter) {
            return bad(format!("bone_jitter must be in [0, 1), got {}", self.bone_jitter));
        }
        if !(self.margin_px >= 0.0) {
            return bad("margin_px must be non-negative".into());
        }
        self.camera.validate().map_err(|e| SynthError::Config(e.to_string()))
    }
}

/// Rest direction (person frame: x right, y down, z away) and angular
/// spread in radians for the bone ending at `child`.
fn template(child: &str) -> (Point3D, f64) {
    let side = if child.starts_with("l_") {
        1.0
    } else if child.starts_with("r_") {
        -1.0
    } else {
        0.0
    };
    let base = child.trim_start_matches("l_").trim_start_matches("r_");
    let (d, spread) = match base {
        "neck" | "head" => (Point3D::new(0.0, -1.0, 0.0), 0.15),
        "shoulder" | "hip" => (Point3D::new(side, 0.0, 0.0), 0.1),
        "elbow" => (Point3D::new(0.25 * side, 1.0, 0.0), 0.5),
        "wrist" => (Point3D::new(0.1 * side, 1.0, -0.3), 0.6),
        "knee" => (Point3D::new(0.05 * side, 1.0, 0.0), 0.25),
        "ankle" => (Point3D::new(0.0, 1.0, 0.1), 0.25),
        _ => (Point3D::new(0.0, 1.0, 0.0), 0.3),
    };
    (d * (1.0 / d.norm()), spread)
}

fn rot_x(p: Point3D, a: f64) -> Point3D {
    let (s, c) = a.sin_cos();
    Point3D::new(p.x, c * p.y - s * p.z, s * p.y + c * p.z)
}

fn rot_y(p: Point3D, a: f64) -> Point3D {
    let (s, c) = a.sin_cos();
    Point3D::new(c * p.x + s * p.z, p.y, -s * p.x + c * p.z)
}

fn rot_z(p: Point3D, a: f64) -> Point3D {
    let (s, c) = a.sin_cos();
    Point3D::new(c * p.x - s * p.y, s * p.x + c * p.y, p.z)
}

/// Root-relative joint offsets of one random person, mm.
pub fn sample_body(rng: &mut impl Rng, spec: &SkeletonSpec, stats: &BoneStats, jitter: f64) -> Vec<Point3D> {
    let yaw = rng.gen_range(-FRAC_PI_3..FRAC_PI_3);
    let mut pts = vec![Point3D::default(); spec.joint_count()];
    for (p, part) in spec.parts().iter().enumerate() {
        let (d, spread) = template(&spec.joint_names()[part.child]);
        let d = rot_z(
            rot_x(d, rng.gen_range(-spread..=spread)),
            rng.gen_range(-spread..=spread),
        );
        let len = stats.length(p) * (1.0 + rng.gen_range(-jitter..=jitter));
        pts[part.child] = pts[part.parent] + rot_y(d, yaw) * len;
    }
    pts
}

/// Projected bounding box `[u0, v0, u1, v1]` of every joint.
pub fn image_bbox(person: &AbsolutePose3D, cam: &CameraIntrinsics) -> Option<[f64; 4]> {
    let mut b = [f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY];
    for j in &person.joints {
        let p = project(j.pos, cam).ok()?;
        b = [b[0].min(p.u), b[1].min(p.v), b[2].max(p.u), b[3].max(p.v)];
    }
    Some(b)
}

fn boxes_apart(a: &[f64; 4], b: &[f64; 4], gap: f64) -> bool {
    a[2] + gap < b[0] || b[2] + gap < a[0] || a[3] + gap < b[1] || b[3] + gap < a[1]
}

fn inside(b: &[f64; 4], cam: &CameraIntrinsics, margin: f64) -> bool {
    b[0] >= margin && b[1] >= margin && b[2] <= cam.width - 1.0 - margin && b[3] <= cam.height - 1.0 - margin
}

fn in_frame(p: Point2D, cam: &CameraIntrinsics) -> bool {
    p.u >= 0.0 && p.v >= 0.0 && p.u <= cam.width - 1.0 && p.v <= cam.height - 1.0
}

/// Moves `body` so its root sits at `z` on the ray through pixel `at`.
pub fn place(body: &[Point3D], root: usize, at: Point2D, z: f64, cam: &CameraIntrinsics) -> AbsolutePose3D {
    let r = back_project(at, z, cam).expect("positive depth");
    let offset = r - body[root];
    AbsolutePose3D::from_points(&body.iter().map(|&p| p + offset).collect::<Vec<_>>())
}

const TRIES_PER_PERSON: usize = 400;
const SCENE_RESTARTS: usize = 50;

struct Placer<'a> {
    cfg: &'a SynthConfig,
    spec: &'a SkeletonSpec,
    stats: &'a BoneStats,
}

impl Placer<'_> {
    fn body(&self, rng: &mut ChaCha8Rng) -> Vec<Point3D> {
        sample_body(rng, self.spec, self.stats, self.cfg.bone_jitter)
    }

    fn depth(&self, rng: &mut ChaCha8Rng) -> f64 {
        let (a, b) = self.cfg.depth_mm;
        if a == b {
            a
        } else {
            rng.gen_range(a..b)
        }
    }

    fn pixel(&self, rng: &mut ChaCha8Rng) -> Point2D {
        let c = &self.cfg.camera;
        Point2D::new(rng.gen_range(0.0..c.width - 1.0), rng.gen_range(0.0..c.height - 1.0))
    }

    /// A fully visible person, or a truncated one whose root stays in frame.
    fn one(&self, rng: &mut ChaCha8Rng, truncated: bool, taken: &[[f64; 4]]) -> Option<AbsolutePose3D> {
        let cam = &self.cfg.camera;
        let root = self.spec.root();
        for _ in 0..TRIES_PER_PERSON {
            let body = self.body(rng);
            let person = place(&body, root, self.pixel(rng), self.depth(rng), cam);
            let Some(b) = image_bbox(&person, cam) else { continue };
            if taken.iter().any(|t| !boxes_apart(t, &b, self.cfg.margin_px)) {
                continue;
            }
            if !truncated {
                if inside(&b, cam, 2.0) {
                    return Some(person);
                }
                continue;
            }
            let root_px = project(person.joints[root].pos, cam).ok()?;
            let root_ok = root_px.u >= 10.0
                && root_px.v >= 10.0
                && root_px.u <= cam.width - 11.0
                && root_px.v <= cam.height - 11.0;
            if root_ok && !inside(&b, cam, 0.0) {
                return Some(truncate(person, cam));
            }
        }
        None
    }

    /// Two people whose root disks intersect: both roots on integer pixels
    /// a little over three pixels apart.
    fn pair(&self, rng: &mut ChaCha8Rng, taken: &[[f64; 4]]) -> Option<[AbsolutePose3D; 2]> {
        const OFFSETS: [(f64, f64); 8] = [
            (3., 2.),
            (3., -2.),
            (-3., 2.),
            (-3., -2.),
            (2., 3.),
            (2., -3.),
            (-2., 3.),
            (-2., -3.),
        ];
        let cam = &self.cfg.camera;
        let root = self.spec.root();
        for _ in 0..TRIES_PER_PERSON {
            let p = self.pixel(rng);
            let a_px = Point2D::new(p.u.round(), p.v.round());
            let (dx, dy) = OFFSETS[rng.gen_range(0..OFFSETS.len())];
            let b_px = Point2D::new(a_px.u + dx, a_px.v + dy);
            let a = place(&self.body(rng), root, a_px, self.depth(rng), cam);
            let b = place(&self.body(rng), root, b_px, self.depth(rng), cam);
            let (Some(ba), Some(bb)) = (image_bbox(&a, cam), image_bbox(&b, cam)) else {
                continue;
            };
            if !inside(&ba, cam, 2.0) || !inside(&bb, cam, 2.0) {
                continue;
            }
            if taken
                .iter()
                .any(|t| !boxes_apart(t, &ba, self.cfg.margin_px) || !boxes_apart(t, &bb, self.cfg.margin_px))
            {
                continue;
            }
            return Some([a, b]);
        }
        None
    }

    fn scene(&self, rng: &mut ChaCha8Rng) -> Result<Scene, SynthError> {
        let (lo, hi) = self.cfg.people;
        let n = rng.gen_range(lo..=hi);
        let overlap = n >= 2 && rng.gen_bool(self.cfg.overlap_prob);
        let truncated: Vec<bool> = (0..n).map(|_| rng.gen_bool(self.cfg.truncation_prob)).collect();
        'restart: for _ in 0..SCENE_RESTARTS {
            let mut people = Vec::with_capacity(n);
            let mut taken = Vec::with_capacity(n);
            if overlap {
                let Some(pair) = self.pair(rng, &taken) else { continue };
                for p in pair {
                    taken.push(image_bbox(&p, &self.cfg.camera).expect("placed in front of camera"));
                    people.push(p);
                }
            }
            while people.len() < n {
                let Some(p) = self.one(rng, truncated[people.len()], &taken) else {
                    continue 'restart;
                };
                taken.push(image_bbox(&p, &self.cfg.camera).expect("placed in front of camera"));
                people.push(p);
            }
            return Ok(Scene::new(self.cfg.camera, people));
        }
        Err(SynthError::Placement {
            people: n,
            attempts: SCENE_RESTARTS * TRIES_PER_PERSON,
        })
    }
}

fn truncate(mut person: AbsolutePose3D, cam: &CameraIntrinsics) -> AbsolutePose3D {
    for j in person.joints.iter_mut() {
        if !project(j.pos, cam).is_ok_and(|p| in_frame(p, cam)) {
            j.visible = false;
        }
    }
    person
}

fn check_inputs(cfg: &SynthConfig, spec: &SkeletonSpec, stats: &BoneStats) -> Result<(), SynthError> {
    cfg.validate()?;
    stats.validate(spec).map_err(|e| SynthError::Config(e.to_string()))
}

/// One scene fully determined by `cfg.seed`.
pub fn synth_scene(cfg: &SynthConfig, spec: &SkeletonSpec, stats: &BoneStats) -> Result<Scene, SynthError> {
    check_inputs(cfg, spec, stats)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    Placer { cfg, spec, stats }.scene(&mut rng)
}

/// Scene `index` of a multi-frame run, drawn from its own stream of the seed.
/// Frame 0 equals [`synth_scene`].
pub fn synth_frame(
    cfg: &SynthConfig,
    spec: &SkeletonSpec,
    stats: &BoneStats,
    index: usize,
) -> Result<Scene, SynthError> {
    check_inputs(cfg, spec, stats)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(index as u64);
    Placer { cfg, spec, stats }.scene(&mut rng)
}

/// `cfg.frames` scenes, see [`synth_frame`].
pub fn synth_frames(cfg: &SynthConfig, spec: &SkeletonSpec, stats: &BoneStats) -> Result<Vec<Scene>, SynthError> {
    (0..cfg.frames).map(|i| synth_frame(cfg, spec, stats, i)).collect()
}
