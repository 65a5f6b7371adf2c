//! Occlusion corpora for comparing association strategies.
//!
//! Two failure modes of depth-blind grouping are staged on purpose:
//!
//! * **Ordinal.** A far person's limb ends exactly where a near person's
//!   joint of the same type is seen, and the far joint itself is hidden. The
//!   near person's limb response is attenuated, so ranking links by field
//!   score alone hands the near person's joint to the far person.
//! * **Bone length.** A person's end joint is hidden and a spurious
//!   candidate of that type sits farther away than the person's bone could
//!   reach at their depth, joined by a clean spurious limb response. Only a
//!   depth-aware length limit rejects it.
//!
//! A clean family without staged artifacts completes the corpus.
//! [`association_accuracy`] scores a grouping by candidate ownership.

use crate::decoder::{KeypointCandidate, PersonHypothesis};
use crate::geometry::{project, CameraIntrinsics, Point2D, Point3D};
use crate::pose::{AbsolutePose3D, Distractor, Scene};
use crate::skeleton::{BoneStats, SkeletonSpec};
use crate::synth::{image_bbox, place, sample_body, synth_scene, SynthConfig, SynthError};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Clean,
    Ordinal,
    BoneLength,
}

impl Family {
    pub const ALL: [Family; 3] = [Family::Clean, Family::Ordinal, Family::BoneLength];
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorpusScene {
    pub family: Family,
    pub scene: Scene,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CorpusConfig {
    pub scenes: usize,
    pub seed: u64,
    pub camera: CameraIntrinsics,
    /// Root depth range, mm; must span at least `min_depth_gap`.
    pub depth_mm: (f64, f64),
    /// Depth separation of the two people in an ordinal scene, mm.
    pub min_depth_gap: f64,
    /// The association relaxation factor the bone-length scenes are staged
    /// against; spurious candidates land beyond `1.3x` its limit.
    pub lambda: f64,
    /// Field strength left on the near person's limb in ordinal scenes.
    pub attenuation: f64,
    pub bone_jitter: f64,
}

impl Default for CorpusConfig {
    fn default() -> Self {
        Self {
            scenes: 100,
            seed: 0,
            camera: SynthConfig::default().camera,
            depth_mm: (2000.0, 6000.0),
            min_depth_gap: 1000.0,
            lambda: 1.5,
            attenuation: 0.5,
            bone_jitter: 0.05,
        }
    }
}

const TRIES: usize = 2000;
/// Same-type joints of different people closer than this are a collision.
const MIN_JOINT_GAP_PX: f64 = 12.0;

/// Parts whose child joint ends a chain and whose parent is not the root.
fn leaf_parts(spec: &SkeletonSpec) -> Vec<usize> {
    let has_child: Vec<bool> = (0..spec.joint_count())
        .map(|j| spec.parts().iter().any(|p| p.parent == j))
        .collect();
    (0..spec.part_count())
        .filter(|&p| {
            let part = spec.parts()[p];
            !has_child[part.child] && part.parent != spec.root()
        })
        .collect()
}

fn px(p: Point3D, cam: &CameraIntrinsics) -> Point2D {
    project(p, cam).expect("corpus people stand in front of the camera")
}

fn fits(person: &AbsolutePose3D, cam: &CameraIntrinsics, margin: f64) -> bool {
    image_bbox(person, cam).is_some_and(|b| {
        b[0] >= margin && b[1] >= margin && b[2] <= cam.width - 1.0 - margin && b[3] <= cam.height - 1.0 - margin
    })
}

fn ordinal_scene(
    rng: &mut ChaCha8Rng,
    cfg: &CorpusConfig,
    spec: &SkeletonSpec,
    stats: &BoneStats,
    leaves: &[usize],
) -> Option<Scene> {
    let cam = &cfg.camera;
    let root = spec.root();
    let (z0, z1) = cfg.depth_mm;
    for _ in 0..TRIES {
        let za = rng.gen_range(z0..=z1 - cfg.min_depth_gap);
        let zb = rng.gen_range(za + cfg.min_depth_gap..=z1);
        let at = Point2D::new(rng.gen_range(0.0..cam.width), rng.gen_range(0.0..cam.height));
        let a = place(&sample_body(rng, spec, stats, cfg.bone_jitter), root, at, za, cam);
        if !fits(&a, cam, 4.0) {
            continue;
        }
        let p = leaves[rng.gen_range(0..leaves.len())];
        let part = spec.parts()[p];
        let mut b = place(&sample_body(rng, spec, stats, cfg.bone_jitter), root, at, zb, cam);
        // slide the far person sideways so its end joint lands on the near one's
        let (wa, wb) = (px(a.joints[part.child].pos, cam), px(b.joints[part.child].pos, cam));
        let s = b.joints[part.child].pos.z / cam.f;
        b = b.translated(Point3D::new((wa.u - wb.u) * s, (wa.v - wb.v) * s, 0.0));
        if !fits(&b, cam, 4.0) {
            continue;
        }
        let collide = (0..spec.joint_count())
            .filter(|&j| j != part.child)
            .any(|j| px(a.joints[j].pos, cam).distance(px(b.joints[j].pos, cam)) < MIN_JOINT_GAP_PX);
        let short =
            |q: &AbsolutePose3D| px(q.joints[part.parent].pos, cam).distance(px(q.joints[part.child].pos, cam)) < 6.0;
        if collide || short(&a) || short(&b) {
            continue;
        }
        b.joints[part.child].visible = false;
        let mut scene = Scene::new(*cam, vec![a, b]);
        scene.distractors.push(Distractor::LimbAttenuation {
            person: 0,
            part: p,
            factor: cfg.attenuation,
        });
        return Some(scene);
    }
    None
}

fn segment_clear_of(a: Point2D, b: Point2D, boxes: &[[f64; 4]], gap: f64) -> bool {
    let n = (a.distance(b) / 2.0).ceil().max(1.0) as usize;
    (0..=n).all(|i| {
        let t = i as f64 / n as f64;
        let (u, v) = (a.u + t * (b.u - a.u), a.v + t * (b.v - a.v));
        boxes
            .iter()
            .all(|bx| u < bx[0] - gap || u > bx[2] + gap || v < bx[1] - gap || v > bx[3] + gap)
    })
}

fn bone_length_scene(
    rng: &mut ChaCha8Rng,
    cfg: &CorpusConfig,
    spec: &SkeletonSpec,
    stats: &BoneStats,
    leaves: &[usize],
    seed: u64,
) -> Result<Option<Scene>, SynthError> {
    let cam = &cfg.camera;
    let synth = SynthConfig {
        people: (1, 2),
        depth_mm: cfg.depth_mm,
        bone_jitter: cfg.bone_jitter,
        camera: *cam,
        seed,
        ..Default::default()
    };
    let mut scene = synth_scene(&synth, spec, stats)?;
    let root_z = scene.people[0].joints[spec.root()].pos.z;
    for _ in 0..TRIES {
        let p = leaves[rng.gen_range(0..leaves.len())];
        let part = spec.parts()[p];
        let limit = cfg.lambda * stats.length(p) * cam.f / root_z;
        let (lo, hi) = (1.3 * limit, 0.45 * cam.height);
        if lo >= hi {
            continue;
        }
        let from = px(scene.people[0].joints[part.parent].pos, cam);
        let (d, th) = (rng.gen_range(lo..hi), rng.gen_range(0.0..std::f64::consts::TAU));
        let to = Point2D::new(from.u + d * th.cos(), from.v + d * th.sin());
        if !(to.u >= 10.0 && to.v >= 10.0 && to.u <= cam.width - 11.0 && to.v <= cam.height - 11.0) {
            continue;
        }
        let near_joint = scene
            .people
            .iter()
            .flat_map(|q| q.joints.iter())
            .any(|j| px(j.pos, cam).distance(to) < 20.0);
        let others: Vec<[f64; 4]> = scene.people[1..].iter().filter_map(|q| image_bbox(q, cam)).collect();
        if near_joint || !segment_clear_of(from, to, &others, 8.0) {
            continue;
        }
        scene.people[0].joints[part.child].visible = false;
        scene.distractors.push(Distractor::SpuriousKeypoint {
            joint: part.child,
            at: to,
        });
        scene.distractors.push(Distractor::SpuriousLimb { part: p, from, to });
        return Ok(Some(scene));
    }
    Ok(None)
}

/// `cfg.scenes` scenes cycling ordinal, ordinal, bone length, bone length,
/// clean.
pub fn occlusion_corpus(
    cfg: &CorpusConfig,
    spec: &SkeletonSpec,
    stats: &BoneStats,
) -> Result<Vec<CorpusScene>, SynthError> {
    let (z0, z1) = cfg.depth_mm;
    if !(z0 > 0.0 && z1 - z0 >= cfg.min_depth_gap && cfg.min_depth_gap > 0.0) {
        return Err(SynthError::Config(format!(
            "depth range {z0}..{z1} must be positive and span the {} mm gap",
            cfg.min_depth_gap
        )));
    }
    if !(0.0..=1.0).contains(&cfg.attenuation) || !(cfg.lambda > 0.0) {
        return Err(SynthError::Config(
            "attenuation must be in [0, 1] and lambda positive".into(),
        ));
    }
    cfg.camera.validate().map_err(|e| SynthError::Config(e.to_string()))?;
    let leaves = leaf_parts(spec);
    if leaves.is_empty() {
        return Err(SynthError::Config("skeleton has no end parts to occlude".into()));
    }
    (0..cfg.scenes)
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(i as u64);
            let sub_seed = rng.gen::<u64>();
            let family = [
                Family::Ordinal,
                Family::Ordinal,
                Family::BoneLength,
                Family::BoneLength,
                Family::Clean,
            ][i % 5];
            let scene = match family {
                Family::Ordinal => ordinal_scene(&mut rng, cfg, spec, stats, &leaves),
                Family::BoneLength => bone_length_scene(&mut rng, cfg, spec, stats, &leaves, sub_seed)?,
                Family::Clean => {
                    let synth = SynthConfig {
                        people: (2, 3),
                        depth_mm: cfg.depth_mm,
                        bone_jitter: cfg.bone_jitter,
                        camera: cfg.camera,
                        seed: sub_seed,
                        ..Default::default()
                    };
                    Some(synth_scene(&synth, spec, stats)?)
                }
            };
            let scene = scene.ok_or(SynthError::Placement {
                people: 2,
                attempts: TRIES,
            })?;
            Ok(CorpusScene { family, scene })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Accuracy {
    pub correct: usize,
    pub total: usize,
}

impl Accuracy {
    pub fn add(&mut self, o: Accuracy) {
        self.correct += o.correct;
        self.total += o.total;
    }

    pub fn fraction(&self) -> Option<f64> {
        (self.total > 0).then(|| self.correct as f64 / self.total as f64)
    }
}

/// Within this many map pixels a candidate is taken to be a person's joint.
pub const OWNER_RADIUS: f64 = 2.5;

/// Scores a grouping by candidate ownership. A candidate belongs to the
/// person whose visible joint of that type projects within
/// [`OWNER_RADIUS`] map pixels (the nearest, if several), or to nobody. A
/// hypothesis stands for the owner of its root candidate. A candidate is
/// correct when it is claimed by a hypothesis standing for its owner, or
/// when it belongs to nobody and stays unclaimed.
pub fn association_accuracy(
    scene: &Scene,
    candidates: &[Vec<KeypointCandidate>],
    hyps: &[PersonHypothesis],
    spec: &SkeletonSpec,
    map_stride: f64,
) -> Accuracy {
    let owner = |j: usize, c: &KeypointCandidate| -> Option<usize> {
        scene
            .people
            .iter()
            .enumerate()
            .filter(|(_, q)| q.joints[j].visible)
            .filter_map(|(i, q)| {
                let d = project(q.joints[j].pos, &scene.cam)
                    .ok()?
                    .scale(1.0 / map_stride)
                    .distance(c.pos);
                (d <= OWNER_RADIUS).then_some((d, i))
            })
            .min_by(|a, b| a.0.total_cmp(&b.0))
            .map(|(_, i)| i)
    };
    let mut claimed: Vec<Vec<Option<usize>>> = candidates.iter().map(|c| vec![None; c.len()]).collect();
    for (h, hyp) in hyps.iter().enumerate() {
        for (j, t) in hyp.joints_2d.iter().enumerate() {
            if let Some(t) = t {
                claimed[j][t.candidate] = Some(h);
            }
        }
    }
    let stands_for: Vec<Option<usize>> = hyps
        .iter()
        .map(|h| {
            let r = h.joints_2d[spec.root()]?;
            owner(spec.root(), &candidates[spec.root()][r.candidate])
        })
        .collect();
    let mut acc = Accuracy::default();
    for (j, cands) in candidates.iter().enumerate() {
        for (k, c) in cands.iter().enumerate() {
            acc.total += 1;
            let ok = match (owner(j, c), claimed[j][k]) {
                (Some(o), Some(h)) => stands_for[h] == Some(o),
                (None, None) => true,
                _ => false,
            };
            acc.correct += ok as usize;
        }
    }
    acc
}
