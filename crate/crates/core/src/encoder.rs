//! Rendering ground-truth scenes into the map stack.
//!
//! All renderers work in map coordinates: an image pixel `(u, v)` lands at
//! `(u / stride, v / stride)` and map pixel `(x, y)` has its center at
//! integer coordinates. Channels are independent, so each group is rendered
//! channel-parallel.

use crate::geometry::{normalize_depth, project, CameraIntrinsics, Point2D};
use crate::pose::{Distractor, Scene};
use crate::skeleton::SkeletonSpec;
use crate::stack::RepresentationStack;
use ndarray::{s, Array2, Array3, ArrayViewMut2, ArrayViewMut3, Axis};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Gaussians are evaluated out to this many standard deviations; beyond it
/// the value is below `exp(-18)`.
const GAUSS_CUTOFF: f64 = 6.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EncodeError {
    #[error("invalid encoder config: {0}")]
    Config(String),
    #[error("person {person} has {got} joints, skeleton has {expected}")]
    JointCount { person: usize, expected: usize, got: usize },
    #[error("distractor {index} is invalid: {reason}")]
    Distractor { index: usize, reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EncoderConfig {
    /// Heatmap Gaussian standard deviation, map pixels.
    pub sigma: f64,
    /// Half-width of the limb band for PAFs and relative depth, map pixels.
    pub paf_width: f64,
    /// Radius of the supervised disk around each root, map pixels.
    pub root_disk_radius: f64,
    /// Input pixels per map pixel.
    pub map_stride: f64,
}

impl Default for EncoderConfig {
    fn default() -> Self {
        Self {
            sigma: 4.0,
            paf_width: 4.0,
            root_disk_radius: 2.0,
            map_stride: 1.0,
        }
    }
}

impl EncoderConfig {
    pub fn validate(&self) -> Result<(), EncodeError> {
        let all = [
            ("sigma", self.sigma),
            ("paf_width", self.paf_width),
            ("root_disk_radius", self.root_disk_radius),
            ("map_stride", self.map_stride),
        ];
        for (name, v) in all {
            if !(v > 0.0 && v.is_finite()) {
                return Err(EncodeError::Config(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }

    /// `(height, width)` of the maps for a camera.
    pub fn map_size(&self, cam: &CameraIntrinsics) -> (usize, usize) {
        (
            ((cam.height / self.map_stride).round() as usize).max(1),
            ((cam.width / self.map_stride).round() as usize).max(1),
        )
    }
}

/// Per person, per joint map-space projection (None when not projectable).
struct Projections {
    points: Vec<Vec<Option<Point2D>>>,
}

impl Projections {
    fn new(scene: &Scene, spec: &SkeletonSpec, cfg: &EncoderConfig) -> Result<Self, EncodeError> {
        cfg.validate()?;
        let mut points = Vec::with_capacity(scene.people.len());
        for (i, person) in scene.people.iter().enumerate() {
            if person.len() != spec.joint_count() {
                return Err(EncodeError::JointCount {
                    person: i,
                    expected: spec.joint_count(),
                    got: person.len(),
                });
            }
            points.push(
                person
                    .joints
                    .iter()
                    .map(|j| {
                        let p = project(j.pos, &scene.cam).ok()?;
                        (p.u.is_finite() && p.v.is_finite()).then(|| p.scale(1.0 / cfg.map_stride))
                    })
                    .collect(),
            );
        }
        for (index, d) in scene.distractors.iter().enumerate() {
            let bad = |reason: &str| EncodeError::Distractor {
                index,
                reason: reason.to_string(),
            };
            match *d {
                Distractor::SpuriousKeypoint { joint, .. } if joint >= spec.joint_count() => {
                    return Err(bad("joint out of range"))
                }
                Distractor::SpuriousLimb { part, .. } if part >= spec.part_count() => {
                    return Err(bad("part out of range"))
                }
                Distractor::LimbAttenuation { person, part, factor } => {
                    if part >= spec.part_count() || person >= scene.people.len() {
                        return Err(bad("person or part out of range"));
                    }
                    if !(0.0..=1.0).contains(&factor) {
                        return Err(bad("attenuation factor must lie in [0, 1]"));
                    }
                }
                _ => {}
            }
        }
        Ok(Self { points })
    }
}

fn splat_gaussian(map: &mut ArrayViewMut2<f32>, center: Point2D, sigma: f64) {
    let (h, w) = map.dim();
    let r = (sigma * GAUSS_CUTOFF).ceil();
    let x0 = (center.u - r).floor().max(0.0);
    let x1 = (center.u + r).ceil().min(w as f64 - 1.0);
    let y0 = (center.v - r).floor().max(0.0);
    let y1 = (center.v + r).ceil().min(h as f64 - 1.0);
    if x0 > x1 || y0 > y1 {
        return;
    }
    let inv = 1.0 / (2.0 * sigma * sigma);
    for y in y0 as usize..=y1 as usize {
        let dy = y as f64 - center.v;
        for x in x0 as usize..=x1 as usize {
            let dx = x as f64 - center.u;
            let g = (-(dx * dx + dy * dy) * inv).exp() as f32;
            let cell = &mut map[[y, x]];
            if g > *cell {
                *cell = g;
            }
        }
    }
}

/// Distance from `(px, py)` to the segment `a -> b`.
pub(crate) fn segment_distance(px: f64, py: f64, a: Point2D, b: Point2D) -> f64 {
    let (dx, dy) = (b.u - a.u, b.v - a.v);
    let len2 = dx * dx + dy * dy;
    let t = if len2 > 0.0 {
        (((px - a.u) * dx + (py - a.v) * dy) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    (px - (a.u + t * dx)).hypot(py - (a.v + t * dy))
}

/// Calls `f(x, y)` for every map pixel within `width` of the segment.
fn for_each_band_pixel(dims: (usize, usize), a: Point2D, b: Point2D, width: f64, mut f: impl FnMut(usize, usize)) {
    let (h, w) = dims;
    let x0 = (a.u.min(b.u) - width).floor().max(0.0);
    let x1 = (a.u.max(b.u) + width).ceil().min(w as f64 - 1.0);
    let y0 = (a.v.min(b.v) - width).floor().max(0.0);
    let y1 = (a.v.max(b.v) + width).ceil().min(h as f64 - 1.0);
    if x0 > x1 || y0 > y1 {
        return;
    }
    for y in y0 as usize..=y1 as usize {
        for x in x0 as usize..=x1 as usize {
            if segment_distance(x as f64, y as f64, a, b) <= width {
                f(x, y);
            }
        }
    }
}

fn unit(a: Point2D, b: Point2D) -> Option<(f64, f64)> {
    let len = a.distance(b);
    (len > 1e-9).then(|| ((b.u - a.u) / len, (b.v - a.v) / len))
}

fn fill_heatmaps(mut out: ArrayViewMut3<f32>, scene: &Scene, proj: &Projections, cfg: &EncoderConfig) {
    out.axis_iter_mut(Axis(0))
        .into_par_iter()
        .enumerate()
        .for_each(|(j, mut map)| {
            map.fill(0.0);
            for (person, pts) in scene.people.iter().zip(&proj.points) {
                if let (true, Some(c)) = (person.joints[j].visible, pts[j]) {
                    splat_gaussian(&mut map, c, cfg.sigma);
                }
            }
            for d in &scene.distractors {
                if let Distractor::SpuriousKeypoint { joint, at } = *d {
                    if joint == j {
                        splat_gaussian(&mut map, at.scale(1.0 / cfg.map_stride), cfg.sigma);
                    }
                }
            }
        });
}

fn fill_pafs(mut out: ArrayViewMut3<f32>, scene: &Scene, spec: &SkeletonSpec, proj: &Projections, cfg: &EncoderConfig) {
    let dims = (out.dim().1, out.dim().2);
    out.axis_chunks_iter_mut(Axis(0), 2)
        .into_par_iter()
        .enumerate()
        .for_each(|(p, mut field)| {
            field.fill(0.0);
            let part = spec.parts()[p];
            let mut count = Array2::<u16>::zeros(dims);
            for (i, pts) in proj.points.iter().enumerate() {
                let (Some(a), Some(b)) = (pts[part.parent], pts[part.child]) else {
                    continue;
                };
                let Some((ux, uy)) = unit(a, b) else { continue };
                let weight = scene
                    .distractors
                    .iter()
                    .filter_map(|d| match *d {
                        Distractor::LimbAttenuation { person, part, factor } if person == i && part == p => {
                            Some(factor)
                        }
                        _ => None,
                    })
                    .product::<f64>();
                for_each_band_pixel(dims, a, b, cfg.paf_width, |x, y| {
                    field[[0, y, x]] += (ux * weight) as f32;
                    field[[1, y, x]] += (uy * weight) as f32;
                    count[[y, x]] += 1;
                });
            }
            let (fx, fy) = field.multi_slice_mut((s![0, .., ..], s![1, .., ..]));
            ndarray::Zip::from(fx).and(fy).and(&count).for_each(|fx, fy, &n| {
                if n > 1 {
                    *fx /= n as f32;
                    *fy /= n as f32;
                }
            });
            for d in &scene.distractors {
                if let Distractor::SpuriousLimb { part, from, to } = *d {
                    if part != p {
                        continue;
                    }
                    let (a, b) = (from.scale(1.0 / cfg.map_stride), to.scale(1.0 / cfg.map_stride));
                    if let Some((ux, uy)) = unit(a, b) {
                        for_each_band_pixel(dims, a, b, cfg.paf_width, |x, y| {
                            field[[0, y, x]] = ux as f32;
                            field[[1, y, x]] = uy as f32;
                        });
                    }
                }
            }
        });
}

fn fill_root_depth(
    mut out: ArrayViewMut2<f32>,
    scene: &Scene,
    spec: &SkeletonSpec,
    proj: &Projections,
    cfg: &EncoderConfig,
) {
    out.fill(0.0);
    let dims = out.dim();
    let root = spec.root();
    for (person, pts) in scene.people.iter().zip(&proj.points) {
        let joint = person.joints[root];
        let (true, Some(c)) = (joint.visible, pts[root]) else {
            continue;
        };
        let Ok(zt) = normalize_depth(joint.pos.z, &scene.cam) else {
            continue;
        };
        let zt = zt.value() as f32;
        // a zero-length segment is a disk
        for_each_band_pixel(dims, c, c, cfg.root_disk_radius, |x, y| {
            let cell = &mut out[[y, x]];
            if *cell <= 0.0 || zt < *cell {
                *cell = zt;
            }
        });
    }
}

fn fill_rel_depths(
    mut out: ArrayViewMut3<f32>,
    scene: &Scene,
    spec: &SkeletonSpec,
    proj: &Projections,
    cfg: &EncoderConfig,
) {
    let dims = (out.dim().1, out.dim().2);
    out.axis_iter_mut(Axis(0))
        .into_par_iter()
        .enumerate()
        .for_each(|(p, mut map)| {
            map.fill(0.0);
            let part = spec.parts()[p];
            let mut owner_z = Array2::<f64>::from_elem(dims, f64::INFINITY);
            for (person, pts) in scene.people.iter().zip(&proj.points) {
                let (Some(a), Some(b)) = (pts[part.parent], pts[part.child]) else {
                    continue;
                };
                let zp = person.joints[part.parent].pos.z;
                let dz = (person.joints[part.child].pos.z - zp) as f32;
                for_each_band_pixel(dims, a, b, cfg.paf_width, |x, y| {
                    if zp < owner_z[[y, x]] {
                        owner_z[[y, x]] = zp;
                        map[[y, x]] = dz;
                    }
                });
            }
        });
}

pub fn render_heatmaps(scene: &Scene, spec: &SkeletonSpec, cfg: &EncoderConfig) -> Result<Array3<f32>, EncodeError> {
    let proj = Projections::new(scene, spec, cfg)?;
    let (h, w) = cfg.map_size(&scene.cam);
    let mut out = Array3::zeros((spec.joint_count(), h, w));
    fill_heatmaps(out.view_mut(), scene, &proj, cfg);
    Ok(out)
}

/// Part affinity fields, `2(J - 1)` channels interleaved (x, y) by part.
/// Where bands of several people cover a pixel, their vectors are averaged
/// without renormalization.
pub fn render_pafs(scene: &Scene, spec: &SkeletonSpec, cfg: &EncoderConfig) -> Result<Array3<f32>, EncodeError> {
    let proj = Projections::new(scene, spec, cfg)?;
    let (h, w) = cfg.map_size(&scene.cam);
    let mut out = Array3::zeros((2 * spec.part_count(), h, w));
    fill_pafs(out.view_mut(), scene, spec, &proj, cfg);
    Ok(out)
}

/// Normalized root depth on a disk around each visible root; the nearer
/// person wins where disks overlap.
pub fn render_root_depth_map(
    scene: &Scene,
    spec: &SkeletonSpec,
    cfg: &EncoderConfig,
) -> Result<Array2<f32>, EncodeError> {
    let proj = Projections::new(scene, spec, cfg)?;
    let mut out = Array2::zeros(cfg.map_size(&scene.cam));
    fill_root_depth(out.view_mut(), scene, spec, &proj, cfg);
    Ok(out)
}

/// Child-minus-parent depth (mm) on each limb band; the person whose parent
/// joint is nearer wins overlapping pixels.
pub fn render_relative_depth_maps(
    scene: &Scene,
    spec: &SkeletonSpec,
    cfg: &EncoderConfig,
) -> Result<Array3<f32>, EncodeError> {
    let proj = Projections::new(scene, spec, cfg)?;
    let (h, w) = cfg.map_size(&scene.cam);
    let mut out = Array3::zeros((spec.part_count(), h, w));
    fill_rel_depths(out.view_mut(), scene, spec, &proj, cfg);
    Ok(out)
}

pub fn encode(scene: &Scene, spec: &SkeletonSpec, cfg: &EncoderConfig) -> Result<RepresentationStack, EncodeError> {
    let proj = Projections::new(scene, spec, cfg)?;
    let (h, w) = cfg.map_size(&scene.cam);
    let mut stack = RepresentationStack::zeros(spec.joint_count(), h, w);
    fill_heatmaps(stack.heatmaps_mut(), scene, &proj, cfg);
    fill_pafs(stack.pafs_mut(), scene, spec, &proj, cfg);
    fill_root_depth(stack.root_depth_mut(), scene, spec, &proj, cfg);
    fill_rel_depths(stack.rel_depths_mut(), scene, spec, &proj, cfg);
    Ok(stack)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{back_project, Point3D};
    use crate::pose::{AbsolutePose3D, Joint3D};
    use crate::skeleton::default_skeleton;

    fn cam() -> CameraIntrinsics {
        CameraIntrinsics::new(500.0, 100.0, 60.0, 200.0, 120.0).unwrap()
    }

    /// A person whose listed joints sit at `z` and project to the given
    /// pixels; the rest are behind the camera and never render.
    fn person_at(spec: &SkeletonSpec, z: f64, placed: &[(usize, f64, f64)]) -> AbsolutePose3D {
        let c = cam();
        let mut joints = vec![Joint3D::hidden(Point3D::new(0.0, 0.0, -1.0)); spec.joint_count()];
        for &(j, u, v) in placed {
            joints[j] = Joint3D::visible(back_project(Point2D::new(u, v), z, &c).unwrap());
        }
        AbsolutePose3D::new(joints)
    }

    #[test]
    fn empty_scene_is_all_zero() {
        let spec = default_skeleton();
        let st = encode(&Scene::new(cam(), vec![]), &spec, &EncoderConfig::default()).unwrap();
        assert_eq!(st.shape(), [58, 120, 200]);
        assert!(st.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn gaussian_peak_is_one() {
        let spec = default_skeleton();
        let scene = Scene::new(cam(), vec![person_at(&spec, 3000.0, &[(2, 100.0, 50.0)])]);
        let hm = render_heatmaps(&scene, &spec, &EncoderConfig::default()).unwrap();
        let ch: ndarray::ArrayView2<f32> = hm.slice(s![2, .., ..]);
        assert_eq!(ch[[50, 100]], 1.0);
        assert!(ch.iter().all(|&v| (0.0..=1.0).contains(&v)));
        assert_eq!(ch.iter().cloned().fold(0.0f32, f32::max), 1.0);
        assert!(hm.slice(s![3, .., ..]).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn overlapping_gaussians_match_dense_render() {
        let spec = default_skeleton();
        let sigma = 4.0;
        let centers = [(60.3, 40.7), (63.1, 41.2)];
        let scene = Scene::new(
            cam(),
            centers
                .iter()
                .map(|&(u, v)| person_at(&spec, 3000.0, &[(5, u, v)]))
                .collect(),
        );
        let hm = render_heatmaps(&scene, &spec, &EncoderConfig::default()).unwrap();
        for y in 0..120 {
            for x in 0..200 {
                let mut best = 0.0f64;
                for &(u, v) in &centers {
                    let d2 = (x as f64 - u).powi(2) + (y as f64 - v).powi(2);
                    best = best.max((-d2 / (2.0 * sigma * sigma)).exp());
                }
                assert!((hm[[5, y, x]] as f64 - best).abs() < 1e-6, "pixel ({x},{y})");
            }
        }
    }

    #[test]
    fn invisible_joint_renders_nothing() {
        let spec = default_skeleton();
        let mut p = person_at(&spec, 3000.0, &[(2, 100.0, 50.0)]);
        p.joints[2].visible = false;
        let hm = render_heatmaps(&Scene::new(cam(), vec![p]), &spec, &EncoderConfig::default()).unwrap();
        assert!(hm.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn horizontal_part_field() {
        let spec = default_skeleton();
        // part 0 is pelvis -> neck
        let scene = Scene::new(
            cam(),
            vec![person_at(&spec, 3000.0, &[(0, 50.0, 60.0), (1, 150.0, 60.0)])],
        );
        let cfg = EncoderConfig::default();
        let pafs = render_pafs(&scene, &spec, &cfg).unwrap();
        for y in 0..120 {
            for x in 0..200 {
                let (fx, fy) = (pafs[[0, y, x]], pafs[[1, y, x]]);
                let d = segment_distance(x as f64, y as f64, Point2D::new(50.0, 60.0), Point2D::new(150.0, 60.0));
                if d <= cfg.paf_width {
                    assert_eq!((fx, fy), (1.0, 0.0));
                } else {
                    assert_eq!((fx, fy), (0.0, 0.0));
                }
            }
        }
        assert!(pafs.slice(s![2.., .., ..]).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn antiparallel_overlap_is_averaged() {
        let spec = default_skeleton();
        let a = person_at(&spec, 3000.0, &[(0, 40.0, 60.0), (1, 120.0, 60.0)]);
        let b = person_at(&spec, 4000.0, &[(0, 140.0, 62.0), (1, 80.0, 62.0)]);
        let scene = Scene::new(cam(), vec![a, b]);
        let cfg = EncoderConfig::default();
        let pafs = render_pafs(&scene, &spec, &cfg).unwrap();
        let segs = [
            (Point2D::new(40.0, 60.0), Point2D::new(120.0, 60.0), (1.0, 0.0)),
            (Point2D::new(140.0, 62.0), Point2D::new(80.0, 62.0), (-1.0, 0.0)),
        ];
        let mut overlap = 0;
        for y in 0..120 {
            for x in 0..200 {
                let covering: Vec<(f64, f64)> = segs
                    .iter()
                    .filter(|(p, q, _)| segment_distance(x as f64, y as f64, *p, *q) <= cfg.paf_width)
                    .map(|s| s.2)
                    .collect();
                let n = covering.len().max(1) as f64;
                let ex = covering.iter().map(|v| v.0).sum::<f64>() / n;
                let ey = covering.iter().map(|v| v.1).sum::<f64>() / n;
                assert!((pafs[[0, y, x]] as f64 - ex).abs() < 1e-6);
                assert!((pafs[[1, y, x]] as f64 - ey).abs() < 1e-6);
                let mag = (pafs[[0, y, x]] as f64).hypot(pafs[[1, y, x]] as f64);
                assert!(mag <= 1.0 + 1e-6);
                if covering.len() == 2 {
                    overlap += 1;
                    assert!(mag < 1.0);
                }
            }
        }
        assert!(overlap > 50);
    }

    #[test]
    fn root_disk_holds_normalized_depth() {
        let spec = default_skeleton();
        // w / f = 0.5
        let c = CameraIntrinsics::new(400.0, 100.0, 60.0, 200.0, 120.0).unwrap();
        let root = Joint3D::visible(back_project(Point2D::new(70.0, 30.0), 4000.0, &c).unwrap());
        let mut p = AbsolutePose3D::new(vec![Joint3D::hidden(Point3D::new(0.0, 0.0, -1.0)); 15]);
        p.joints[0] = root;
        let map = render_root_depth_map(&Scene::new(c, vec![p]), &spec, &EncoderConfig::default()).unwrap();
        assert_eq!(map[[30, 70]], 2000.0);
        let nonzero = map.iter().filter(|&&v| v != 0.0).count();
        // 13 lattice points lie within radius 2 of an integer center
        assert_eq!(nonzero, 13);
        assert!(map.iter().all(|&v| v == 0.0 || v == 2000.0));
    }

    #[test]
    fn nearer_root_wins_overlap() {
        let spec = default_skeleton();
        let c = cam();
        let near = person_at(&spec, 2000.0, &[(0, 80.0, 60.0)]);
        let far = person_at(&spec, 3000.0, &[(0, 83.0, 60.0)]);
        let cfg = EncoderConfig::default();
        let map = render_root_depth_map(&Scene::new(c, vec![far, near]), &spec, &cfg).unwrap();
        let zn = normalize_depth(2000.0, &c).unwrap().value() as f32;
        let zf = normalize_depth(3000.0, &c).unwrap().value() as f32;
        for y in 0..120 {
            for x in 0..200 {
                let in_near = (x as f64 - 80.0).hypot(y as f64 - 60.0) <= 2.0;
                let in_far = (x as f64 - 83.0).hypot(y as f64 - 60.0) <= 2.0;
                let expected = if in_near {
                    zn
                } else if in_far {
                    zf
                } else {
                    0.0
                };
                assert_eq!(map[[y, x]], expected);
            }
        }
    }

    #[test]
    fn relative_depth_sign_and_overlap() {
        let spec = default_skeleton();
        let c = cam();
        let mk = |zp: f64, zc: f64, a: (f64, f64), b: (f64, f64)| {
            let mut p = person_at(&spec, zp, &[(0, a.0, a.1)]);
            p.joints[1] = Joint3D::visible(back_project(Point2D::new(b.0, b.1), zc, &c).unwrap());
            p
        };
        let cfg = EncoderConfig::default();
        let behind = mk(3000.0, 3200.0, (40.0, 60.0), (120.0, 60.0));
        let level = mk(2500.0, 2500.0, (100.0, 63.0), (160.0, 63.0));
        let rel = render_relative_depth_maps(&Scene::new(c, vec![behind, level]), &spec, &cfg).unwrap();
        assert_eq!(rel[[0, 60, 50]], 200.0);
        assert_eq!(rel[[0, 63, 150]], 0.0);
        // overlap region: the person with the nearer parent (z = 2500) wins
        for y in 0..120 {
            for x in 0..200 {
                let in_a =
                    segment_distance(x as f64, y as f64, Point2D::new(40.0, 60.0), Point2D::new(120.0, 60.0)) <= 4.0;
                let in_b =
                    segment_distance(x as f64, y as f64, Point2D::new(100.0, 63.0), Point2D::new(160.0, 63.0)) <= 4.0;
                let expected = if in_b {
                    0.0
                } else if in_a {
                    200.0
                } else {
                    0.0
                };
                assert_eq!(rel[[0, y, x]], expected, "({x},{y})");
            }
        }
    }

    #[test]
    fn encode_is_deterministic_and_checks_joints() {
        let spec = default_skeleton();
        let p = person_at(&spec, 3000.0, &[(0, 80.0, 60.0), (1, 80.0, 20.0), (2, 80.0, 10.0)]);
        let scene = Scene::new(cam(), vec![p.clone(), p.translated(Point3D::new(600.0, 0.0, 200.0))]);
        let cfg = EncoderConfig::default();
        assert_eq!(
            encode(&scene, &spec, &cfg).unwrap(),
            encode(&scene, &spec, &cfg).unwrap()
        );

        let short = AbsolutePose3D::new(p.joints[..10].to_vec());
        assert!(matches!(
            encode(&Scene::new(cam(), vec![short]), &spec, &cfg),
            Err(EncodeError::JointCount { got: 10, .. })
        ));
        let bad = EncoderConfig { sigma: 0.0, ..cfg };
        assert!(encode(&scene, &spec, &bad).is_err());
    }

    #[test]
    fn stride_shrinks_maps() {
        let spec = default_skeleton();
        let cfg = EncoderConfig {
            map_stride: 4.0,
            ..Default::default()
        };
        let scene = Scene::new(cam(), vec![person_at(&spec, 3000.0, &[(2, 100.0, 48.0)])]);
        let hm = render_heatmaps(&scene, &spec, &cfg).unwrap();
        assert_eq!(hm.dim(), (15, 30, 50));
        assert_eq!(hm[[2, 12, 25]], 1.0);
    }

    #[test]
    fn distractors_are_applied() {
        let spec = default_skeleton();
        let mut scene = Scene::new(
            cam(),
            vec![person_at(&spec, 3000.0, &[(0, 50.0, 60.0), (1, 150.0, 60.0)])],
        );
        scene.distractors = vec![
            Distractor::SpuriousKeypoint {
                joint: 7,
                at: Point2D::new(20.0, 20.0),
            },
            Distractor::SpuriousLimb {
                part: 3,
                from: Point2D::new(20.0, 100.0),
                to: Point2D::new(20.0, 60.0),
            },
            Distractor::LimbAttenuation {
                person: 0,
                part: 0,
                factor: 0.5,
            },
        ];
        let st = encode(&scene, &spec, &EncoderConfig::default()).unwrap();
        assert_eq!(st.heatmap(7)[[20, 20]], 1.0);
        let (fx, fy) = st.paf(3);
        assert_eq!((fx[[80, 20]], fy[[80, 20]]), (0.0, -1.0));
        assert_eq!(st.paf(0).0[[60, 100]], 0.5);

        scene.distractors = vec![Distractor::LimbAttenuation {
            person: 0,
            part: 0,
            factor: 1.5,
        }];
        assert!(matches!(
            encode(&scene, &spec, &EncoderConfig::default()),
            Err(EncodeError::Distractor { index: 0, .. })
        ));
    }
}
