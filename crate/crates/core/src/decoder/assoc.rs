//! Grouping keypoint candidates into people.
//!
//! [`depth_aware_associate`] seeds one hypothesis per root candidate, orders
//! the hypotheses near-to-far by their root depth and walks the skeleton
//! part by part. For each part, hypotheses pick in priority order from the
//! still unclaimed child candidates, so a nearer (unoccluded) person always
//! gets first claim. A link is admissible only if its 2D length, as a
//! fraction of the map width, stays below `lambda * D_bone / Z~` for the
//! hypothesis' normalized root depth `Z~`.
//!
//! [`associate_2d`] is the depth-blind baseline: per part, all admissible
//! links are ranked by PAF score alone and accepted greedily, with a fixed
//! cap of half the image height on link length.

use super::{AssocConfig, DecodeError, KeypointCandidate};
use crate::geometry::{GeometryError, NormalizedDepth, Point2D};
use crate::skeleton::{BoneStats, SkeletonSpec};
use crate::stack::RepresentationStack;
use ndarray::ArrayView2;
use std::cmp::Ordering;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackedJoint {
    /// Map-pixel location.
    pub pos: Point2D,
    pub score: f32,
    /// Index into the candidate list of this joint type.
    pub candidate: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkCandidate {
    pub part: usize,
    /// Parent-side hypothesis index.
    pub a: usize,
    /// Child candidate index.
    pub b: usize,
    pub paf_score: f64,
    pub length_2d: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AcceptedLink {
    pub part: usize,
    pub parent: Point2D,
    pub child: Point2D,
    pub paf_score: f64,
    /// Map pixels.
    pub length_2d: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PersonHypothesis {
    pub joints_2d: Vec<Option<TrackedJoint>>,
    pub root_depth: NormalizedDepth,
    /// Metric depths, filled in by `read_depths`.
    pub joint_depths: Vec<Option<f64>>,
    pub links: Vec<AcceptedLink>,
    /// `(height, width)` of the maps the hypothesis was decoded from.
    pub map_size: (usize, usize),
}

impl PersonHypothesis {
    pub fn root_pixel(&self, spec: &SkeletonSpec) -> (usize, usize) {
        let p = self.joints_2d[spec.root()]
            .expect("hypotheses always hold their root")
            .pos;
        (p.u.round() as usize, p.v.round() as usize)
    }
}

/// Nearest-pixel lookup, `None` outside the map.
fn pixel_at<T: Copy>(map: &ArrayView2<T>, p: Point2D) -> Option<T> {
    let (h, w) = map.dim();
    let (x, y) = (p.u.round(), p.v.round());
    (x >= 0.0 && y >= 0.0 && x < w as f64 && y < h as f64).then(|| map[[y as usize, x as usize]])
}

/// Uniform samples on `a -> b`, endpoints included.
pub(super) fn segment_samples(a: Point2D, b: Point2D, n: usize) -> impl Iterator<Item = Point2D> {
    let step = 1.0 / (n.max(2) - 1) as f64;
    (0..n).map(move |i| {
        let t = i as f64 * step;
        Point2D::new(a.u + t * (b.u - a.u), a.v + t * (b.v - a.v))
    })
}

pub(super) fn mean_along(map: &ArrayView2<f32>, a: Point2D, b: Point2D, n: usize) -> f64 {
    segment_samples(a, b, n)
        .map(|p| pixel_at(map, p).unwrap_or(0.0) as f64)
        .sum::<f64>()
        / n as f64
}

/// Mean alignment of the field with `unit(b - a)` over `samples` points on
/// the segment, nearest-pixel lookup, zero outside the map.
pub fn paf_score(
    a: Point2D,
    b: Point2D,
    field: (ArrayView2<f32>, ArrayView2<f32>),
    samples: usize,
) -> Result<f64, DecodeError> {
    let len = a.distance(b);
    if !(len > 0.0) {
        return Err(DecodeError::ZeroLength);
    }
    let (ux, uy) = ((b.u - a.u) / len, (b.v - a.v) / len);
    let n = samples.max(2);
    let total: f64 = segment_samples(a, b, n)
        .map(|p| {
            let fx = pixel_at(&field.0, p).unwrap_or(0.0) as f64;
            let fy = pixel_at(&field.1, p).unwrap_or(0.0) as f64;
            fx * ux + fy * uy
        })
        .sum();
    Ok(total / n as f64)
}

/// Largest admissible 2D length for `part`, as a fraction of the image
/// width: `lambda * D_bone / Z~`.
pub fn link_threshold(
    part: usize,
    root_zt: NormalizedDepth,
    stats: &BoneStats,
    cfg: &AssocConfig,
) -> Result<f64, DecodeError> {
    if !(root_zt.value() > 0.0) {
        return Err(GeometryError::NonPositiveDepth(root_zt.value()).into());
    }
    Ok(cfg.lambda * stats.length(part) / root_zt.value())
}

/// Normalized root depth for a root candidate: the value at its nearest
/// pixel, or if that pixel is unsupervised, the closest positive pixel within
/// `radius`. `None` when nothing positive is found.
pub fn read_root_depth(root_map: &ArrayView2<f32>, cand: &KeypointCandidate, radius: f64) -> Option<f64> {
    if let Some(v) = pixel_at(root_map, cand.pos) {
        if v > 0.0 {
            return Some(v as f64);
        }
    }
    let (h, w) = root_map.dim();
    let r = radius.floor() as isize;
    let (cx, cy) = (cand.pos.u.round() as isize, cand.pos.v.round() as isize);
    let mut best: Option<(f64, f64)> = None;
    for dy in -r..=r {
        for dx in -r..=r {
            let (x, y) = (cx + dx, cy + dy);
            if x < 0 || y < 0 || x >= w as isize || y >= h as isize {
                continue;
            }
            let d = (x as f64 - cand.pos.u).hypot(y as f64 - cand.pos.v);
            let v = root_map[[y as usize, x as usize]];
            if d <= radius && v > 0.0 && best.is_none_or(|(bd, _)| d < bd) {
                best = Some((d, v as f64));
            }
        }
    }
    best.map(|(_, v)| v)
}

fn check_inputs(
    candidates: &[Vec<KeypointCandidate>],
    stack: &RepresentationStack,
    spec: &SkeletonSpec,
    cfg: &AssocConfig,
) -> Result<(), DecodeError> {
    cfg.validate()?;
    if stack.joints() != spec.joint_count() {
        return Err(crate::stack::StackError::ChannelCount {
            joints: spec.joint_count(),
            expected: spec.channel_count(),
            got: stack.channels(),
        }
        .into());
    }
    if candidates.len() != spec.joint_count() {
        return Err(DecodeError::Config(format!(
            "expected candidate lists for {} joints, got {}",
            spec.joint_count(),
            candidates.len()
        )));
    }
    Ok(())
}

/// One hypothesis per root candidate with a readable depth, in scan order.
fn seed(
    candidates: &[Vec<KeypointCandidate>],
    stack: &RepresentationStack,
    spec: &SkeletonSpec,
    cfg: &AssocConfig,
) -> Vec<PersonHypothesis> {
    let root_map = stack.root_depth();
    let j = spec.joint_count();
    candidates[spec.root()]
        .iter()
        .enumerate()
        .filter_map(|(i, c)| {
            let zt = read_root_depth(&root_map, c, cfg.nms_radius)?;
            let mut joints_2d = vec![None; j];
            joints_2d[spec.root()] = Some(TrackedJoint {
                pos: c.pos,
                score: c.score,
                candidate: i,
            });
            Some(PersonHypothesis {
                joints_2d,
                root_depth: NormalizedDepth(zt),
                joint_depths: vec![None; j],
                links: Vec::new(),
                map_size: (stack.height(), stack.width()),
            })
        })
        .collect()
}

/// Near-to-far; equal depths fall back to the root's scan order.
fn by_depth(spec: &SkeletonSpec) -> impl Fn(&PersonHypothesis, &PersonHypothesis) -> Ordering + '_ {
    move |a, b| {
        a.root_depth.value().total_cmp(&b.root_depth.value()).then_with(|| {
            let (ax, ay) = a.root_pixel(spec);
            let (bx, by) = b.root_pixel(spec);
            (ay, ax).cmp(&(by, bx))
        })
    }
}

fn attach(
    h: &mut PersonHypothesis,
    part: usize,
    child_joint: usize,
    parent: Point2D,
    c: &KeypointCandidate,
    ci: usize,
    score: f64,
    len: f64,
) {
    h.joints_2d[child_joint] = Some(TrackedJoint {
        pos: c.pos,
        score: c.score,
        candidate: ci,
    });
    h.links.push(AcceptedLink {
        part,
        parent,
        child: c.pos,
        paf_score: score,
        length_2d: len,
    });
}

pub fn depth_aware_associate(
    candidates: &[Vec<KeypointCandidate>],
    stack: &RepresentationStack,
    spec: &SkeletonSpec,
    stats: &BoneStats,
    cfg: &AssocConfig,
) -> Result<Vec<PersonHypothesis>, DecodeError> {
    check_inputs(candidates, stack, spec, cfg)?;
    stats.validate(spec).map_err(|e| DecodeError::Stats(e.to_string()))?;
    let mut hyps = seed(candidates, stack, spec, cfg);
    hyps.sort_by(by_depth(spec));
    let map_w = stack.width() as f64;
    let mut claimed: Vec<Vec<bool>> = candidates.iter().map(|c| vec![false; c.len()]).collect();

    for (p, part) in spec.parts().iter().enumerate() {
        let field = stack.paf(p);
        let pool = &candidates[part.child];
        for h in hyps.iter_mut() {
            let Some(parent) = h.joints_2d[part.parent] else {
                continue;
            };
            let limit = link_threshold(p, h.root_depth, stats, cfg)?;
            let mut best: Option<(usize, f64, f64)> = None;
            for (ci, c) in pool.iter().enumerate() {
                if claimed[part.child][ci] {
                    continue;
                }
                let len = parent.pos.distance(c.pos);
                if !(len > 0.0) || len / map_w > limit {
                    continue;
                }
                let score = paf_score(parent.pos, c.pos, (field.0.view(), field.1.view()), cfg.paf_samples)?;
                if score < cfg.min_paf_score {
                    continue;
                }
                if best.is_none_or(|(_, s, _)| score > s) {
                    best = Some((ci, score, len));
                }
            }
            if let Some((ci, score, len)) = best {
                claimed[part.child][ci] = true;
                attach(h, p, part.child, parent.pos, &pool[ci], ci, score, len);
            }
        }
    }
    Ok(hyps)
}

pub fn associate_2d(
    candidates: &[Vec<KeypointCandidate>],
    stack: &RepresentationStack,
    spec: &SkeletonSpec,
    cfg: &AssocConfig,
) -> Result<Vec<PersonHypothesis>, DecodeError> {
    check_inputs(candidates, stack, spec, cfg)?;
    let mut hyps = seed(candidates, stack, spec, cfg);
    let cap = 0.5 * stack.height() as f64;

    for (p, part) in spec.parts().iter().enumerate() {
        let field = stack.paf(p);
        let pool = &candidates[part.child];
        let mut links = Vec::new();
        for (hi, h) in hyps.iter().enumerate() {
            let Some(parent) = h.joints_2d[part.parent] else {
                continue;
            };
            for (ci, c) in pool.iter().enumerate() {
                let len = parent.pos.distance(c.pos);
                if !(len > 0.0) || len > cap {
                    continue;
                }
                let score = paf_score(parent.pos, c.pos, (field.0.view(), field.1.view()), cfg.paf_samples)?;
                if score >= cfg.min_paf_score {
                    links.push(LinkCandidate {
                        part: p,
                        a: hi,
                        b: ci,
                        paf_score: score,
                        length_2d: len,
                    });
                }
            }
        }
        links.sort_by(|x, y| {
            y.paf_score
                .total_cmp(&x.paf_score)
                .then_with(|| (x.a, x.b).cmp(&(y.a, y.b)))
        });
        let mut used_child = vec![false; pool.len()];
        let mut linked = vec![false; hyps.len()];
        for l in links {
            if used_child[l.b] || linked[l.a] {
                continue;
            }
            used_child[l.b] = true;
            linked[l.a] = true;
            let parent = hyps[l.a].joints_2d[part.parent].unwrap().pos;
            attach(
                &mut hyps[l.a],
                p,
                part.child,
                parent,
                &pool[l.b],
                l.b,
                l.paf_score,
                l.length_2d,
            );
        }
    }
    hyps.sort_by(by_depth(spec));
    Ok(hyps)
}
