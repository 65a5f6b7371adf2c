//! Evaluation: MPJPE, root error, 3DPCK (relative, absolute, root), AUC and
//! the percentage of correct ordinal depth relations (PCOD).
//!
//! Predictions are matched to ground truth per frame by 2D root distance.
//! Only ground-truth joints flagged visible are scored. A predicted joint
//! that is absent counts as incorrect for PCK and is skipped by MPJPE.
//! PCK-style scores come in two variants: over matched people only, and over
//! all ground-truth people, where every joint of an unmatched person counts
//! as incorrect. Counts are pooled over joints across frames; MPJPE and root
//! error are averaged over matched pairs.

use crate::geometry::{project, CameraIntrinsics, Point2D};
use crate::pose::AbsolutePose3D;
use serde::{Deserialize, Serialize};
use std::fmt::{self, Write as _};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricError {
    #[error("no matched people; the metric is undefined")]
    EmptyMatching,
    #[error("fewer than two matched people; ordinal depth is undefined")]
    TooFewForOrdinal,
    #[error("PCK threshold must be positive, got {0}")]
    BadThreshold(f64),
    #[error("AUC thresholds must be non-empty and strictly increasing")]
    BadThresholdGrid,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalConfig {
    /// 3DPCK threshold, mm.
    pub pck_threshold: f64,
    /// Root depth differences within this band are "roughly the same", mm.
    pub pcod_tie: f64,
    /// Largest 2D root distance for a prediction to match, image pixels.
    pub gate_px: f64,
    /// Threshold grid for the AUC, mm.
    pub auc_thresholds: Vec<f64>,
}

impl EvalConfig {
    pub fn validate(&self) -> Result<(), MetricError> {
        if !(self.pck_threshold > 0.0) {
            return Err(MetricError::BadThreshold(self.pck_threshold));
        }
        check_grid(&self.auc_thresholds)
    }
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            pck_threshold: 150.0,
            pcod_tie: 300.0,
            gate_px: 40.0,
            auc_thresholds: (0..=30).map(|i| i as f64 * 5.0).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Matching {
    /// `(pred index, gt index)`.
    pub pairs: Vec<(usize, usize)>,
    pub unmatched_gt: Vec<usize>,
}

/// Greedy matching in ascending 2D root distance. A prediction needs a
/// visible root; a pair is admissible when the projected roots are within
/// `gate_px`.
pub fn match_people(
    pred: &[AbsolutePose3D],
    gt: &[AbsolutePose3D],
    cam: &CameraIntrinsics,
    root: usize,
    gate_px: f64,
) -> Matching {
    let root_px = |p: &AbsolutePose3D, need_visible: bool| -> Option<Point2D> {
        let j = p.joints.get(root)?;
        if need_visible && !j.visible {
            return None;
        }
        project(j.pos, cam).ok()
    };
    let mut cands = Vec::new();
    for (pi, p) in pred.iter().enumerate() {
        let Some(pp) = root_px(p, true) else { continue };
        for (gi, g) in gt.iter().enumerate() {
            let Some(gp) = root_px(g, false) else { continue };
            let d = pp.distance(gp);
            if d <= gate_px {
                cands.push((d, gi, pi));
            }
        }
    }
    cands.sort_by(|a, b| a.0.total_cmp(&b.0).then((a.1, a.2).cmp(&(b.1, b.2))));
    let mut pred_used = vec![false; pred.len()];
    let mut gt_used = vec![false; gt.len()];
    let mut pairs = Vec::new();
    for (_, gi, pi) in cands {
        if pred_used[pi] || gt_used[gi] {
            continue;
        }
        pred_used[pi] = true;
        gt_used[gi] = true;
        pairs.push((pi, gi));
    }
    pairs.sort_by_key(|&(_, g)| g);
    Matching {
        pairs,
        unmatched_gt: (0..gt.len()).filter(|&g| !gt_used[g]).collect(),
    }
}

/// Per scored joint of one matched pair: `(joint, absolute error, root-aligned error)`.
/// Errors are `None` where the prediction lacks the joint.
fn pair_errors(pred: &AbsolutePose3D, gt: &AbsolutePose3D, root: usize) -> Vec<(usize, Option<f64>, Option<f64>)> {
    let pr = pred.joints[root].pos;
    let gr = gt.joints[root].pos;
    gt.joints
        .iter()
        .enumerate()
        .filter(|(_, g)| g.visible)
        .map(|(j, g)| match pred.joints.get(j).filter(|p| p.visible) {
            Some(p) => (j, Some(p.pos.distance(g.pos)), Some((p.pos - pr).distance(g.pos - gr))),
            None => (j, None, None),
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PckMode {
    /// Root-aligned.
    Rel,
    /// No alignment.
    Abs,
    /// Root joints only, no alignment.
    Root,
}

fn correct(err: Option<f64>, threshold: f64) -> bool {
    // at a zero threshold the strict test degenerates; use its right limit
    matches!(err, Some(e) if e < threshold || (threshold <= 0.0 && e <= 0.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
struct Tally {
    correct: usize,
    matched_total: usize,
    unmatched_total: usize,
}

impl Tally {
    fn matched(&self) -> Option<f64> {
        (self.matched_total > 0).then(|| 100.0 * self.correct as f64 / self.matched_total as f64)
    }

    fn all(&self) -> Option<f64> {
        let n = self.matched_total + self.unmatched_total;
        (n > 0).then(|| 100.0 * self.correct as f64 / n as f64)
    }

    fn add(&mut self, o: &Tally) {
        self.correct += o.correct;
        self.matched_total += o.matched_total;
        self.unmatched_total += o.unmatched_total;
    }
}

fn tally(
    pred: &[AbsolutePose3D],
    gt: &[AbsolutePose3D],
    m: &Matching,
    root: usize,
    threshold: f64,
    mode: PckMode,
) -> Tally {
    let mut t = Tally::default();
    for &(pi, gi) in &m.pairs {
        for (j, abs, rel) in pair_errors(&pred[pi], &gt[gi], root) {
            let err = match mode {
                PckMode::Rel => rel,
                PckMode::Abs => abs,
                PckMode::Root if j == root => abs,
                PckMode::Root => continue,
            };
            t.matched_total += 1;
            t.correct += correct(err, threshold) as usize;
        }
    }
    for &gi in &m.unmatched_gt {
        t.unmatched_total += match mode {
            PckMode::Root => gt[gi].joints.get(root).is_some_and(|j| j.visible) as usize,
            _ => gt[gi].visible_count(),
        };
    }
    t
}

/// A score over matched people and over all ground-truth people, percent.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Split {
    pub matched: Option<f64>,
    pub all: Option<f64>,
}

fn split(t: &Tally) -> Split {
    Split {
        matched: t.matched(),
        all: t.all(),
    }
}

/// Mean over matched pairs of the mean root-aligned joint error, mm.
pub fn mpjpe(pred: &[AbsolutePose3D], gt: &[AbsolutePose3D], m: &Matching, root: usize) -> Result<f64, MetricError> {
    let (sum, n) = mpjpe_sum(pred, gt, m, root);
    if n == 0 {
        return Err(MetricError::EmptyMatching);
    }
    Ok(sum / n as f64)
}

fn mpjpe_sum(pred: &[AbsolutePose3D], gt: &[AbsolutePose3D], m: &Matching, root: usize) -> (f64, usize) {
    let mut sum = 0.0;
    let mut n = 0;
    for &(pi, gi) in &m.pairs {
        let errs: Vec<f64> = pair_errors(&pred[pi], &gt[gi], root)
            .into_iter()
            .filter_map(|(_, _, rel)| rel)
            .collect();
        if !errs.is_empty() {
            sum += errs.iter().sum::<f64>() / errs.len() as f64;
            n += 1;
        }
    }
    (sum, n)
}

/// Mean 3D distance between matched roots, mm.
pub fn rt_error(pred: &[AbsolutePose3D], gt: &[AbsolutePose3D], m: &Matching, root: usize) -> Result<f64, MetricError> {
    if m.pairs.is_empty() {
        return Err(MetricError::EmptyMatching);
    }
    Ok(rt_sum(pred, gt, m, root) / m.pairs.len() as f64)
}

fn rt_sum(pred: &[AbsolutePose3D], gt: &[AbsolutePose3D], m: &Matching, root: usize) -> f64 {
    m.pairs
        .iter()
        .map(|&(pi, gi)| pred[pi].joints[root].pos.distance(gt[gi].joints[root].pos))
        .sum()
}

/// Percentage of scored joints with error strictly below `threshold` mm.
pub fn pck3d(
    pred: &[AbsolutePose3D],
    gt: &[AbsolutePose3D],
    m: &Matching,
    root: usize,
    threshold: f64,
    mode: PckMode,
) -> Result<Split, MetricError> {
    if !(threshold > 0.0) {
        return Err(MetricError::BadThreshold(threshold));
    }
    Ok(split(&tally(pred, gt, m, root, threshold, mode)))
}

fn check_grid(thresholds: &[f64]) -> Result<(), MetricError> {
    if thresholds.is_empty() || thresholds.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(MetricError::BadThresholdGrid);
    }
    Ok(())
}

/// Trapezoidal mean of a curve sampled on a threshold grid.
fn trapezoid_mean(thresholds: &[f64], values: &[f64]) -> f64 {
    if thresholds.len() == 1 {
        return values[0];
    }
    let area: f64 = thresholds
        .windows(2)
        .zip(values.windows(2))
        .map(|(t, v)| 0.5 * (v[0] + v[1]) * (t[1] - t[0]))
        .sum();
    area / (thresholds[thresholds.len() - 1] - thresholds[0])
}

fn auc_from_tallies(thresholds: &[f64], tallies: &[Tally]) -> Split {
    let curve = |f: fn(&Tally) -> Option<f64>| -> Option<f64> {
        let v: Option<Vec<f64>> = tallies.iter().map(f).collect();
        v.map(|v| trapezoid_mean(thresholds, &v))
    };
    Split {
        matched: curve(Tally::matched),
        all: curve(Tally::all),
    }
}

/// Area under the root-aligned PCK curve over `thresholds`, percent.
pub fn auc_rel(
    pred: &[AbsolutePose3D],
    gt: &[AbsolutePose3D],
    m: &Matching,
    root: usize,
    thresholds: &[f64],
) -> Result<Split, MetricError> {
    check_grid(thresholds)?;
    let tallies: Vec<Tally> = thresholds
        .iter()
        .map(|&t| tally(pred, gt, m, root, t, PckMode::Rel))
        .collect();
    Ok(auc_from_tallies(thresholds, &tallies))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Ordinal {
    Closer,
    Same,
    Farther,
}

fn ordinal(d: f64, tie: f64) -> Ordinal {
    if d.abs() <= tie {
        Ordinal::Same
    } else if d < 0.0 {
        Ordinal::Closer
    } else {
        Ordinal::Farther
    }
}

/// `(agreeing pairs, pairs)` over unordered pairs of matched people.
fn pcod_counts(pred: &[AbsolutePose3D], gt: &[AbsolutePose3D], m: &Matching, root: usize, tie: f64) -> (usize, usize) {
    let mut agree = 0;
    let mut total = 0;
    for (i, &(pa, ga)) in m.pairs.iter().enumerate() {
        for &(pb, gb) in &m.pairs[i + 1..] {
            let gd = gt[ga].joints[root].pos.z - gt[gb].joints[root].pos.z;
            let pd = pred[pa].joints[root].pos.z - pred[pb].joints[root].pos.z;
            total += 1;
            agree += (ordinal(gd, tie) == ordinal(pd, tie)) as usize;
        }
    }
    (agree, total)
}

/// Percentage of matched-person pairs whose ordinal root-depth relation
/// (closer, farther, or within `tie` mm) agrees with ground truth.
pub fn pcod(
    pred: &[AbsolutePose3D],
    gt: &[AbsolutePose3D],
    m: &Matching,
    root: usize,
    tie: f64,
) -> Result<f64, MetricError> {
    let (agree, total) = pcod_counts(pred, gt, m, root, tie);
    if total == 0 {
        return Err(MetricError::TooFewForOrdinal);
    }
    Ok(100.0 * agree as f64 / total as f64)
}

/// One image worth of predictions and ground truth.
#[derive(Debug, Clone, Copy)]
pub struct Frame<'a> {
    pub pred: &'a [AbsolutePose3D],
    pub gt: &'a [AbsolutePose3D],
    pub cam: CameraIntrinsics,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Counts {
    pub frames: usize,
    pub gt_people: usize,
    pub pred_people: usize,
    pub matched: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    /// Matched ground-truth people over all ground-truth people, percent.
    pub recall: Option<f64>,
    pub mpjpe_mm: Option<f64>,
    pub rt_error_mm: Option<f64>,
    pub pck_rel: Split,
    pub pck_abs: Split,
    pub pck_root: Split,
    pub auc_rel: Split,
    pub pcod: Option<f64>,
    pub counts: Counts,
    pub config: EvalConfig,
}

/// Pools frame results; merging is associative and commutative.
#[derive(Debug, Clone, Default)]
pub struct MetricAccumulator {
    counts: Counts,
    mpjpe_sum: f64,
    mpjpe_pairs: usize,
    rt_sum: f64,
    rel: Tally,
    abs: Tally,
    root: Tally,
    auc: Vec<Tally>,
    pcod_agree: usize,
    pcod_total: usize,
}

impl MetricAccumulator {
    pub fn frame(frame: &Frame, root: usize, cfg: &EvalConfig) -> Self {
        let m = match_people(frame.pred, frame.gt, &frame.cam, root, cfg.gate_px);
        let (pred, gt) = (frame.pred, frame.gt);
        let (mpjpe_sum, mpjpe_pairs) = mpjpe_sum(pred, gt, &m, root);
        let (pcod_agree, pcod_total) = pcod_counts(pred, gt, &m, root, cfg.pcod_tie);
        Self {
            counts: Counts {
                frames: 1,
                gt_people: gt.len(),
                pred_people: pred.len(),
                matched: m.pairs.len(),
            },
            mpjpe_sum,
            mpjpe_pairs,
            rt_sum: rt_sum(pred, gt, &m, root),
            rel: tally(pred, gt, &m, root, cfg.pck_threshold, PckMode::Rel),
            abs: tally(pred, gt, &m, root, cfg.pck_threshold, PckMode::Abs),
            root: tally(pred, gt, &m, root, cfg.pck_threshold, PckMode::Root),
            auc: cfg
                .auc_thresholds
                .iter()
                .map(|&t| tally(pred, gt, &m, root, t, PckMode::Rel))
                .collect(),
            pcod_agree,
            pcod_total,
        }
    }

    pub fn merge(mut self, o: &MetricAccumulator) -> Self {
        self.counts.frames += o.counts.frames;
        self.counts.gt_people += o.counts.gt_people;
        self.counts.pred_people += o.counts.pred_people;
        self.counts.matched += o.counts.matched;
        self.mpjpe_sum += o.mpjpe_sum;
        self.mpjpe_pairs += o.mpjpe_pairs;
        self.rt_sum += o.rt_sum;
        self.rel.add(&o.rel);
        self.abs.add(&o.abs);
        self.root.add(&o.root);
        if self.auc.is_empty() {
            self.auc = o.auc.clone();
        } else {
            for (a, b) in self.auc.iter_mut().zip(&o.auc) {
                a.add(b);
            }
        }
        self.pcod_agree += o.pcod_agree;
        self.pcod_total += o.pcod_total;
        self
    }

    pub fn finish(&self, cfg: &EvalConfig) -> MetricReport {
        let c = self.counts;
        let auc = if self.auc.len() == cfg.auc_thresholds.len() && !self.auc.is_empty() {
            auc_from_tallies(&cfg.auc_thresholds, &self.auc)
        } else {
            Split::default()
        };
        MetricReport {
            recall: (c.gt_people > 0).then(|| 100.0 * c.matched as f64 / c.gt_people as f64),
            mpjpe_mm: (self.mpjpe_pairs > 0).then(|| self.mpjpe_sum / self.mpjpe_pairs as f64),
            rt_error_mm: (c.matched > 0).then(|| self.rt_sum / c.matched as f64),
            pck_rel: split(&self.rel),
            pck_abs: split(&self.abs),
            pck_root: split(&self.root),
            auc_rel: auc,
            pcod: (self.pcod_total > 0).then(|| 100.0 * self.pcod_agree as f64 / self.pcod_total as f64),
            counts: c,
            config: cfg.clone(),
        }
    }
}

pub fn evaluate(frames: &[Frame], root: usize, cfg: &EvalConfig) -> Result<MetricReport, MetricError> {
    cfg.validate()?;
    let acc = frames
        .iter()
        .map(|f| MetricAccumulator::frame(f, root, cfg))
        .fold(MetricAccumulator::default(), |a, b| a.merge(&b));
    Ok(acc.finish(cfg))
}

impl fmt::Display for MetricReport {
    /// Aligned plain-text table, one row per people set.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let cell = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |v| format!("{v:.2}"));
        let mut out = String::new();
        writeln!(
            out,
            "{:<8} {:>8} {:>9} {:>8} {:>8} {:>8} {:>8} {:>9} {:>9}",
            "people", "Recall", "PCK_root", "PCK_abs", "PCK_rel", "PCOD", "AUC_rel", "MPJPE", "RtError"
        )?;
        for (label, pick) in [("matched", true), ("all", false)] {
            let s = |x: &Split| if pick { x.matched } else { x.all };
            writeln!(
                out,
                "{:<8} {:>8} {:>9} {:>8} {:>8} {:>8} {:>8} {:>9} {:>9}",
                label,
                cell(self.recall),
                cell(s(&self.pck_root)),
                cell(s(&self.pck_abs)),
                cell(s(&self.pck_rel)),
                cell(self.pcod),
                cell(s(&self.auc_rel)),
                cell(self.mpjpe_mm),
                cell(self.rt_error_mm),
            )?;
        }
        writeln!(
            out,
            "PCK threshold {} mm, PCOD tie {} mm, match gate {} px; {} frames, {}/{} people matched",
            self.config.pck_threshold,
            self.config.pcod_tie,
            self.config.gate_px,
            self.counts.frames,
            self.counts.matched,
            self.counts.gt_people
        )?;
        f.write_str(&out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Point3D;
    use crate::pose::Joint3D;
    use proptest::prelude::*;

    fn cam() -> CameraIntrinsics {
        CameraIntrinsics::new(800.0, 416.0, 256.0, 832.0, 512.0).unwrap()
    }

    fn person(x: f64, z: f64) -> AbsolutePose3D {
        let pts: Vec<Point3D> = (0..15)
            .map(|j| Point3D::new(x + 20.0 * j as f64, -30.0 * j as f64, z + 5.0 * j as f64))
            .collect();
        AbsolutePose3D::from_points(&pts)
    }

    fn moved(p: &AbsolutePose3D, j: usize, d: Point3D) -> AbsolutePose3D {
        let mut q = p.clone();
        q.joints[j].pos = q.joints[j].pos + d;
        q
    }

    #[test]
    fn identical_sets_match_perfectly() {
        let gt = vec![person(-800.0, 3000.0), person(600.0, 4000.0)];
        let m = match_people(&gt, &gt, &cam(), 0, 40.0);
        assert_eq!(m.pairs, vec![(0, 0), (1, 1)]);
        assert!(m.unmatched_gt.is_empty());
        let m = match_people(&[], &gt, &cam(), 0, 40.0);
        assert_eq!(m.unmatched_gt, vec![0, 1]);
    }

    /// Exhaustive oracle: the assignment of preds to gts (each used once,
    /// within the gate) with the most pairs, then least total distance.
    fn best_assignment(dist: &[[f64; 3]; 3], gate: f64) -> Vec<(usize, usize)> {
        let perms = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
        let mut best: Option<(usize, f64, Vec<(usize, usize)>)> = None;
        for perm in perms {
            let pairs: Vec<(usize, usize)> = (0..3)
                .filter(|&g| dist[perm[g]][g] <= gate)
                .map(|g| (perm[g], g))
                .collect();
            let cost: f64 = pairs.iter().map(|&(p, g)| dist[p][g]).sum();
            let better = match &best {
                None => true,
                Some((n, c, _)) => pairs.len() > *n || (pairs.len() == *n && cost < *c),
            };
            if better {
                best = Some((pairs.len(), cost, pairs));
            }
        }
        best.unwrap().2
    }

    #[test]
    fn greedy_matches_exhaustive_on_crafted_instances() {
        let c = cam();
        // roots at depth 4000 with pixel offsets: u = 416 + dx
        let at = |u: f64, v: f64| {
            let q = crate::geometry::back_project(Point2D::new(u, v), 4000.0, &c).unwrap();
            AbsolutePose3D::from_points(&[q; 15])
        };
        let cases: [([(f64, f64); 3], [(f64, f64); 3]); 3] = [
            (
                [(100.0, 100.0), (300.0, 100.0), (500.0, 300.0)],
                [(105.0, 100.0), (290.0, 110.0), (520.0, 300.0)],
            ),
            (
                [(100.0, 100.0), (120.0, 100.0), (140.0, 100.0)],
                [(118.0, 100.0), (103.0, 100.0), (147.0, 100.0)],
            ),
            (
                [(100.0, 100.0), (400.0, 100.0), (700.0, 100.0)],
                [(102.0, 140.0), (400.0, 170.0), (690.0, 100.0)],
            ),
        ];
        for (preds, gts) in cases {
            let pred: Vec<_> = preds.iter().map(|&(u, v)| at(u, v)).collect();
            let gt: Vec<_> = gts.iter().map(|&(u, v)| at(u, v)).collect();
            let mut dist = [[0.0; 3]; 3];
            for p in 0..3 {
                for g in 0..3 {
                    dist[p][g] = Point2D::new(preds[p].0, preds[p].1).distance(Point2D::new(gts[g].0, gts[g].1));
                }
            }
            let m = match_people(&pred, &gt, &c, 0, 40.0);
            assert_eq!(m.pairs, best_assignment(&dist, 40.0));
        }
    }

    #[test]
    fn greedy_takes_the_closest_pair_first() {
        let c = cam();
        let at = |u: f64| {
            let q = crate::geometry::back_project(Point2D::new(u, 100.0), 4000.0, &c).unwrap();
            AbsolutePose3D::from_points(&[q; 15])
        };
        // the globally cheapest assignment is (1,0) (0,1) (2,2) at 31 px;
        // greedy commits to the 7 px pair (2,0) first and ends at 45 px
        let pred: Vec<_> = [100.0, 120.0, 140.0].iter().map(|&u| at(u)).collect();
        let gt: Vec<_> = [133.0, 108.0, 150.0].iter().map(|&u| at(u)).collect();
        let m = match_people(&pred, &gt, &c, 0, 40.0);
        assert_eq!(m.pairs, vec![(2, 0), (0, 1), (1, 2)]);
    }

    #[test]
    fn mpjpe_examples() {
        let gt = vec![person(0.0, 3000.0)];
        let m = Matching {
            pairs: vec![(0, 0)],
            unmatched_gt: vec![],
        };
        assert_eq!(mpjpe(&gt, &gt, &m, 0).unwrap(), 0.0);
        let shifted = vec![gt[0].translated(Point3D::new(50.0, -70.0, 120.0))];
        assert!(mpjpe(&shifted, &gt, &m, 0).unwrap() < 1e-9);
        let off = vec![moved(&gt[0], 5, Point3D::new(30.0, 40.0, 0.0))];
        assert!((mpjpe(&off, &gt, &m, 0).unwrap() - 50.0 / 15.0).abs() < 1e-12);
        assert_eq!(
            mpjpe(&gt, &gt, &Matching::default(), 0),
            Err(MetricError::EmptyMatching)
        );
    }

    #[test]
    fn rt_error_examples() {
        let gt = vec![person(0.0, 3000.0), person(900.0, 5000.0)];
        let m = Matching {
            pairs: vec![(0, 0), (1, 1)],
            unmatched_gt: vec![],
        };
        assert_eq!(rt_error(&gt, &gt, &m, 0).unwrap(), 0.0);
        let pred = vec![moved(&gt[0], 0, Point3D::new(0.0, 0.0, 100.0)), gt[1].clone()];
        let one = Matching {
            pairs: vec![(0, 0)],
            unmatched_gt: vec![1],
        };
        assert_eq!(rt_error(&pred, &gt, &one, 0).unwrap(), 100.0);
        let pred = vec![
            moved(&gt[0], 0, Point3D::new(30.0, 40.0, 0.0)),
            moved(&gt[1], 0, Point3D::new(0.0, 0.0, -150.0)),
        ];
        assert_eq!(rt_error(&pred, &gt, &m, 0).unwrap(), 100.0);
        assert!(rt_error(&pred, &gt, &Matching::default(), 0).is_err());
    }

    fn uniform_error(gt: &AbsolutePose3D, e: f64) -> AbsolutePose3D {
        gt.translated(Point3D::new(e, 0.0, 0.0))
    }

    #[test]
    fn pck_boundary_is_strict() {
        let gt = vec![person(0.0, 3000.0)];
        let m = Matching {
            pairs: vec![(0, 0)],
            unmatched_gt: vec![],
        };
        let p100 = vec![uniform_error(&gt[0], 100.0)];
        assert_eq!(
            pck3d(&p100, &gt, &m, 0, 150.0, PckMode::Abs).unwrap().matched,
            Some(100.0)
        );
        let p150 = vec![uniform_error(&gt[0], 150.0)];
        assert_eq!(
            pck3d(&p150, &gt, &m, 0, 150.0, PckMode::Abs).unwrap().matched,
            Some(0.0)
        );
        assert_eq!(
            pck3d(&p150, &gt, &m, 0, 150.0, PckMode::Root).unwrap().matched,
            Some(0.0)
        );
        // root alignment removes the translation entirely
        assert_eq!(
            pck3d(&p150, &gt, &m, 0, 150.0, PckMode::Rel).unwrap().matched,
            Some(100.0)
        );
        assert!(pck3d(&p150, &gt, &m, 0, 0.0, PckMode::Rel).is_err());
    }

    #[test]
    fn pck_mixed_hand_count() {
        let gt = vec![person(0.0, 3000.0), person(900.0, 5000.0)];
        let mut p = gt[0].clone();
        // joints 3, 4 off by 200; joint 7 off by 149.9; joint 9 missing
        p.joints[3].pos.x += 200.0;
        p.joints[4].pos.y -= 200.0;
        p.joints[7].pos.z += 149.9;
        p.joints[9] = Joint3D::absent();
        let pred = vec![p];
        let m = Matching {
            pairs: vec![(0, 0)],
            unmatched_gt: vec![1],
        };
        let s = pck3d(&pred, &gt, &m, 0, 150.0, PckMode::Rel).unwrap();
        assert_eq!(s.matched, Some(100.0 * 12.0 / 15.0));
        assert_eq!(s.all, Some(100.0 * 12.0 / 30.0));
        let r = pck3d(&pred, &gt, &m, 0, 150.0, PckMode::Root).unwrap();
        assert_eq!((r.matched, r.all), (Some(100.0), Some(50.0)));
    }

    #[test]
    fn auc_examples() {
        let gt = vec![person(0.0, 3000.0)];
        let m = Matching {
            pairs: vec![(0, 0)],
            unmatched_gt: vec![],
        };
        let grid = EvalConfig::default().auc_thresholds;
        assert_eq!(auc_rel(&gt, &gt, &m, 0, &grid).unwrap().matched, Some(100.0));

        // every non-root joint off by 200 mm: only the root is ever correct
        let mut far = gt[0].clone();
        for j in far.joints.iter_mut().skip(1) {
            j.pos.x += 200.0;
        }
        let v = auc_rel(&[far], &gt, &m, 0, &grid).unwrap().matched.unwrap();
        assert!((v - 100.0 / 15.0).abs() < 1e-9);

        // step at 75 mm: PCK is 0 up to and including 75 (strict), then 100
        let mut step = gt[0].clone();
        for j in step.joints.iter_mut() {
            j.pos.x += 75.0;
        }
        step.joints[0].pos.x -= 75.0;
        // root-aligned error: 75 on every non-root joint, 0 on the root
        let v = auc_rel(&[step], &gt, &m, 0, &grid).unwrap().matched.unwrap();
        // curve: 100/15 on [0, 75], 100 on [80, 150]
        let low = 100.0 / 15.0;
        let expected = (low * 75.0 + 0.5 * (low + 100.0) * 5.0 + 100.0 * 70.0) / 150.0;
        assert!((v - expected).abs() < 1e-9);
        assert!(auc_rel(&gt, &gt, &m, 0, &[0.0, 5.0, 5.0]).is_err());
        assert!(auc_rel(&gt, &gt, &m, 0, &[]).is_err());
    }

    #[test]
    fn pcod_examples() {
        let m = Matching {
            pairs: vec![(0, 0), (1, 1)],
            unmatched_gt: vec![],
        };
        let gt = vec![person(0.0, 3000.0), person(900.0, 3400.0)];
        let pred = vec![person(0.0, 3100.0), person(900.0, 3450.0)];
        assert_eq!(pcod(&pred, &gt, &m, 0, 300.0).unwrap(), 100.0);
        let gt = vec![person(0.0, 3000.0), person(900.0, 3100.0)];
        let pred = vec![person(0.0, 3000.0), person(900.0, 3500.0)];
        assert_eq!(pcod(&pred, &gt, &m, 0, 300.0).unwrap(), 0.0);
        let one = Matching {
            pairs: vec![(0, 0)],
            unmatched_gt: vec![1],
        };
        assert_eq!(pcod(&pred, &gt, &one, 0, 300.0), Err(MetricError::TooFewForOrdinal));
    }

    #[test]
    fn evaluate_perfect_and_empty() {
        let gt = vec![person(-900.0, 3000.0), person(700.0, 4500.0)];
        let cfg = EvalConfig::default();
        let r = evaluate(
            &[Frame {
                pred: &gt,
                gt: &gt,
                cam: cam(),
            }],
            0,
            &cfg,
        )
        .unwrap();
        assert_eq!(r.recall, Some(100.0));
        assert_eq!(r.mpjpe_mm, Some(0.0));
        assert_eq!(r.rt_error_mm, Some(0.0));
        for s in [r.pck_rel, r.pck_abs, r.pck_root, r.auc_rel] {
            assert_eq!((s.matched, s.all), (Some(100.0), Some(100.0)));
        }
        assert_eq!(r.pcod, Some(100.0));

        let r = evaluate(
            &[Frame {
                pred: &[],
                gt: &gt,
                cam: cam(),
            }],
            0,
            &cfg,
        )
        .unwrap();
        assert_eq!(r.recall, Some(0.0));
        assert_eq!(r.pck_rel.all, Some(0.0));
        assert_eq!(r.pck_abs.all, Some(0.0));
        assert_eq!(r.pck_root.all, Some(0.0));
        assert_eq!(r.pck_rel.matched, None);
        assert_eq!(r.mpjpe_mm, None);
        assert_eq!(r.pcod, None);
        let text = r.to_string();
        assert!(text.contains("PCK_root") && text.contains("matched"));
    }

    fn jittered_people(seed: u64) -> (Vec<AbsolutePose3D>, Vec<AbsolutePose3D>) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let n = rng.gen_range(2..5);
        let gt: Vec<_> = (0..n)
            .map(|i| person(-1200.0 + 700.0 * i as f64, rng.gen_range(2000.0..6000.0)))
            .collect();
        let pred = gt
            .iter()
            .map(|p| {
                let mut q = p.clone();
                for (k, j) in q.joints.iter_mut().enumerate() {
                    let s = if k == 0 { 0.2 } else { 1.0 };
                    j.pos = j.pos
                        + Point3D::new(
                            rng.gen_range(-90.0..90.0),
                            rng.gen_range(-90.0..90.0),
                            rng.gen_range(-250.0..250.0),
                        ) * s;
                }
                q
            })
            .collect();
        (pred, gt)
    }

    proptest! {
        #[test]
        fn metrics_ignore_person_order(seed in any::<u64>(), rot in 0usize..4) {
            let (pred, gt) = jittered_people(seed);
            let cfg = EvalConfig::default();
            let a = evaluate(&[Frame { pred: &pred, gt: &gt, cam: cam() }], 0, &cfg).unwrap();
            let mut p2 = pred.clone();
            p2.rotate_left(rot % pred.len());
            let mut g2 = gt.clone();
            g2.reverse();
            let b = evaluate(&[Frame { pred: &p2, gt: &g2, cam: cam() }], 0, &cfg).unwrap();
            prop_assert_eq!(a.pcod, b.pcod);
            prop_assert_eq!(a.pck_rel, b.pck_rel);
            prop_assert_eq!(a.pck_abs, b.pck_abs);
            prop_assert_eq!(a.counts, b.counts);
            prop_assert!((a.mpjpe_mm.unwrap() - b.mpjpe_mm.unwrap()).abs() < 1e-9);
        }

        #[test]
        fn pck_monotone_and_auc_bounded(seed in any::<u64>()) {
            let (pred, gt) = jittered_people(seed);
            let m = match_people(&pred, &gt, &cam(), 0, 40.0);
            let grid = EvalConfig::default().auc_thresholds;
            let curve: Vec<f64> = grid[1..]
                .iter()
                .map(|&t| pck3d(&pred, &gt, &m, 0, t, PckMode::Rel).unwrap().matched.unwrap())
                .collect();
            prop_assert!(curve.windows(2).all(|w| w[1] >= w[0]));
            let auc = auc_rel(&pred, &gt, &m, 0, &grid).unwrap().matched.unwrap();
            let lo = tally(&pred, &gt, &m, 0, 0.0, PckMode::Rel).matched().unwrap();
            let hi = *curve.last().unwrap();
            prop_assert!(auc >= lo - 1e-9 && auc <= hi + 1e-9);
        }

        #[test]
        fn pcod_ignores_common_depth_offset(seed in any::<u64>(), off in -1000.0..1000.0f64) {
            let (pred, gt) = jittered_people(seed);
            let m = match_people(&pred, &gt, &cam(), 0, 40.0);
            let shift = |v: &[AbsolutePose3D]| -> Vec<AbsolutePose3D> {
                v.iter().map(|p| p.translated(Point3D::new(0.0, 0.0, off))).collect()
            };
            let a = pcod(&pred, &gt, &m, 0, 300.0);
            let b = pcod(&shift(&pred), &shift(&gt), &m, 0, 300.0);
            prop_assert_eq!(a, b);
        }

        #[test]
        fn mpjpe_ignores_prediction_translation(seed in any::<u64>(), dx in -500.0..500.0f64, dz in -500.0..500.0f64) {
            let (pred, gt) = jittered_people(seed);
            let m = match_people(&pred, &gt, &cam(), 0, 40.0);
            let moved: Vec<_> = pred.iter().map(|p| p.translated(Point3D::new(dx, 0.0, dz))).collect();
            let a = mpjpe(&pred, &gt, &m, 0).unwrap();
            let b = mpjpe(&moved, &gt, &m, 0).unwrap();
            prop_assert!((a - b).abs() < 1e-9);
        }
    }
}
