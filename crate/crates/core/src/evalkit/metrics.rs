use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::objectness::BBox;

pub const DEFAULT_IOU: f64 = 0.5;

/// Outcome of greedy matching on one image.
#[derive(Debug, Clone, PartialEq)]
pub struct MatchResult {
    /// Per detection (input order): matched GT index and its IoU.
    pub detections: Vec<Option<(usize, f64)>>,
    pub gt_covered: Vec<bool>,
}

impl MatchResult {
    pub fn true_positives(&self) -> usize {
        self.detections.iter().filter(|d| d.is_some()).count()
    }

    pub fn covered(&self) -> usize {
        self.gt_covered.iter().filter(|c| **c).count()
    }
}

/// Indices of `boxes` by descending score, equal scores in input order.
pub fn score_order(boxes: &[BBox]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..boxes.len()).collect();
    order.sort_by(|&a, &b| boxes[b].score.total_cmp(&boxes[a].score));
    order
}

/// Greedy matching by descending detection score. Each detection takes the
/// unmatched GT with the highest IoU above `iou_thresh` (strictly greater),
/// ties going to the lower GT index. With `class_aware`, classes must agree.
pub fn match_detections(dets: &[BBox], gts: &[BBox], iou_thresh: f64, class_aware: bool) -> MatchResult {
    let mut detections = vec![None; dets.len()];
    let mut gt_covered = vec![false; gts.len()];
    for i in score_order(dets) {
        let mut best: Option<(usize, f64)> = None;
        for (g, gt) in gts.iter().enumerate() {
            if gt_covered[g] || (class_aware && gt.class != dets[i].class) {
                continue;
            }
            let o = dets[i].iou(gt);
            if o > iou_thresh && best.map_or(true, |(_, b)| o > b) {
                best = Some((g, o));
            }
        }
        if let Some((g, o)) = best {
            gt_covered[g] = true;
            detections[i] = Some((g, o));
        }
    }
    MatchResult {
        detections,
        gt_covered,
    }
}

fn top_k(dets: &[BBox], k: usize) -> Vec<BBox> {
    score_order(dets).into_iter().take(k).map(|i| dets[i]).collect()
}

/// Micro-averaged precision and recall with each image truncated to its top
/// `k` detections. Precision is 0 when nothing is detected and recall is 0
/// when there is no GT.
pub fn precision_recall_at_k(
    dets: &[Vec<BBox>],
    gts: &[Vec<BBox>],
    k: usize,
    iou_thresh: f64,
    class_aware: bool,
) -> (f64, f64) {
    let (mut tp, mut n_det, mut covered, mut n_gt) = (0, 0, 0, 0);
    for (d, g) in dets.iter().zip(gts) {
        let kept = top_k(d, k);
        let m = match_detections(&kept, g, iou_thresh, class_aware);
        tp += m.true_positives();
        covered += m.covered();
        n_det += kept.len();
        n_gt += g.len();
    }
    let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
    (ratio(tp, n_det), ratio(covered, n_gt))
}

/// Mean over images with at least one GT of the covered GT fraction, one
/// value per `k`.
pub fn average_recall_at_k(
    dets: &[Vec<BBox>],
    gts: &[Vec<BBox>],
    ks: &[usize],
    iou_thresh: f64,
    class_aware: bool,
) -> Vec<f64> {
    ks.iter()
        .map(|&k| {
            let mut total = 0.0;
            let mut images = 0;
            for (d, g) in dets.iter().zip(gts) {
                if g.is_empty() {
                    continue;
                }
                let m = match_detections(&top_k(d, k), g, iou_thresh, class_aware);
                total += m.covered() as f64 / g.len() as f64;
                images += 1;
            }
            if images == 0 {
                0.0
            } else {
                total / images as f64
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Interpolation {
    /// Area under the monotone precision envelope at every recall step.
    #[default]
    AllPoint,
    /// Mean envelope precision at recall 0, 0.1, ..., 1.
    ElevenPoint,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrCurve {
    /// `(recall, precision)` after each ranked detection.
    pub points: Vec<(f64, f64)>,
    pub ap: f64,
}

/// Ranked-detection AP for one class over the dataset. `None` when the class
/// has no GT. Detections of the class are ranked by score across images;
/// equal scores keep image order, then per-image order.
pub fn average_precision(
    dets: &[Vec<BBox>],
    gts: &[Vec<BBox>],
    class: usize,
    iou_thresh: f64,
    interpolation: Interpolation,
) -> Option<PrCurve> {
    let mut ranked: Vec<(f64, bool)> = Vec::new();
    let mut npos = 0;
    for (d, g) in dets.iter().zip(gts) {
        let dc: Vec<BBox> = d.iter().filter(|b| b.class == Some(class)).copied().collect();
        let gc: Vec<BBox> = g.iter().filter(|b| b.class == Some(class)).copied().collect();
        npos += gc.len();
        let m = match_detections(&dc, &gc, iou_thresh, false);
        ranked.extend(dc.iter().zip(&m.detections).map(|(b, hit)| (b.score, hit.is_some())));
    }
    if npos == 0 {
        return None;
    }
    let mut order: Vec<usize> = (0..ranked.len()).collect();
    order.sort_by(|&a, &b| ranked[b].0.total_cmp(&ranked[a].0));
    let mut points = Vec::with_capacity(order.len());
    let mut tp = 0usize;
    for (n, &i) in order.iter().enumerate() {
        if ranked[i].1 {
            tp += 1;
        }
        points.push((tp as f64 / npos as f64, tp as f64 / (n + 1) as f64));
    }
    let ap = integrate(&points, interpolation);
    Some(PrCurve { points, ap })
}

fn integrate(points: &[(f64, f64)], interpolation: Interpolation) -> f64 {
    // envelope[i] = max precision at rank >= i
    let mut envelope: Vec<f64> = points.iter().map(|p| p.1).collect();
    for i in (0..envelope.len().saturating_sub(1)).rev() {
        envelope[i] = envelope[i].max(envelope[i + 1]);
    }
    match interpolation {
        Interpolation::AllPoint => {
            let mut ap = 0.0;
            let mut prev_recall = 0.0;
            for (p, env) in points.iter().zip(&envelope) {
                if p.0 > prev_recall {
                    ap += (p.0 - prev_recall) * env;
                    prev_recall = p.0;
                }
            }
            ap
        }
        Interpolation::ElevenPoint => {
            let mut total = 0.0;
            for t in 0..=10 {
                let threshold = t as f64 / 10.0;
                let best = points
                    .iter()
                    .zip(&envelope)
                    .find(|(p, _)| p.0 >= threshold - 1e-12)
                    .map_or(0.0, |(_, e)| *e);
                total += best;
            }
            total / 11.0
        }
    }
}

/// Per-class AP over every class that has GT, and their mean.
pub fn mean_average_precision(
    dets: &[Vec<BBox>],
    gts: &[Vec<BBox>],
    iou_thresh: f64,
    interpolation: Interpolation,
) -> (BTreeMap<usize, f64>, f64) {
    let classes: BTreeSet<usize> = gts.iter().flatten().filter_map(|b| b.class).collect();
    let per_class: BTreeMap<usize, f64> = classes
        .into_iter()
        .filter_map(|c| average_precision(dets, gts, c, iou_thresh, interpolation).map(|pr| (c, pr.ap)))
        .collect();
    let map = if per_class.is_empty() {
        0.0
    } else {
        per_class.values().sum::<f64>() / per_class.len() as f64
    };
    (per_class, map)
}

/// Share of `targets` hit by a mined word, directly or through one of the
/// target's aliases. 0 for an empty target list.
pub fn vocabulary_recall(
    mined: &[String],
    targets: &[String],
    aliases: &BTreeMap<String, Vec<String>>,
) -> f64 {
    if targets.is_empty() {
        return 0.0;
    }
    let mined: BTreeSet<&str> = mined.iter().map(String::as_str).collect();
    let hits = targets
        .iter()
        .filter(|t| {
            mined.contains(t.as_str())
                || aliases
                    .get(*t)
                    .is_some_and(|a| a.iter().any(|w| mined.contains(w.as_str())))
        })
        .count();
    hits as f64 / targets.len() as f64
}
