//! Detection and retrieval metrics: greedy IoU matching, precision and
//! recall at k, average precision, average recall and vocabulary recall.

mod metrics;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub use crate::objectness::iou;
pub use metrics::{
    average_precision, average_recall_at_k, match_detections, mean_average_precision,
    precision_recall_at_k, score_order, vocabulary_recall, Interpolation, MatchResult, PrCurve,
    DEFAULT_IOU,
};

use crate::objectness::BBox;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    pub iou_thresh: f64,
    /// Class agreement required for precision/recall and AR. AP is always
    /// per class.
    pub class_aware: bool,
    pub interpolation: Interpolation,
    pub pr_ks: Vec<usize>,
    pub ar_ks: Vec<usize>,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            iou_thresh: DEFAULT_IOU,
            class_aware: true,
            interpolation: Interpolation::AllPoint,
            pr_ks: vec![1, 5, 10, 50, 100],
            ar_ks: vec![1, 10, 100],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrecisionRecall {
    pub precision: f64,
    pub recall: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub images: usize,
    pub gt_boxes: usize,
    pub detections: usize,
    pub config: EvalConfig,
    pub per_class_ap: BTreeMap<String, f64>,
    pub map: f64,
    pub at_k: BTreeMap<usize, PrecisionRecall>,
    pub average_recall: BTreeMap<usize, f64>,
}

/// Full metrics report. `dets[i]` and `gts[i]` belong to the same image;
/// `class_name` labels the per-class AP entries.
pub fn evaluate(
    dets: &[Vec<BBox>],
    gts: &[Vec<BBox>],
    cfg: &EvalConfig,
    class_name: impl Fn(usize) -> String,
) -> MetricsReport {
    let (per_class, map) = mean_average_precision(dets, gts, cfg.iou_thresh, cfg.interpolation);
    let at_k = cfg
        .pr_ks
        .iter()
        .map(|&k| {
            let (precision, recall) = precision_recall_at_k(dets, gts, k, cfg.iou_thresh, cfg.class_aware);
            (k, PrecisionRecall { precision, recall })
        })
        .collect();
    let ars = average_recall_at_k(dets, gts, &cfg.ar_ks, cfg.iou_thresh, cfg.class_aware);
    MetricsReport {
        images: gts.len(),
        gt_boxes: gts.iter().map(Vec::len).sum(),
        detections: dets.iter().map(Vec::len).sum(),
        config: cfg.clone(),
        per_class_ap: per_class.into_iter().map(|(c, ap)| (class_name(c), ap)).collect(),
        map,
        at_k,
        average_recall: cfg.ar_ks.iter().copied().zip(ars).collect(),
    }
}
