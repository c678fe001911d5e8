use crate::grounding::tokenize;
use crate::numerics::Grid3D;
use crate::objectness::BBox;

/// Image-level label vector from exact token matches against the class list,
/// normalized to sum to one. All zeros when no class word occurs.
pub fn extract_labels(caption_text: &str, classes: &[String]) -> Vec<f64> {
    let tokens = tokenize(caption_text);
    let mut y: Vec<f64> = classes
        .iter()
        .map(|c| {
            if tokens.iter().any(|t| t == c) {
                1.0
            } else {
                0.0
            }
        })
        .collect();
    let total: f64 = y.iter().sum();
    if total > 0.0 {
        y.iter_mut().for_each(|v| *v /= total);
    }
    y
}

/// Proposals whose best IoU against any pseudo ground-truth box exceeds 0.5,
/// in input order.
pub fn match_boxes(proposals: &[BBox], pseudo_gt: &[BBox]) -> Vec<BBox> {
    proposals
        .iter()
        .filter(|p| pseudo_gt.iter().any(|g| p.iou(g) > MATCH_IOU))
        .copied()
        .collect()
}

pub const MATCH_IOU: f64 = 0.5;

/// Mean of the feature-map cells whose centers fall inside the box. A box
/// that covers no cell center takes the cell nearest its own center.
pub fn box_feature(fmap: &Grid3D, bbox: &BBox) -> Vec<f64> {
    let (rows, cols, d) = (fmap.rows(), fmap.cols(), fmap.channels());
    let mut acc = vec![0.0; d];
    let mut count = 0usize;
    for r in 0..rows {
        let cy = (r as f64 + 0.5) / rows as f64;
        if cy < bbox.ymin || cy > bbox.ymax {
            continue;
        }
        for c in 0..cols {
            let cx = (c as f64 + 0.5) / cols as f64;
            if cx < bbox.xmin || cx > bbox.xmax {
                continue;
            }
            for (a, v) in acc.iter_mut().zip(fmap.at(r, c)) {
                *a += v;
            }
            count += 1;
        }
    }
    if count == 0 {
        let cx = (bbox.xmin + bbox.xmax) / 2.0;
        let cy = (bbox.ymin + bbox.ymax) / 2.0;
        let r = ((cy * rows as f64) as usize).min(rows - 1);
        let c = ((cx * cols as f64) as usize).min(cols - 1);
        return fmap.at(r, c).to_vec();
    }
    acc.iter_mut().for_each(|a| *a /= count as f64);
    acc
}
