use super::bbox::BBox;

/// Greedy non-maximum suppression by descending score.
///
/// A box is dropped when its IoU with any already kept box is strictly
/// greater than `iou_threshold`. Equal scores keep input order. Classes are
/// ignored.
pub fn nms(boxes: &[BBox], iou_threshold: f64) -> Vec<BBox> {
    nms_indices(boxes, iou_threshold)
        .into_iter()
        .map(|i| boxes[i])
        .collect()
}

/// Indices of the boxes kept by [`nms`], in output order.
pub fn nms_indices(boxes: &[BBox], iou_threshold: f64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..boxes.len()).collect();
    order.sort_by(|&a, &b| boxes[b].score.total_cmp(&boxes[a].score));
    let mut kept: Vec<usize> = Vec::new();
    for i in order {
        if kept.iter().all(|&k| boxes[k].iou(&boxes[i]) <= iou_threshold) {
            kept.push(i);
        }
    }
    kept
}
