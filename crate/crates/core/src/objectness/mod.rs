//! Edge-gradient box objectness over class activation maps, the two
//! baseline criteria, NMS and pseudo ground-truth selection.

mod bbox;
mod nms;
mod proposals;
mod scoring;

use rayon::prelude::*;

pub use bbox::{iou, BBox};
pub use nms::{nms, nms_indices};
pub use proposals::grid_proposals;
pub use scoring::{
    baseline_avg_activation, baseline_inside_outside, box_objectness, class_objectness,
    edge_gradient, edge_strips, score_box, strip_thickness, Criterion, Edge, EdgeStrips,
    ScoringConfig, DEFAULT_BETA, DEFAULT_BORDER_FRACTION, DEFAULT_MARGIN_FRACTION,
    DEFAULT_NMS_IOU,
};

use crate::error::{Error, Result};
use crate::grounding::ActivationMap;

/// Score every proposal with the configured criterion, attaching the score
/// and the winning class word. Output order follows the input.
pub fn score_proposals(
    maps: &[ActivationMap],
    proposals: &[BBox],
    cfg: &ScoringConfig,
) -> Result<Vec<BBox>> {
    cfg.validate()?;
    proposals
        .par_iter()
        .map(|b| {
            let (score, class) = score_box(maps, b, cfg)?;
            Ok(b.with_score(score).with_class(Some(class)))
        })
        .collect()
}

/// Score, suppress and keep the `top_k` best proposals.
pub fn select_pseudo_gt(
    maps: &[ActivationMap],
    proposals: &[BBox],
    cfg: &ScoringConfig,
) -> Result<Vec<BBox>> {
    if proposals.is_empty() {
        return Err(Error::InvalidArgument("no proposals to select from".into()));
    }
    let scored = score_proposals(maps, proposals, cfg)?;
    let mut kept = nms(&scored, cfg.nms_iou);
    kept.truncate(cfg.top_k);
    Ok(kept)
}
