use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::labels::box_feature;
use super::model::MilParams;
use crate::error::{Error, Result};
use crate::grounding::{class_activation_map, ActivationMap, CamConfig, GroundingParams};
use crate::numerics::{softmax, Grid3D};
use crate::objectness::{nms_indices, score_box, BBox, ScoringConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectConfig {
    pub cam: CamConfig,
    pub scoring: ScoringConfig,
    /// Vocabulary index of each MIL class, in class order.
    pub class_words: Vec<usize>,
    pub top_k: usize,
}

/// Detect with precomputed class activation maps.
///
/// Each proposal gets an objectness score from `maps` and a class
/// distribution from the MIL head (uniform when `mil` is `None`). NMS runs
/// on objectness, the `top_k` survivors are kept, and each is emitted with
/// score `objectness * max class probability` and the winning class word.
/// Output is sorted by that score, ties in objectness order.
pub fn detect_with_maps(
    fmap: &Grid3D,
    proposals: &[BBox],
    maps: &[ActivationMap],
    mil: Option<&MilParams>,
    cfg: &DetectConfig,
) -> Result<Vec<BBox>> {
    let classes = cfg.class_words.len();
    if classes == 0 {
        return Err(Error::InvalidArgument("detection needs at least one class".into()));
    }
    if let Some(m) = mil {
        if m.classes() != classes || m.feat_dim() != fmap.channels() {
            return Err(Error::Shape(format!(
                "MIL head is {}x{}, detection expects {} classes over {} channels",
                m.classes(),
                m.feat_dim(),
                classes,
                fmap.channels()
            )));
        }
    }
    cfg.scoring.validate()?;
    let scored: Vec<(BBox, usize, f64)> = proposals
        .par_iter()
        .map(|b| {
            let (objectness, _) = score_box(maps, b, &cfg.scoring)?;
            let probs = match mil {
                Some(m) => softmax(&m.class_scores(&box_feature(fmap, b)))?,
                None => vec![1.0 / classes as f64; classes],
            };
            let mut best = 0;
            for c in 1..classes {
                if probs[c] > probs[best] {
                    best = c;
                }
            }
            Ok((b.with_score(objectness), best, probs[best]))
        })
        .collect::<Result<_>>()?;
    let by_objectness: Vec<BBox> = scored.iter().map(|s| s.0).collect();
    let mut out: Vec<BBox> = nms_indices(&by_objectness, cfg.scoring.nms_iou)
        .into_iter()
        .take(cfg.top_k)
        .map(|i| {
            let (b, c, p) = scored[i];
            b.with_score(b.score * p).with_class(Some(cfg.class_words[c]))
        })
        .collect();
    out.sort_by(|a, b| b.score.total_cmp(&a.score));
    Ok(out)
}

/// Build the class maps from the grounding model, then detect.
pub fn detect(
    fmap: &Grid3D,
    proposals: &[BBox],
    grounding: &GroundingParams,
    mil: Option<&MilParams>,
    cfg: &DetectConfig,
) -> Result<Vec<BBox>> {
    let maps = cfg
        .class_words
        .iter()
        .map(|&w| class_activation_map(fmap, w, grounding, &cfg.cam))
        .collect::<Result<Vec<_>>>()?;
    detect_with_maps(fmap, proposals, &maps, mil, cfg)
}
