use rayon::prelude::*;

use super::backward::{caption_backward, image_backward, GradientSet};
use crate::data::Sample;
use crate::error::{Error, Result};
use crate::grounding::{aggregate, encode_caption, encode_image, GroundingParams};

/// Hinge on the similarity gap: `max(0, sim_neg - sim_pos + margin)`.
pub fn triplet_loss(sim_pos: f64, sim_neg: f64, margin: f64) -> f64 {
    (sim_neg - sim_pos + margin).max(0.0)
}

/// Pick the negative caption for `anchor` from its similarities to every
/// caption in the batch.
///
/// The semi-hard choice is the most similar negative that is still strictly
/// less similar than the positive. Without one, the hardest negative is used.
/// Equal similarities resolve to the lowest index.
pub fn mine_semi_hard(anchor: usize, sims: &[f64], _margin: f64) -> Result<usize> {
    if sims.len() < 2 {
        return Err(Error::InvalidBatch(format!(
            "need at least 2 captions for negative mining, got {}",
            sims.len()
        )));
    }
    if anchor >= sims.len() {
        return Err(Error::InvalidBatch(format!(
            "anchor {anchor} outside batch of {}",
            sims.len()
        )));
    }
    let pos = sims[anchor];
    let pick = |semi_hard_only: bool| {
        let mut best: Option<usize> = None;
        for (j, &s) in sims.iter().enumerate() {
            if j == anchor || (semi_hard_only && s >= pos) {
                continue;
            }
            if best.map_or(true, |b| s > sims[b]) {
                best = Some(j);
            }
        }
        best
    };
    Ok(pick(true).or_else(|| pick(false)).expect("batch has a negative"))
}

/// A batch of image-caption pairs; captions of other pairs act as negatives.
#[derive(Debug, Clone)]
pub struct TripletBatch<'a> {
    samples: Vec<&'a Sample>,
}

impl<'a> TripletBatch<'a> {
    pub fn new(samples: Vec<&'a Sample>) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::InvalidBatch(format!(
                "batch size {} < 2",
                samples.len()
            )));
        }
        let (rows, cols, channels) = {
            let f = &samples[0].fmap;
            (f.rows(), f.cols(), f.channels())
        };
        for s in &samples {
            if (s.fmap.rows(), s.fmap.cols(), s.fmap.channels()) != (rows, cols, channels) {
                return Err(Error::InvalidBatch(
                    "feature maps in a batch must share one shape".into(),
                ));
            }
        }
        Ok(Self { samples })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn samples(&self) -> &[&'a Sample] {
        &self.samples
    }
}

/// Result of one forward/backward pass over a batch.
#[derive(Debug, Clone)]
pub struct BatchOutcome {
    /// Hinge losses summed over anchors.
    pub loss: f64,
    pub grads: GradientSet,
    /// Mined negative caption index per anchor.
    pub negatives: Vec<usize>,
    /// Fraction of anchors whose own caption is the most similar in the batch.
    pub retrieval_top1: f64,
    /// `sims[a][j]`: aggregate similarity of image `a` and caption `j`.
    pub sims: Vec<Vec<f64>>,
}

/// Similarity of every batch image against every batch caption.
pub fn similarity_matrix(batch: &TripletBatch<'_>, params: &GroundingParams) -> Result<Vec<Vec<f64>>> {
    let images = batch
        .samples
        .par_iter()
        .map(|s| encode_image(&s.fmap, params))
        .collect::<Result<Vec<_>>>()?;
    let captions = batch
        .samples
        .par_iter()
        .map(|s| encode_caption(&s.caption, params))
        .collect::<Result<Vec<_>>>()?;
    Ok(images
        .iter()
        .map(|img| captions.iter().map(|cap| aggregate(img, cap)).collect())
        .collect())
}

/// In-batch caption retrieval: the share of rows whose diagonal entry is the
/// first maximum.
pub fn retrieval_top1(sims: &[Vec<f64>]) -> f64 {
    if sims.is_empty() {
        return 0.0;
    }
    let hits = sims
        .iter()
        .enumerate()
        .filter(|(a, row)| {
            let best = row
                .iter()
                .enumerate()
                .fold(0, |b, (j, &s)| if s > row[b] { j } else { b });
            best == *a
        })
        .count();
    hits as f64 / sims.len() as f64
}

/// Summed triplet loss with semi-hard in-batch negatives and its analytic
/// gradient. Each anchor contributes one triplet.
pub fn batch_gradients(
    batch: &TripletBatch<'_>,
    params: &GroundingParams,
    margin: f64,
) -> Result<BatchOutcome> {
    let b = batch.len();
    let images = batch
        .samples
        .par_iter()
        .map(|s| encode_image(&s.fmap, params))
        .collect::<Result<Vec<_>>>()?;
    let captions = batch
        .samples
        .par_iter()
        .map(|s| encode_caption(&s.caption, params))
        .collect::<Result<Vec<_>>>()?;
    let sims: Vec<Vec<f64>> = images
        .iter()
        .map(|img| captions.iter().map(|cap| aggregate(img, cap)).collect())
        .collect();
    let negatives = (0..b)
        .map(|a| mine_semi_hard(a, &sims[a], margin))
        .collect::<Result<Vec<_>>>()?;

    // Per-anchor gradient buffers, reduced in index order for determinism.
    let per_anchor: Vec<(f64, Option<GradientSet>)> = (0..b)
        .into_par_iter()
        .map(|a| {
            let neg = negatives[a];
            let loss = triplet_loss(sims[a][a], sims[a][neg], margin);
            if loss <= 0.0 {
                return (0.0, None);
            }
            let mut g = GradientSet::zeros_like(params);
            let (img, pos_cap, neg_cap) = (&images[a], &captions[a], &captions[neg]);
            // d loss / d pool_img = pool_neg - pool_pos
            let d_img: Vec<f64> = neg_cap
                .pooled
                .iter()
                .zip(&pos_cap.pooled)
                .map(|(n, p)| n - p)
                .collect();
            image_backward(&batch.samples[a].fmap, img, &d_img, &mut g.0);
            let minus_img: Vec<f64> = img.pooled.iter().map(|x| -x).collect();
            caption_backward(&batch.samples[a].caption, pos_cap, params, &minus_img, &mut g.0);
            caption_backward(&batch.samples[neg].caption, neg_cap, params, &img.pooled, &mut g.0);
            (loss, Some(g))
        })
        .collect();

    let mut loss = 0.0;
    let mut grads = GradientSet::zeros_like(params);
    for (l, g) in &per_anchor {
        loss += l;
        if let Some(g) = g {
            grads.add_assign(g);
        }
    }
    if !loss.is_finite() || !grads.is_finite() {
        return Err(Error::Numerical(format!("non-finite batch loss {loss}")));
    }
    let retrieval_top1 = retrieval_top1(&sims);
    Ok(BatchOutcome {
        loss,
        grads,
        negatives,
        retrieval_top1,
        sims,
    })
}
