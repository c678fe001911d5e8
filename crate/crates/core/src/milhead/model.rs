use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::labels::box_feature;
use crate::error::{Error, Result};
use crate::numerics::{softmax, Grid3D};
use crate::objectness::BBox;

pub const PROB_FLOOR: f64 = 1e-12;
pub const MIL_INIT_RANGE: f64 = 0.01;

/// Linear per-box classifier: `f_ic = w_c . x_i + b_c`.
#[derive(Debug, Clone, PartialEq)]
pub struct MilParams {
    classes: usize,
    feat_dim: usize,
    /// `classes x feat_dim`, row-major.
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl MilParams {
    pub fn zeros(classes: usize, feat_dim: usize) -> Self {
        Self {
            classes,
            feat_dim,
            weights: vec![0.0; classes * feat_dim],
            bias: vec![0.0; classes],
        }
    }

    /// Small uniform weights, zero bias.
    pub fn init(classes: usize, feat_dim: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut p = Self::zeros(classes, feat_dim);
        p.weights
            .iter_mut()
            .for_each(|w| *w = rng.gen_range(-MIL_INIT_RANGE..MIL_INIT_RANGE));
        p
    }

    pub fn from_parts(classes: usize, feat_dim: usize, weights: Vec<f64>, bias: Vec<f64>) -> Result<Self> {
        if weights.len() != classes * feat_dim || bias.len() != classes {
            return Err(Error::Shape(format!(
                "MIL parameters need {}x{} weights and {} biases, got {} and {}",
                classes,
                feat_dim,
                classes,
                weights.len(),
                bias.len()
            )));
        }
        let p = Self {
            classes,
            feat_dim,
            weights,
            bias,
        };
        if !p.is_finite() {
            return Err(Error::Numerical("non-finite MIL parameters".into()));
        }
        Ok(p)
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn feat_dim(&self) -> usize {
        self.feat_dim
    }

    pub fn is_finite(&self) -> bool {
        self.weights.iter().chain(&self.bias).all(|v| v.is_finite())
    }

    pub fn class_scores(&self, feature: &[f64]) -> Vec<f64> {
        (0..self.classes)
            .map(|c| {
                let w = &self.weights[c * self.feat_dim..(c + 1) * self.feat_dim];
                self.bias[c] + w.iter().zip(feature).map(|(a, b)| a * b).sum::<f64>()
            })
            .collect()
    }

    /// `P x C` score matrix for a bag.
    pub fn scores(&self, features: &[Vec<f64>]) -> Vec<Vec<f64>> {
        features.iter().map(|f| self.class_scores(f)).collect()
    }

    pub fn round_to_f32(&mut self) {
        for v in self.weights.iter_mut().chain(self.bias.iter_mut()) {
            *v = *v as f32 as f64;
        }
    }
}

/// Matched boxes of one image with their pooled features.
#[derive(Debug, Clone, PartialEq)]
pub struct InstanceBag {
    pub image_id: String,
    pub boxes: Vec<BBox>,
    pub features: Vec<Vec<f64>>,
}

impl InstanceBag {
    pub fn from_boxes(image_id: impl Into<String>, fmap: &Grid3D, boxes: Vec<BBox>) -> Result<Self> {
        if boxes.is_empty() {
            return Err(Error::InvalidArgument("instance bag needs at least one box".into()));
        }
        let features = boxes.iter().map(|b| box_feature(fmap, b)).collect();
        Ok(Self {
            image_id: image_id.into(),
            boxes,
            features,
        })
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }
}

/// Per-class column maximum and the lowest row index attaining it.
fn column_max(scores: &[Vec<f64>]) -> (Vec<f64>, Vec<usize>) {
    let c = scores[0].len();
    let mut best = scores[0].clone();
    let mut arg = vec![0; c];
    for (i, row) in scores.iter().enumerate().skip(1) {
        for k in 0..c {
            if row[k] > best[k] {
                best[k] = row[k];
                arg[k] = i;
            }
        }
    }
    (best, arg)
}

/// Softmax over the per-class maxima of a `P x C` score matrix.
pub fn mil_probability(scores: &[Vec<f64>]) -> Result<Vec<f64>> {
    if scores.is_empty() || scores[0].is_empty() {
        return Err(Error::InvalidArgument("MIL scores need P >= 1 and C >= 1".into()));
    }
    if scores.iter().any(|r| r.len() != scores[0].len()) {
        return Err(Error::Shape("ragged MIL score matrix".into()));
    }
    softmax(&column_max(scores).0)
}

/// Cross-entropy `-sum_c y_c ln P_c`. Labeled classes with zero probability
/// are clamped to `PROB_FLOOR`.
pub fn mil_loss(probability: &[f64], labels: &[f64]) -> f64 {
    let mut loss = 0.0;
    for (&p, &y) in probability.iter().zip(labels) {
        if y > 0.0 {
            if p < PROB_FLOOR {
                log::warn!("MIL probability {p:e} at a labeled class clamped to {PROB_FLOOR:e}");
            }
            loss -= y * p.max(PROB_FLOOR).ln();
        }
    }
    loss
}

/// Loss and parameter gradient for one bag. Only the responsible box per
/// class (lowest index on ties) receives gradient.
pub fn mil_gradients(params: &MilParams, bag: &InstanceBag, labels: &[f64]) -> Result<(f64, MilParams)> {
    if labels.len() != params.classes {
        return Err(Error::Shape(format!(
            "label vector has {} classes, parameters have {}",
            labels.len(),
            params.classes
        )));
    }
    if bag.is_empty() {
        return Err(Error::InvalidArgument("empty instance bag".into()));
    }
    if let Some(f) = bag.features.iter().find(|f| f.len() != params.feat_dim) {
        return Err(Error::Shape(format!(
            "box feature has {} channels, expected {}",
            f.len(),
            params.feat_dim
        )));
    }
    let scores = params.scores(&bag.features);
    let (maxima, responsible) = column_max(&scores);
    let prob = softmax(&maxima)?;
    let loss = mil_loss(&prob, labels);
    let label_mass: f64 = labels.iter().sum();
    let mut grads = MilParams::zeros(params.classes, params.feat_dim);
    let d = params.feat_dim;
    for c in 0..params.classes {
        let g = prob[c] * label_mass - labels[c];
        grads.bias[c] = g;
        let f = &bag.features[responsible[c]];
        for m in 0..d {
            grads.weights[c * d + m] = g * f[m];
        }
    }
    Ok((loss, grads))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MilTrainConfig {
    pub learning_rate: f64,
    pub steps: usize,
    pub seed: u64,
}

impl Default for MilTrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 2.0,
            steps: 1000,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct MilTrainOutcome {
    pub params: MilParams,
    /// Mean loss before each update.
    pub losses: Vec<f64>,
    /// Bags dropped because their label vector was all zero.
    pub skipped: usize,
}

/// Full-batch gradient descent on the mean bag loss.
pub fn train_mil(
    bags: &[(InstanceBag, Vec<f64>)],
    classes: usize,
    feat_dim: usize,
    cfg: &MilTrainConfig,
) -> Result<MilTrainOutcome> {
    if !(cfg.learning_rate >= 0.0 && cfg.learning_rate.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "learning rate must be finite and >= 0, got {}",
            cfg.learning_rate
        )));
    }
    let usable: Vec<&(InstanceBag, Vec<f64>)> = bags
        .iter()
        .filter(|(b, y)| !b.is_empty() && y.iter().any(|v| *v > 0.0))
        .collect();
    let skipped = bags.len() - usable.len();
    if usable.is_empty() {
        return Err(Error::InvalidArgument("no usable MIL bags".into()));
    }
    let mut params = MilParams::init(classes, feat_dim, cfg.seed);
    let mut losses = Vec::with_capacity(cfg.steps);
    let n = usable.len() as f64;
    for step in 0..cfg.steps {
        let per_bag: Vec<(f64, MilParams)> = usable
            .par_iter()
            .map(|(bag, y)| mil_gradients(&params, bag, y))
            .collect::<Result<_>>()?;
        let mut loss = 0.0;
        let mut total = MilParams::zeros(classes, feat_dim);
        for (l, g) in &per_bag {
            loss += l;
            for (t, v) in total.weights.iter_mut().zip(&g.weights) {
                *t += v;
            }
            for (t, v) in total.bias.iter_mut().zip(&g.bias) {
                *t += v;
            }
        }
        let scale = cfg.learning_rate / n;
        for (p, g) in params.weights.iter_mut().zip(&total.weights) {
            *p -= scale * g;
        }
        for (p, g) in params.bias.iter_mut().zip(&total.bias) {
            *p -= scale * g;
        }
        if !loss.is_finite() || !params.is_finite() {
            return Err(Error::Numerical(format!("MIL training diverged at step {step}")));
        }
        losses.push(loss / n);
    }
    Ok(MilTrainOutcome {
        params,
        losses,
        skipped,
    })
}
