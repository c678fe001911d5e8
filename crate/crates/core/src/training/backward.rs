//! Analytic gradients of the aggregate similarity.
//!
//! With `u_i` the projected regions and `v_j` the caption embeddings, the
//! aggregate similarity is `pool_img . pool_txt`, where
//! `pool_img = sum_i S_i u_i / (|u_i| + eps)` and likewise for the caption.
//! Backpropagation runs through the pooled vectors, the two softmaxes and
//! the guarded normalization.

use crate::grounding::{Caption, CaptionEncoding, GroundingParams, ImageEncoding};
use crate::numerics::{dot, Grid3D, NORM_EPS};

/// Gradients shaped like [`GroundingParams`].
#[derive(Debug, Clone, PartialEq)]
pub struct GradientSet(pub GroundingParams);

impl GradientSet {
    pub fn zeros_like(params: &GroundingParams) -> Self {
        Self(GroundingParams::zeros(
            params.vocab_size(),
            params.feat_dim(),
            params.embed_dim(),
        ))
    }

    pub fn params(&self) -> &GroundingParams {
        &self.0
    }

    pub fn norm(&self) -> f64 {
        self.0
            .tensors()
            .iter()
            .flat_map(|t| t.iter())
            .map(|v| v * v)
            .sum::<f64>()
            .sqrt()
    }

    pub fn scale(&mut self, factor: f64) {
        for t in self.0.tensors_mut() {
            for v in t.iter_mut() {
                *v *= factor;
            }
        }
    }

    pub fn add_assign(&mut self, other: &GradientSet) {
        for (a, b) in self.0.tensors_mut().into_iter().zip(other.0.tensors()) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
    }

    pub fn is_finite(&self) -> bool {
        self.0.is_finite()
    }

    /// Rescale so the global norm is at most `max_norm`; returns the pre-clip norm.
    pub fn clip_norm(&mut self, max_norm: f64) -> f64 {
        let n = self.norm();
        if n > max_norm && n > 0.0 {
            self.scale(max_norm / n);
        }
        n
    }
}

/// Jacobian-vector product of `x -> x / (|x| + eps)` at `x` (norm `n`),
/// applied to the upstream gradient `upstream`.
fn normalize_backward(x: &[f64], n: f64, upstream: &[f64], out: &mut [f64]) {
    let denom = n + NORM_EPS;
    let radial = if n > 0.0 {
        dot(x, upstream) / (n * denom * denom)
    } else {
        0.0
    };
    for ((o, &g), &xi) in out.iter_mut().zip(upstream).zip(x) {
        *o = g / denom - radial * xi;
    }
}

/// Softmax backward: `dlogit_i = p_i (dp_i - sum_k p_k dp_k)`.
fn softmax_backward(probs: &[f64], upstream: &[f64]) -> Vec<f64> {
    let mean = dot(probs, upstream);
    probs
        .iter()
        .zip(upstream)
        .map(|(p, g)| p * (g - mean))
        .collect()
}

/// Accumulate the gradient of `sum_p coeff_p * pool_img . pool_txt_p` with
/// respect to the image-side parameters, given `d_pool = sum_p coeff_p * pool_txt_p`.
pub(crate) fn image_backward(
    fmap: &Grid3D,
    enc: &ImageEncoding,
    d_pool: &[f64],
    grads: &mut GroundingParams,
) {
    let e = enc.embed_dim;
    let d = fmap.channels();
    let cells = enc.cells;

    // dL/dS_i = d_pool . u_i / (|u_i| + eps)
    let d_importance: Vec<f64> = (0..cells)
        .map(|i| dot(d_pool, enc.region(i)) / (enc.norms[i] + NORM_EPS))
        .collect();
    let d_logits = softmax_backward(&enc.importance, &d_importance);

    let mut scaled = vec![0.0; e];
    let mut d_region = vec![0.0; e];
    for i in 0..cells {
        let f = fmap.cell(i);
        let s = enc.importance[i];
        for (x, g) in scaled.iter_mut().zip(d_pool) {
            *x = s * g;
        }
        normalize_backward(enc.region(i), enc.norms[i], &scaled, &mut d_region);

        for (m, &fm) in f.iter().enumerate() {
            if fm != 0.0 {
                let row = &mut grads.img_projection[m * e..(m + 1) * e];
                for (w, g) in row.iter_mut().zip(&d_region) {
                    *w += fm * g;
                }
            }
        }
        for (b, g) in grads.img_projection_bias.iter_mut().zip(&d_region) {
            *b += g;
        }

        let da = d_logits[i];
        for (w, &fm) in grads.img_score_weight[..d].iter_mut().zip(f) {
            *w += da * fm;
        }
        grads.img_score_bias += da;
    }
}

/// Accumulate the gradient of `pool_img . pool_txt` scaled into
/// `d_pool = coeff * pool_img` with respect to the caption-side parameters.
pub(crate) fn caption_backward(
    caption: &Caption,
    enc: &CaptionEncoding,
    params: &GroundingParams,
    d_pool: &[f64],
    grads: &mut GroundingParams,
) {
    let e = params.embed_dim();
    let d_importance: Vec<f64> = caption
        .tokens
        .iter()
        .zip(&enc.norms)
        .map(|(&t, &n)| dot(d_pool, params.embedding(t)) / (n + NORM_EPS))
        .collect();
    let d_logits = softmax_backward(&enc.importance, &d_importance);

    let mut scaled = vec![0.0; e];
    let mut d_vec = vec![0.0; e];
    for (j, &t) in caption.tokens.iter().enumerate() {
        let v = params.embedding(t);
        for (x, g) in scaled.iter_mut().zip(d_pool) {
            *x = enc.importance[j] * g;
        }
        normalize_backward(v, enc.norms[j], &scaled, &mut d_vec);
        let dz = d_logits[j];
        for (k, g) in d_vec.iter_mut().enumerate() {
            *g += dz * params.txt_score_weight[k];
        }
        let row = &mut grads.word_embeddings[t * e..(t + 1) * e];
        for (w, g) in row.iter_mut().zip(&d_vec) {
            *w += g;
        }
        for (w, x) in grads.txt_score_weight.iter_mut().zip(v) {
            *w += dz * x;
        }
        grads.txt_score_bias += dz;
    }
}
