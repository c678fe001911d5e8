//! Independent reference computations for gradient checks.
//!
//! Everything here is written with plain nested loops straight from the
//! model definition and does not call the library's forward pass.

#![allow(dead_code)]

use capg_core::grounding::GroundingParams;
use capg_core::numerics::{Grid3D, NORM_EPS};

pub const FD_STEP: f64 = 1e-4;
pub const REL_TOL: f64 = 1e-3;
pub const ABS_TOL: f64 = 1e-6;

fn softmax(xs: &[f64]) -> Vec<f64> {
    let m = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let ex: Vec<f64> = xs.iter().map(|x| (x - m).exp()).collect();
    let s: f64 = ex.iter().sum();
    ex.into_iter().map(|x| x / s).collect()
}

fn cos(u: &[f64], v: &[f64]) -> f64 {
    let mut uv = 0.0;
    let mut uu = 0.0;
    let mut vv = 0.0;
    for k in 0..u.len() {
        uv += u[k] * v[k];
        uu += u[k] * u[k];
        vv += v[k] * v[k];
    }
    uv / ((uu.sqrt() + NORM_EPS) * (vv.sqrt() + NORM_EPS))
}

/// Triple-loop aggregate similarity.
pub fn sim_aggregate(fmap: &Grid3D, tokens: &[usize], p: &GroundingParams) -> f64 {
    let d = p.feat_dim();
    let e = p.embed_dim();
    let cells = fmap.rows() * fmap.cols();
    let mut region_logits = vec![0.0; cells];
    let mut regions = vec![vec![0.0; e]; cells];
    for i in 0..cells {
        let f = &fmap.data()[i * d..(i + 1) * d];
        let mut a = p.img_score_bias;
        for m in 0..d {
            a += p.img_score_weight[m] * f[m];
        }
        region_logits[i] = a;
        for k in 0..e {
            let mut u = p.img_projection_bias[k];
            for m in 0..d {
                u += f[m] * p.img_projection[m * e + k];
            }
            regions[i][k] = u;
        }
    }
    let words: Vec<Vec<f64>> = tokens
        .iter()
        .map(|&t| p.word_embeddings[t * e..(t + 1) * e].to_vec())
        .collect();
    let word_logits: Vec<f64> = words
        .iter()
        .map(|v| {
            let mut z = p.txt_score_bias;
            for k in 0..e {
                z += p.txt_score_weight[k] * v[k];
            }
            z
        })
        .collect();
    let s_img = softmax(&region_logits);
    let s_txt = softmax(&word_logits);
    let mut total = 0.0;
    for i in 0..cells {
        for j in 0..tokens.len() {
            total += s_img[i] * s_txt[j] * cos(&regions[i], &words[j]);
        }
    }
    total
}

/// Summed hinge loss for fixed negatives.
pub fn triplet_loss_fixed(
    fmaps: &[&Grid3D],
    captions: &[&[usize]],
    negatives: &[usize],
    margin: f64,
    p: &GroundingParams,
) -> f64 {
    let mut total = 0.0;
    for a in 0..fmaps.len() {
        let pos = sim_aggregate(fmaps[a], captions[a], p);
        let neg = sim_aggregate(fmaps[a], captions[negatives[a]], p);
        total += (neg - pos + margin).max(0.0);
    }
    total
}

pub fn within_tol(analytic: f64, numeric: f64) -> bool {
    let diff = (analytic - numeric).abs();
    diff <= ABS_TOL || diff <= REL_TOL * analytic.abs().max(numeric.abs())
}

/// Central finite differences of `loss` with respect to every coordinate of
/// every tensor in `params`, compared against `analytic`. Returns the list of
/// `(tensor, index, analytic, numeric)` mismatches.
pub fn compare_grounding_gradients(
    params: &GroundingParams,
    analytic: &GroundingParams,
    loss: impl Fn(&GroundingParams) -> f64,
) -> Vec<(usize, usize, f64, f64)> {
    let mut bad = Vec::new();
    let mut probe = params.clone();
    for t in 0..7 {
        let len = params.tensors()[t].len();
        for i in 0..len {
            let orig = params.tensors()[t][i];
            probe.tensors_mut()[t][i] = orig + FD_STEP;
            let up = loss(&probe);
            probe.tensors_mut()[t][i] = orig - FD_STEP;
            let down = loss(&probe);
            probe.tensors_mut()[t][i] = orig;
            let numeric = (up - down) / (2.0 * FD_STEP);
            let a = analytic.tensors()[t][i];
            if !within_tol(a, numeric) {
                bad.push((t, i, a, numeric));
            }
        }
    }
    bad
}

/// Plain-loop MIL loss for a linear classifier over box features.
pub fn mil_loss(
    features: &[Vec<f64>],
    labels: &[f64],
    weights: &[f64],
    bias: &[f64],
) -> f64 {
    let c = bias.len();
    let d = features[0].len();
    let mut maxima = vec![f64::NEG_INFINITY; c];
    for f in features {
        for k in 0..c {
            let mut s = bias[k];
            for m in 0..d {
                s += weights[k * d + m] * f[m];
            }
            if s > maxima[k] {
                maxima[k] = s;
            }
        }
    }
    let probs = softmax(&maxima);
    let mut loss = 0.0;
    for k in 0..c {
        if labels[k] > 0.0 {
            loss -= labels[k] * probs[k].max(1e-12).ln();
        }
    }
    loss
}
