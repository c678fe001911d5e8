use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::vocab::Vocabulary;
use crate::error::{Error, Result};

/// Default word-embedding width.
pub const DEFAULT_EMBED_DIM: usize = 50;

/// Half-width of the uniform initialization interval.
pub const INIT_RANGE: f64 = 0.08;

/// Every learnable parameter of the grounding model.
///
/// Word embeddings are a plain lookup table (`vocab_size x embed_dim`); the
/// image side is one affine map from `feat_dim` region features into the
/// embedding space, stored as a `feat_dim x embed_dim` row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundingParams {
    vocab_size: usize,
    feat_dim: usize,
    embed_dim: usize,
    pub word_embeddings: Vec<f64>,
    pub img_projection: Vec<f64>,
    pub img_projection_bias: Vec<f64>,
    pub img_score_weight: Vec<f64>,
    pub img_score_bias: f64,
    pub txt_score_weight: Vec<f64>,
    pub txt_score_bias: f64,
}

/// Names of the parameter tensors, in checkpoint order.
pub const TENSOR_NAMES: [&str; 7] = [
    "word_embeddings",
    "img_projection",
    "img_projection_bias",
    "img_score_weight",
    "img_score_bias",
    "txt_score_weight",
    "txt_score_bias",
];

impl GroundingParams {
    pub fn zeros(vocab_size: usize, feat_dim: usize, embed_dim: usize) -> Self {
        Self {
            vocab_size,
            feat_dim,
            embed_dim,
            word_embeddings: vec![0.0; vocab_size * embed_dim],
            img_projection: vec![0.0; feat_dim * embed_dim],
            img_projection_bias: vec![0.0; embed_dim],
            img_score_weight: vec![0.0; feat_dim],
            img_score_bias: 0.0,
            txt_score_weight: vec![0.0; embed_dim],
            txt_score_bias: 0.0,
        }
    }

    /// Seeded uniform(-0.08, 0.08) init for every weight; biases start at zero.
    pub fn init_uniform(vocab_size: usize, feat_dim: usize, embed_dim: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut p = Self::zeros(vocab_size, feat_dim, embed_dim);
        for tensor in [
            &mut p.word_embeddings,
            &mut p.img_projection,
            &mut p.img_score_weight,
            &mut p.txt_score_weight,
        ] {
            for v in tensor.iter_mut() {
                *v = rng.gen_range(-INIT_RANGE..INIT_RANGE);
            }
        }
        p
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    pub fn feat_dim(&self) -> usize {
        self.feat_dim
    }

    pub fn embed_dim(&self) -> usize {
        self.embed_dim
    }

    pub fn embedding(&self, word: usize) -> &[f64] {
        &self.word_embeddings[word * self.embed_dim..(word + 1) * self.embed_dim]
    }

    /// Affine image projection of one region feature vector.
    pub fn project(&self, feature: &[f64]) -> Vec<f64> {
        let e = self.embed_dim;
        let mut out = self.img_projection_bias.clone();
        for (m, &f) in feature.iter().enumerate() {
            if f == 0.0 {
                continue;
            }
            let row = &self.img_projection[m * e..(m + 1) * e];
            for (o, w) in out.iter_mut().zip(row) {
                *o += f * w;
            }
        }
        out
    }

    pub fn region_logit(&self, feature: &[f64]) -> f64 {
        crate::numerics::dot(&self.img_score_weight, feature) + self.img_score_bias
    }

    pub fn word_logit(&self, word: usize) -> f64 {
        crate::numerics::dot(&self.txt_score_weight, self.embedding(word)) + self.txt_score_bias
    }

    pub fn tensors(&self) -> [&[f64]; 7] {
        [
            &self.word_embeddings,
            &self.img_projection,
            &self.img_projection_bias,
            &self.img_score_weight,
            std::slice::from_ref(&self.img_score_bias),
            &self.txt_score_weight,
            std::slice::from_ref(&self.txt_score_bias),
        ]
    }

    pub fn tensors_mut(&mut self) -> [&mut [f64]; 7] {
        [
            &mut self.word_embeddings,
            &mut self.img_projection,
            &mut self.img_projection_bias,
            &mut self.img_score_weight,
            std::slice::from_mut(&mut self.img_score_bias),
            &mut self.txt_score_weight,
            std::slice::from_mut(&mut self.txt_score_bias),
        ]
    }

    pub fn is_finite(&self) -> bool {
        self.tensors().iter().all(|t| t.iter().all(|v| v.is_finite()))
    }

    /// Check tensor lengths against the declared dimensions and finiteness.
    pub fn validate(&self) -> Result<()> {
        let (v, d, e) = (self.vocab_size, self.feat_dim, self.embed_dim);
        let expected = [v * e, d * e, e, d, 1, e, 1];
        for ((tensor, want), name) in self.tensors().iter().zip(expected).zip(TENSOR_NAMES) {
            if tensor.len() != want {
                return Err(Error::Shape(format!(
                    "{name} has {} values, expected {want}",
                    tensor.len()
                )));
            }
        }
        if !self.is_finite() {
            return Err(Error::Numerical("non-finite parameter".into()));
        }
        Ok(())
    }

    /// Round every value to the nearest `f32`, matching what a checkpoint stores.
    pub fn round_to_f32(&mut self) {
        for tensor in self.tensors_mut() {
            for v in tensor.iter_mut() {
                *v = *v as f32 as f64;
            }
        }
    }

    /// Overwrite embeddings from a whitespace-separated `word v1 .. ve` text
    /// file body. Returns how many vocabulary words were initialized.
    pub fn import_embeddings(&mut self, text: &str, vocab: &Vocabulary) -> Result<usize> {
        let e = self.embed_dim;
        let mut hits = 0;
        for (line_no, line) in text.lines().enumerate() {
            let mut fields = line.split_whitespace();
            let Some(word) = fields.next() else { continue };
            let Some(index) = vocab.index_of(word) else { continue };
            let values: Vec<f64> = fields
                .map(str::parse::<f64>)
                .collect::<std::result::Result<_, _>>()
                .map_err(|err| {
                    Error::InvalidArgument(format!("embedding line {}: {err}", line_no + 1))
                })?;
            if values.len() != e {
                return Err(Error::Shape(format!(
                    "embedding line {} has {} values, expected {e}",
                    line_no + 1,
                    values.len()
                )));
            }
            self.word_embeddings[index * e..(index + 1) * e].copy_from_slice(&values);
            hits += 1;
        }
        Ok(hits)
    }
}
