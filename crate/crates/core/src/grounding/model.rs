//! Forward pass of the region-word grounding model.
//!
//! Inside the model, cosine similarity is computed against `norm + NORM_EPS`
//! so that an all-zero projected region or embedding yields similarity 0
//! instead of an error. [`sim_individual`] is the strict public form and
//! reports such vectors as [`Error::DegenerateVector`].

use super::params::GroundingParams;
use super::vocab::Caption;
use crate::error::{Error, Result};
use crate::numerics::{self, dot, norm, Grid2D, Grid3D, NORM_EPS};

pub(crate) fn check_fmap(fmap: &Grid3D, params: &GroundingParams) -> Result<()> {
    if fmap.channels() != params.feat_dim() {
        return Err(Error::Shape(format!(
            "feature map has {} channels, model expects {}",
            fmap.channels(),
            params.feat_dim()
        )));
    }
    if fmap.cells() == 0 {
        return Err(Error::Shape("feature map has no cells".into()));
    }
    Ok(())
}

pub(crate) fn check_caption(caption: &Caption, params: &GroundingParams) -> Result<()> {
    if caption.tokens.is_empty() {
        return Err(Error::InvalidArgument("caption has no tokens".into()));
    }
    if let Some(&t) = caption.tokens.iter().find(|&&t| t >= params.vocab_size()) {
        return Err(Error::Shape(format!(
            "token {t} outside vocabulary of {}",
            params.vocab_size()
        )));
    }
    Ok(())
}

/// Cosine with the norm guard used throughout the model.
pub fn guarded_cosine(u: &[f64], v: &[f64]) -> f64 {
    dot(u, v) / ((norm(u) + NORM_EPS) * (norm(v) + NORM_EPS))
}

/// Cached per-image quantities.
#[derive(Debug, Clone)]
pub struct ImageEncoding {
    pub cells: usize,
    pub embed_dim: usize,
    /// Unnormalized region scores `w_img . f_i + b_img`.
    pub logits: Vec<f64>,
    /// Softmax of `logits` over all cells.
    pub importance: Vec<f64>,
    /// Projected regions, `cells x embed_dim`.
    pub projected: Vec<f64>,
    pub norms: Vec<f64>,
    /// `sum_i importance_i * projected_i / (norm_i + eps)`.
    pub pooled: Vec<f64>,
}

impl ImageEncoding {
    pub fn region(&self, cell: usize) -> &[f64] {
        &self.projected[cell * self.embed_dim..(cell + 1) * self.embed_dim]
    }
}

/// Cached per-caption quantities.
#[derive(Debug, Clone)]
pub struct CaptionEncoding {
    pub logits: Vec<f64>,
    pub importance: Vec<f64>,
    pub norms: Vec<f64>,
    /// `sum_j importance_j * embedding_j / (norm_j + eps)`.
    pub pooled: Vec<f64>,
}

pub fn encode_image(fmap: &Grid3D, params: &GroundingParams) -> Result<ImageEncoding> {
    check_fmap(fmap, params)?;
    let cells = fmap.cells();
    let e = params.embed_dim();
    let logits: Vec<f64> = (0..cells)
        .map(|i| params.region_logit(fmap.cell(i)))
        .collect();
    let importance = numerics::softmax_unchecked(&logits);
    let mut projected = Vec::with_capacity(cells * e);
    let mut norms = Vec::with_capacity(cells);
    let mut pooled = vec![0.0; e];
    for i in 0..cells {
        let u = params.project(fmap.cell(i));
        let n = norm(&u);
        let w = importance[i] / (n + NORM_EPS);
        for (p, x) in pooled.iter_mut().zip(&u) {
            *p += w * x;
        }
        norms.push(n);
        projected.extend(u);
    }
    Ok(ImageEncoding {
        cells,
        embed_dim: e,
        logits,
        importance,
        projected,
        norms,
        pooled,
    })
}

pub fn encode_caption(caption: &Caption, params: &GroundingParams) -> Result<CaptionEncoding> {
    check_caption(caption, params)?;
    let logits: Vec<f64> = caption.tokens.iter().map(|&t| params.word_logit(t)).collect();
    let importance = numerics::softmax_unchecked(&logits);
    let mut norms = Vec::with_capacity(caption.len());
    let mut pooled = vec![0.0; params.embed_dim()];
    for (j, &t) in caption.tokens.iter().enumerate() {
        let v = params.embedding(t);
        let n = norm(v);
        let w = importance[j] / (n + NORM_EPS);
        for (p, x) in pooled.iter_mut().zip(v) {
            *p += w * x;
        }
        norms.push(n);
    }
    Ok(CaptionEncoding {
        logits,
        importance,
        norms,
        pooled,
    })
}

/// Aggregate similarity from cached encodings. Because the individual
/// similarities are dot products of unit-scaled vectors, the weighted double
/// sum factors into one dot product of the two pooled vectors.
pub fn aggregate(image: &ImageEncoding, caption: &CaptionEncoding) -> f64 {
    dot(&image.pooled, &caption.pooled)
}

/// Projected region vectors as an `n x n x e` grid.
pub fn region_projection(fmap: &Grid3D, params: &GroundingParams) -> Result<Grid3D> {
    check_fmap(fmap, params)?;
    let mut data = Vec::with_capacity(fmap.cells() * params.embed_dim());
    for i in 0..fmap.cells() {
        data.extend(params.project(fmap.cell(i)));
    }
    Grid3D::new(fmap.rows(), fmap.cols(), params.embed_dim(), data)
        .map_err(|_| Error::Numerical("non-finite region projection".into()))
}

/// Region-word cosine similarities as an `n x n x l` grid.
pub fn sim_individual(fmap: &Grid3D, caption: &Caption, params: &GroundingParams) -> Result<Grid3D> {
    check_caption(caption, params)?;
    let proj = region_projection(fmap, params)?;
    let l = caption.len();
    let mut data = Vec::with_capacity(fmap.cells() * l);
    for i in 0..fmap.cells() {
        for &t in &caption.tokens {
            data.push(numerics::cosine(proj.cell(i), params.embedding(t))?);
        }
    }
    Grid3D::new(fmap.rows(), fmap.cols(), l, data)
}

pub fn region_importance(fmap: &Grid3D, params: &GroundingParams) -> Result<Grid2D> {
    check_fmap(fmap, params)?;
    let logits: Vec<f64> = (0..fmap.cells())
        .map(|i| params.region_logit(fmap.cell(i)))
        .collect();
    let weights = numerics::softmax(&logits)?;
    Grid2D::new(fmap.rows(), fmap.cols(), weights)
}

pub fn word_importance(caption: &Caption, params: &GroundingParams) -> Result<Vec<f64>> {
    check_caption(caption, params)?;
    let logits: Vec<f64> = caption.tokens.iter().map(|&t| params.word_logit(t)).collect();
    numerics::softmax(&logits)
}

pub fn sim_aggregate(fmap: &Grid3D, caption: &Caption, params: &GroundingParams) -> Result<f64> {
    let image = encode_image(fmap, params)?;
    let caption = encode_caption(caption, params)?;
    let value = aggregate(&image, &caption);
    if !value.is_finite() {
        return Err(Error::Numerical("non-finite aggregate similarity".into()));
    }
    Ok(value)
}
