use serde::{Deserialize, Serialize};

use super::model::{check_fmap, guarded_cosine};
use super::params::GroundingParams;
use crate::error::{Error, Result};
use crate::numerics::{self, Grid2D, Grid3D, IntegralImage};

pub const DEFAULT_RASTER: usize = 448;
pub const DEFAULT_SMOOTH_KERNEL: usize = 32;

/// Which region weighting multiplies the class similarity map.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum CamGate {
    /// Raw region score `w_img . f + b_img`.
    #[default]
    Logit,
    /// Softmax-normalized region importance.
    Softmax,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CamConfig {
    pub raster_rows: usize,
    pub raster_cols: usize,
    pub kernel_size: usize,
    pub gate: CamGate,
}

impl Default for CamConfig {
    fn default() -> Self {
        Self {
            raster_rows: DEFAULT_RASTER,
            raster_cols: DEFAULT_RASTER,
            kernel_size: DEFAULT_SMOOTH_KERNEL,
            gate: CamGate::Logit,
        }
    }
}

/// Per-class heat map plus its summed-area table.
#[derive(Debug, Clone, PartialEq)]
pub struct ActivationMap {
    class_word: usize,
    heat: Grid2D,
    integral: IntegralImage,
}

impl ActivationMap {
    pub fn new(class_word: usize, heat: Grid2D) -> Self {
        let integral = IntegralImage::new(&heat);
        Self {
            class_word,
            heat,
            integral,
        }
    }

    pub fn class_word(&self) -> usize {
        self.class_word
    }

    pub fn heat(&self) -> &Grid2D {
        &self.heat
    }

    pub fn integral(&self) -> &IntegralImage {
        &self.integral
    }

    pub fn rows(&self) -> usize {
        self.heat.rows()
    }

    pub fn cols(&self) -> usize {
        self.heat.cols()
    }

    /// Replace the heat raster; the integral image is rebuilt.
    pub fn set_heat(&mut self, heat: Grid2D) {
        self.integral = IntegralImage::new(&heat);
        self.heat = heat;
    }

    pub fn into_heat(self) -> Grid2D {
        self.heat
    }
}

/// Cell-level class map before resizing: cosine to the class word times the
/// region gate.
pub fn class_cell_map(
    fmap: &Grid3D,
    class_word: usize,
    params: &GroundingParams,
    gate: CamGate,
) -> Result<Grid2D> {
    check_fmap(fmap, params)?;
    if class_word >= params.vocab_size() {
        return Err(Error::UnknownWord(format!("word index {class_word}")));
    }
    let class_vec = params.embedding(class_word);
    let logits: Vec<f64> = (0..fmap.cells())
        .map(|i| params.region_logit(fmap.cell(i)))
        .collect();
    let weights = match gate {
        CamGate::Logit => logits,
        CamGate::Softmax => numerics::softmax(&logits)?,
    };
    let values = (0..fmap.cells())
        .map(|i| guarded_cosine(&params.project(fmap.cell(i)), class_vec) * weights[i])
        .collect();
    Grid2D::new(fmap.rows(), fmap.cols(), values)
        .map_err(|_| Error::Numerical("non-finite activation".into()))
}

pub fn class_activation_map(
    fmap: &Grid3D,
    class_word: usize,
    params: &GroundingParams,
    cfg: &CamConfig,
) -> Result<ActivationMap> {
    let cells = class_cell_map(fmap, class_word, params, cfg.gate)?;
    let resized = numerics::resize_bilinear(&cells, cfg.raster_rows, cfg.raster_cols)?;
    let heat = numerics::gaussian_smooth(&resized, cfg.kernel_size)?;
    Ok(ActivationMap::new(class_word, heat))
}
