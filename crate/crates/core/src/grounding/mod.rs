//! Region-word grounding: importance scores, similarities, class activation
//! maps and object-vocabulary mining.

mod cam;
mod mining;
mod model;
mod params;
mod vocab;

pub use cam::{
    class_activation_map, class_cell_map, ActivationMap, CamConfig, CamGate, DEFAULT_RASTER,
    DEFAULT_SMOOTH_KERNEL,
};
pub use mining::{mine_vocabulary, Exclusion, MinedWord};
pub use model::{
    aggregate, encode_caption, encode_image, guarded_cosine, region_importance, region_projection,
    sim_aggregate, sim_individual, word_importance, CaptionEncoding, ImageEncoding,
};
pub use params::{GroundingParams, DEFAULT_EMBED_DIM, INIT_RANGE, TENSOR_NAMES};
pub use vocab::{tokenize, Caption, Vocabulary, DEFAULT_MAX_CAPTION_LEN};
