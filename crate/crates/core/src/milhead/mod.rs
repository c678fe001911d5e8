//! Image-level labels from captions, proposal matching against pseudo
//! ground-truth, and a max-pooled multiple-instance classifier over boxes.

mod detect;
mod labels;
mod model;

pub use detect::{detect, detect_with_maps, DetectConfig};
pub use labels::{box_feature, extract_labels, match_boxes, MATCH_IOU};
pub use model::{
    mil_gradients, mil_loss, mil_probability, train_mil, InstanceBag, MilParams, MilTrainConfig,
    MilTrainOutcome, MIL_INIT_RANGE, PROB_FLOOR,
};
