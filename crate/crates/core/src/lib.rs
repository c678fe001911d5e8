//! Open-vocabulary weakly supervised object localization from image-caption
//! pairs, operating on precomputed region feature maps.

pub mod data;
pub mod error;
pub mod evalkit;
pub mod grounding;
pub mod io;
pub mod milhead;
pub mod numerics;
pub mod objectness;
pub mod synth;
pub mod training;

pub use data::Sample;
pub use error::{Error, Result};
