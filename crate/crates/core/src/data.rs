use crate::grounding::Caption;
use crate::numerics::Grid3D;

/// One image's feature map with its paired caption.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub fmap: Grid3D,
    pub caption: Caption,
}

impl Sample {
    pub fn image_id(&self) -> &str {
        &self.caption.image_id
    }
}
