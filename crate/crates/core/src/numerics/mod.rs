//! Small dense-array kernel shared by every other module.

mod grid;
mod integral;
mod ops;

pub use grid::{Grid2D, Grid3D, PixelRect};
pub use integral::{integral, rect_mean, IntegralImage};
pub use ops::{
    cosine, dot, gaussian_kernel, gaussian_smooth, norm, reflect_index, resize_bilinear, softmax,
    NORM_EPS,
};
pub(crate) use ops::softmax_unchecked;
