//! Summed-area tables.
//!
//! The table for a `rows x cols` source has `(rows + 1) x (cols + 1)` entries
//! with an all-zero first row and column, so the sum over the half-open
//! rectangle `[r0, r1) x [c0, c1)` is
//! `I(r1, c1) - I(r0, c1) - I(r1, c0) + I(r0, c0)` without any branching.

use super::grid::{Grid2D, PixelRect};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct IntegralImage {
    rows: usize,
    cols: usize,
    sums: Vec<f64>,
}

impl IntegralImage {
    pub fn new(src: &Grid2D) -> Self {
        let (rows, cols) = (src.rows(), src.cols());
        let stride = cols + 1;
        let mut sums = vec![0.0; (rows + 1) * stride];
        for r in 0..rows {
            let mut row_sum = 0.0;
            for c in 0..cols {
                row_sum += src.get(r, c);
                sums[(r + 1) * stride + c + 1] = sums[r * stride + c + 1] + row_sum;
            }
        }
        Self { rows, cols, sums }
    }

    /// Rows of the source raster.
    pub fn rows(&self) -> usize {
        self.rows
    }

    /// Columns of the source raster.
    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Prefix-sum entry `(i, j)` for `i <= rows`, `j <= cols`.
    #[inline]
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.sums[i * (self.cols + 1) + j]
    }

    fn check(&self, rect: &PixelRect) -> Result<()> {
        if rect.row0 >= rect.row1
            || rect.col0 >= rect.col1
            || rect.row1 > self.rows
            || rect.col1 > self.cols
        {
            return Err(Error::InvalidRect {
                row0: rect.row0,
                row1: rect.row1,
                col0: rect.col0,
                col1: rect.col1,
                rows: self.rows,
                cols: self.cols,
            });
        }
        Ok(())
    }

    #[inline]
    fn sum_unchecked(&self, rect: &PixelRect) -> f64 {
        self.entry(rect.row1, rect.col1) - self.entry(rect.row0, rect.col1)
            - self.entry(rect.row1, rect.col0)
            + self.entry(rect.row0, rect.col0)
    }

    pub fn rect_sum(&self, rect: &PixelRect) -> Result<f64> {
        self.check(rect)?;
        Ok(self.sum_unchecked(rect))
    }

    pub fn rect_mean(&self, rect: &PixelRect) -> Result<f64> {
        self.check(rect)?;
        Ok(self.sum_unchecked(rect) / rect.area() as f64)
    }

    pub fn full_rect(&self) -> PixelRect {
        PixelRect::new(0, self.rows, 0, self.cols)
    }
}

pub fn integral(src: &Grid2D) -> IntegralImage {
    IntegralImage::new(src)
}

pub fn rect_mean(ii: &IntegralImage, rect: &PixelRect) -> Result<f64> {
    ii.rect_mean(rect)
}
