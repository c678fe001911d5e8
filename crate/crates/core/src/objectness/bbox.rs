use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::PixelRect;

/// Axis-aligned box in normalized image coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BBox {
    pub xmin: f64,
    pub ymin: f64,
    pub xmax: f64,
    pub ymax: f64,
    pub score: f64,
    /// Class label id (a vocabulary word index for mined classes).
    pub class: Option<usize>,
}

impl BBox {
    /// Clamp to `[0, 1]` and require positive width and height.
    pub fn new(xmin: f64, ymin: f64, xmax: f64, ymax: f64) -> Result<Self> {
        let c = |v: f64| v.clamp(0.0, 1.0);
        let (xmin, ymin, xmax, ymax) = (c(xmin), c(ymin), c(xmax), c(ymax));
        if !(xmin < xmax && ymin < ymax) {
            return Err(Error::InvalidArgument(format!(
                "degenerate box [{xmin}, {ymin}, {xmax}, {ymax}]"
            )));
        }
        Ok(Self {
            xmin,
            ymin,
            xmax,
            ymax,
            score: 0.0,
            class: None,
        })
    }

    pub fn with_score(mut self, score: f64) -> Self {
        self.score = score;
        self
    }

    pub fn with_class(mut self, class: Option<usize>) -> Self {
        self.class = class;
        self
    }

    pub fn width(&self) -> f64 {
        self.xmax - self.xmin
    }

    pub fn height(&self) -> f64 {
        self.ymax - self.ymin
    }

    pub fn area(&self) -> f64 {
        self.width().max(0.0) * self.height().max(0.0)
    }

    pub fn coords(&self) -> [f64; 4] {
        [self.xmin, self.ymin, self.xmax, self.ymax]
    }

    pub fn same_coords(&self, other: &BBox) -> bool {
        self.coords() == other.coords()
    }

    /// Intersection over union of the two rectangles.
    pub fn iou(&self, other: &BBox) -> f64 {
        let iw = (self.xmax.min(other.xmax) - self.xmin.max(other.xmin)).max(0.0);
        let ih = (self.ymax.min(other.ymax) - self.ymin.max(other.ymin)).max(0.0);
        let inter = iw * ih;
        if inter <= 0.0 {
            return 0.0;
        }
        let union = self.area() + other.area() - inter;
        (inter / union).clamp(0.0, 1.0)
    }

    /// Pixel rectangle on a `rows x cols` raster, edges rounded to the
    /// nearest pixel boundary. May be empty for tiny boxes.
    pub fn to_pixel_rect(&self, rows: usize, cols: usize) -> PixelRect {
        let px = |v: f64, n: usize| ((v * n as f64).round().max(0.0) as usize).min(n);
        PixelRect::new(
            px(self.ymin, rows),
            px(self.ymax, rows),
            px(self.xmin, cols),
            px(self.xmax, cols),
        )
    }

    /// Box covering a pixel rectangle exactly.
    pub fn from_pixel_rect(rect: &PixelRect, rows: usize, cols: usize) -> Result<Self> {
        Self::new(
            rect.col0 as f64 / cols as f64,
            rect.row0 as f64 / rows as f64,
            rect.col1 as f64 / cols as f64,
            rect.row1 as f64 / rows as f64,
        )
    }
}

pub fn iou(a: &BBox, b: &BBox) -> f64 {
    a.iou(b)
}
