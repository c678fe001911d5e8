//! Box scoring against class activation maps.
//!
//! The edge-gradient criterion compares a thin strip just inside each box
//! edge with a strip of equal thickness just outside it. Strip thickness is
//! `max(1, round(margin_fraction * side))` where `side` is the box width for
//! the left/right edges and the box height for the top/bottom edges. Outer
//! strips are clipped to the raster; an edge whose outer strip vanishes
//! scores its inner-strip mean.

use serde::{Deserialize, Serialize};

use super::bbox::BBox;
use crate::error::{Error, Result};
use crate::grounding::ActivationMap;
use crate::numerics::PixelRect;

pub const DEFAULT_MARGIN_FRACTION: f64 = 0.02;
pub const DEFAULT_BETA: f64 = 0.005;
pub const DEFAULT_NMS_IOU: f64 = 0.5;
pub const DEFAULT_BORDER_FRACTION: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Edge {
    Left,
    Right,
    Top,
    Bottom,
}

impl Edge {
    pub const ALL: [Edge; 4] = [Edge::Left, Edge::Right, Edge::Top, Edge::Bottom];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Criterion {
    #[default]
    MinEdgeGradient,
    AverageActivation,
    InsideOutsideContrast,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoringConfig {
    pub margin_fraction: f64,
    pub beta: f64,
    pub nms_iou: f64,
    pub top_k: usize,
    pub criterion: Criterion,
    /// Ring width (fraction of box side) for the inside-outside baseline.
    pub border_fraction: f64,
}

impl Default for ScoringConfig {
    fn default() -> Self {
        Self {
            margin_fraction: DEFAULT_MARGIN_FRACTION,
            beta: DEFAULT_BETA,
            nms_iou: DEFAULT_NMS_IOU,
            top_k: 5,
            criterion: Criterion::MinEdgeGradient,
            border_fraction: DEFAULT_BORDER_FRACTION,
        }
    }
}

impl ScoringConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.margin_fraction > 0.0 && self.margin_fraction < 0.5) {
            return Err(Error::InvalidArgument(format!(
                "margin fraction must be in (0, 0.5), got {}",
                self.margin_fraction
            )));
        }
        if !(self.beta >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "beta must be >= 0, got {}",
                self.beta
            )));
        }
        if !(self.border_fraction > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "border fraction must be > 0, got {}",
                self.border_fraction
            )));
        }
        Ok(())
    }
}

/// Inner and (possibly clipped-away) outer strip along one box edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EdgeStrips {
    pub inner: PixelRect,
    pub outer: Option<PixelRect>,
}

pub fn strip_thickness(side: usize, margin_fraction: f64) -> usize {
    ((margin_fraction * side as f64).round() as usize).clamp(1, side.max(1))
}

fn box_rect(bbox: &BBox, rows: usize, cols: usize) -> Result<PixelRect> {
    let rect = bbox.to_pixel_rect(rows, cols);
    if rect.area() == 0 {
        return Err(Error::InvalidRect {
            row0: rect.row0,
            row1: rect.row1,
            col0: rect.col0,
            col1: rect.col1,
            rows,
            cols,
        });
    }
    Ok(rect)
}

/// Strip rectangles for one edge of the pixel box `rect`.
pub fn edge_strips(
    rect: &PixelRect,
    edge: Edge,
    margin_fraction: f64,
    rows: usize,
    cols: usize,
) -> EdgeStrips {
    let nonempty = |r: PixelRect| (r.area() > 0).then_some(r);
    match edge {
        Edge::Left | Edge::Right => {
            let t = strip_thickness(rect.width(), margin_fraction);
            let (inner, outer) = if edge == Edge::Left {
                (
                    PixelRect::new(rect.row0, rect.row1, rect.col0, rect.col0 + t),
                    PixelRect::new(rect.row0, rect.row1, rect.col0.saturating_sub(t), rect.col0),
                )
            } else {
                (
                    PixelRect::new(rect.row0, rect.row1, rect.col1 - t, rect.col1),
                    PixelRect::new(rect.row0, rect.row1, rect.col1, (rect.col1 + t).min(cols)),
                )
            };
            EdgeStrips {
                inner,
                outer: nonempty(outer),
            }
        }
        Edge::Top | Edge::Bottom => {
            let t = strip_thickness(rect.height(), margin_fraction);
            let (inner, outer) = if edge == Edge::Top {
                (
                    PixelRect::new(rect.row0, rect.row0 + t, rect.col0, rect.col1),
                    PixelRect::new(rect.row0.saturating_sub(t), rect.row0, rect.col0, rect.col1),
                )
            } else {
                (
                    PixelRect::new(rect.row1 - t, rect.row1, rect.col0, rect.col1),
                    PixelRect::new(rect.row1, (rect.row1 + t).min(rows), rect.col0, rect.col1),
                )
            };
            EdgeStrips {
                inner,
                outer: nonempty(outer),
            }
        }
    }
}

fn strip_gradient(map: &ActivationMap, strips: &EdgeStrips) -> Result<f64> {
    let ii = map.integral();
    let inner = ii.rect_mean(&strips.inner)?;
    Ok(match &strips.outer {
        Some(outer) => inner - ii.rect_mean(outer)?,
        None => inner,
    })
}

/// Inner-strip mean minus outer-strip mean along one edge.
pub fn edge_gradient(map: &ActivationMap, bbox: &BBox, edge: Edge, cfg: &ScoringConfig) -> Result<f64> {
    let (rows, cols) = (map.rows(), map.cols());
    let rect = box_rect(bbox, rows, cols)?;
    strip_gradient(map, &edge_strips(&rect, edge, cfg.margin_fraction, rows, cols))
}

/// `beta * mean activation + min edge gradient` for one class map.
pub fn class_objectness(map: &ActivationMap, bbox: &BBox, cfg: &ScoringConfig) -> Result<f64> {
    let (rows, cols) = (map.rows(), map.cols());
    let rect = box_rect(bbox, rows, cols)?;
    let inside = map.integral().rect_mean(&rect)?;
    let mut min_grad = f64::INFINITY;
    for edge in Edge::ALL {
        let g = strip_gradient(map, &edge_strips(&rect, edge, cfg.margin_fraction, rows, cols))?;
        min_grad = min_grad.min(g);
    }
    Ok(cfg.beta * inside + min_grad)
}

/// Maximum of `score` over the maps, with ties going to the lower class word.
fn best_over_maps(
    maps: &[ActivationMap],
    mut score: impl FnMut(&ActivationMap) -> Result<f64>,
) -> Result<(f64, usize)> {
    if maps.is_empty() {
        return Err(Error::InvalidArgument("no activation maps to score against".into()));
    }
    let mut best: Option<(f64, usize)> = None;
    for map in maps {
        let s = score(map)?;
        let c = map.class_word();
        best = match best {
            Some((bs, bc)) if bs > s || (bs == s && bc < c) => Some((bs, bc)),
            _ => Some((s, c)),
        };
    }
    Ok(best.expect("non-empty maps"))
}

/// Edge-gradient objectness maximized over classes.
pub fn box_objectness(maps: &[ActivationMap], bbox: &BBox, cfg: &ScoringConfig) -> Result<(f64, usize)> {
    best_over_maps(maps, |m| class_objectness(m, bbox, cfg))
}

/// Mean activation inside the box, maximized over classes.
pub fn baseline_avg_activation(maps: &[ActivationMap], bbox: &BBox) -> Result<(f64, usize)> {
    best_over_maps(maps, |m| {
        let rect = box_rect(bbox, m.rows(), m.cols())?;
        m.integral().rect_mean(&rect)
    })
}

/// Inside mean minus the mean of a surrounding ring whose width is
/// `border_fraction` of the box side on each axis, maximized over classes.
pub fn baseline_inside_outside(
    maps: &[ActivationMap],
    bbox: &BBox,
    border_fraction: f64,
) -> Result<(f64, usize)> {
    best_over_maps(maps, |m| {
        let (rows, cols) = (m.rows(), m.cols());
        let rect = box_rect(bbox, rows, cols)?;
        let ii = m.integral();
        let inside_sum = ii.rect_sum(&rect)?;
        let inside = inside_sum / rect.area() as f64;
        let bw = ((border_fraction * rect.width() as f64).round() as usize).max(1);
        let bh = ((border_fraction * rect.height() as f64).round() as usize).max(1);
        let outer = PixelRect::new(
            rect.row0.saturating_sub(bh),
            (rect.row1 + bh).min(rows),
            rect.col0.saturating_sub(bw),
            (rect.col1 + bw).min(cols),
        );
        let ring_area = outer.area() - rect.area();
        if ring_area == 0 {
            return Ok(inside);
        }
        let ring = (ii.rect_sum(&outer)? - inside_sum) / ring_area as f64;
        Ok(inside - ring)
    })
}

/// Score a box with the configured criterion.
pub fn score_box(maps: &[ActivationMap], bbox: &BBox, cfg: &ScoringConfig) -> Result<(f64, usize)> {
    match cfg.criterion {
        Criterion::MinEdgeGradient => box_objectness(maps, bbox, cfg),
        Criterion::AverageActivation => baseline_avg_activation(maps, bbox),
        Criterion::InsideOutsideContrast => {
            baseline_inside_outside(maps, bbox, cfg.border_fraction)
        }
    }
}
