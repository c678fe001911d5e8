use super::bbox::BBox;
use crate::error::{Error, Result};

/// Sliding-window proposals.
///
/// Each `(scale, aspect)` pair gives a box of width `scale * sqrt(aspect)` and
/// height `scale / sqrt(aspect)` centered at `((i + 0.5) / steps, (j + 0.5) / steps)`
/// for every grid position. Boxes are clipped to the unit square and exact
/// duplicates after clipping are dropped. Output order is scale, aspect,
/// row, column.
pub fn grid_proposals(grid_steps: usize, scales: &[f64], aspects: &[f64]) -> Result<Vec<BBox>> {
    if grid_steps == 0 {
        return Err(Error::InvalidArgument("grid steps must be positive".into()));
    }
    if scales.is_empty() || aspects.is_empty() {
        return Err(Error::InvalidArgument("need at least one scale and one aspect".into()));
    }
    if let Some(bad) = scales.iter().chain(aspects).find(|v| !(**v > 0.0 && v.is_finite())) {
        return Err(Error::InvalidArgument(format!(
            "scales and aspects must be positive, got {bad}"
        )));
    }
    let mut out: Vec<BBox> = Vec::new();
    let mut seen = std::collections::HashSet::new();
    let n = grid_steps as f64;
    for &s in scales {
        for &a in aspects {
            let w = s * a.sqrt();
            let h = s / a.sqrt();
            for i in 0..grid_steps {
                let cy = (i as f64 + 0.5) / n;
                for j in 0..grid_steps {
                    let cx = (j as f64 + 0.5) / n;
                    let Ok(b) = BBox::new(cx - w / 2.0, cy - h / 2.0, cx + w / 2.0, cy + h / 2.0) else {
                        continue;
                    };
                    if seen.insert(b.coords().map(f64::to_bits)) {
                        out.push(b);
                    }
                }
            }
        }
    }
    Ok(out)
}
