use super::grid::Grid2D;
use crate::error::{Error, Result};

/// Norm floor below which a vector has no usable direction.
pub const NORM_EPS: f64 = 1e-12;

/// Numerically stable softmax (max-subtracted).
pub fn softmax(values: &[f64]) -> Result<Vec<f64>> {
    if values.is_empty() {
        return Err(Error::InvalidArgument("softmax of an empty vector".into()));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument(
            "softmax input contains a non-finite value".into(),
        ));
    }
    Ok(softmax_unchecked(values))
}

/// Softmax without input validation; callers guarantee non-empty finite input.
pub(crate) fn softmax_unchecked(values: &[f64]) -> Vec<f64> {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut out: Vec<f64> = values.iter().map(|&v| (v - max).exp()).collect();
    let total: f64 = out.iter().sum();
    for v in &mut out {
        *v /= total;
    }
    out
}

pub fn dot(u: &[f64], v: &[f64]) -> f64 {
    u.iter().zip(v).map(|(a, b)| a * b).sum()
}

pub fn norm(u: &[f64]) -> f64 {
    dot(u, u).sqrt()
}

/// Cosine similarity; fails when either norm is at or below [`NORM_EPS`].
pub fn cosine(u: &[f64], v: &[f64]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::Shape(format!(
            "cosine of vectors with lengths {} and {}",
            u.len(),
            v.len()
        )));
    }
    let (nu, nv) = (norm(u), norm(v));
    for n in [nu, nv] {
        if n <= NORM_EPS {
            return Err(Error::DegenerateVector {
                norm: n,
                eps: NORM_EPS,
            });
        }
    }
    Ok((dot(u, v) / (nu * nv)).clamp(-1.0, 1.0))
}

/// Bilinear resize with corner-aligned sampling: output pixel `i` samples
/// source coordinate `i * (in - 1) / (out - 1)`.
pub fn resize_bilinear(src: &Grid2D, out_rows: usize, out_cols: usize) -> Result<Grid2D> {
    if src.rows() == 0 || src.cols() == 0 {
        return Err(Error::InvalidArgument("resize of an empty grid".into()));
    }
    if out_rows == 0 || out_cols == 0 {
        return Err(Error::InvalidArgument(format!(
            "resize target {out_rows}x{out_cols} has a zero dimension"
        )));
    }
    let row_taps = linear_taps(src.rows(), out_rows);
    let col_taps = linear_taps(src.cols(), out_cols);
    Ok(Grid2D::from_fn(out_rows, out_cols, |r, c| {
        let (r0, r1, wr) = row_taps[r];
        let (c0, c1, wc) = col_taps[c];
        let top = src.get(r0, c0) * (1.0 - wc) + src.get(r0, c1) * wc;
        let bottom = src.get(r1, c0) * (1.0 - wc) + src.get(r1, c1) * wc;
        top * (1.0 - wr) + bottom * wr
    }))
}

fn linear_taps(input: usize, output: usize) -> Vec<(usize, usize, f64)> {
    (0..output)
        .map(|i| {
            if input == 1 || output == 1 {
                return (0, 0, 0.0);
            }
            let x = i as f64 * (input - 1) as f64 / (output - 1) as f64;
            let lo = (x.floor() as usize).min(input - 1);
            let hi = (lo + 1).min(input - 1);
            (lo, hi, x - lo as f64)
        })
        .collect()
}

/// Normalized 1D Gaussian taps for `kernel_size`, with `sigma = kernel_size / 6`.
///
/// Taps sit at integer offsets `-h..=h`, `h = (kernel_size - 1) / 2`, so even
/// sizes use `kernel_size - 1` taps and the filter never shifts the raster.
pub fn gaussian_kernel(kernel_size: usize) -> Result<Vec<f64>> {
    if kernel_size == 0 {
        return Err(Error::InvalidArgument("kernel size must be >= 1".into()));
    }
    let half = (kernel_size - 1) / 2;
    if half == 0 {
        return Ok(vec![1.0]);
    }
    let sigma = kernel_size as f64 / 6.0;
    let mut taps: Vec<f64> = (0..=2 * half)
        .map(|i| {
            let x = i as f64 - half as f64;
            (-x * x / (2.0 * sigma * sigma)).exp()
        })
        .collect();
    let total: f64 = taps.iter().sum();
    for t in &mut taps {
        *t /= total;
    }
    Ok(taps)
}

/// Reflect an out-of-range index back into `0..len` without repeating the edge.
#[inline]
pub fn reflect_index(i: isize, len: usize) -> usize {
    if len == 1 {
        return 0;
    }
    let period = 2 * (len as isize - 1);
    let m = i.rem_euclid(period);
    if m >= len as isize {
        (period - m) as usize
    } else {
        m as usize
    }
}

/// Separable Gaussian blur with reflect padding.
pub fn gaussian_smooth(src: &Grid2D, kernel_size: usize) -> Result<Grid2D> {
    let taps = gaussian_kernel(kernel_size)?;
    if taps.len() == 1 {
        return Ok(src.clone());
    }
    let half = (taps.len() / 2) as isize;
    let (rows, cols) = (src.rows(), src.cols());
    let data = src.data();

    let mut horizontal = vec![0.0; rows * cols];
    let mut padded = vec![0.0; cols + taps.len() - 1];
    for r in 0..rows {
        let row = &data[r * cols..(r + 1) * cols];
        for (j, p) in padded.iter_mut().enumerate() {
            *p = row[reflect_index(j as isize - half, cols)];
        }
        let dst = &mut horizontal[r * cols..(r + 1) * cols];
        for (k, w) in taps.iter().enumerate() {
            for (d, v) in dst.iter_mut().zip(&padded[k..k + cols]) {
                *d += w * v;
            }
        }
    }

    let mut out = vec![0.0; rows * cols];
    for r in 0..rows {
        let dst = &mut out[r * cols..(r + 1) * cols];
        for (k, w) in taps.iter().enumerate() {
            let sr = reflect_index(r as isize + k as isize - half, rows);
            for (d, v) in dst.iter_mut().zip(&horizontal[sr * cols..(sr + 1) * cols]) {
                *d += w * v;
            }
        }
    }
    Grid2D::new(rows, cols, out)
}
