//! `H x W x 3` float images.

use crate::error::{Error, Result};

/// Row-major RGB image with samples nominally in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageBuffer {
    width: usize,
    height: usize,
    data: Vec<f32>,
}

impl ImageBuffer {
    pub fn new(width: usize, height: usize) -> Self {
        Self::filled(width, height, [0.0; 3])
    }

    pub fn filled(width: usize, height: usize, rgb: [f32; 3]) -> Self {
        let mut data = Vec::with_capacity(width * height * 3);
        for _ in 0..width * height {
            data.extend_from_slice(&rgb);
        }
        Self {
            width,
            height,
            data,
        }
    }

    pub fn from_vec(width: usize, height: usize, data: Vec<f32>) -> Result<Self> {
        if data.len() != width * height * 3 {
            return Err(Error::ShapeMismatch(format!(
                "{}x{}x3 image needs {} samples, got {}",
                width,
                height,
                width * height * 3,
                data.len()
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> [f32; 3]) -> Self {
        let mut data = Vec::with_capacity(width * height * 3);
        for y in 0..height {
            for x in 0..width {
                data.extend_from_slice(&f(x, y));
            }
        }
        Self {
            width,
            height,
            data,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixel_count(&self) -> usize {
        self.width * self.height
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f32] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f32> {
        self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> [f32; 3] {
        let i = 3 * (y * self.width + x);
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, rgb: [f32; 3]) {
        let i = 3 * (y * self.width + x);
        self.data[i..i + 3].copy_from_slice(&rgb);
    }

    pub fn same_shape(&self, other: &Self) -> Result<()> {
        if self.width != other.width || self.height != other.height {
            return Err(Error::ShapeMismatch(format!(
                "{}x{} vs {}x{}",
                self.width, self.height, other.width, other.height
            )));
        }
        Ok(())
    }

    /// Box-filter resample to `out_w x out_h`, weighting each source pixel by
    /// its fractional overlap with the destination footprint.
    pub fn area_resample(&self, out_w: usize, out_h: usize) -> Self {
        if out_w == self.width && out_h == self.height {
            return self.clone();
        }
        let sx = self.width as f64 / out_w as f64;
        let sy = self.height as f64 / out_h as f64;
        let spans = |scale: f64, n_out: usize, n_in: usize| -> Vec<Vec<(usize, f64)>> {
            (0..n_out)
                .map(|o| {
                    let a = o as f64 * scale;
                    let b = (o + 1) as f64 * scale;
                    let first = a.floor() as usize;
                    let last = (b.ceil() as usize).min(n_in);
                    (first..last)
                        .filter_map(|i| {
                            let w = (b.min(i as f64 + 1.0) - a.max(i as f64)).max(0.0);
                            (w > 0.0).then_some((i, w))
                        })
                        .collect()
                })
                .collect()
        };
        let xs = spans(sx, out_w, self.width);
        let ys = spans(sy, out_h, self.height);
        Self::from_fn(out_w, out_h, |ox, oy| {
            let mut acc = [0.0f64; 3];
            let mut total = 0.0;
            for &(iy, wy) in &ys[oy] {
                for &(ix, wx) in &xs[ox] {
                    let w = wx * wy;
                    let p = self.get(ix, iy);
                    for c in 0..3 {
                        acc[c] += w * p[c] as f64;
                    }
                    total += w;
                }
            }
            acc.map(|v| (v / total) as f32)
        })
    }

    /// Per-pixel mean absolute difference mapped to a black-red-yellow-white ramp.
    pub fn difference_heatmap(&self, other: &Self) -> Result<Self> {
        self.same_shape(other)?;
        Ok(Self::from_fn(self.width, self.height, |x, y| {
            let a = self.get(x, y);
            let b = other.get(x, y);
            let d = (0..3).map(|c| (a[c] - b[c]).abs()).sum::<f32>() / 3.0;
            heat(d.clamp(0.0, 1.0))
        }))
    }
}

fn heat(t: f32) -> [f32; 3] {
    let r = (3.0 * t).min(1.0);
    let g = (3.0 * t - 1.0).clamp(0.0, 1.0);
    let b = (3.0 * t - 2.0).clamp(0.0, 1.0);
    [r, g, b]
}
