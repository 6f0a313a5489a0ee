//! Fourier sparsity loss: rendered views should share the magnitude
//! spectrum of the training images.
//!
//! Images enter as `R^2 x 3` matrices with pixel `(x, y)` in row `y * R + x`,
//! the same layout the renderer produces for an `R x R` view.

use ndarray::{Array2, ArrayView2};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::image::ImageBuffer;
use crate::losses::fft::{fft2d, ifft2d_unnormalized};
use crate::scalar::Scalar;

/// Magnitudes below this are treated as zero when differentiating `|X|`.
const MAGNITUDE_FLOOR: f64 = 1e-12;

/// Cached per-image magnitude spectra at loss resolution `R`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumRef {
    resolution: usize,
    spectra: Vec<[Array2<f64>; 3]>,
}

impl SpectrumRef {
    /// Area-downsamples each image to `R x R` and stores its spectrum.
    pub fn from_images(images: &[ImageBuffer], resolution: usize) -> Result<Self> {
        if !resolution.is_power_of_two() {
            return Err(Error::NonPowerOfTwo(resolution));
        }
        let spectra = images
            .iter()
            .map(|img| {
                let small = img.area_resample(resolution, resolution);
                let px = image_rows(&small);
                magnitude_spectrum(px.view(), resolution)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            resolution,
            spectra,
        })
    }

    pub fn from_spectra(resolution: usize, spectra: Vec<[Array2<f64>; 3]>) -> Result<Self> {
        for s in &spectra {
            for ch in s {
                if ch.dim() != (resolution, resolution) {
                    return Err(Error::ShapeMismatch(format!(
                        "spectrum is {:?}, expected {resolution}x{resolution}",
                        ch.dim()
                    )));
                }
            }
        }
        Ok(Self {
            resolution,
            spectra,
        })
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn len(&self) -> usize {
        self.spectra.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spectra.is_empty()
    }

    pub fn spectra(&self) -> &[[Array2<f64>; 3]] {
        &self.spectra
    }
}

/// `R^2 x 3` matrix of an image's pixels.
pub fn image_rows(img: &ImageBuffer) -> Array2<f64> {
    Array2::from_shape_fn((img.pixel_count(), 3), |(i, c)| img.data()[3 * i + c] as f64)
}

fn channel<T: Scalar>(pixels: ArrayView2<T>, r: usize, c: usize) -> Array2<f64> {
    Array2::from_shape_fn((r, r), |(y, x)| pixels[(y * r + x, c)].to_f64())
}

fn check_layout(rows: usize, cols: usize, r: usize) -> Result<()> {
    if !r.is_power_of_two() {
        return Err(Error::NonPowerOfTwo(r));
    }
    if rows != r * r || cols != 3 {
        return Err(Error::ShapeMismatch(format!(
            "expected {}x3 pixel rows for R={r}, got {rows}x{cols}",
            r * r
        )));
    }
    Ok(())
}

/// Per-channel `|fft2d|` of an `R x R x 3` image.
pub fn magnitude_spectrum<T: Scalar>(pixels: ArrayView2<T>, r: usize) -> Result<[Array2<f64>; 3]> {
    check_layout(pixels.nrows(), pixels.ncols(), r)?;
    let mut out: [Array2<f64>; 3] = Default::default();
    for (c, slot) in out.iter_mut().enumerate() {
        *slot = fft2d(channel(pixels, r, c).view())?.mapv(|z| z.norm());
    }
    Ok(out)
}

/// Sum over reference images and channels of the Frobenius norm of the
/// spectrum-magnitude difference, with its gradient w.r.t. the pixels.
///
/// `subset` restricts the comparison to the given reference indices; `None`
/// compares against every reference.
pub fn fourier_sparsity_loss<T: Scalar>(
    rendered: ArrayView2<T>,
    refs: &SpectrumRef,
    subset: Option<&[usize]>,
) -> Result<(f64, Array2<T>)> {
    let r = refs.resolution;
    check_layout(rendered.nrows(), rendered.ncols(), r)?;
    let all: Vec<usize>;
    let indices = match subset {
        Some(s) => s,
        None => {
            all = (0..refs.len()).collect();
            &all
        }
    };
    if indices.is_empty() {
        return Err(Error::ShapeMismatch("no reference spectra to compare against".into()));
    }
    if let Some(&bad) = indices.iter().find(|&&i| i >= refs.len()) {
        return Err(Error::ShapeMismatch(format!(
            "reference index {bad} out of range ({} spectra)",
            refs.len()
        )));
    }

    let mut value = 0.0;
    let mut grad = Array2::zeros(rendered.raw_dim());
    for c in 0..3 {
        let spec = fft2d(channel(rendered, r, c).view())?;
        let mag = spec.mapv(|z| z.norm());
        let mut d_mag = Array2::<f64>::zeros((r, r));
        for &i in indices {
            let diff = &mag - &refs.spectra[i][c];
            let norm = diff.iter().map(|d| d * d).sum::<f64>().sqrt();
            value += norm;
            if norm > 0.0 {
                d_mag.scaled_add(1.0 / norm, &diff);
            }
        }
        // d|X|/dX = X / |X|, then back through the DFT adjoint.
        let weighted = Array2::from_shape_fn((r, r), |idx| {
            let z = spec[idx];
            let m = z.norm();
            if m < MAGNITUDE_FLOOR {
                Complex64::default()
            } else {
                z * (d_mag[idx] / m)
            }
        });
        let back = ifft2d_unnormalized(weighted.view())?;
        for ((y, x), z) in back.indexed_iter() {
            grad[(y * r + x, c)] = T::from_f64(z.re);
        }
    }
    Ok((value, grad))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn random_rows(r: usize, seed: u64) -> Array2<f64> {
        let mut rng = crate::rng::stream_rng(seed, 0);
        Array2::from_shape_simple_fn((r * r, 3), || rng.random::<f64>())
    }

    fn refs_of(rows: &[&Array2<f64>], r: usize) -> SpectrumRef {
        let spectra = rows
            .iter()
            .map(|p| magnitude_spectrum(p.view(), r).unwrap())
            .collect();
        SpectrumRef::from_spectra(r, spectra).unwrap()
    }

    #[test]
    fn constant_image_spectrum_is_dc_only() {
        let px = Array2::from_elem((64, 3), 0.25);
        let s = magnitude_spectrum(px.view(), 8).unwrap();
        for ch in &s {
            assert!((ch[(0, 0)] - 16.0).abs() < 1e-12);
            assert!(ch.iter().skip(1).all(|&v| v < 1e-12));
        }
    }

    #[test]
    fn circular_shift_keeps_magnitude() {
        let r = 8;
        let a = random_rows(r, 1);
        let shifted = Array2::from_shape_fn((r * r, 3), |(i, c)| {
            let (y, x) = (i / r, i % r);
            a[(((y + 3) % r) * r + (x + 5) % r, c)]
        });
        let sa = magnitude_spectrum(a.view(), r).unwrap();
        let sb = magnitude_spectrum(shifted.view(), r).unwrap();
        for c in 0..3 {
            let err = (&sa[c] - &sb[c]).iter().map(|d| d.abs()).fold(0.0, f64::max);
            assert!(err < 1e-9);
        }
    }

    #[test]
    fn parseval() {
        let r = 16;
        let a = random_rows(r, 2);
        let s = magnitude_spectrum(a.view(), r).unwrap();
        for c in 0..3 {
            let spatial: f64 = a.column(c).iter().map(|x| x * x).sum();
            let freq: f64 = s[c].iter().map(|x| x * x).sum();
            let rel = (freq - (r * r) as f64 * spatial).abs() / freq;
            assert!(rel < 1e-6);
        }
    }

    #[test]
    fn identical_to_sole_reference_is_zero() {
        let r = 8;
        let a = random_rows(r, 3);
        let refs = refs_of(&[&a], r);
        let (v, g) = fourier_sparsity_loss(a.view(), &refs, None).unwrap();
        assert_eq!(v, 0.0);
        assert!(g.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn additive_over_references() {
        let r = 8;
        let (a, b, x) = (random_rows(r, 4), random_rows(r, 5), random_rows(r, 6));
        let both = refs_of(&[&a, &b], r);
        let va = fourier_sparsity_loss(x.view(), &refs_of(&[&a], r), None).unwrap().0;
        let vb = fourier_sparsity_loss(x.view(), &refs_of(&[&b], r), None).unwrap().0;
        let vab = fourier_sparsity_loss(x.view(), &both, None).unwrap().0;
        assert!((vab - va - vb).abs() < 1e-9);
        let only_b = fourier_sparsity_loss(x.view(), &both, Some(&[1])).unwrap().0;
        assert!((only_b - vb).abs() < 1e-12);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let r = 8;
        let refs = refs_of(&[&random_rows(r, 7), &random_rows(r, 8)], r);
        let x = random_rows(r, 9);
        let (_, g) = fourier_sparsity_loss(x.view(), &refs, None).unwrap();
        let h = 1e-5;
        for i in 0..r * r {
            let idx = (i, 1);
            let mut p = x.clone();
            p[idx] += h;
            let mut m = x.clone();
            m[idx] -= h;
            let fd = (fourier_sparsity_loss(p.view(), &refs, None).unwrap().0
                - fourier_sparsity_loss(m.view(), &refs, None).unwrap().0)
                / (2.0 * h);
            let scale = g[idx].abs().max(fd.abs()).max(1e-6);
            assert!((g[idx] - fd).abs() / scale < 1e-4, "pixel {i}: {} vs {fd}", g[idx]);
        }
    }

    #[test]
    fn translation_invariance_with_translated_refs() {
        let r = 8;
        let shift = |a: &Array2<f64>, dy: usize, dx: usize| {
            Array2::from_shape_fn((r * r, 3), |(i, c)| {
                let (y, x) = (i / r, i % r);
                a[(((y + dy) % r) * r + (x + dx) % r, c)]
            })
        };
        let (a, x) = (random_rows(r, 10), random_rows(r, 11));
        let v1 = fourier_sparsity_loss(x.view(), &refs_of(&[&a], r), None).unwrap().0;
        let v2 = fourier_sparsity_loss(shift(&x, 2, 7).view(), &refs_of(&[&shift(&a, 5, 1)], r), None)
            .unwrap()
            .0;
        assert!((v1 - v2).abs() < 1e-9);
    }

    #[test]
    fn layout_errors() {
        let refs = refs_of(&[&random_rows(8, 1)], 8);
        let wrong = Array2::<f64>::zeros((63, 3));
        assert!(fourier_sparsity_loss(wrong.view(), &refs, None).is_err());
        let x = random_rows(8, 2);
        assert!(fourier_sparsity_loss(x.view(), &refs, Some(&[3])).is_err());
        assert!(matches!(
            magnitude_spectrum(Array2::<f64>::zeros((36, 3)).view(), 6),
            Err(Error::NonPowerOfTwo(6))
        ));
    }
}
