//! Image quality metrics and test-split evaluation.
//!
//! SSIM is single-scale with an 11x11 Gaussian window (sigma 1.5),
//! `C1 = 0.01^2`, `C2 = 0.03^2` for a unit dynamic range, evaluated over valid
//! windows only, per channel, then averaged over R, G and B.

use std::fmt::Write as _;
use std::path::Path;

use crate::data::{load_image, DatasetManifest};
use crate::error::{Error, Result};
use crate::geometry::CameraPose;
use crate::image::ImageBuffer;
use crate::model::LightFieldNetwork;
use crate::renderer::{render, RenderOptions, RenderRequest};

/// PSNR of identical images.
pub const PSNR_IDENTICAL: f64 = f64::INFINITY;
/// Value an infinite PSNR contributes to a mean over views that are not all identical.
pub const PSNR_CAP_DB: f64 = 100.0;

pub const SSIM_WINDOW: usize = 11;
pub const SSIM_SIGMA: f64 = 1.5;
pub const SSIM_C1: f64 = 1e-4;
pub const SSIM_C2: f64 = 9e-4;

pub fn mse(a: &ImageBuffer, b: &ImageBuffer) -> Result<f64> {
    a.same_shape(b)?;
    let n = a.data().len().max(1) as f64;
    Ok(a.data()
        .iter()
        .zip(b.data())
        .map(|(&x, &y)| (x as f64 - y as f64).powi(2))
        .sum::<f64>()
        / n)
}

/// `10 log10(1 / MSE)` for values in `[0, 1]`.
pub fn psnr(a: &ImageBuffer, b: &ImageBuffer) -> Result<f64> {
    let m = mse(a, b)?;
    Ok(if m == 0.0 { PSNR_IDENTICAL } else { -10.0 * m.log10() })
}

fn gaussian_kernel() -> [f64; SSIM_WINDOW] {
    let c = (SSIM_WINDOW / 2) as f64;
    let mut k: [f64; SSIM_WINDOW] = std::array::from_fn(|i| {
        let d = i as f64 - c;
        (-d * d / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp()
    });
    let s: f64 = k.iter().sum();
    k.iter_mut().for_each(|v| *v /= s);
    k
}

/// Separable valid-mode filtering of a `w x h` plane.
fn filter_valid(plane: &[f64], w: usize, h: usize, k: &[f64; SSIM_WINDOW]) -> Vec<f64> {
    let ow = w + 1 - SSIM_WINDOW;
    let oh = h + 1 - SSIM_WINDOW;
    let mut tmp = vec![0.0; ow * h];
    for y in 0..h {
        let row = &plane[y * w..(y + 1) * w];
        for x in 0..ow {
            tmp[y * ow + x] = k.iter().zip(&row[x..x + SSIM_WINDOW]).map(|(a, b)| a * b).sum();
        }
    }
    let mut out = vec![0.0; ow * oh];
    for y in 0..oh {
        for x in 0..ow {
            out[y * ow + x] = (0..SSIM_WINDOW).map(|i| k[i] * tmp[(y + i) * ow + x]).sum();
        }
    }
    out
}

fn ssim_channel(a: &ImageBuffer, b: &ImageBuffer, c: usize, k: &[f64; SSIM_WINDOW]) -> f64 {
    let (w, h) = (a.width(), a.height());
    let plane = |img: &ImageBuffer| -> Vec<f64> { img.data().iter().skip(c).step_by(3).map(|&v| v as f64).collect() };
    let x = plane(a);
    let y = plane(b);
    let prod = |p: &[f64], q: &[f64]| -> Vec<f64> { p.iter().zip(q).map(|(a, b)| a * b).collect() };
    let mx = filter_valid(&x, w, h, k);
    let my = filter_valid(&y, w, h, k);
    let mxx = filter_valid(&prod(&x, &x), w, h, k);
    let myy = filter_valid(&prod(&y, &y), w, h, k);
    let mxy = filter_valid(&prod(&x, &y), w, h, k);
    let n = mx.len() as f64;
    (0..mx.len())
        .map(|i| {
            let (ux, uy) = (mx[i], my[i]);
            let vx = mxx[i] - ux * ux;
            let vy = myy[i] - uy * uy;
            let cxy = mxy[i] - ux * uy;
            ((2.0 * ux * uy + SSIM_C1) * (2.0 * cxy + SSIM_C2))
                / ((ux * ux + uy * uy + SSIM_C1) * (vx + vy + SSIM_C2))
        })
        .sum::<f64>()
        / n
}

pub fn ssim(a: &ImageBuffer, b: &ImageBuffer) -> Result<f64> {
    a.same_shape(b)?;
    if a.width() < SSIM_WINDOW || a.height() < SSIM_WINDOW {
        return Err(Error::TooSmall {
            width: a.width(),
            height: a.height(),
            min: SSIM_WINDOW,
        });
    }
    if a.data() == b.data() {
        return Ok(1.0);
    }
    let k = gaussian_kernel();
    Ok((0..3).map(|c| ssim_channel(a, b, c, &k)).sum::<f64>() / 3.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ViewScore {
    pub view: String,
    pub psnr: f64,
    pub ssim: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub views: Vec<ViewScore>,
    pub mean_psnr: f64,
    pub mean_ssim: f64,
}

impl EvalReport {
    pub fn from_views(views: Vec<ViewScore>) -> Result<Self> {
        if views.is_empty() {
            return Err(Error::EmptySplit);
        }
        let n = views.len() as f64;
        let mean_psnr = if views.iter().all(|v| v.psnr == PSNR_IDENTICAL) {
            PSNR_IDENTICAL
        } else {
            views.iter().map(|v| v.psnr.min(PSNR_CAP_DB)).sum::<f64>() / n
        };
        let mean_ssim = views.iter().map(|v| v.ssim).sum::<f64>() / n;
        Ok(Self {
            views,
            mean_psnr,
            mean_ssim,
        })
    }

    /// `view,psnr_db,ssim` rows followed by a `mean` summary row.
    pub fn to_csv(&self) -> String {
        let fmt = |p: f64| if p.is_infinite() { "inf".to_string() } else { format!("{p:.6}") };
        let mut s = String::from("view,psnr_db,ssim\n");
        for v in &self.views {
            let _ = writeln!(s, "{},{},{:.6}", v.view, fmt(v.psnr), v.ssim);
        }
        let _ = writeln!(s, "mean,{},{:.6}", fmt(self.mean_psnr), self.mean_ssim);
        s
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }
}

/// Scores a prediction against its reference.
pub fn score_view(view: &str, predicted: &ImageBuffer, reference: &ImageBuffer) -> Result<ViewScore> {
    Ok(ViewScore {
        view: view.to_string(),
        psnr: psnr(predicted, reference)?,
        ssim: ssim(predicted, reference)?,
    })
}

/// Renders every `(id, pose, reference)` and scores it. Returns the report and
/// the rendered images in input order.
pub fn evaluate_views(
    model: &LightFieldNetwork,
    views: &[(String, CameraPose, ImageBuffer)],
    opts: &RenderOptions,
) -> Result<(EvalReport, Vec<ImageBuffer>)> {
    let mut scores = Vec::with_capacity(views.len());
    let mut images = Vec::with_capacity(views.len());
    for (id, pose, reference) in views {
        let req = RenderRequest::new(pose.clone(), reference.width(), reference.height())?;
        let (img, _) = render(model, &req, opts);
        scores.push(score_view(id, &img, reference)?);
        images.push(img);
    }
    Ok((EvalReport::from_views(scores)?, images))
}

/// Evaluates `model` on every view of a test manifest.
pub fn evaluate(model: &LightFieldNetwork, test: &DatasetManifest, opts: &RenderOptions) -> Result<EvalReport> {
    if test.views.is_empty() {
        return Err(Error::EmptySplit);
    }
    let views = test
        .views
        .iter()
        .map(|v| Ok((v.id.clone(), v.pose.clone(), load_image(&v.image)?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(evaluate_views(model, &views, opts)?.0)
}
