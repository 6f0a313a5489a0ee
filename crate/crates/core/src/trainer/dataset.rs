use std::path::Path;

use ndarray::Array2;

use crate::data::{load_image, load_manifest, DatasetManifest};
use crate::error::{Error, Result};
use crate::geometry::{
    pixel_center_ray, slab_intersections, CameraPose, NormalizationBox, NormalizationMode, PlanePair, RayCoord4D,
};
use crate::image::ImageBuffer;
use crate::losses::SpectrumRef;
use crate::trainer::hull::CameraHull;
use crate::trainer::TrainConfig;

/// Every pixel of every training image as a `(coordinate, color)` sample,
/// plus what the regularizers need.
#[derive(Debug, Clone)]
pub struct TrainingSet {
    pub images: Vec<ImageBuffer>,
    pub poses: Vec<CameraPose>,
    /// Normalized coordinates, image-major then row-major within an image.
    pub coords: Vec<RayCoord4D>,
    /// `N x 3` colors aligned with `coords`.
    pub colors: Array2<f32>,
    pub spectra: SpectrumRef,
    pub hull: CameraHull,
    pub norm: NormalizationBox,
    pub planes: PlanePair,
}

impl TrainingSet {
    /// The uv-plane is the mean camera depth; the st-plane sits at `st_depth`.
    /// Coordinates use per-axis normalization.
    pub fn from_views(
        images: Vec<ImageBuffer>,
        poses: Vec<CameraPose>,
        st_depth: f64,
        loss_resolution: usize,
    ) -> Result<Self> {
        Self::from_views_with(images, poses, st_depth, loss_resolution, NormalizationMode::PerAxis)
    }

    pub fn from_views_with(
        images: Vec<ImageBuffer>,
        poses: Vec<CameraPose>,
        st_depth: f64,
        loss_resolution: usize,
        normalization: NormalizationMode,
    ) -> Result<Self> {
        if images.is_empty() || images.len() != poses.len() {
            return Err(Error::InvalidManifest(format!(
                "need one pose per training image, got {} images and {} poses",
                images.len(),
                poses.len()
            )));
        }
        let (w, h) = (images[0].width(), images[0].height());
        for (img, pose) in images.iter().zip(&poses) {
            if (img.width(), img.height()) != (w, h) || (pose.width, pose.height) != (w, h) {
                return Err(Error::InconsistentResolution(format!(
                    "expected {w}x{h}, found image {}x{} with camera {}x{}",
                    img.width(),
                    img.height(),
                    pose.width,
                    pose.height
                )));
            }
        }
        let z_uv = poses.iter().map(|p| p.position.z).sum::<f64>() / poses.len() as f64;
        let planes = PlanePair::new(z_uv, st_depth)?;

        let mut raw = Vec::with_capacity(images.len() * w * h);
        for pose in &poses {
            for y in 0..h {
                for x in 0..w {
                    raw.push(slab_intersections(&pixel_center_ray(pose, x, y), &planes)?);
                }
            }
        }
        let norm = NormalizationBox::fit_with(normalization, raw.iter());
        let coords = raw.into_iter().map(|r| norm.normalize(r)).collect();
        let mut colors = Vec::with_capacity(3 * images.len() * w * h);
        for img in &images {
            colors.extend_from_slice(img.data());
        }
        let colors = Array2::from_shape_vec((colors.len() / 3, 3), colors).expect("3 channels");
        let spectra = SpectrumRef::from_images(&images, loss_resolution)?;
        let hull = CameraHull::new(&poses.iter().map(|p| [p.position.x, p.position.y]).collect::<Vec<_>>());
        Ok(Self {
            images,
            poses,
            coords,
            colors,
            spectra,
            hull,
            norm,
            planes,
        })
    }

    pub fn from_manifest(manifest: &DatasetManifest, cfg: &TrainConfig) -> Result<Self> {
        let st_depth = cfg.st_depth.or(manifest.st_depth()).ok_or(Error::InvalidHyperparam {
            name: "st_depth",
            reason: "not set in the config and the dataset gives no hint".into(),
        })?;
        let images = manifest
            .views
            .iter()
            .map(|v| load_image(&v.image))
            .collect::<Result<Vec<_>>>()?;
        let poses = manifest.views.iter().map(|v| v.pose.clone()).collect();
        Self::from_views_with(images, poses, st_depth, cfg.loss_resolution, cfg.normalization)
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    /// Indices of the `k` training cameras closest to `position` in the
    /// camera plane, nearest first.
    pub fn nearest_cameras(&self, position: [f64; 2], k: usize) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.poses.len()).collect();
        let dist = |i: usize| {
            let p = self.poses[i].position;
            (p.x - position[0]).powi(2) + (p.y - position[1]).powi(2)
        };
        idx.sort_by(|&a, &b| dist(a).total_cmp(&dist(b)).then(a.cmp(&b)));
        idx.truncate(k);
        idx
    }
}

/// Loads the dataset at `dir` (a manifest file or its directory).
pub fn build_training_set(dir: &Path, cfg: &TrainConfig) -> Result<TrainingSet> {
    TrainingSet::from_manifest(&load_manifest(dir)?, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Vec3;

    fn view(x: f64, seed: f32) -> (ImageBuffer, CameraPose) {
        let img = ImageBuffer::from_fn(4, 4, |i, j| [seed, i as f32 / 4.0, j as f32 / 4.0]);
        (img, CameraPose::axis_aligned(Vec3::new(x, 0.0, 0.0), 4.0, 4, 4))
    }

    #[test]
    fn counts_and_colors() {
        let (a, pa) = view(0.0, 0.1);
        let (b, pb) = view(0.5, 0.7);
        let ts = TrainingSet::from_views(vec![a.clone(), b.clone()], vec![pa, pb], 2.0, 4).unwrap();
        assert_eq!(ts.len(), 32);
        assert_eq!(ts.colors.nrows(), 32);
        assert_eq!(&ts.colors.as_slice().unwrap()[..48], a.data());
        assert_eq!(&ts.colors.as_slice().unwrap()[48..], b.data());
        assert!(ts.coords.iter().all(|c| c.in_box(1e-12)));
        assert_eq!(ts.spectra.len(), 2);
        assert_eq!(ts.planes, PlanePair::new(0.0, 2.0).unwrap());
    }

    #[test]
    fn inconsistent_resolution() {
        let (a, pa) = view(0.0, 0.1);
        let b = ImageBuffer::new(5, 4);
        let pb = CameraPose::axis_aligned(Vec3::zeros(), 4.0, 5, 4);
        assert!(matches!(
            TrainingSet::from_views(vec![a, b], vec![pa, pb], 2.0, 4),
            Err(Error::InconsistentResolution(_))
        ));
    }

    #[test]
    fn nearest_cameras_sorted() {
        let views: Vec<_> = [0.0, 1.0, 2.0, 3.0].iter().map(|&x| view(x, 0.0)).collect();
        let (imgs, poses): (Vec<_>, Vec<_>) = views.into_iter().unzip();
        let ts = TrainingSet::from_views(imgs, poses, 2.0, 4).unwrap();
        assert_eq!(ts.nearest_cameras([2.2, 0.0], 2), vec![2, 3]);
    }
}
