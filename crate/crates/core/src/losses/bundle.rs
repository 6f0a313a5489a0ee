//! Ray bundle loss: rays leaving the same origin at a small angle from a
//! center ray should see similar colors.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{look_rotation, Ray, Vec3};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BundleConfig {
    /// Neighbor rays per center ray.
    pub samples: usize,
    /// Angular scale in degrees: spread of the sampled angles and decay of the weights.
    pub theta_deg: f64,
}

impl Default for BundleConfig {
    fn default() -> Self {
        Self {
            samples: 16,
            theta_deg: 1.5,
        }
    }
}

impl BundleConfig {
    pub fn validate(&self) -> Result<()> {
        if self.samples < 1 {
            return Err(Error::InvalidHyperparam {
                name: "bundle.samples",
                reason: "need at least one neighbor ray".into(),
            });
        }
        if !(self.theta_deg.is_finite() && self.theta_deg > 0.0) {
            return Err(Error::InvalidHyperparam {
                name: "bundle.theta_deg",
                reason: format!("must be positive, got {}", self.theta_deg),
            });
        }
        Ok(())
    }

    /// `exp(-angle / theta)`, both in degrees.
    pub fn weight(&self, angle_deg: f64) -> f64 {
        (-angle_deg / self.theta_deg).exp()
    }
}

/// Draws `cfg.samples` rays around `center`, sharing its origin.
///
/// The polar angle is drawn from `N(0, theta^2)` with negative draws
/// rejected; the azimuth is uniform on `[0, 2 pi)`.
pub fn sample_bundle<R: Rng + ?Sized>(center: &Ray, cfg: &BundleConfig, rng: &mut R) -> Vec<(Ray, f64)> {
    let frame = look_rotation(&center.direction);
    let (e1, e2): (Vec3, Vec3) = (frame.column(0).into_owned(), frame.column(1).into_owned());
    (0..cfg.samples)
        .map(|_| {
            let angle_deg = loop {
                let z: f64 = StandardNormal.sample(rng);
                let a = z * cfg.theta_deg;
                if a >= 0.0 {
                    break a;
                }
            };
            let azimuth = rng.random::<f64>() * std::f64::consts::TAU;
            let a = angle_deg.to_radians();
            let dir = center.direction * a.cos() + (e1 * azimuth.cos() + e2 * azimuth.sin()) * a.sin();
            (Ray::new(center.origin, dir), cfg.weight(angle_deg))
        })
        .collect()
}

/// `sum_i w_i ||f(center) - f(ray_i)||`, with gradients for both ends.
pub fn ray_bundle_loss<T: Scalar>(
    center_pred: ArrayView1<T>,
    bundle_preds: ArrayView2<T>,
    weights: &[f64],
) -> Result<(f64, Array1<T>, Array2<T>)> {
    if bundle_preds.nrows() != weights.len() || bundle_preds.ncols() != center_pred.len() {
        return Err(Error::ShapeMismatch(format!(
            "bundle {:?}, {} weights, center of {}",
            bundle_preds.dim(),
            weights.len(),
            center_pred.len()
        )));
    }
    let dims = center_pred.len();
    let mut value = 0.0;
    let mut g_center = vec![0.0f64; dims];
    let mut g_bundle = Array2::zeros(bundle_preds.raw_dim());
    for ((row, &w), mut g_row) in bundle_preds.rows().into_iter().zip(weights).zip(g_bundle.rows_mut()) {
        let diff: Vec<f64> = center_pred
            .iter()
            .zip(row.iter())
            .map(|(&c, &b)| c.to_f64() - b.to_f64())
            .collect();
        let norm = diff.iter().map(|d| d * d).sum::<f64>().sqrt();
        value += w * norm;
        if norm > 0.0 {
            for k in 0..dims {
                let g = w * diff[k] / norm;
                g_center[k] += g;
                g_row[k] = T::from_f64(-g);
            }
        }
    }
    let g_center = Array1::from_iter(g_center.into_iter().map(T::from_f64));
    Ok((value, g_center, g_bundle))
}
