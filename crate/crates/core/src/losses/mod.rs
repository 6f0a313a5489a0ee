//! Training losses. Each returns its value and the gradient with respect to
//! the network outputs it consumed.

mod bundle;
mod fft;
mod photometric;
mod spectral;

pub use bundle::{ray_bundle_loss, sample_bundle, BundleConfig};
pub use fft::{fft2d, fft2d_complex, fft_in_place, ifft2d_unnormalized};
pub use photometric::photometric_loss;
pub use spectral::{fourier_sparsity_loss, magnitude_spectrum, SpectrumRef};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Weights of the spectral and bundle terms in the total loss.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossWeights {
    pub lambda_s: f64,
    pub lambda_r: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        Self {
            lambda_s: 1.92,
            lambda_r: 0.074,
        }
    }
}

impl LossWeights {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("lambda_s", self.lambda_s), ("lambda_r", self.lambda_r)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::InvalidHyperparam {
                    name,
                    reason: format!("must be a non-negative number, got {v}"),
                });
            }
        }
        Ok(())
    }
}

/// `lp + lambda_s * ls + lambda_r * lr`.
pub fn total_loss(lp: f64, ls: f64, lr: f64, weights: &LossWeights) -> f64 {
    lp + weights.lambda_s * ls + weights.lambda_r * lr
}
