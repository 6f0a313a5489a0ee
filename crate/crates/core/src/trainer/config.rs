use serde::{Deserialize, Serialize};

use crate::embedding::{DEFAULT_FEATURES, DEFAULT_SIGMA};
use crate::error::{Error, Result};
use crate::geometry::NormalizationMode;
use crate::losses::{BundleConfig, LossWeights};
use crate::network::MlpConfig;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmbeddingConfig {
    pub sigma: f64,
    /// Number of frequency rows `L`; the network input is `2L` wide.
    pub features: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkShape {
    pub hidden_layers: usize,
    pub hidden_width: usize,
}

/// Four independent random streams.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Seeds {
    /// Embedding matrix and network initialization.
    pub init: u64,
    /// Epoch permutations of the training rays.
    pub shuffle: u64,
    pub virtual_camera: u64,
    pub bundle: u64,
}

impl Seeds {
    pub fn to_array(self) -> [u64; 4] {
        [self.init, self.shuffle, self.virtual_camera, self.bundle]
    }

    pub fn from_array(a: [u64; 4]) -> Self {
        Self {
            init: a[0],
            shuffle: a[1],
            virtual_camera: a[2],
            bundle: a[3],
        }
    }
}

impl Default for Seeds {
    fn default() -> Self {
        Self::from_array([1, 2, 3, 4])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Ablation {
    /// Drop the Fourier sparsity term.
    NoFsl,
    /// Drop the ray bundle term.
    NoRbl,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub iterations: u64,
    pub weights: LossWeights,
    pub bundle: BundleConfig,
    /// Bundle center rays per iteration: half from the photometric batch,
    /// half cast from the virtual camera.
    pub bundle_rays: usize,
    /// Side of the square virtual view used by the spectral loss (power of two).
    pub loss_resolution: usize,
    /// Compare the virtual view only with this many nearest training cameras.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fsl_neighbors: Option<usize>,
    pub base_lr: f64,
    /// Iterations between learning-rate halvings.
    pub lr_half_life: u64,
    pub embedding: EmbeddingConfig,
    pub network: NetworkShape,
    pub seeds: Seeds,
    /// Depth of the st-plane; falls back to the dataset's hint.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub st_depth: Option<f64>,
    /// Iterations between checkpoints; 0 writes only the final one.
    pub checkpoint_interval: u64,
    /// Iterations between metric-log rows.
    pub log_interval: u64,
    /// Iterations between training-view PSNR checks; 0 disables them.
    pub eval_interval: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ablation: Option<Ablation>,
    /// How ray coordinates are scaled into the unit box.
    pub normalization: NormalizationMode,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self::paper()
    }
}

impl TrainConfig {
    /// Full-scale settings: 32768-ray batches for 200k iterations, sigma 16,
    /// L = 256, six hidden layers of 256, theta 1.5 degrees with 16 rays per
    /// bundle, learning rate 1e-3 halved every 20k iterations.
    pub fn paper() -> Self {
        Self {
            batch_size: 32_768,
            iterations: 200_000,
            weights: LossWeights::default(),
            bundle: BundleConfig::default(),
            bundle_rays: 1024,
            loss_resolution: 64,
            fsl_neighbors: None,
            base_lr: 1e-3,
            lr_half_life: 20_000,
            embedding: EmbeddingConfig {
                sigma: DEFAULT_SIGMA,
                features: DEFAULT_FEATURES,
            },
            network: NetworkShape {
                hidden_layers: 6,
                hidden_width: 256,
            },
            seeds: Seeds::default(),
            st_depth: None,
            checkpoint_interval: 10_000,
            log_interval: 100,
            eval_interval: 0,
            ablation: None,
            normalization: NormalizationMode::PerAxis,
        }
    }

    /// Small settings that train in minutes on a CPU: 4096-ray batches,
    /// sigma 1 with L = 64, three hidden layers of 64, regularizer weights
    /// rescaled to this batch and loss resolution, and one shared scale for
    /// all four coordinates.
    pub fn desk() -> Self {
        Self {
            batch_size: 4096,
            iterations: 20_000,
            bundle_rays: 256,
            loss_resolution: 32,
            lr_half_life: 4_000,
            weights: LossWeights {
                lambda_s: 0.01,
                lambda_r: 0.1,
            },
            embedding: EmbeddingConfig {
                sigma: 1.0,
                features: 64,
            },
            network: NetworkShape {
                hidden_layers: 3,
                hidden_width: 64,
            },
            checkpoint_interval: 0,
            log_interval: 100,
            normalization: NormalizationMode::Shared,
            ..Self::paper()
        }
    }

    pub fn preset(name: &str) -> Option<Self> {
        match name {
            "paper" => Some(Self::paper()),
            "desk" => Some(Self::desk()),
            _ => None,
        }
    }

    pub fn with_ablation(mut self, ablation: Ablation) -> Self {
        match ablation {
            Ablation::NoFsl => self.weights.lambda_s = 0.0,
            Ablation::NoRbl => self.weights.lambda_r = 0.0,
        }
        self.ablation = Some(ablation);
        self
    }

    pub fn mlp_config(&self) -> MlpConfig {
        MlpConfig {
            input_dim: 2 * self.embedding.features,
            hidden_layers: self.network.hidden_layers,
            hidden_width: self.network.hidden_width,
            output_dim: 3,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &'static str, v: u64| {
            if v == 0 {
                Err(Error::InvalidHyperparam {
                    name,
                    reason: "must be positive".into(),
                })
            } else {
                Ok(())
            }
        };
        positive("batch_size", self.batch_size as u64)?;
        positive("bundle_rays", self.bundle_rays as u64)?;
        positive("lr_half_life", self.lr_half_life)?;
        positive("log_interval", self.log_interval)?;
        positive("embedding.features", self.embedding.features as u64)?;
        positive("network.hidden_width", self.network.hidden_width as u64)?;
        if !self.loss_resolution.is_power_of_two() {
            return Err(Error::InvalidHyperparam {
                name: "loss_resolution",
                reason: format!("must be a power of two, got {}", self.loss_resolution),
            });
        }
        if !(self.base_lr.is_finite() && self.base_lr > 0.0) {
            return Err(Error::InvalidHyperparam {
                name: "base_lr",
                reason: format!("must be positive, got {}", self.base_lr),
            });
        }
        if !(self.embedding.sigma.is_finite() && self.embedding.sigma > 1e-9) {
            return Err(Error::InvalidHyperparam {
                name: "embedding.sigma",
                reason: format!("must be positive, got {}", self.embedding.sigma),
            });
        }
        if self.fsl_neighbors == Some(0) {
            return Err(Error::InvalidHyperparam {
                name: "fsl_neighbors",
                reason: "must be at least 1 when set".into(),
            });
        }
        if let Some(z) = self.st_depth {
            if !z.is_finite() {
                return Err(Error::InvalidHyperparam {
                    name: "st_depth",
                    reason: "must be finite".into(),
                });
            }
        }
        self.weights.validate()?;
        self.bundle.validate()
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn from_toml(text: &str) -> std::result::Result<Self, toml::de::Error> {
        toml::from_str(text)
    }
}
