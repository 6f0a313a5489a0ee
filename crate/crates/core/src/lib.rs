//! Neural 4D light fields.
//!
//! A scene observed by a planar camera rig is modelled as a function from
//! two-plane ray coordinates `(u, v, s, t)` to RGB. The function is a ReLU
//! MLP fed with random Gaussian Fourier features of the coordinate, trained
//! with a photometric loss, a spectral-magnitude loss on rendered virtual
//! views and an angular smoothness loss over ray bundles. Rendering a novel
//! view is one network evaluation per pixel.
//!
//! Module map:
//! - [`geometry`]: pinhole cameras, rays and the two-plane parameterization
//! - [`embedding`]: Fourier feature embedding of ray coordinates
//! - [`network`]: the MLP, reverse-mode gradients and Adam
//! - [`losses`]: photometric, Fourier sparsity (with FFT) and ray-bundle losses
//! - [`trainer`]: training set construction, virtual cameras and the training loop
//! - [`renderer`]: direct-evaluation rendering and synthetic-aperture refocusing
//! - [`data`]: manifests, synthetic analytic scenes and image I/O
//! - [`metrics`]: PSNR, SSIM and test-split evaluation

pub mod checkpoint;
pub mod data;
pub mod embedding;
pub mod error;
pub mod geometry;
pub mod image;
pub mod losses;
pub mod metrics;
pub mod model;
pub mod network;
pub mod renderer;
pub mod rng;
pub mod scalar;
pub mod trainer;

pub use error::{Error, Result};
pub use geometry::{CameraPose, NormalizationBox, NormalizationMode, PlanePair, Ray, RayCoord4D, Vec3};
pub use image::ImageBuffer;
pub use model::LightFieldNetwork;
pub use scalar::Scalar;
