//! Training: sample collection, virtual cameras, the combined objective and
//! the optimization loop.
//!
//! Every iteration draws its randomness from per-iteration streams
//! (`stream_rng(seed, iteration)` for virtual cameras and bundles,
//! `stream_rng(shuffle_seed, epoch)` for ray permutations), so a run resumed
//! from a checkpoint continues bit for bit.

mod config;
mod dataset;
mod hull;
mod objective;
mod session;
mod virtual_camera;

pub use config::{Ablation, EmbeddingConfig, NetworkShape, Seeds, TrainConfig};
pub use dataset::{build_training_set, TrainingSet};
pub use hull::CameraHull;
pub use objective::{evaluate_objective, BundleGroup, LossBreakdown, StepBatch};
pub use session::{train, StepReport, TrainOptions, TrainOutcome, Trainer, EVAL_LOG_FILE, LOG_FILE, LOG_HEADER};
pub use virtual_camera::{sample_virtual_camera, VirtualCamera};
