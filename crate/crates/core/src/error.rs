use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid hyperparameter `{name}`: {reason}")]
    InvalidHyperparam { name: &'static str, reason: String },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("tape does not match parameters or batch: {0}")]
    StaleTape(String),

    #[error("non-finite gradient in {0}")]
    NonFiniteGradient(String),

    #[error("non-finite loss at iteration {iteration}: lp={lp} ls={ls} lr={lr}")]
    NonFiniteLoss {
        iteration: u64,
        lp: f64,
        ls: f64,
        lr: f64,
    },

    #[error("ray is parallel to the light slabs (|d.z| = {0:e})")]
    ParallelRay(f64),

    #[error("size {0} is not a power of two")]
    NonPowerOfTwo(usize),

    #[error("invalid camera pose: {0}")]
    InvalidPose(String),

    #[error("parse error in {path}: {message}")]
    Parse { path: PathBuf, message: String },

    #[error("missing file {0}")]
    MissingFile(PathBuf),

    #[error("invalid manifest: {0}")]
    InvalidManifest(String),

    #[error("invalid stride {stride} for a {rows}x{cols} grid")]
    InvalidStride { stride: usize, rows: usize, cols: usize },

    #[error("images have inconsistent resolution: {0}")]
    InconsistentResolution(String),

    #[error("dataset format error in {path}: {message}")]
    DatasetFormat { path: PathBuf, message: String },

    #[error("image of {width}x{height} is smaller than the {min}x{min} SSIM window")]
    TooSmall { width: usize, height: usize, min: usize },

    #[error("empty test split")]
    EmptySplit,

    #[error("focus plane coincides with or lies behind the camera plane (focus z = {focus}, camera z = {camera})")]
    DegenerateFocus { focus: f64, camera: f64 },

    #[error("checkpoint format error: {0}")]
    Checkpoint(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("image codec error on {path}: {message}")]
    Image { path: PathBuf, message: String },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by invalid user input (configs, manifests, arguments).
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::InvalidHyperparam { .. }
                | Error::Parse { .. }
                | Error::InvalidManifest(_)
                | Error::InvalidStride { .. }
                | Error::InvalidPose(_)
                | Error::NonPowerOfTwo(_)
                | Error::DatasetFormat { .. }
                | Error::InconsistentResolution(_)
                | Error::EmptySplit
                | Error::DegenerateFocus { .. }
                | Error::TooSmall { .. }
        )
    }

    /// True for filesystem and codec failures.
    pub fn is_io(&self) -> bool {
        matches!(
            self,
            Error::Io { .. } | Error::MissingFile(_) | Error::Image { .. } | Error::Checkpoint(_)
        )
    }
}
