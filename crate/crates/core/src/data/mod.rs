//! Datasets: manifests for grid light fields, analytic synthetic scenes and
//! image files.

mod image_io;
mod manifest;
mod synthetic;

pub use image_io::{load_image, save_image, to_u8};
pub use manifest::{
    load_manifest, subsample_grid, write_manifest, ColorSpace, DatasetManifest, GridDims, ManifestDoc,
    RigSpec, SceneHints, View, ViewEntry, MANIFEST_FILE, MANIFEST_VERSION,
};
pub use synthetic::{
    builtin_scene, generate_synthetic_dataset, oracle_view, ray_color_oracle, rig_pose, SynthRig,
    SyntheticScene, Texture, TexturedPlane, BUILTIN_SCENES,
};
