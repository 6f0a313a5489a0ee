//! Dataset manifests.
//!
//! A dataset directory holds `manifest.toml` and the images it references,
//! conventionally `images/view_{row:02}_{col:02}.png`. Schema (version 1):
//!
//! ```toml
//! version = 1
//! color_space = "srgb-as-is"      # or "linear"
//!
//! [grid]                          # optional; when present rows * cols == number of views
//! rows = 5
//! cols = 5
//!
//! [rig]                           # optional defaults for views without an explicit pose
//! spacing = 0.1                   # distance between neighboring cameras
//! focal_px = 32.0
//! width = 32
//! height = 32
//! origin = [0.0, 0.0, 0.0]        # rig center
//!
//! [scene]                         # optional hints
//! st_depth = 3.0                  # z of the st-plane
//!
//! [[views]]
//! image = "images/view_00_00.png"
//! row = 0
//! col = 0
//! # optional per-view overrides:
//! # position = [x, y, z]
//! # rotation = [[r00, r01, r02], [r10, r11, r12], [r20, r21, r22]]   # camera-to-world, row-major
//! # focal_px = 32.0
//! # principal_point = [16.0, 16.0]
//! ```
//!
//! A view without `position` is placed at
//! `origin + ((col - (cols-1)/2) * spacing, (row - (rows-1)/2) * spacing, 0)`.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{CameraPose, Mat3, Vec3};

pub const MANIFEST_FILE: &str = "manifest.toml";
pub const MANIFEST_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum ColorSpace {
    /// Pixel values used as stored.
    #[default]
    #[serde(rename = "srgb-as-is")]
    SrgbAsIs,
    #[serde(rename = "linear")]
    Linear,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridDims {
    pub rows: usize,
    pub cols: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RigSpec {
    pub spacing: f64,
    pub focal_px: f64,
    pub width: usize,
    pub height: usize,
    #[serde(default)]
    pub origin: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct SceneHints {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub st_depth: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ViewEntry {
    pub image: String,
    pub row: usize,
    pub col: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub position: Option<[f64; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rotation: Option<[[f64; 3]; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub focal_px: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub principal_point: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub width: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub height: Option<usize>,
}

/// The manifest file as written on disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestDoc {
    pub version: u32,
    #[serde(default)]
    pub color_space: ColorSpace,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridDims>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rig: Option<RigSpec>,
    #[serde(default)]
    pub scene: SceneHints,
    pub views: Vec<ViewEntry>,
}

/// One view with its resolved pose and absolute image path.
#[derive(Debug, Clone, PartialEq)]
pub struct View {
    pub id: String,
    pub row: usize,
    pub col: usize,
    pub image: PathBuf,
    pub pose: CameraPose,
}

/// A validated manifest.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetManifest {
    pub dir: PathBuf,
    pub doc: ManifestDoc,
    pub views: Vec<View>,
}

impl DatasetManifest {
    pub fn st_depth(&self) -> Option<f64> {
        self.doc.scene.st_depth
    }

    pub fn color_space(&self) -> ColorSpace {
        self.doc.color_space
    }

    /// Validates `doc` relative to `dir` and resolves every pose.
    pub fn from_doc(dir: &Path, doc: ManifestDoc) -> Result<Self> {
        if doc.version != MANIFEST_VERSION {
            return Err(Error::InvalidManifest(format!(
                "version: unsupported manifest version {} (expected {MANIFEST_VERSION})",
                doc.version
            )));
        }
        if doc.views.is_empty() {
            return Err(Error::InvalidManifest("views: at least one view is required".into()));
        }
        if let Some(g) = doc.grid {
            if g.rows * g.cols != doc.views.len() {
                return Err(Error::InvalidManifest(format!(
                    "grid: {}x{} grid declares {} views but {} are listed",
                    g.rows,
                    g.cols,
                    g.rows * g.cols,
                    doc.views.len()
                )));
            }
            for (i, v) in doc.views.iter().enumerate() {
                if v.row >= g.rows || v.col >= g.cols {
                    return Err(Error::InvalidManifest(format!(
                        "views[{i}]: row/col ({}, {}) outside the {}x{} grid",
                        v.row, v.col, g.rows, g.cols
                    )));
                }
            }
        }
        if let Some(rig) = &doc.rig {
            if !(rig.spacing.is_finite() && rig.focal_px > 0.0 && rig.width > 0 && rig.height > 0) {
                return Err(Error::InvalidManifest(
                    "rig: spacing must be finite, focal_px, width and height positive".into(),
                ));
            }
        }
        let views = doc
            .views
            .iter()
            .enumerate()
            .map(|(i, v)| resolve_view(dir, &doc, i, v))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            dir: dir.to_path_buf(),
            doc,
            views,
        })
    }

    /// Keeps only the listed views (by index), dropping the grid declaration
    /// unless `grid` is given.
    fn select(&self, indices: &[usize], grid: Option<GridDims>) -> Self {
        let mut doc = self.doc.clone();
        doc.views = indices.iter().map(|&i| self.doc.views[i].clone()).collect();
        doc.grid = grid;
        Self {
            dir: self.dir.clone(),
            doc,
            views: indices.iter().map(|&i| self.views[i].clone()).collect(),
        }
    }
}

fn resolve_view(dir: &Path, doc: &ManifestDoc, i: usize, v: &ViewEntry) -> Result<View> {
    let image = dir.join(&v.image);
    if !image.is_file() {
        return Err(Error::MissingFile(image));
    }
    let key = |k: &str| format!("views[{i}].{k}");
    let rig = doc.rig.as_ref();
    let position = match (v.position, rig, doc.grid) {
        (Some(p), _, _) => Vec3::from(p),
        (None, Some(rig), Some(g)) => rig_position(rig, g, v.row, v.col),
        (None, Some(rig), None) => Vec3::from(rig.origin),
        (None, None, _) => {
            return Err(Error::InvalidPose(format!(
                "{}: no position given and no [rig] to derive one",
                key("position")
            )))
        }
    };
    let rotation = match v.rotation {
        Some(r) => Mat3::new(
            r[0][0], r[0][1], r[0][2], r[1][0], r[1][1], r[1][2], r[2][0], r[2][1], r[2][2],
        ),
        None => Mat3::identity(),
    };
    let focal_px = v.focal_px.or(rig.map(|r| r.focal_px)).ok_or_else(|| {
        Error::InvalidPose(format!("{}: no focal length and no [rig] default", key("focal_px")))
    })?;
    let (width, height) = match (v.width.or(rig.map(|r| r.width)), v.height.or(rig.map(|r| r.height))) {
        (Some(w), Some(h)) => (w, h),
        _ => {
            let (w, h) = image::image_dimensions(&image).map_err(|e| Error::DatasetFormat {
                path: image.clone(),
                message: e.to_string(),
            })?;
            (w as usize, h as usize)
        }
    };
    let principal_point = v
        .principal_point
        .map(|p| (p[0], p[1]))
        .unwrap_or((width as f64 / 2.0, height as f64 / 2.0));
    let pose = CameraPose::new(position, rotation, focal_px, principal_point, width, height)
        .map_err(|e| match e {
            Error::InvalidPose(m) => Error::InvalidPose(format!("views[{i}]: {m}")),
            other => other,
        })?;
    let id = Path::new(&v.image)
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| format!("view_{:02}_{:02}", v.row, v.col));
    Ok(View {
        id,
        row: v.row,
        col: v.col,
        image,
        pose,
    })
}

fn rig_position(rig: &RigSpec, g: GridDims, row: usize, col: usize) -> Vec3 {
    let cx = (g.cols as f64 - 1.0) / 2.0;
    let cy = (g.rows as f64 - 1.0) / 2.0;
    Vec3::new(
        rig.origin[0] + (col as f64 - cx) * rig.spacing,
        rig.origin[1] + (row as f64 - cy) * rig.spacing,
        rig.origin[2],
    )
}

/// Loads `path`, which is either a manifest file or a directory containing
/// `manifest.toml`.
pub fn load_manifest(path: &Path) -> Result<DatasetManifest> {
    let file = if path.is_dir() {
        path.join(MANIFEST_FILE)
    } else {
        path.to_path_buf()
    };
    let text = std::fs::read_to_string(&file).map_err(|e| {
        if e.kind() == std::io::ErrorKind::NotFound {
            Error::MissingFile(file.clone())
        } else {
            Error::io(&file, e)
        }
    })?;
    let doc: ManifestDoc = toml::from_str(&text).map_err(|e| Error::Parse {
        path: file.clone(),
        message: e.to_string(),
    })?;
    let dir = file.parent().map(Path::to_path_buf).unwrap_or_default();
    DatasetManifest::from_doc(&dir, doc)
}

pub fn write_manifest(doc: &ManifestDoc, path: &Path) -> Result<()> {
    let text = toml::to_string_pretty(doc).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Every `stride`-th row and column of the grid becomes training data; all
/// other views become test data.
pub fn subsample_grid(manifest: &DatasetManifest, stride: usize) -> Result<(DatasetManifest, DatasetManifest)> {
    let g = manifest.doc.grid.ok_or_else(|| {
        Error::InvalidManifest("grid: subsampling needs a declared grid layout".into())
    })?;
    let bad = || Error::InvalidStride {
        stride,
        rows: g.rows,
        cols: g.cols,
    };
    if stride == 0 || (g.rows - 1) % stride != 0 || (g.cols - 1) % stride != 0 {
        return Err(bad());
    }
    let (mut train, mut test) = (Vec::new(), Vec::new());
    for (i, v) in manifest.views.iter().enumerate() {
        if v.row % stride == 0 && v.col % stride == 0 {
            train.push(i);
        } else {
            test.push(i);
        }
    }
    let train_grid = GridDims {
        rows: (g.rows - 1) / stride + 1,
        cols: (g.cols - 1) / stride + 1,
    };
    Ok((manifest.select(&train, Some(train_grid)), manifest.select(&test, None)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::save_image;
    use crate::image::ImageBuffer;
    use std::collections::HashSet;

    fn grid_doc(rows: usize, cols: usize) -> ManifestDoc {
        let views = (0..rows)
            .flat_map(|r| (0..cols).map(move |c| (r, c)))
            .map(|(row, col)| ViewEntry {
                image: format!("images/view_{row:02}_{col:02}.png"),
                row,
                col,
                position: None,
                rotation: None,
                focal_px: None,
                principal_point: None,
                width: None,
                height: None,
            })
            .collect();
        ManifestDoc {
            version: 1,
            color_space: ColorSpace::SrgbAsIs,
            grid: Some(GridDims { rows, cols }),
            rig: Some(RigSpec {
                spacing: 0.1,
                focal_px: 4.0,
                width: 2,
                height: 2,
                origin: [0.0; 3],
            }),
            scene: SceneHints { st_depth: Some(2.0) },
            views,
        }
    }

    fn write_images(dir: &Path, doc: &ManifestDoc) {
        std::fs::create_dir_all(dir.join("images")).unwrap();
        for v in &doc.views {
            save_image(&ImageBuffer::new(2, 2), &dir.join(&v.image)).unwrap();
        }
    }

    #[test]
    fn minimal_single_view() {
        let dir = tempfile::tempdir().unwrap();
        let text = r#"
version = 1
[[views]]
image = "a.png"
row = 0
col = 0
position = [0.0, 0.0, 0.0]
focal_px = 10.0
"#;
        save_image(&ImageBuffer::new(3, 2), &dir.path().join("a.png")).unwrap();
        std::fs::write(dir.path().join(MANIFEST_FILE), text).unwrap();
        let m = load_manifest(dir.path()).unwrap();
        assert_eq!(m.views.len(), 1);
        assert_eq!((m.views[0].pose.width, m.views[0].pose.height), (3, 2));
        assert_eq!(m.views[0].id, "a");
    }

    #[test]
    fn missing_image_is_named() {
        let dir = tempfile::tempdir().unwrap();
        let doc = grid_doc(1, 1);
        write_manifest(&doc, &dir.path().join(MANIFEST_FILE)).unwrap();
        match load_manifest(dir.path()) {
            Err(Error::MissingFile(p)) => assert!(p.ends_with("images/view_00_00.png")),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn count_mismatch() {
        let dir = tempfile::tempdir().unwrap();
        let mut doc = grid_doc(5, 5);
        doc.views.pop();
        write_images(dir.path(), &doc);
        write_manifest(&doc, &dir.path().join(MANIFEST_FILE)).unwrap();
        assert!(matches!(load_manifest(dir.path()), Err(Error::InvalidManifest(_))));
    }

    #[test]
    fn parse_error_and_unknown_key() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join(MANIFEST_FILE), "version = 1\nbogus = 3\nviews = []\n").unwrap();
        match load_manifest(dir.path()) {
            Err(Error::Parse { message, .. }) => assert!(message.contains("bogus"), "{message}"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rig_positions_are_centered() {
        let dir = tempfile::tempdir().unwrap();
        let doc = grid_doc(3, 3);
        write_images(dir.path(), &doc);
        let m = DatasetManifest::from_doc(dir.path(), doc).unwrap();
        assert_eq!(m.views[0].pose.position, Vec3::new(-0.1, -0.1, 0.0));
        assert_eq!(m.views[4].pose.position, Vec3::zeros());
        assert_eq!(m.views[5].pose.position, Vec3::new(0.1, 0.0, 0.0));
    }

    #[test]
    fn manifest_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let doc = grid_doc(2, 3);
        write_images(dir.path(), &doc);
        let path = dir.path().join(MANIFEST_FILE);
        write_manifest(&doc, &path).unwrap();
        let m = load_manifest(&path).unwrap();
        assert_eq!(m.doc, doc);
        write_manifest(&m.doc, &path).unwrap();
        assert_eq!(load_manifest(&path).unwrap(), m);
    }

    #[test]
    fn seventeen_grid_split() {
        let dir = tempfile::tempdir().unwrap();
        let doc = grid_doc(17, 17);
        write_images(dir.path(), &doc);
        let m = DatasetManifest::from_doc(dir.path(), doc).unwrap();
        let (train, test) = subsample_grid(&m, 4).unwrap();
        assert_eq!(train.views.len(), 25);
        assert_eq!(test.views.len(), 264);
        assert_eq!(train.doc.grid, Some(GridDims { rows: 5, cols: 5 }));
        assert!(test.doc.grid.is_none());
    }

    #[test]
    fn stride_one_selects_all() {
        let dir = tempfile::tempdir().unwrap();
        let doc = grid_doc(3, 3);
        write_images(dir.path(), &doc);
        let m = DatasetManifest::from_doc(dir.path(), doc).unwrap();
        let (train, test) = subsample_grid(&m, 1).unwrap();
        assert_eq!((train.views.len(), test.views.len()), (9, 0));
        assert!(matches!(subsample_grid(&m, 0), Err(Error::InvalidStride { .. })));
        assert!(matches!(subsample_grid(&m, 3), Err(Error::InvalidStride { .. })));
    }

    #[test]
    fn split_is_a_partition() {
        let dir = tempfile::tempdir().unwrap();
        for (rows, cols, stride) in [(5, 9, 2), (7, 7, 3), (9, 5, 4), (4, 7, 3), (1, 5, 2)] {
            let doc = grid_doc(rows, cols);
            write_images(dir.path(), &doc);
            let m = DatasetManifest::from_doc(dir.path(), doc).unwrap();
            let (train, test) = subsample_grid(&m, stride).unwrap();
            let a: HashSet<_> = train.views.iter().map(|v| (v.row, v.col)).collect();
            let b: HashSet<_> = test.views.iter().map(|v| (v.row, v.col)).collect();
            assert!(a.is_disjoint(&b));
            assert_eq!(a.len() + b.len(), rows * cols);
        }
    }
}
