//! Analytic light fields: textured planes facing a planar camera rig.
//!
//! Cameras sit on `z = 0` looking down `+z`; every plane is parallel to it at
//! `depth > 0`. A ray takes the color of the nearest plane it hits inside that
//! plane's extent, else the background.
//!
//! Textures are evaluated in world `(x, y)` at the hit point. Checker cell
//! `(i, j)` covers `[i*cell, (i+1)*cell) x [j*cell, (j+1)*cell)` and shows
//! `color_a` when `i + j` is even, so cell `(0, 0)` is `color_a`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::image_io::save_image;
use crate::data::manifest::{
    load_manifest, write_manifest, ColorSpace, DatasetManifest, GridDims, ManifestDoc, RigSpec, SceneHints,
    ViewEntry, MANIFEST_FILE, MANIFEST_VERSION,
};
use crate::error::{Error, Result};
use crate::geometry::{pixel_center_ray, CameraPose, Ray, Vec3};
use crate::image::ImageBuffer;

pub const BUILTIN_SCENES: [&str; 2] = ["two-plane-checker", "sine-card"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Texture {
    Checker {
        cell: f64,
        color_a: [f32; 3],
        color_b: [f32; 3],
    },
    /// `w = 0.5 + 0.5 cos(2 pi (fx x + fy y) + phase)`, color `w a + (1 - w) b`.
    Sinusoid {
        freq: [f64; 2],
        phase: f64,
        color_a: [f32; 3],
        color_b: [f32; 3],
    },
}

impl Texture {
    pub fn color_at(&self, x: f64, y: f64) -> [f32; 3] {
        match self {
            Texture::Checker { cell, color_a, color_b } => {
                let i = (x / cell).floor() as i64;
                let j = (y / cell).floor() as i64;
                if (i + j).rem_euclid(2) == 0 {
                    *color_a
                } else {
                    *color_b
                }
            }
            Texture::Sinusoid {
                freq,
                phase,
                color_a,
                color_b,
            } => {
                let w = 0.5 + 0.5 * (std::f64::consts::TAU * (freq[0] * x + freq[1] * y) + phase).cos();
                std::array::from_fn(|c| (w * color_a[c] as f64 + (1.0 - w) * color_b[c] as f64) as f32)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TexturedPlane {
    pub depth: f64,
    /// `[x_min, x_max, y_min, y_max]`.
    pub extent: [f64; 4],
    pub texture: Texture,
}

impl TexturedPlane {
    fn contains(&self, p: &Vec3) -> bool {
        let [x0, x1, y0, y1] = self.extent;
        p.x >= x0 && p.x <= x1 && p.y >= y0 && p.y <= y1
    }
}

/// Planes in front of the camera plane. `st_depth` is the suggested depth of
/// the st-plane and must not exceed the nearest plane depth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticScene {
    pub planes: Vec<TexturedPlane>,
    pub background: [f32; 3],
    pub st_depth: f64,
}

impl SyntheticScene {
    pub fn validate(&self) -> Result<()> {
        let bad = |reason: String| Err(Error::InvalidHyperparam { name: "scene", reason });
        for (i, p) in self.planes.iter().enumerate() {
            if !(p.depth.is_finite() && p.depth > 0.0) {
                return bad(format!("planes[{i}].depth must be positive, got {}", p.depth));
            }
            let [x0, x1, y0, y1] = p.extent;
            if !(x1 > x0 && y1 > y0) {
                return bad(format!("planes[{i}].extent must have positive size"));
            }
            if let Texture::Checker { cell, .. } = p.texture {
                if !(cell > 0.0) {
                    return bad(format!("planes[{i}].texture.cell must be positive"));
                }
            }
        }
        let nearest = self.planes.iter().map(|p| p.depth).fold(f64::INFINITY, f64::min);
        if !(self.st_depth > 0.0 && self.st_depth <= nearest) {
            return bad(format!(
                "st_depth {} must lie in (0, nearest plane depth {nearest}]",
                self.st_depth
            ));
        }
        Ok(())
    }

    pub fn from_toml(text: &str, path: &Path) -> Result<Self> {
        let scene: Self = toml::from_str(text).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        scene.validate()?;
        Ok(scene)
    }
}

pub fn builtin_scene(name: &str) -> Option<SyntheticScene> {
    const WHITE: [f32; 3] = [1.0, 1.0, 1.0];
    match name {
        "two-plane-checker" => Some(SyntheticScene {
            planes: vec![
                TexturedPlane {
                    depth: 2.0,
                    extent: [-0.5, 0.5, -0.5, 0.5],
                    texture: Texture::Checker {
                        cell: 0.25,
                        color_a: WHITE,
                        color_b: [0.85, 0.15, 0.1],
                    },
                },
                TexturedPlane {
                    depth: 4.0,
                    extent: [-4.0, 4.0, -4.0, 4.0],
                    texture: Texture::Checker {
                        cell: 0.5,
                        color_a: [0.1, 0.2, 0.7],
                        color_b: [0.95, 0.85, 0.3],
                    },
                },
            ],
            background: [0.0, 0.0, 0.0],
            st_depth: 2.0,
        }),
        "sine-card" => Some(SyntheticScene {
            planes: vec![TexturedPlane {
                depth: 3.0,
                extent: [-1.0, 1.0, -1.0, 1.0],
                texture: Texture::Sinusoid {
                    freq: [1.5, 0.75],
                    phase: 0.0,
                    color_a: [0.9, 0.6, 0.2],
                    color_b: [0.1, 0.3, 0.6],
                },
            }],
            background: [0.2, 0.2, 0.2],
            st_depth: 3.0,
        }),
        _ => None,
    }
}

pub fn ray_color_oracle(scene: &SyntheticScene, ray: &Ray) -> [f32; 3] {
    let mut best: Option<(f64, [f32; 3])> = None;
    for plane in &scene.planes {
        let Some(t) = ray.hit_z(plane.depth) else { continue };
        if t <= 0.0 || best.is_some_and(|(bt, _)| t >= bt) {
            continue;
        }
        let p = ray.at(t);
        if plane.contains(&p) {
            best = Some((t, plane.texture.color_at(p.x, p.y)));
        }
    }
    best.map_or(scene.background, |(_, c)| c)
}

fn render_pose(pose: &CameraPose, mut color: impl FnMut(&Ray) -> [f32; 3]) -> ImageBuffer {
    ImageBuffer::from_fn(pose.width, pose.height, |x, y| color(&pixel_center_ray(pose, x, y)))
}

/// Ground-truth view from `pose`, one oracle query per pixel center.
pub fn oracle_view(scene: &SyntheticScene, pose: &CameraPose) -> ImageBuffer {
    render_pose(pose, |r| ray_color_oracle(scene, r))
}

/// A planar rectified camera grid centered on the optical axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthRig {
    pub rows: usize,
    pub cols: usize,
    pub width: usize,
    pub height: usize,
    pub spacing: f64,
    pub focal_px: f64,
}

impl SynthRig {
    fn spec(&self) -> RigSpec {
        RigSpec {
            spacing: self.spacing,
            focal_px: self.focal_px,
            width: self.width,
            height: self.height,
            origin: [0.0; 3],
        }
    }
}

/// Pose of grid camera `(row, col)`; fractional indices give in-between views.
pub fn rig_pose(rig: &SynthRig, row: f64, col: f64) -> CameraPose {
    let x = (col - (rig.cols as f64 - 1.0) / 2.0) * rig.spacing;
    let y = (row - (rig.rows as f64 - 1.0) / 2.0) * rig.spacing;
    CameraPose::axis_aligned(Vec3::new(x, y, 0.0), rig.focal_px, rig.width, rig.height)
}

/// Renders every rig view to `out_dir/images/view_RR_CC.png` and writes the
/// manifest.
pub fn generate_synthetic_dataset(scene: &SyntheticScene, rig: &SynthRig, out_dir: &Path) -> Result<DatasetManifest> {
    scene.validate()?;
    if rig.rows == 0 || rig.cols == 0 || rig.width == 0 || rig.height == 0 || !(rig.focal_px > 0.0) {
        return Err(Error::InvalidHyperparam {
            name: "rig",
            reason: "grid and image dimensions and focal length must be positive".into(),
        });
    }
    let images = out_dir.join("images");
    std::fs::create_dir_all(&images).map_err(|e| Error::io(&images, e))?;
    let mut views = Vec::with_capacity(rig.rows * rig.cols);
    for row in 0..rig.rows {
        for col in 0..rig.cols {
            let rel = format!("images/view_{row:02}_{col:02}.png");
            let img = oracle_view(scene, &rig_pose(rig, row as f64, col as f64));
            save_image(&img, &out_dir.join(&rel))?;
            views.push(ViewEntry {
                image: rel,
                row,
                col,
                position: None,
                rotation: None,
                focal_px: None,
                principal_point: None,
                width: None,
                height: None,
            });
        }
    }
    let doc = ManifestDoc {
        version: MANIFEST_VERSION,
        color_space: ColorSpace::SrgbAsIs,
        grid: Some(GridDims {
            rows: rig.rows,
            cols: rig.cols,
        }),
        rig: Some(rig.spec()),
        scene: SceneHints {
            st_depth: Some(scene.st_depth),
        },
        views,
    };
    write_manifest(&doc, &out_dir.join(MANIFEST_FILE))?;
    load_manifest(out_dir)
}
