//! Camera poses for the render and refocus commands: inline flags, pose
//! files and interpolated paths between two training views.
//!
//! A pose file lists `[[pose]]` tables:
//!
//! ```toml
//! [[pose]]
//! position = [0.0, 0.0, 0.0]
//! look_at = [0.0, 0.0, 2.0]      # or rotation = [[...], [...], [...]] (camera-to-world, row-major)
//! focal_px = 32.0                # optional, like width and height
//! ```

use std::path::Path;

use nalgebra::{Rotation3, UnitQuaternion};
use nelf_core::checkpoint::CameraDefaults;
use nelf_core::geometry::{look_rotation, Mat3};
use nelf_core::{CameraPose, Vec3};
use serde::Deserialize;

use crate::error::CliError;

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoseSpec {
    pub position: [f64; 3],
    pub rotation: Option<[[f64; 3]; 3]>,
    pub look_at: Option<[f64; 3]>,
    pub focal_px: Option<f64>,
    pub width: Option<usize>,
    pub height: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PoseFile {
    pose: Vec<PoseSpec>,
}

/// Intrinsics used where a pose leaves them out.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Intrinsics {
    pub focal_px: Option<f64>,
    pub width: Option<usize>,
    pub height: Option<usize>,
}

impl Intrinsics {
    pub fn from_defaults(d: Option<CameraDefaults>) -> Self {
        Self {
            focal_px: d.map(|c| c.focal_px),
            width: d.map(|c| c.width as usize),
            height: d.map(|c| c.height as usize),
        }
    }

    /// `self` where set, otherwise `fallback`.
    pub fn or(self, fallback: Self) -> Self {
        Self {
            focal_px: self.focal_px.or(fallback.focal_px),
            width: self.width.or(fallback.width),
            height: self.height.or(fallback.height),
        }
    }
}

fn required<T>(v: Option<T>, name: &str) -> Result<T, CliError> {
    v.ok_or_else(|| CliError::Validation(format!("`{name}` is not given and the checkpoint has no default")))
}

impl PoseSpec {
    pub fn resolve(&self, defaults: Intrinsics) -> Result<CameraPose, CliError> {
        let position = Vec3::from(self.position);
        let rotation = match (self.rotation, self.look_at) {
            (Some(_), Some(_)) => {
                return Err(CliError::Validation("give either `rotation` or `look_at`, not both".into()))
            }
            (Some(r), None) => Mat3::from_fn(|i, j| r[i][j]),
            (None, Some(target)) => {
                let dir = Vec3::from(target) - position;
                if !(dir.norm() > 0.0) {
                    return Err(CliError::Validation("`look_at` coincides with `position`".into()));
                }
                look_rotation(&dir.normalize())
            }
            (None, None) => Mat3::identity(),
        };
        let k = Intrinsics {
            focal_px: self.focal_px,
            width: self.width,
            height: self.height,
        }
        .or(defaults);
        let (w, h) = (required(k.width, "width")?, required(k.height, "height")?);
        let pose = CameraPose::new(
            position,
            rotation,
            required(k.focal_px, "focal_px")?,
            (w as f64 / 2.0, h as f64 / 2.0),
            w,
            h,
        )?;
        Ok(pose)
    }
}

pub fn load_pose_file(path: &Path, defaults: Intrinsics) -> Result<Vec<CameraPose>, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let file: PoseFile =
        toml::from_str(&text).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
    if file.pose.is_empty() {
        return Err(CliError::Validation(format!("{}: no [[pose]] entries", path.display())));
    }
    file.pose.iter().map(|p| p.resolve(defaults)).collect()
}

/// Parses `a,b,c,...` into exactly `N` numbers.
pub fn parse_list<const N: usize>(text: &str) -> Result<[f64; N], String> {
    let parts: Vec<f64> = text
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| format!("`{p}`: {e}")))
        .collect::<Result<_, _>>()?;
    parts
        .try_into()
        .map_err(|v: Vec<f64>| format!("expected {N} comma-separated numbers, got {}", v.len()))
}

/// `frames` poses from `a` to `b`: positions and focal lengths linearly,
/// orientations by slerp. One frame gives `a`.
pub fn interpolate_path(a: &CameraPose, b: &CameraPose, frames: usize) -> Vec<CameraPose> {
    let qa = UnitQuaternion::from_rotation_matrix(&Rotation3::from_matrix_unchecked(a.rotation));
    let qb = UnitQuaternion::from_rotation_matrix(&Rotation3::from_matrix_unchecked(b.rotation));
    (0..frames)
        .map(|k| {
            if k == 0 {
                return a.clone();
            }
            if k + 1 == frames {
                return CameraPose {
                    width: a.width,
                    height: a.height,
                    principal_point: a.principal_point,
                    ..b.clone()
                };
            }
            let t = k as f64 / (frames - 1) as f64;
            let q = qa.slerp(&qb, t);
            CameraPose {
                position: a.position.lerp(&b.position, t),
                rotation: *q.to_rotation_matrix().matrix(),
                focal_px: a.focal_px + t * (b.focal_px - a.focal_px),
                ..a.clone()
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn defaults() -> Intrinsics {
        Intrinsics {
            focal_px: Some(32.0),
            width: Some(16),
            height: Some(8),
        }
    }

    #[test]
    fn spec_defaults_and_look_at() {
        let p = PoseSpec {
            position: [1.0, 0.0, 0.0],
            look_at: Some([1.0, 0.0, 5.0]),
            ..Default::default()
        }
        .resolve(defaults())
        .unwrap();
        assert_eq!((p.width, p.height, p.focal_px), (16, 8, 32.0));
        assert!((p.forward() - Vec3::z()).norm() < 1e-15);
    }

    #[test]
    fn missing_intrinsics_rejected() {
        let none = Intrinsics {
            focal_px: None,
            width: None,
            height: None,
        };
        assert!(matches!(PoseSpec::default().resolve(none), Err(CliError::Validation(_))));
    }

    #[test]
    fn list_parsing() {
        assert_eq!(parse_list::<3>("1, 2,3.5").unwrap(), [1.0, 2.0, 3.5]);
        assert!(parse_list::<3>("1,2").is_err());
        assert!(parse_list::<2>("1,x").is_err());
    }

    #[test]
    fn path_endpoints_and_midpoint() {
        let a = CameraPose::axis_aligned(Vec3::zeros(), 32.0, 16, 16);
        let mut b = CameraPose::axis_aligned(Vec3::new(1.0, 0.0, 0.0), 40.0, 16, 16);
        b.rotation = look_rotation(&Vec3::new(0.2, 0.0, 1.0).normalize());
        let one = interpolate_path(&a, &b, 1);
        assert_eq!(one, vec![a.clone()]);
        let path = interpolate_path(&a, &b, 5);
        assert_eq!(path[0], a);
        assert_eq!(path[4], b);
        assert!((path[2].position - Vec3::new(0.5, 0.0, 0.0)).norm() < 1e-15);
        assert_eq!(path[2].focal_px, 36.0);
        let half = path[2].forward().angle(&Vec3::z());
        let full = b.forward().angle(&Vec3::z());
        assert!((half - full / 2.0).abs() < 1e-12);
    }
}
