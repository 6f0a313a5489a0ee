//! Pinhole cameras, rays and the two-plane light slab.
//!
//! World frame is right-handed; the identity camera sits at the origin and
//! looks down `+z` with image `x` to the right and image `y` downwards.
//! Pixel `(i, j)` has its center at `(i + 0.5, j + 0.5)`.
//!
//! A ray is indexed by where it crosses the `uv` plane (`z = z_uv`) and the
//! `st` plane (`z = z_st`). Both crossing points are mapped into `[-1, 1]^2`
//! by a [`NormalizationBox`] fitted to the training rays.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Vec3 = Vector3<f64>;
pub type Mat3 = Matrix3<f64>;

/// Rays with `|d.z|` below this are treated as parallel to the slabs.
pub const PARALLEL_EPS: f64 = 1e-9;

const ORTHONORMAL_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ray {
    pub origin: Vec3,
    /// Unit length.
    pub direction: Vec3,
}

impl Ray {
    /// Builds a ray, normalizing `direction`.
    pub fn new(origin: Vec3, direction: Vec3) -> Self {
        Self {
            origin,
            direction: direction.normalize(),
        }
    }

    pub fn at(&self, t: f64) -> Vec3 {
        self.origin + self.direction * t
    }

    /// Parameter `t` where the ray meets the plane `z = z`, if not parallel.
    pub fn hit_z(&self, z: f64) -> Option<f64> {
        if self.direction.z.abs() < PARALLEL_EPS {
            None
        } else {
            Some((z - self.origin.z) / self.direction.z)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CameraPose {
    pub position: Vec3,
    /// Camera-to-world rotation; columns are the camera axes in world space.
    pub rotation: Mat3,
    pub focal_px: f64,
    pub principal_point: (f64, f64),
    pub width: usize,
    pub height: usize,
}

impl CameraPose {
    pub fn new(
        position: Vec3,
        rotation: Mat3,
        focal_px: f64,
        principal_point: (f64, f64),
        width: usize,
        height: usize,
    ) -> Result<Self> {
        let pose = Self {
            position,
            rotation,
            focal_px,
            principal_point,
            width,
            height,
        };
        pose.validate()?;
        Ok(pose)
    }

    /// Camera at `position` looking down `+z`, principal point at the image center.
    pub fn axis_aligned(position: Vec3, focal_px: f64, width: usize, height: usize) -> Self {
        Self {
            position,
            rotation: Mat3::identity(),
            focal_px,
            principal_point: (width as f64 / 2.0, height as f64 / 2.0),
            width,
            height,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 {
            return Err(Error::InvalidPose(format!(
                "image size must be positive, got {}x{}",
                self.width, self.height
            )));
        }
        if !(self.focal_px.is_finite() && self.focal_px > 0.0) {
            return Err(Error::InvalidPose(format!(
                "focal_px must be positive, got {}",
                self.focal_px
            )));
        }
        if !self.position.iter().all(|c| c.is_finite())
            || !self.principal_point.0.is_finite()
            || !self.principal_point.1.is_finite()
        {
            return Err(Error::InvalidPose("non-finite position or principal point".into()));
        }
        let gram = self.rotation.transpose() * self.rotation;
        let off = (gram - Mat3::identity()).abs().max();
        if !(off <= ORTHONORMAL_TOL) {
            return Err(Error::InvalidPose(format!(
                "rotation is not orthonormal (max |R^T R - I| = {off:e})"
            )));
        }
        let det = self.rotation.determinant();
        if !((det - 1.0).abs() <= ORTHONORMAL_TOL) {
            return Err(Error::InvalidPose(format!(
                "rotation determinant is {det}, expected +1"
            )));
        }
        Ok(())
    }

    /// Same pose rendered at another resolution: focal length and principal
    /// point scale with the width.
    pub fn with_resolution(&self, width: usize, height: usize) -> Self {
        let sx = width as f64 / self.width as f64;
        let sy = height as f64 / self.height as f64;
        Self {
            position: self.position,
            rotation: self.rotation,
            focal_px: self.focal_px * sx,
            principal_point: (self.principal_point.0 * sx, self.principal_point.1 * sy),
            width,
            height,
        }
    }

    /// World-space viewing direction (the camera `+z` axis).
    pub fn forward(&self) -> Vec3 {
        self.rotation.column(2).into_owned()
    }
}

/// World-space ray through the continuous pixel position `(px, py)`.
pub fn pixel_ray(pose: &CameraPose, px: f64, py: f64) -> Ray {
    debug_assert!(
        (0.0..pose.width as f64).contains(&px) && (0.0..pose.height as f64).contains(&py),
        "pixel ({px}, {py}) outside {}x{} image",
        pose.width,
        pose.height
    );
    let (cx, cy) = pose.principal_point;
    let local = Vec3::new((px - cx) / pose.focal_px, (py - cy) / pose.focal_px, 1.0);
    Ray::new(pose.position, pose.rotation * local)
}

/// Ray through the center of integer pixel `(i, j)`.
pub fn pixel_center_ray(pose: &CameraPose, i: usize, j: usize) -> Ray {
    pixel_ray(pose, i as f64 + 0.5, j as f64 + 0.5)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlanePair {
    pub z_uv: f64,
    pub z_st: f64,
}

impl PlanePair {
    pub fn new(z_uv: f64, z_st: f64) -> Result<Self> {
        if !(z_uv.is_finite() && z_st.is_finite()) || z_uv == z_st {
            return Err(Error::InvalidHyperparam {
                name: "st_depth",
                reason: format!("slab planes must be distinct and finite (z_uv={z_uv}, z_st={z_st})"),
            });
        }
        Ok(Self { z_uv, z_st })
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RayCoord4D {
    pub u: f64,
    pub v: f64,
    pub s: f64,
    pub t: f64,
}

impl RayCoord4D {
    pub fn new(u: f64, v: f64, s: f64, t: f64) -> Self {
        Self { u, v, s, t }
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.u, self.v, self.s, self.t]
    }

    pub fn from_array(a: [f64; 4]) -> Self {
        Self::new(a[0], a[1], a[2], a[3])
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|c| c.is_finite())
    }

    /// True when every component lies in `[-1 - tol, 1 + tol]`.
    pub fn in_box(&self, tol: f64) -> bool {
        self.to_array().iter().all(|c| c.abs() <= 1.0 + tol)
    }

    pub fn clamped(self) -> Self {
        let a = self.to_array().map(|c| c.clamp(-1.0, 1.0));
        Self::from_array(a)
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.to_array()
            .iter()
            .zip(other.to_array())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// How training-ray intersections are mapped into the unit box.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NormalizationMode {
    /// Each axis's own range onto `[-1, 1]`.
    #[default]
    PerAxis,
    /// One scale for all axes, taken from the widest range.
    Shared,
}

fn bounds<'a>(raw: impl IntoIterator<Item = &'a [f64; 4]>) -> Option<([f64; 4], [f64; 4])> {
    let mut lo = [f64::INFINITY; 4];
    let mut hi = [f64::NEG_INFINITY; 4];
    let mut any = false;
    for p in raw {
        any = true;
        for k in 0..4 {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    any.then_some((lo, hi))
}

/// Per-axis affine map `x -> (x - center) / half_extent`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxisMap {
    pub center: f64,
    pub half_extent: f64,
}

impl AxisMap {
    /// Fits `[min, max]` onto `[-1, 1]`. A degenerate range keeps unit scale.
    pub fn fit(min: f64, max: f64) -> Self {
        let half = 0.5 * (max - min);
        Self {
            center: 0.5 * (max + min),
            half_extent: if half > 1e-12 { half } else { 1.0 },
        }
    }

    pub fn identity() -> Self {
        Self {
            center: 0.0,
            half_extent: 1.0,
        }
    }

    #[inline]
    pub fn normalize(&self, x: f64) -> f64 {
        (x - self.center) / self.half_extent
    }

    #[inline]
    pub fn denormalize(&self, n: f64) -> f64 {
        n * self.half_extent + self.center
    }
}

/// Maps slab intersection points to normalized coordinates, one
/// [`AxisMap`] per coordinate in `(u, v, s, t)` order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalizationBox {
    pub axes: [AxisMap; 4],
}

impl NormalizationBox {
    pub fn identity() -> Self {
        Self {
            axes: [AxisMap::identity(); 4],
        }
    }

    /// Bounding box of the given raw (un-normalized) intersection coordinates.
    pub fn fit<'a>(raw: impl IntoIterator<Item = &'a [f64; 4]>) -> Self {
        match bounds(raw) {
            Some((lo, hi)) => Self {
                axes: std::array::from_fn(|k| AxisMap::fit(lo[k], hi[k])),
            },
            None => Self::identity(),
        }
    }

    /// Per-axis centers, one half-extent for all four axes (the largest), so
    /// the box is scaled uniformly into `[-1, 1]^4`.
    pub fn fit_shared<'a>(raw: impl IntoIterator<Item = &'a [f64; 4]>) -> Self {
        let Some((lo, hi)) = bounds(raw) else {
            return Self::identity();
        };
        let half = (0..4).map(|k| 0.5 * (hi[k] - lo[k])).fold(0.0, f64::max);
        let half = if half > 1e-12 { half } else { 1.0 };
        Self {
            axes: std::array::from_fn(|k| AxisMap {
                center: 0.5 * (lo[k] + hi[k]),
                half_extent: half,
            }),
        }
    }

    pub fn fit_with<'a>(mode: NormalizationMode, raw: impl IntoIterator<Item = &'a [f64; 4]>) -> Self {
        match mode {
            NormalizationMode::PerAxis => Self::fit(raw),
            NormalizationMode::Shared => Self::fit_shared(raw),
        }
    }

    pub fn normalize(&self, raw: [f64; 4]) -> RayCoord4D {
        RayCoord4D::from_array(std::array::from_fn(|k| self.axes[k].normalize(raw[k])))
    }

    pub fn denormalize(&self, c: RayCoord4D) -> [f64; 4] {
        let a = c.to_array();
        std::array::from_fn(|k| self.axes[k].denormalize(a[k]))
    }

    /// Serialized as `(center, half_extent)` pairs.
    pub fn to_array(&self) -> [f64; 8] {
        let mut out = [0.0; 8];
        for (k, ax) in self.axes.iter().enumerate() {
            out[2 * k] = ax.center;
            out[2 * k + 1] = ax.half_extent;
        }
        out
    }

    pub fn from_array(a: [f64; 8]) -> Self {
        Self {
            axes: std::array::from_fn(|k| AxisMap {
                center: a[2 * k],
                half_extent: a[2 * k + 1],
            }),
        }
    }
}

/// Raw slab intersections `(x_uv, y_uv, x_st, y_st)`.
pub fn slab_intersections(ray: &Ray, planes: &PlanePair) -> Result<[f64; 4]> {
    let dz = ray.direction.z;
    if dz.abs() < PARALLEL_EPS {
        return Err(Error::ParallelRay(dz.abs()));
    }
    let a = ray.at((planes.z_uv - ray.origin.z) / dz);
    let b = ray.at((planes.z_st - ray.origin.z) / dz);
    Ok([a.x, a.y, b.x, b.y])
}

pub fn ray_to_4d(ray: &Ray, planes: &PlanePair, norm: &NormalizationBox) -> Result<RayCoord4D> {
    Ok(norm.normalize(slab_intersections(ray, planes)?))
}

/// The ray leaving the `uv` point towards the `st` point.
pub fn fourd_to_ray(coord: RayCoord4D, planes: &PlanePair, norm: &NormalizationBox) -> Ray {
    let [xu, yv, xs, yt] = norm.denormalize(coord);
    let a = Vec3::new(xu, yv, planes.z_uv);
    let b = Vec3::new(xs, yt, planes.z_st);
    Ray::new(a, b - a)
}

/// Angle between two ray directions in degrees.
pub fn angle_between(a: &Ray, b: &Ray) -> f64 {
    a.direction
        .dot(&b.direction)
        .clamp(-1.0, 1.0)
        .acos()
        .to_degrees()
}

/// Rotation whose third column is `forward`, with the first column as close
/// to world `+x` as possible. `forward` must be unit length.
pub fn look_rotation(forward: &Vec3) -> Mat3 {
    let z = *forward;
    let seed = if z.x.abs() < 0.9 {
        Vec3::x()
    } else {
        Vec3::y()
    };
    let x = (seed - z * z.dot(&seed)).normalize();
    let y = z.cross(&x);
    Mat3::from_columns(&[x, y, z])
}
