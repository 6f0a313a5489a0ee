//! Novel views by direct evaluation and synthetic-aperture refocusing.
//!
//! A pinhole render costs exactly one network evaluation per pixel: the
//! pixel-center ray is converted to normalized two-plane coordinates and fed
//! to the network. There is no sampling along the ray.

use std::time::{Duration, Instant};

use ndarray::Array2;
use rand::Rng;

use crate::error::{Error, Result};
use crate::geometry::{pixel_center_ray, ray_to_4d, CameraPose, Ray, RayCoord4D, Vec3};
use crate::image::ImageBuffer;
use crate::model::LightFieldNetwork;
use crate::rng::stream_rng;

/// Tolerance for deciding that a normalized coordinate left `[-1, 1]^4`.
const BOX_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct RenderRequest {
    pub pose: CameraPose,
    pub width: usize,
    pub height: usize,
}

impl RenderRequest {
    /// `pose` is rescaled to `width x height` when its own resolution differs.
    pub fn new(pose: CameraPose, width: usize, height: usize) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidHyperparam {
                name: "resolution",
                reason: format!("render size must be positive, got {width}x{height}"),
            });
        }
        let pose = if (pose.width, pose.height) == (width, height) {
            pose
        } else {
            pose.with_resolution(width, height)
        };
        Ok(Self { pose, width, height })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RenderOptions {
    /// Clamp coordinates outside the normalization box onto it instead of
    /// letting the network extrapolate.
    pub clamp_to_box: bool,
    /// Color for pixels whose ray never crosses the two planes.
    pub sentinel: [f32; 3],
}

impl Default for RenderOptions {
    fn default() -> Self {
        Self {
            clamp_to_box: false,
            sentinel: [1.0, 0.0, 1.0],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RenderStats {
    pub pixels: usize,
    /// Network evaluations performed.
    pub evals: usize,
    /// Rays whose coordinates fell outside the normalization box.
    pub out_of_field: usize,
    /// Rays parallel to the planes, filled with the sentinel color.
    pub unparameterizable: usize,
    /// Time spent generating coordinates and evaluating the network.
    pub wall_time: Duration,
}

/// Converts rays to network inputs. Returns the coordinates, the index of
/// each ray's coordinate (`None` for rays parallel to the planes) and the
/// out-of-field count.
fn rays_to_coords(
    model: &LightFieldNetwork,
    rays: impl Iterator<Item = Ray>,
    opts: &RenderOptions,
) -> (Vec<RayCoord4D>, Vec<Option<usize>>, usize) {
    let mut coords = Vec::new();
    let mut slots = Vec::new();
    let mut out_of_field = 0;
    for ray in rays {
        match ray_to_4d(&ray, &model.planes, &model.norm) {
            Ok(mut c) => {
                if !c.in_box(BOX_TOL) {
                    out_of_field += 1;
                    if opts.clamp_to_box {
                        c = c.clamped();
                    }
                }
                slots.push(Some(coords.len()));
                coords.push(c);
            }
            Err(_) => slots.push(None),
        }
    }
    (coords, slots, out_of_field)
}

fn pixel_rays(pose: &CameraPose) -> impl Iterator<Item = Ray> + '_ {
    (0..pose.height).flat_map(move |y| (0..pose.width).map(move |x| pixel_center_ray(pose, x, y)))
}

/// Renders one view, one network evaluation per pixel.
pub fn render(model: &LightFieldNetwork, req: &RenderRequest, opts: &RenderOptions) -> (ImageBuffer, RenderStats) {
    let start = Instant::now();
    let (coords, slots, out_of_field) = rays_to_coords(model, pixel_rays(&req.pose), opts);
    let colors = model.eval_coords(&coords);
    let wall_time = start.elapsed();

    let mut data = Vec::with_capacity(3 * slots.len());
    for slot in &slots {
        match slot {
            Some(i) => data.extend(colors.row(*i).iter()),
            None => data.extend(opts.sentinel),
        }
    }
    let img = ImageBuffer::from_vec(req.width, req.height, data).expect("one color per pixel");
    let stats = RenderStats {
        pixels: req.width * req.height,
        evals: coords.len(),
        out_of_field,
        unparameterizable: slots.len() - coords.len(),
        wall_time,
    };
    (img, stats)
}

/// Evaluates the network on raw coordinates, `N x 3`.
pub fn render_batched(model: &LightFieldNetwork, coords: &[RayCoord4D]) -> Array2<f32> {
    model.eval_coords(coords)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RefocusRequest {
    pub pose: CameraPose,
    /// World `z` of the plane brought into focus.
    pub focus_depth: f64,
    /// Lens radius in scene units, measured in the camera's image plane axes.
    pub aperture_radius: f64,
    pub rays_per_pixel: usize,
    pub seed: u64,
    /// Focus depths must lie strictly before this `z`.
    pub far_bound: f64,
}

impl RefocusRequest {
    pub fn validate(&self) -> Result<()> {
        if self.rays_per_pixel == 0 {
            return Err(Error::InvalidHyperparam {
                name: "rays_per_pixel",
                reason: "must be at least 1".into(),
            });
        }
        if !(self.aperture_radius.is_finite() && self.aperture_radius >= 0.0) {
            return Err(Error::InvalidHyperparam {
                name: "aperture_radius",
                reason: format!("must be non-negative, got {}", self.aperture_radius),
            });
        }
        let cam_z = self.pose.position.z;
        if (self.focus_depth - cam_z).abs() < 1e-9 {
            return Err(Error::DegenerateFocus {
                focus: self.focus_depth,
                camera: cam_z,
            });
        }
        if !(self.focus_depth > cam_z && self.focus_depth < self.far_bound) {
            return Err(Error::InvalidHyperparam {
                name: "focus_depth",
                reason: format!(
                    "must lie between the camera (z = {cam_z}) and the far bound {}",
                    self.far_bound
                ),
            });
        }
        Ok(())
    }
}

/// Shirley-Chiu concentric map from the unit square to the unit disk.
fn concentric_disk(a: f64, b: f64) -> (f64, f64) {
    let (x, y) = (2.0 * a - 1.0, 2.0 * b - 1.0);
    if x == 0.0 && y == 0.0 {
        return (0.0, 0.0);
    }
    let q = std::f64::consts::FRAC_PI_4;
    let (r, phi) = if x.abs() > y.abs() {
        (x, q * (y / x))
    } else {
        (y, 2.0 * q - q * (x / y))
    };
    (r * phi.cos(), r * phi.sin())
}

/// `n` stratified points on the unit disk: jittered cells of a
/// `ceil(sqrt n)`-wide grid, mapped concentrically.
fn disk_samples<R: Rng>(n: usize, rng: &mut R) -> Vec<(f64, f64)> {
    let nx = (n as f64).sqrt().ceil() as usize;
    let ny = n.div_ceil(nx);
    (0..n)
        .map(|k| {
            let (cx, cy) = (k % nx, k / nx);
            let a = (cx as f64 + rng.random::<f64>()) / nx as f64;
            let b = (cy as f64 + rng.random::<f64>()) / ny as f64;
            concentric_disk(a, b)
        })
        .collect()
}

/// Aperture rays for pixel row `y`, pixel-major: `rays_per_pixel` rays per
/// pixel, all passing through the point where the pixel-center ray meets the
/// focus plane. A zero lens offset reproduces the pixel-center ray exactly.
pub fn aperture_rays(req: &RefocusRequest, y: usize) -> Vec<Ray> {
    let pose = &req.pose;
    let right: Vec3 = pose.rotation.column(0).into_owned();
    let down: Vec3 = pose.rotation.column(1).into_owned();
    let mut out = Vec::with_capacity(pose.width * req.rays_per_pixel);
    for x in 0..pose.width {
        let center = pixel_center_ray(pose, x, y);
        let t = center.hit_z(req.focus_depth).unwrap_or(f64::INFINITY);
        let focus = center.at(t);
        let mut rng = stream_rng(req.seed, (y * pose.width + x) as u64);
        for (a, b) in disk_samples(req.rays_per_pixel, &mut rng) {
            let offset = (right * a + down * b) * req.aperture_radius;
            if offset == Vec3::zeros() || !t.is_finite() {
                out.push(center);
            } else {
                let origin = pose.position + offset;
                out.push(Ray::new(origin, focus - origin));
            }
        }
    }
    out
}

/// Synthetic-aperture image with colors from an arbitrary ray function, e.g.
/// a trained model or an analytic scene. Returns the image and the number of
/// color queries.
pub fn refocus_with(req: &RefocusRequest, mut colors: impl FnMut(&[Ray]) -> Vec<[f32; 3]>) -> Result<(ImageBuffer, usize)> {
    req.validate()?;
    let (w, h, n) = (req.pose.width, req.pose.height, req.rays_per_pixel);
    let mut data = Vec::with_capacity(3 * w * h);
    let mut queries = 0;
    for y in 0..h {
        let rays = aperture_rays(req, y);
        let rgb = colors(&rays);
        queries += rays.len();
        for px in rgb.chunks(n) {
            let mut acc = [0.0f64; 3];
            for c in px {
                for k in 0..3 {
                    acc[k] += c[k] as f64;
                }
            }
            data.extend(acc.map(|a| (a / n as f64) as f32));
        }
    }
    Ok((ImageBuffer::from_vec(w, h, data)?, queries))
}

/// Refocused view from a trained model. Evaluation count is
/// `W * H * rays_per_pixel` minus rays parallel to the planes.
pub fn refocus(model: &LightFieldNetwork, req: &RefocusRequest, opts: &RenderOptions) -> Result<(ImageBuffer, RenderStats)> {
    let start = Instant::now();
    let mut stats = RenderStats {
        pixels: req.pose.width * req.pose.height,
        ..Default::default()
    };
    let (img, _) = refocus_with(req, |rays| {
        let (coords, slots, oof) = rays_to_coords(model, rays.iter().copied(), opts);
        let colors = model.eval_coords(&coords);
        stats.evals += coords.len();
        stats.out_of_field += oof;
        stats.unparameterizable += slots.len() - coords.len();
        slots
            .iter()
            .map(|s| match s {
                Some(i) => [colors[(*i, 0)], colors[(*i, 1)], colors[(*i, 2)]],
                None => opts.sentinel,
            })
            .collect()
    })?;
    stats.wall_time = start.elapsed();
    Ok((img, stats))
}

/// Mean squared luminance gradient (forward differences) over the pixels of
/// `[x0, x1) x [y0, y1)` that have a right and lower neighbor in the region.
pub fn gradient_energy(img: &ImageBuffer, region: (usize, usize, usize, usize)) -> f64 {
    let (x0, y0, x1, y1) = region;
    let x1 = x1.min(img.width());
    let y1 = y1.min(img.height());
    let lum = |x: usize, y: usize| {
        let p = img.get(x, y);
        (0.299 * p[0] as f64) + (0.587 * p[1] as f64) + (0.114 * p[2] as f64)
    };
    let mut sum = 0.0;
    let mut n = 0usize;
    for y in y0..y1.saturating_sub(1) {
        for x in x0..x1.saturating_sub(1) {
            let gx = lum(x + 1, y) - lum(x, y);
            let gy = lum(x, y + 1) - lum(x, y);
            sum += gx * gx + gy * gy;
            n += 1;
        }
    }
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}
