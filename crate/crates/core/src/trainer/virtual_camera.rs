use rand::Rng;
use rand_distr::{Distribution, Exp1};

use crate::geometry::{look_rotation, CameraPose, Vec3};
use crate::trainer::TrainingSet;

/// A camera inside the training rig, used to render the spectral-loss view
/// and to cast extra bundle centers.
#[derive(Debug, Clone, PartialEq)]
pub struct VirtualCamera {
    /// At the loss resolution.
    pub pose: CameraPose,
    /// Position in the camera plane.
    pub hull_point: [f64; 2],
    /// Angle between the viewing direction and the rig's mean forward axis, degrees.
    pub offset_deg: f64,
    /// Upper bound on `offset_deg`: `atan(d / h)` with `d` the distance to the
    /// hull boundary and `h` the distance to the st-plane.
    pub max_offset_deg: f64,
}

/// Position: a uniform-Dirichlet mix of the training camera positions.
/// Direction: the mean training forward axis tilted by a polar angle uniform
/// in `[0, atan(d/h)]` at a uniform azimuth. Intrinsics: the first training
/// camera rescaled to `resolution x resolution`.
pub fn sample_virtual_camera<R: Rng + ?Sized>(ts: &TrainingSet, resolution: usize, rng: &mut R) -> VirtualCamera {
    let weights: Vec<f64> = (0..ts.poses.len()).map(|_| Exp1.sample(rng)).collect();
    let total: f64 = weights.iter().sum();
    let mut position = Vec3::zeros();
    for (w, p) in weights.iter().zip(&ts.poses) {
        position += p.position * (w / total);
    }
    let hull_point = [position.x, position.y];
    let d = ts.hull.distance_to_boundary(hull_point);
    let h = (ts.planes.z_st - position.z).abs();
    let max_offset = if h > 0.0 { (d / h).atan() } else { 0.0 };
    let polar = rng.random::<f64>() * max_offset;
    let azimuth = rng.random::<f64>() * std::f64::consts::TAU;

    let base: Vec3 = ts.poses.iter().map(|p| p.forward()).sum::<Vec3>().normalize();
    let frame = look_rotation(&base);
    let (e1, e2): (Vec3, Vec3) = (frame.column(0).into_owned(), frame.column(1).into_owned());
    let dir = base * polar.cos() + (e1 * azimuth.cos() + e2 * azimuth.sin()) * polar.sin();
    let template = ts.poses[0].with_resolution(resolution, resolution);
    let pose = CameraPose {
        position,
        rotation: if polar == 0.0 { frame } else { look_rotation(&dir) },
        ..template
    };
    VirtualCamera {
        pose,
        hull_point,
        offset_deg: polar.to_degrees(),
        max_offset_deg: max_offset.to_degrees(),
    }
}
