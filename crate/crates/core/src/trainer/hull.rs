//! Convex hull of camera positions projected onto the camera plane.

#[derive(Debug, Clone, PartialEq)]
pub struct CameraHull {
    /// Hull vertices in counter-clockwise order. One vertex for a single
    /// camera, two for collinear cameras.
    vertices: Vec<[f64; 2]>,
}

fn cross(o: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

fn segment_distance(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
    let len2 = dx * dx + dy * dy;
    let t = if len2 > 0.0 {
        (((p[0] - a[0]) * dx + (p[1] - a[1]) * dy) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let (qx, qy) = (a[0] + t * dx, a[1] + t * dy);
    ((p[0] - qx).powi(2) + (p[1] - qy).powi(2)).sqrt()
}

impl CameraHull {
    /// Andrew's monotone chain. Panics on an empty input.
    pub fn new(points: &[[f64; 2]]) -> Self {
        assert!(!points.is_empty(), "hull of no points");
        let mut pts = points.to_vec();
        pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
        pts.dedup();
        if pts.len() < 3 {
            return Self { vertices: pts };
        }
        let mut lower: Vec<[f64; 2]> = Vec::new();
        for &p in &pts {
            while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], p) <= 0.0 {
                lower.pop();
            }
            lower.push(p);
        }
        let mut upper: Vec<[f64; 2]> = Vec::new();
        for &p in pts.iter().rev() {
            while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], p) <= 0.0 {
                upper.pop();
            }
            upper.push(p);
        }
        lower.pop();
        upper.pop();
        lower.extend(upper);
        Self { vertices: lower }
    }

    pub fn vertices(&self) -> &[[f64; 2]] {
        &self.vertices
    }

    /// True when the hull has positive area.
    pub fn is_solid(&self) -> bool {
        self.vertices.len() >= 3
    }

    fn edges(&self) -> impl Iterator<Item = ([f64; 2], [f64; 2])> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| (self.vertices[i], self.vertices[(i + 1) % n]))
    }

    pub fn contains(&self, p: [f64; 2], tol: f64) -> bool {
        match self.vertices.len() {
            1 => segment_distance(p, self.vertices[0], self.vertices[0]) <= tol,
            2 => segment_distance(p, self.vertices[0], self.vertices[1]) <= tol,
            _ => self.edges().all(|(a, b)| {
                let len = ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt();
                cross(a, b, p) >= -tol * len
            }),
        }
    }

    /// Distance from an interior point to the hull boundary; zero for
    /// degenerate hulls and points outside.
    pub fn distance_to_boundary(&self, p: [f64; 2]) -> f64 {
        if !self.is_solid() || !self.contains(p, 0.0) {
            return 0.0;
        }
        self.edges()
            .map(|(a, b)| segment_distance(p, a, b))
            .fold(f64::INFINITY, f64::min)
    }
}
