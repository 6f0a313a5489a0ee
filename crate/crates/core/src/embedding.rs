//! Gaussian Fourier features of ray coordinates.
//!
//! `gamma(v) = [cos(2 pi b_1.v), sin(2 pi b_1.v), ..., cos(2 pi b_L.v), sin(2 pi b_L.v)]`
//! with every entry of `B` (L x 4) drawn from `N(0, sigma^2)`.
//!
//! Entry `k` of `B` in row-major order is `sigma * z_k` rounded to `f32`,
//! where `z_k` is [`CounterUniform::standard_normal`]`(k)` for the matrix
//! seed. `B` is frozen after construction and is stored verbatim in
//! checkpoints.

use std::f64::consts::TAU;

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::geometry::RayCoord4D;
use crate::rng::CounterUniform;
use crate::scalar::Scalar;

pub const DEFAULT_SIGMA: f64 = 16.0;
pub const DEFAULT_FEATURES: usize = 256;

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    sigma: f64,
    seed: u64,
    rows: Vec<[f32; 4]>,
}

pub fn make_embedding(sigma: f64, features: usize, seed: u64) -> Result<EmbeddingMatrix> {
    if !(sigma.is_finite() && sigma > 1e-9) {
        return Err(Error::InvalidHyperparam {
            name: "sigma",
            reason: format!("must be positive, got {sigma}"),
        });
    }
    if features < 1 {
        return Err(Error::InvalidHyperparam {
            name: "features",
            reason: "need at least one frequency row".into(),
        });
    }
    let gen = CounterUniform::new(seed);
    let rows = (0..features)
        .map(|l| std::array::from_fn(|j| (sigma * gen.standard_normal((4 * l + j) as u64)) as f32))
        .collect();
    Ok(EmbeddingMatrix { sigma, seed, rows })
}

impl EmbeddingMatrix {
    /// Builds a matrix from explicit rows, e.g. when loading a checkpoint.
    pub fn from_rows(sigma: f64, seed: u64, rows: Vec<[f32; 4]>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::InvalidHyperparam {
                name: "features",
                reason: "need at least one frequency row".into(),
            });
        }
        Ok(Self { sigma, seed, rows })
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Number of frequency rows `L`.
    pub fn features(&self) -> usize {
        self.rows.len()
    }

    /// Width of the embedded vector, `2L`.
    pub fn output_dim(&self) -> usize {
        2 * self.rows.len()
    }

    pub fn rows(&self) -> &[[f32; 4]] {
        &self.rows
    }

    #[inline]
    fn phase(&self, row: &[f32; 4], v: &[f64; 4]) -> f64 {
        let dot = row[0] as f64 * v[0]
            + row[1] as f64 * v[1]
            + row[2] as f64 * v[2]
            + row[3] as f64 * v[3];
        TAU * dot
    }

    /// Writes `gamma(coord)` into `out`, which must have length `2L`.
    pub fn embed_into<T: Scalar>(&self, coord: &RayCoord4D, out: &mut [T]) {
        debug_assert_eq!(out.len(), self.output_dim());
        let v = coord.to_array();
        for (row, pair) in self.rows.iter().zip(out.chunks_exact_mut(2)) {
            let (s, c) = self.phase(row, &v).sin_cos();
            pair[0] = T::from_f64(c);
            pair[1] = T::from_f64(s);
        }
    }

    pub fn embed<T: Scalar>(&self, coord: &RayCoord4D) -> Vec<T> {
        let mut out = vec![T::zero(); self.output_dim()];
        self.embed_into(coord, &mut out);
        out
    }

    /// Embeds a batch into an `N x 2L` matrix.
    pub fn embed_batch<T: Scalar>(&self, coords: &[RayCoord4D]) -> Array2<T> {
        let mut out = Array2::zeros((coords.len(), self.output_dim()));
        for (c, mut row) in coords.iter().zip(out.rows_mut()) {
            self.embed_into(c, row.as_slice_mut().expect("standard layout"));
        }
        out
    }

    /// Analytic `2L x 4` Jacobian of `gamma` at `coord`.
    pub fn embed_jacobian(&self, coord: &RayCoord4D) -> Array2<f64> {
        let v = coord.to_array();
        let mut jac = Array2::zeros((self.output_dim(), 4));
        for (l, row) in self.rows.iter().enumerate() {
            let (s, c) = self.phase(row, &v).sin_cos();
            for j in 0..4 {
                let b = TAU * row[j] as f64;
                jac[(2 * l, j)] = -b * s;
                jac[(2 * l + 1, j)] = b * c;
            }
        }
        jac
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn deterministic_in_seed() {
        let a = make_embedding(16.0, 256, 42).unwrap();
        let b = make_embedding(16.0, 256, 42).unwrap();
        let bits = |m: &EmbeddingMatrix| -> Vec<u32> {
            m.rows().iter().flatten().map(|x| x.to_bits()).collect()
        };
        assert_eq!(bits(&a), bits(&b));
        let c = make_embedding(16.0, 256, 43).unwrap();
        assert_ne!(bits(&a), bits(&c));
    }

    #[test]
    fn rejects_bad_hyperparameters() {
        assert!(matches!(
            make_embedding(1e-12, 8, 0),
            Err(Error::InvalidHyperparam { name: "sigma", .. })
        ));
        assert!(make_embedding(-1.0, 8, 0).is_err());
        assert!(matches!(
            make_embedding(1.0, 0, 0),
            Err(Error::InvalidHyperparam { name: "features", .. })
        ));
    }

    #[test]
    fn large_matrix_statistics() {
        let sigma = 16.0;
        let l = 4096usize;
        let m = make_embedding(sigma, l, 42).unwrap();
        let vals: Vec<f64> = m.rows().iter().flatten().map(|&x| x as f64).collect();
        let n = vals.len() as f64;
        let mean = vals.iter().sum::<f64>() / n;
        let std = (vals.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n).sqrt();
        assert!(((std - sigma) / sigma).abs() < 0.05, "std {std}");
        // Standard error of the mean is sigma / sqrt(4L); allow four of them.
        assert!(mean.abs() < 4.0 * sigma / (4.0 * l as f64).sqrt(), "mean {mean}");
    }

    #[test]
    fn zero_input_gives_unit_cosines() {
        let m = make_embedding(16.0, 8, 1).unwrap();
        let e: Vec<f64> = m.embed(&RayCoord4D::default());
        for pair in e.chunks(2) {
            assert_eq!(pair, &[1.0, 0.0]);
        }
    }

    #[test]
    fn single_frequency_quarter_turn() {
        let m = EmbeddingMatrix::from_rows(1.0, 0, vec![[1.0, 0.0, 0.0, 0.0]]).unwrap();
        let e: Vec<f64> = m.embed(&RayCoord4D::new(0.25, 0.0, 0.0, 0.0));
        assert!(e[0].abs() < 1e-15);
        assert!((e[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn zero_matrix_has_zero_jacobian() {
        let m = EmbeddingMatrix::from_rows(1.0, 0, vec![[0.0; 4]; 3]).unwrap();
        let j = m.embed_jacobian(&RayCoord4D::new(0.3, -0.1, 0.7, 0.2));
        assert!(j.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn single_frequency_jacobian_by_hand() {
        // gamma = (cos 2pi(2u - t), sin 2pi(2u - t)) at u = 0.1, t = 0.05:
        // phase p = 2pi * 0.15, d cos/du = -4pi sin p, d sin/dt = -2pi cos p.
        let m = EmbeddingMatrix::from_rows(1.0, 0, vec![[2.0, 0.0, 0.0, -1.0]]).unwrap();
        let j = m.embed_jacobian(&RayCoord4D::new(0.1, 0.4, -0.3, 0.05));
        let p = TAU * 0.15;
        assert!((j[(0, 0)] + 2.0 * TAU * p.sin()).abs() < 1e-12);
        assert!((j[(0, 3)] - TAU * p.sin()).abs() < 1e-12);
        assert!((j[(1, 0)] - 2.0 * TAU * p.cos()).abs() < 1e-12);
        assert!((j[(1, 3)] + TAU * p.cos()).abs() < 1e-12);
        assert_eq!(j[(0, 1)], 0.0);
        assert_eq!(j[(1, 2)], 0.0);
    }

    #[test]
    fn jacobian_matches_central_differences() {
        let m = make_embedding(2.0, 16, 9).unwrap();
        let h = 1e-5;
        for k in 0..10 {
            let base = [0.1 * k as f64 - 0.5, 0.3, -0.2 + 0.05 * k as f64, 0.6];
            let jac = m.embed_jacobian(&RayCoord4D::from_array(base));
            for j in 0..4 {
                let mut p = base;
                let mut q = base;
                p[j] += h;
                q[j] -= h;
                let ep: Vec<f64> = m.embed(&RayCoord4D::from_array(p));
                let eq: Vec<f64> = m.embed(&RayCoord4D::from_array(q));
                for r in 0..m.output_dim() {
                    let fd = (ep[r] - eq[r]) / (2.0 * h);
                    let an = jac[(r, j)];
                    let scale = an.abs().max(fd.abs()).max(1.0);
                    assert!((fd - an).abs() / scale < 1e-5, "row {r} col {j}: {an} vs {fd}");
                }
            }
        }
    }

    proptest! {
        #[test]
        fn norm_squared_equals_feature_count(v in prop::array::uniform4(-1.5..1.5f64), seed in 0u64..1000) {
            let m = make_embedding(16.0, 32, seed).unwrap();
            let e: Vec<f64> = m.embed(&RayCoord4D::from_array(v));
            let n2: f64 = e.iter().map(|x| x * x).sum();
            prop_assert!((n2 - 32.0).abs() < 1e-9);
            prop_assert!(e.iter().all(|x| x.abs() <= 1.0));
        }

        #[test]
        fn periodic_in_projected_phase(v in prop::array::uniform4(-1.0..1.0f64), k in -3i32..3) {
            // Shifting v by k * b / |b|^2 moves b.v by exactly k.
            let b = [0.5f32, -0.25, 1.0, 0.75];
            let m = EmbeddingMatrix::from_rows(1.0, 0, vec![b]).unwrap();
            let nb: f64 = b.iter().map(|&x| (x as f64).powi(2)).sum();
            let w: [f64; 4] = std::array::from_fn(|j| v[j] + k as f64 * b[j] as f64 / nb);
            let e1: Vec<f64> = m.embed(&RayCoord4D::from_array(v));
            let e2: Vec<f64> = m.embed(&RayCoord4D::from_array(w));
            prop_assert!((e1[0] - e2[0]).abs() < 1e-9 && (e1[1] - e2[1]).abs() < 1e-9);
        }
    }
}
