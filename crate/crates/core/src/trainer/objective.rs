//! The combined training objective over one stacked batch of coordinates.
//!
//! All rays an iteration needs (photometric samples, the virtual view,
//! bundle centers and their neighbors) go through a single forward pass;
//! each loss reads its rows of the output and writes its gradient back into
//! the same rows before a single backward pass.

use std::ops::Range;

use ndarray::{s, Array2};

use crate::embedding::EmbeddingMatrix;
use crate::error::Result;
use crate::geometry::RayCoord4D;
use crate::losses::{fourier_sparsity_loss, photometric_loss, ray_bundle_loss, total_loss, LossWeights, SpectrumRef};
use crate::network::{backward, forward, MlpParams};
use crate::scalar::Scalar;

/// One bundle: a center row and the rows of its neighbors.
#[derive(Debug, Clone, PartialEq)]
pub struct BundleGroup {
    pub center_row: usize,
    pub neighbor_rows: Range<usize>,
    pub weights: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepBatch<T> {
    pub coords: Vec<RayCoord4D>,
    /// Colors for `photometric_rows`.
    pub targets: Array2<T>,
    pub photometric_rows: Range<usize>,
    /// Rows of the `R x R` virtual view, in image row-major order.
    pub fsl_rows: Option<Range<usize>>,
    /// Reference spectra to compare against; `None` means all.
    pub fsl_subset: Option<Vec<usize>>,
    pub bundles: Vec<BundleGroup>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LossBreakdown {
    pub lp: f64,
    pub ls: f64,
    pub lr: f64,
    pub total: f64,
}

/// Loss value and parameter gradient. Terms with a zero weight are skipped
/// and reported as zero.
pub fn evaluate_objective<T: Scalar>(
    params: &MlpParams<T>,
    embedding: &EmbeddingMatrix,
    batch: &StepBatch<T>,
    spectra: &SpectrumRef,
    weights: &LossWeights,
) -> Result<(LossBreakdown, MlpParams<T>)> {
    let x = embedding.embed_batch::<T>(&batch.coords);
    let tape = forward(params, x.view())?;
    let out = tape.output();
    let mut d_out = Array2::<T>::zeros(out.raw_dim());

    let pr = batch.photometric_rows.clone();
    let (lp, g) = photometric_loss(out.slice(s![pr.clone(), ..]), batch.targets.view())?;
    d_out.slice_mut(s![pr, ..]).assign(&g);

    let mut ls = 0.0;
    if weights.lambda_s > 0.0 {
        if let Some(fr) = batch.fsl_rows.clone() {
            let (v, g) = fourier_sparsity_loss(out.slice(s![fr.clone(), ..]), spectra, batch.fsl_subset.as_deref())?;
            ls = v;
            let lam = T::from_f64(weights.lambda_s);
            d_out.slice_mut(s![fr, ..]).scaled_add(lam, &g);
        }
    }

    let mut lr = 0.0;
    if weights.lambda_r > 0.0 {
        let lam = T::from_f64(weights.lambda_r);
        for b in &batch.bundles {
            let nr = b.neighbor_rows.clone();
            let (v, gc, gb) = ray_bundle_loss(out.row(b.center_row), out.slice(s![nr.clone(), ..]), &b.weights)?;
            lr += v;
            d_out.row_mut(b.center_row).scaled_add(lam, &gc);
            d_out.slice_mut(s![nr, ..]).scaled_add(lam, &gb);
        }
    }

    let (grads, _) = backward(params, &tape, d_out.view())?;
    let total = total_loss(lp, ls, lr, weights);
    Ok((LossBreakdown { lp, ls, lr, total }, grads))
}
