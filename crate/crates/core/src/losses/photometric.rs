use ndarray::{Array2, ArrayView2};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Sum over samples of the Euclidean norm of the RGB residual.
///
/// The gradient of `||r||` is `r / ||r||`, taken as zero where the residual
/// vanishes.
pub fn photometric_loss<T: Scalar>(
    pred: ArrayView2<T>,
    target: ArrayView2<T>,
) -> Result<(f64, Array2<T>)> {
    if pred.dim() != target.dim() {
        return Err(Error::ShapeMismatch(format!(
            "prediction {:?} vs target {:?}",
            pred.dim(),
            target.dim()
        )));
    }
    let mut grad = Array2::zeros(pred.raw_dim());
    let mut total = 0.0f64;
    for ((p, t), mut g) in pred.rows().into_iter().zip(target.rows()).zip(grad.rows_mut()) {
        let norm = p
            .iter()
            .zip(t.iter())
            .map(|(&a, &b)| (a.to_f64() - b.to_f64()).powi(2))
            .sum::<f64>()
            .sqrt();
        total += norm;
        if norm > 0.0 {
            for ((gi, &a), &b) in g.iter_mut().zip(p.iter()).zip(t.iter()) {
                *gi = T::from_f64((a.to_f64() - b.to_f64()) / norm);
            }
        }
    }
    Ok((total, grad))
}
