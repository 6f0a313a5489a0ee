use crate::error::{Error, Result};
use crate::network::MlpParams;
use crate::scalar::Scalar;

pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.999;
pub const ADAM_EPS: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct AdamState<T> {
    pub first_moment: MlpParams<T>,
    pub second_moment: MlpParams<T>,
    pub step: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl<T: Scalar> AdamState<T> {
    pub fn new(params: &MlpParams<T>) -> Self {
        Self {
            first_moment: params.zeros_like(),
            second_moment: params.zeros_like(),
            step: 0,
            beta1: ADAM_BETA1,
            beta2: ADAM_BETA2,
            eps: ADAM_EPS,
        }
    }
}

/// `base_lr * 0.5^floor(iteration / half_life)`.
pub fn lr_schedule(iteration: u64, base_lr: f64, half_life: u64) -> f64 {
    let halvings = (iteration / half_life.max(1)).min(i32::MAX as u64) as i32;
    base_lr * 0.5f64.powi(halvings)
}

/// One bias-corrected Adam update. Fails without touching anything if a
/// gradient is not finite.
pub fn adam_step<T: Scalar>(
    params: &mut MlpParams<T>,
    grads: &MlpParams<T>,
    state: &mut AdamState<T>,
    lr: f64,
) -> Result<()> {
    params.same_shape(grads, "gradient")?;
    params.same_shape(&state.first_moment, "Adam state")?;
    for (k, t) in grads.tensors().iter().enumerate() {
        if let Some(i) = t.iter().position(|g| !g.is_finite()) {
            return Err(Error::NonFiniteGradient(format!(
                "tensor {k} (layer {}, {}), element {i}",
                k / 2,
                if k % 2 == 0 { "weight" } else { "bias" }
            )));
        }
    }

    state.step += 1;
    let t = state.step.min(i32::MAX as u64) as i32;
    let b1 = T::from_f64(state.beta1);
    let b2 = T::from_f64(state.beta2);
    let one = T::one();
    let c1 = T::from_f64(1.0 / (1.0 - state.beta1.powi(t)));
    let c2 = T::from_f64(1.0 / (1.0 - state.beta2.powi(t)));
    let eps = T::from_f64(state.eps);
    let lr = T::from_f64(lr);

    let mut ps = params.tensors_mut();
    let gs = grads.tensors();
    let mut ms = state.first_moment.tensors_mut();
    let mut vs = state.second_moment.tensors_mut();
    for k in 0..ps.len() {
        for (((p, &g), m), v) in ps[k]
            .iter_mut()
            .zip(gs[k])
            .zip(ms[k].iter_mut())
            .zip(vs[k].iter_mut())
        {
            *m = b1 * *m + (one - b1) * g;
            *v = b2 * *v + (one - b2) * g * g;
            let m_hat = *m * c1;
            let v_hat = *v * c2;
            *p = *p - lr * m_hat / (v_hat.sqrt() + eps);
        }
    }
    Ok(())
}
