//! The color network `f_Theta`: a ReLU MLP with a sigmoid head, trained with Adam.

mod adam;
mod mlp;

pub use adam::{adam_step, lr_schedule, AdamState, ADAM_BETA1, ADAM_BETA2, ADAM_EPS};
pub use mlp::{backward, forward, init_params, param_count, Dense, MlpConfig, MlpParams, TapeRecord};
