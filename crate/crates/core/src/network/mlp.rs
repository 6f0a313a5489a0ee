use ndarray::{Array1, Array2, ArrayView2, Axis, Zip};
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::stream_rng;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MlpConfig {
    pub input_dim: usize,
    /// Number of hidden ReLU layers.
    pub hidden_layers: usize,
    pub hidden_width: usize,
    pub output_dim: usize,
}

impl MlpConfig {
    /// Six hidden layers of 256 channels on top of a `2L`-wide embedding.
    pub fn paper(input_dim: usize) -> Self {
        Self {
            input_dim,
            hidden_layers: 6,
            hidden_width: 256,
            output_dim: 3,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("input_dim", self.input_dim),
            ("hidden_width", self.hidden_width),
            ("output_dim", self.output_dim),
        ] {
            if v == 0 {
                return Err(Error::InvalidHyperparam {
                    name,
                    reason: "must be at least 1".into(),
                });
            }
        }
        Ok(())
    }

    /// `(fan_in, fan_out)` of each layer, input to output.
    pub fn layer_shapes(&self) -> Vec<(usize, usize)> {
        let mut dims = vec![self.input_dim];
        dims.extend(std::iter::repeat_n(self.hidden_width, self.hidden_layers));
        dims.push(self.output_dim);
        dims.windows(2).map(|w| (w[0], w[1])).collect()
    }
}

/// Exact number of weights and biases.
pub fn param_count(config: &MlpConfig) -> usize {
    config
        .layer_shapes()
        .iter()
        .map(|&(i, o)| i * o + o)
        .sum()
}

/// One affine layer: `y = x W + b`, with `W` stored `fan_in x fan_out`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense<T> {
    pub weight: Array2<T>,
    pub bias: Array1<T>,
}

/// Network parameters.
///
/// Layer order is input to output. Within a layer the weight matrix comes
/// first (row-major, `fan_in x fan_out`), then the bias vector. This is the
/// order of [`MlpParams::tensors`] and of the checkpoint layout.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpParams<T> {
    pub layers: Vec<Dense<T>>,
}

impl<T: Scalar> MlpParams<T> {
    pub fn zeros(config: &MlpConfig) -> Self {
        Self {
            layers: config
                .layer_shapes()
                .into_iter()
                .map(|(i, o)| Dense {
                    weight: Array2::zeros((i, o)),
                    bias: Array1::zeros(o),
                })
                .collect(),
        }
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            layers: self
                .layers
                .iter()
                .map(|l| Dense {
                    weight: Array2::zeros(l.weight.raw_dim()),
                    bias: Array1::zeros(l.bias.raw_dim()),
                })
                .collect(),
        }
    }

    pub fn config(&self) -> MlpConfig {
        let first = &self.layers[0];
        let last = self.layers.last().expect("at least one layer");
        MlpConfig {
            input_dim: first.weight.nrows(),
            hidden_layers: self.layers.len() - 1,
            hidden_width: if self.layers.len() > 1 {
                first.weight.ncols()
            } else {
                1
            },
            output_dim: last.weight.ncols(),
        }
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].weight.nrows()
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().map(|l| l.weight.ncols()).unwrap_or(0)
    }

    pub fn len(&self) -> usize {
        self.layers.iter().map(|l| l.weight.len() + l.bias.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Flat views of every tensor in layout order.
    pub fn tensors(&self) -> Vec<&[T]> {
        self.layers
            .iter()
            .flat_map(|l| {
                [
                    l.weight.as_slice().expect("standard layout"),
                    l.bias.as_slice().expect("standard layout"),
                ]
            })
            .collect()
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut [T]> {
        self.layers
            .iter_mut()
            .flat_map(|l| {
                [
                    l.weight.as_slice_mut().expect("standard layout"),
                    l.bias.as_slice_mut().expect("standard layout"),
                ]
            })
            .collect()
    }

    pub fn cast<U: Scalar>(&self) -> MlpParams<U> {
        MlpParams {
            layers: self
                .layers
                .iter()
                .map(|l| Dense {
                    weight: l.weight.mapv(|x| U::from_f64(x.to_f64())),
                    bias: l.bias.mapv(|x| U::from_f64(x.to_f64())),
                })
                .collect(),
        }
    }

    pub fn all_finite(&self) -> bool {
        self.tensors().iter().all(|t| t.iter().all(|x| x.is_finite()))
    }

    fn check_shapes(&self, other: &Self) -> bool {
        self.layers.len() == other.layers.len()
            && self.layers.iter().zip(&other.layers).all(|(a, b)| {
                a.weight.dim() == b.weight.dim() && a.bias.dim() == b.bias.dim()
            })
    }

    pub(crate) fn same_shape(&self, other: &Self, what: &str) -> Result<()> {
        if self.check_shapes(other) {
            Ok(())
        } else {
            Err(Error::ShapeMismatch(format!("{what} does not match parameter shapes")))
        }
    }
}

/// He (fan-in) normal init for ReLU layers, Glorot normal for the output
/// layer, zero biases.
pub fn init_params<T: Scalar>(config: &MlpConfig, seed: u64) -> Result<MlpParams<T>> {
    config.validate()?;
    let mut rng = stream_rng(seed, 0x6d6c_7069_6e69_74);
    let shapes = config.layer_shapes();
    let last = shapes.len() - 1;
    let layers = shapes
        .into_iter()
        .enumerate()
        .map(|(k, (fan_in, fan_out))| {
            let std = if k == last {
                (2.0 / (fan_in + fan_out) as f64).sqrt()
            } else {
                (2.0 / fan_in as f64).sqrt()
            };
            let normal = Normal::new(0.0, std).expect("positive std");
            let weight =
                Array2::from_shape_simple_fn((fan_in, fan_out), || T::from_f64(normal.sample(&mut rng)));
            Dense {
                weight,
                bias: Array1::zeros(fan_out),
            }
        })
        .collect();
    Ok(MlpParams { layers })
}

/// Activations of one forward pass.
///
/// `activations[0]` is the network input and `activations[k]` the input to
/// layer `k`; the last entry is the sigmoid output.
#[derive(Debug, Clone)]
pub struct TapeRecord<T> {
    pub activations: Vec<Array2<T>>,
}

impl<T: Scalar> TapeRecord<T> {
    pub fn output(&self) -> &Array2<T> {
        self.activations.last().expect("tape has an output")
    }

    pub fn batch_size(&self) -> usize {
        self.activations[0].nrows()
    }
}

#[inline]
fn sigmoid<T: Scalar>(z: T) -> T {
    let one = T::one();
    let y = if z >= T::zero() {
        one / (one + (-z).exp())
    } else {
        let e = z.exp();
        e / (one + e)
    };
    // Keep the output strictly inside (0, 1) even when exp saturates.
    y.max(T::epsilon()).min(one - T::epsilon())
}

/// Runs the network on an `N x input_dim` batch. Returns the `N x 3` colors
/// (owned by the tape) and the tape needed for [`backward`].
pub fn forward<T: Scalar>(params: &MlpParams<T>, input: ArrayView2<T>) -> Result<TapeRecord<T>> {
    if input.ncols() != params.input_dim() {
        return Err(Error::ShapeMismatch(format!(
            "batch has {} columns, network expects {}",
            input.ncols(),
            params.input_dim()
        )));
    }
    let n_layers = params.layers.len();
    let mut activations = Vec::with_capacity(n_layers + 1);
    activations.push(input.to_owned());
    for (k, layer) in params.layers.iter().enumerate() {
        let mut z = activations[k].dot(&layer.weight);
        z += &layer.bias;
        if k + 1 == n_layers {
            z.mapv_inplace(sigmoid);
        } else {
            z.mapv_inplace(|x| x.max(T::zero()));
        }
        activations.push(z);
    }
    Ok(TapeRecord { activations })
}

/// Reverse-mode pass. Returns parameter gradients and `dL/dinput`.
pub fn backward<T: Scalar>(
    params: &MlpParams<T>,
    tape: &TapeRecord<T>,
    d_output: ArrayView2<T>,
) -> Result<(MlpParams<T>, Array2<T>)> {
    let n_layers = params.layers.len();
    if tape.activations.len() != n_layers + 1 {
        return Err(Error::StaleTape(format!(
            "tape has {} layers, network has {}",
            tape.activations.len() - 1,
            n_layers
        )));
    }
    for (k, layer) in params.layers.iter().enumerate() {
        let (a_in, a_out) = (&tape.activations[k], &tape.activations[k + 1]);
        if a_in.ncols() != layer.weight.nrows() || a_out.ncols() != layer.weight.ncols() {
            return Err(Error::StaleTape(format!("layer {k} width changed since forward")));
        }
    }
    if d_output.dim() != tape.output().dim() {
        return Err(Error::StaleTape(format!(
            "output gradient is {:?}, tape output is {:?}",
            d_output.dim(),
            tape.output().dim()
        )));
    }

    let one = T::one();
    // dL/dz for the sigmoid head.
    let mut dz = Array2::zeros(d_output.raw_dim());
    Zip::from(&mut dz)
        .and(&d_output)
        .and(tape.output())
        .for_each(|g, &d, &y| *g = d * y * (one - y));

    let mut grads: Vec<Dense<T>> = Vec::with_capacity(n_layers);
    for k in (0..n_layers).rev() {
        let a_in = &tape.activations[k];
        let layer = &params.layers[k];
        let d_weight = a_in.t().dot(&dz);
        let d_bias = dz.sum_axis(Axis(0));
        let mut d_in = dz.dot(&layer.weight.t());
        if k > 0 {
            Zip::from(&mut d_in).and(a_in).for_each(|g, &a| {
                if a <= T::zero() {
                    *g = T::zero();
                }
            });
        }
        grads.push(Dense {
            weight: d_weight,
            bias: d_bias,
        });
        dz = d_in;
    }
    grads.reverse();
    Ok((MlpParams { layers: grads }, dz))
}
