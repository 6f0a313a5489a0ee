//! The trained light field: embedding, MLP weights and the slab geometry
//! needed to turn rays into network inputs.

use ndarray::{s, Array2};
use rayon::prelude::*;

use crate::embedding::EmbeddingMatrix;
use crate::error::{Error, Result};
use crate::geometry::{NormalizationBox, PlanePair, RayCoord4D};
use crate::network::{forward, MlpParams};

/// Rows per forward pass when evaluating large coordinate batches.
pub const EVAL_CHUNK: usize = 4096;

#[derive(Debug, Clone, PartialEq)]
pub struct LightFieldNetwork {
    pub embedding: EmbeddingMatrix,
    pub params: MlpParams<f32>,
    pub planes: PlanePair,
    pub norm: NormalizationBox,
}

impl LightFieldNetwork {
    pub fn new(
        embedding: EmbeddingMatrix,
        params: MlpParams<f32>,
        planes: PlanePair,
        norm: NormalizationBox,
    ) -> Result<Self> {
        if params.input_dim() != embedding.output_dim() {
            return Err(Error::ShapeMismatch(format!(
                "embedding produces {} features, network takes {}",
                embedding.output_dim(),
                params.input_dim()
            )));
        }
        if params.output_dim() != 3 {
            return Err(Error::ShapeMismatch(format!(
                "network must output RGB, has {} outputs",
                params.output_dim()
            )));
        }
        Ok(Self {
            embedding,
            params,
            planes,
            norm,
        })
    }

    /// Colors for a slice of coordinates (`N x 3`), evaluated in fixed-size
    /// chunks. Rows are independent, so the result does not depend on how
    /// the input is split.
    pub fn eval_coords(&self, coords: &[RayCoord4D]) -> Array2<f32> {
        let parts: Vec<Array2<f32>> = coords
            .par_chunks(EVAL_CHUNK)
            .map(|chunk| {
                let x = self.embedding.embed_batch::<f32>(chunk);
                let tape = forward(&self.params, x.view()).expect("model dims checked at construction");
                tape.output().to_owned()
            })
            .collect();
        let mut out = Array2::zeros((coords.len(), 3));
        for (k, part) in parts.iter().enumerate() {
            let start = k * EVAL_CHUNK;
            out.slice_mut(s![start..start + part.nrows(), ..]).assign(part);
        }
        out
    }
}
