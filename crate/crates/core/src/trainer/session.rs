use std::fs::OpenOptions;
use std::io::Write;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::Rng;

use crate::checkpoint::{checkpoint_file_name, write_checkpoint, CameraDefaults, Checkpoint, TrainMetadata};
use crate::embedding::{make_embedding, EmbeddingMatrix};
use crate::error::{Error, Result};
use crate::geometry::{fourd_to_ray, pixel_center_ray, pixel_ray, ray_to_4d, Ray};
use crate::losses::sample_bundle;
use crate::metrics::psnr;
use crate::model::LightFieldNetwork;
use crate::network::{adam_step, init_params, lr_schedule, AdamState, MlpParams};
use crate::renderer::{render, RenderOptions, RenderRequest};
use crate::rng::{derive_seed, stream_rng};
use crate::trainer::objective::{evaluate_objective, BundleGroup, StepBatch};
use crate::trainer::virtual_camera::sample_virtual_camera;
use crate::trainer::{TrainConfig, TrainingSet};

pub const LOG_HEADER: &str = "iteration,lp,ls,lr,total,lr";
pub const LOG_FILE: &str = "train_log.csv";
pub const EVAL_LOG_FILE: &str = "eval_log.csv";

/// Losses of one iteration; `lr_used` is the learning rate applied.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepReport {
    pub iteration: u64,
    pub lp: f64,
    pub ls: f64,
    pub lr: f64,
    pub total: f64,
    pub lr_used: f64,
}

impl StepReport {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{:.9e},{:.9e},{:.9e},{:.9e},{:.9e}",
            self.iteration, self.lp, self.ls, self.lr, self.total, self.lr_used
        )
    }
}

/// Optimizer state plus everything needed to draw the next batch.
pub struct Trainer<'a> {
    cfg: TrainConfig,
    data: &'a TrainingSet,
    embedding: EmbeddingMatrix,
    params: MlpParams<f32>,
    adam: AdamState<f32>,
    iteration: u64,
    perm: Option<(u64, Vec<u32>)>,
}

impl<'a> Trainer<'a> {
    /// Fresh initialization from `cfg.seeds.init`.
    pub fn new(cfg: TrainConfig, data: &'a TrainingSet) -> Result<Self> {
        cfg.validate()?;
        let embedding = make_embedding(cfg.embedding.sigma, cfg.embedding.features, cfg.seeds.init)?;
        let params = init_params::<f32>(&cfg.mlp_config(), derive_seed(cfg.seeds.init, 1))?;
        let adam = AdamState::new(&params);
        Ok(Self {
            cfg,
            data,
            embedding,
            params,
            adam,
            iteration: 0,
            perm: None,
        })
    }

    /// Continues from a checkpoint written by a run with the same seeds and
    /// network shape.
    pub fn resume(cfg: TrainConfig, data: &'a TrainingSet, ckpt: Checkpoint) -> Result<Self> {
        cfg.validate()?;
        if ckpt.meta.seeds != cfg.seeds.to_array() {
            return Err(Error::Checkpoint(format!(
                "checkpoint seeds {:?} differ from the configured {:?}",
                ckpt.meta.seeds,
                cfg.seeds.to_array()
            )));
        }
        if ckpt.model.params.config() != cfg.mlp_config() {
            return Err(Error::Checkpoint("checkpoint network shape differs from the config".into()));
        }
        let adam = ckpt
            .optimizer
            .ok_or_else(|| Error::Checkpoint("checkpoint has no optimizer state to resume from".into()))?;
        Ok(Self {
            cfg,
            data,
            embedding: ckpt.model.embedding,
            params: ckpt.model.params,
            adam,
            iteration: ckpt.meta.iteration,
            perm: None,
        })
    }

    pub fn iteration(&self) -> u64 {
        self.iteration
    }

    pub fn config(&self) -> &TrainConfig {
        &self.cfg
    }

    pub fn params(&self) -> &MlpParams<f32> {
        &self.params
    }

    pub fn model(&self) -> LightFieldNetwork {
        LightFieldNetwork::new(self.embedding.clone(), self.params.clone(), self.data.planes, self.data.norm)
            .expect("trainer keeps consistent shapes")
    }

    pub fn checkpoint(&self) -> Checkpoint {
        let p = &self.data.poses[0];
        Checkpoint {
            model: self.model(),
            meta: TrainMetadata {
                iteration: self.iteration,
                seeds: self.cfg.seeds.to_array(),
                camera: Some(CameraDefaults {
                    focal_px: p.focal_px,
                    width: p.width as u32,
                    height: p.height as u32,
                }),
                config: self.cfg.to_toml(),
            },
            optimizer: Some(self.adam.clone()),
        }
    }

    /// Training sample for position `g` of the endless epoch-permuted stream.
    fn sample_index(&mut self, g: u64) -> usize {
        let n = self.data.len() as u64;
        let epoch = g / n;
        if self.perm.as_ref().is_none_or(|(e, _)| *e != epoch) {
            let mut p: Vec<u32> = (0..n as u32).collect();
            p.shuffle(&mut stream_rng(self.cfg.seeds.shuffle, epoch));
            self.perm = Some((epoch, p));
        }
        self.perm.as_ref().expect("filled above").1[(g % n) as usize] as usize
    }

    /// Batch indices of an iteration: positions `it*B .. (it+1)*B` of the stream.
    pub fn batch_indices(&mut self, iteration: u64) -> Vec<usize> {
        let b = self.cfg.batch_size as u64;
        (0..b).map(|j| self.sample_index(iteration * b + j)).collect()
    }

    /// Assembles every ray the given iteration evaluates.
    pub fn build_batch(&mut self, iteration: u64) -> Result<StepBatch<f32>> {
        let idx = self.batch_indices(iteration);
        let data = self.data;
        let cfg = &self.cfg;
        let mut coords: Vec<_> = idx.iter().map(|&i| data.coords[i]).collect();
        let targets = data.colors.select(ndarray::Axis(0), &idx);
        let photometric_rows = 0..coords.len();

        let need_fsl = cfg.weights.lambda_s > 0.0;
        let need_rbl = cfg.weights.lambda_r > 0.0;
        let mut fsl_rows = None;
        let mut fsl_subset = None;
        let mut bundles = Vec::new();
        if need_fsl || need_rbl {
            let r = cfg.loss_resolution;
            let mut vrng = stream_rng(cfg.seeds.virtual_camera, iteration);
            let vc = sample_virtual_camera(data, r, &mut vrng);
            if need_fsl {
                let start = coords.len();
                for y in 0..r {
                    for x in 0..r {
                        coords.push(ray_to_4d(&pixel_center_ray(&vc.pose, x, y), &data.planes, &data.norm)?);
                    }
                }
                fsl_rows = Some(start..coords.len());
                fsl_subset = cfg.fsl_neighbors.map(|k| data.nearest_cameras(vc.hull_point, k));
            }
            if need_rbl {
                let mut brng = stream_rng(cfg.seeds.bundle, iteration);
                let from_batch = (cfg.bundle_rays / 2).min(photometric_rows.len());
                let mut centers: Vec<(usize, Ray)> = (0..from_batch)
                    .map(|row| (row, fourd_to_ray(coords[row], &data.planes, &data.norm)))
                    .collect();
                for _ in from_batch..cfg.bundle_rays {
                    let px = brng.random::<f64>() * r as f64;
                    let py = brng.random::<f64>() * r as f64;
                    let ray = pixel_ray(&vc.pose, px, py);
                    centers.push((coords.len(), ray));
                    coords.push(ray_to_4d(&ray, &data.planes, &data.norm)?);
                }
                for (center_row, ray) in centers {
                    let start = coords.len();
                    let mut weights = Vec::with_capacity(cfg.bundle.samples);
                    for (n, w) in sample_bundle(&ray, &cfg.bundle, &mut brng) {
                        if let Ok(c) = ray_to_4d(&n, &data.planes, &data.norm) {
                            coords.push(c);
                            weights.push(w);
                        }
                    }
                    bundles.push(BundleGroup {
                        center_row,
                        neighbor_rows: start..coords.len(),
                        weights,
                    });
                }
            }
        }
        Ok(StepBatch {
            coords,
            targets,
            photometric_rows,
            fsl_rows,
            fsl_subset,
            bundles,
        })
    }

    /// One optimizer step. On a non-finite loss nothing is updated.
    pub fn step(&mut self) -> Result<StepReport> {
        let it = self.iteration;
        let batch = self.build_batch(it)?;
        let (loss, grads) =
            evaluate_objective(&self.params, &self.embedding, &batch, &self.data.spectra, &self.cfg.weights)?;
        if !loss.total.is_finite() {
            return Err(Error::NonFiniteLoss {
                iteration: it,
                lp: loss.lp,
                ls: loss.ls,
                lr: loss.lr,
            });
        }
        let lr_used = lr_schedule(it, self.cfg.base_lr, self.cfg.lr_half_life);
        adam_step(&mut self.params, &grads, &mut self.adam, lr_used)?;
        self.iteration += 1;
        Ok(StepReport {
            iteration: it,
            lp: loss.lp,
            ls: loss.ls,
            lr: loss.lr,
            total: loss.total,
            lr_used,
        })
    }
}

#[derive(Default)]
pub struct TrainOptions {
    /// Where checkpoints and logs go; nothing is written when `None`.
    pub out_dir: Option<PathBuf>,
    pub resume: Option<Checkpoint>,
    /// Stop (and checkpoint) once this many iterations are complete.
    pub stop_after: Option<u64>,
    pub progress: Option<Box<dyn FnMut(&StepReport)>>,
}

pub struct TrainOutcome {
    pub checkpoint: Checkpoint,
    /// Every iteration run in this call.
    pub history: Vec<StepReport>,
    pub checkpoint_paths: Vec<PathBuf>,
}

fn append_line(path: &Path, header: &str, line: &str) -> Result<()> {
    let fresh = !path.exists();
    let mut f = OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .map_err(|e| Error::io(path, e))?;
    let text = if fresh {
        format!("{header}\n{line}\n")
    } else {
        format!("{line}\n")
    };
    f.write_all(text.as_bytes()).map_err(|e| Error::io(path, e))
}

/// Runs (or continues) training up to `cfg.iterations`, writing logs and
/// checkpoints under `opts.out_dir`.
pub fn train(cfg: &TrainConfig, data: &TrainingSet, mut opts: TrainOptions) -> Result<TrainOutcome> {
    let mut trainer = match opts.resume.take() {
        Some(ckpt) => Trainer::resume(cfg.clone(), data, ckpt)?,
        None => Trainer::new(cfg.clone(), data)?,
    };
    if let Some(dir) = &opts.out_dir {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let end = opts.stop_after.map_or(cfg.iterations, |s| s.min(cfg.iterations));
    let mut history = Vec::new();
    let mut checkpoint_paths = Vec::new();
    let save = |t: &Trainer, paths: &mut Vec<PathBuf>| -> Result<()> {
        if let Some(dir) = &opts.out_dir {
            let path = dir.join(checkpoint_file_name(t.iteration()));
            write_checkpoint(&path, &t.checkpoint())?;
            paths.push(path);
        }
        Ok(())
    };
    while trainer.iteration() < end {
        let report = trainer.step()?;
        let done = trainer.iteration();
        if let Some(dir) = &opts.out_dir {
            if report.iteration % cfg.log_interval == 0 || done == end {
                append_line(&dir.join(LOG_FILE), LOG_HEADER, &report.csv_row())?;
            }
            if cfg.eval_interval > 0 && done % cfg.eval_interval == 0 {
                let view = &data.images[0];
                let req = RenderRequest::new(data.poses[0].clone(), view.width(), view.height())?;
                let (img, _) = render(&trainer.model(), &req, &RenderOptions::default());
                let line = format!("{done},{:.6}", psnr(&img, view)?);
                append_line(&dir.join(EVAL_LOG_FILE), "iteration,train_view_psnr_db", &line)?;
            }
        }
        if let Some(cb) = opts.progress.as_mut() {
            cb(&report);
        }
        history.push(report);
        if cfg.checkpoint_interval > 0 && done % cfg.checkpoint_interval == 0 && done != end {
            save(&trainer, &mut checkpoint_paths)?;
        }
    }
    save(&trainer, &mut checkpoint_paths)?;
    Ok(TrainOutcome {
        checkpoint: trainer.checkpoint(),
        history,
        checkpoint_paths,
    })
}
