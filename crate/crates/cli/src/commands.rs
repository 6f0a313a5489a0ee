use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use nelf_core::checkpoint::{read_checkpoint, Checkpoint};
use nelf_core::data::{
    builtin_scene, generate_synthetic_dataset, load_image, load_manifest, save_image, subsample_grid, DatasetManifest,
    SynthRig, SyntheticScene, BUILTIN_SCENES,
};
use nelf_core::metrics::evaluate_views;
use nelf_core::renderer::{gradient_energy, refocus, render, RefocusRequest, RenderOptions, RenderRequest};
use nelf_core::trainer::{train, TrainOptions, TrainingSet};
use nelf_core::CameraPose;

use crate::config::{RunConfig, TrainOverrides};
use crate::error::CliError;
use crate::poses::{interpolate_path, load_pose_file, Intrinsics, PoseSpec};

fn create_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}

pub fn load_scene(name_or_path: &str) -> Result<SyntheticScene, CliError> {
    if let Some(scene) = builtin_scene(name_or_path) {
        return Ok(scene);
    }
    let path = Path::new(name_or_path);
    if !path.exists() {
        return Err(CliError::Validation(format!(
            "`{name_or_path}` is neither a built-in scene ({}) nor a scene file",
            BUILTIN_SCENES.join(", ")
        )));
    }
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    Ok(SyntheticScene::from_toml(&text, path)?)
}

pub fn make_synth(scene: &str, rig: &SynthRig, out: &Path) -> Result<DatasetManifest, CliError> {
    let scene = load_scene(scene)?;
    let manifest = generate_synthetic_dataset(&scene, rig, out)?;
    println!("wrote {} views to {}", manifest.views.len(), out.display());
    Ok(manifest)
}

/// The training and test splits of a dataset; without a stride both are
/// the whole dataset.
pub fn splits(dir: &Path, stride: Option<usize>) -> Result<(DatasetManifest, DatasetManifest), CliError> {
    let manifest = load_manifest(dir)?;
    match stride {
        Some(s) => Ok(subsample_grid(&manifest, s)?),
        None => Ok((manifest.clone(), manifest)),
    }
}

pub struct TrainArgs {
    pub run: RunConfig,
    pub overrides: TrainOverrides,
    pub out: PathBuf,
    pub resume: Option<PathBuf>,
    pub quiet: bool,
}

pub fn cmd_train(args: TrainArgs) -> Result<Checkpoint, CliError> {
    let cfg = args.overrides.apply(args.run.train_config()?)?;
    let dir = args
        .run
        .data
        .dir
        .clone()
        .ok_or_else(|| CliError::Validation("no dataset: pass --data or set [data] dir".into()))?;
    let (train_split, _) = splits(&dir, args.run.data.stride)?;
    let data = TrainingSet::from_manifest(&train_split, &cfg)?;
    let resume = args.resume.as_deref().map(read_checkpoint).transpose()?;

    create_dir(&args.out)?;
    let mut resolved = args.run.clone();
    resolved.train = toml::Table::try_from(&cfg).expect("config serializes to a table");
    write_text(
        &args.out.join("run.toml"),
        &toml::to_string(&resolved).expect("run config serializes"),
    )?;
    println!(
        "training on {} views ({} rays), {} iterations, lambda_s {} lambda_r {}{}",
        train_split.views.len(),
        data.len(),
        cfg.iterations,
        cfg.weights.lambda_s,
        cfg.weights.lambda_r,
        cfg.ablation.map(|a| format!(", ablation {a:?}")).unwrap_or_default()
    );

    let interval = cfg.log_interval;
    let quiet = args.quiet;
    let progress = move |r: &nelf_core::trainer::StepReport| {
        if !quiet && r.iteration % interval == 0 {
            eprintln!(
                "it {:>7}  lp {:.4e}  ls {:.4e}  lr {:.4e}  total {:.4e}",
                r.iteration, r.lp, r.ls, r.lr, r.total
            );
        }
    };
    let outcome = train(
        &cfg,
        &data,
        TrainOptions {
            out_dir: Some(args.out.clone()),
            resume,
            stop_after: None,
            progress: Some(Box::new(progress)),
        },
    )?;
    if let Some(last) = outcome.checkpoint_paths.last() {
        println!("final checkpoint {}", last.display());
    }
    Ok(outcome.checkpoint)
}

pub enum PoseSource {
    Inline(PoseSpec),
    File(PathBuf),
    Path {
        data: PathBuf,
        from: String,
        to: String,
        frames: usize,
    },
}

pub fn find_view(manifest: &DatasetManifest, id: &str) -> Result<CameraPose, CliError> {
    manifest
        .views
        .iter()
        .find(|v| v.id == id)
        .map(|v| v.pose.clone())
        .ok_or_else(|| CliError::Validation(format!("no view `{id}` in {}", manifest.dir.display())))
}

pub fn resolve_poses(source: &PoseSource, intrinsics: Intrinsics) -> Result<Vec<CameraPose>, CliError> {
    match source {
        PoseSource::Inline(spec) => Ok(vec![spec.resolve(intrinsics)?]),
        PoseSource::File(path) => load_pose_file(path, intrinsics),
        PoseSource::Path { data, from, to, frames } => {
            if *frames == 0 {
                return Err(CliError::Validation("--frames must be at least 1".into()));
            }
            let manifest = load_manifest(data)?;
            let a = find_view(&manifest, from)?;
            let b = find_view(&manifest, to)?;
            Ok(interpolate_path(&a, &b, *frames))
        }
    }
}

pub struct RenderArgs {
    pub checkpoint: PathBuf,
    pub poses: PoseSource,
    pub intrinsics: Intrinsics,
    pub options: RenderOptions,
    pub out: PathBuf,
}

/// Writes `frame_NNNN.png` per pose and `timing.csv`.
pub fn cmd_render(args: RenderArgs) -> Result<Vec<PathBuf>, CliError> {
    let ckpt = read_checkpoint(&args.checkpoint)?;
    let intrinsics = args.intrinsics.or(Intrinsics::from_defaults(ckpt.meta.camera));
    let poses = resolve_poses(&args.poses, intrinsics)?;
    create_dir(&args.out)?;
    let mut timing = String::from("frame,width,height,evals,marching_steps,ms\n");
    let mut paths = Vec::new();
    for (i, pose) in poses.into_iter().enumerate() {
        let req = RenderRequest::new(pose.clone(), pose.width, pose.height)?;
        let (img, stats) = render(&ckpt.model, &req, &args.options);
        let ms = stats.wall_time.as_secs_f64() * 1e3;
        let _ = writeln!(timing, "{i},{},{},{},0,{ms:.3}", req.width, req.height, stats.evals);
        println!(
            "frame {i}: {}x{} evals {} out-of-field {} {ms:.2} ms",
            req.width, req.height, stats.evals, stats.out_of_field
        );
        let path = args.out.join(format!("frame_{i:04}.png"));
        save_image(&img, &path)?;
        paths.push(path);
    }
    write_text(&args.out.join("timing.csv"), &timing)?;
    Ok(paths)
}

pub struct EvalArgs {
    pub checkpoint: PathBuf,
    pub data: PathBuf,
    pub stride: Option<usize>,
    pub out: PathBuf,
    pub heatmaps: bool,
    pub renders: bool,
    pub options: RenderOptions,
}

/// Writes `eval.csv`, plus `diff_<view>.png` and `render_<view>.png` on request.
pub fn cmd_eval(args: EvalArgs) -> Result<nelf_core::metrics::EvalReport, CliError> {
    let ckpt = read_checkpoint(&args.checkpoint)?;
    let (_, test) = splits(&args.data, args.stride)?;
    let views = test
        .views
        .iter()
        .map(|v| Ok((v.id.clone(), v.pose.clone(), load_image(&v.image)?)))
        .collect::<Result<Vec<_>, nelf_core::Error>>()?;
    let (report, images) = evaluate_views(&ckpt.model, &views, &args.options)?;
    create_dir(&args.out)?;
    report.write_csv(&args.out.join("eval.csv"))?;
    for ((id, _, reference), img) in views.iter().zip(&images) {
        if args.heatmaps {
            save_image(&img.difference_heatmap(reference)?, &args.out.join(format!("diff_{id}.png")))?;
        }
        if args.renders {
            save_image(img, &args.out.join(format!("render_{id}.png")))?;
        }
    }
    println!(
        "{} views: mean PSNR {:.3} dB, mean SSIM {:.4}",
        report.views.len(),
        report.mean_psnr,
        report.mean_ssim
    );
    Ok(report)
}

pub struct RefocusArgs {
    pub checkpoint: PathBuf,
    pub pose: PoseSource,
    pub intrinsics: Intrinsics,
    pub depths: Vec<f64>,
    pub aperture: f64,
    pub rays: usize,
    pub seed: u64,
    pub far_bound: f64,
    pub region: Option<[usize; 4]>,
    pub options: RenderOptions,
    pub out: PathBuf,
}

/// Writes `refocus_NN.png` per depth and `sharpness.csv` when a region is given.
pub fn cmd_refocus(args: RefocusArgs) -> Result<Vec<PathBuf>, CliError> {
    let ckpt = read_checkpoint(&args.checkpoint)?;
    let intrinsics = args.intrinsics.or(Intrinsics::from_defaults(ckpt.meta.camera));
    let poses = resolve_poses(&args.pose, intrinsics)?;
    let [pose] = poses.as_slice() else {
        return Err(CliError::Validation("refocus takes exactly one pose".into()));
    };
    if args.depths.is_empty() {
        return Err(CliError::Validation("give at least one --depth".into()));
    }
    create_dir(&args.out)?;
    let mut csv = String::from("depth,gradient_energy\n");
    let mut paths = Vec::new();
    for (i, &depth) in args.depths.iter().enumerate() {
        let req = RefocusRequest {
            pose: pose.clone(),
            focus_depth: depth,
            aperture_radius: args.aperture,
            rays_per_pixel: args.rays,
            seed: args.seed,
            far_bound: args.far_bound,
        };
        let (img, stats) = refocus(&ckpt.model, &req, &args.options)?;
        let path = args.out.join(format!("refocus_{i:02}.png"));
        save_image(&img, &path)?;
        let mut line = format!(
            "depth {depth}: {} evals {:.2} ms",
            stats.evals,
            stats.wall_time.as_secs_f64() * 1e3
        );
        if let Some([x0, y0, x1, y1]) = args.region {
            if !(x0 < x1 && y0 < y1 && x1 <= img.width() && y1 <= img.height()) {
                return Err(CliError::Validation(format!(
                    "region {x0},{y0},{x1},{y1} is empty or outside the {}x{} image",
                    img.width(),
                    img.height()
                )));
            }
            let e = gradient_energy(&img, (x0, y0, x1, y1));
            let _ = writeln!(csv, "{depth},{e:.9}");
            let _ = write!(line, " sharpness {e:.6}");
        }
        println!("{line}");
        paths.push(path);
    }
    if args.region.is_some() {
        write_text(&args.out.join("sharpness.csv"), &csv)?;
    }
    Ok(paths)
}
