//! `nelf`: generate synthetic light fields, train, render, evaluate and refocus.
//!
//! Exit codes: 0 success, 2 invalid input, 3 runtime or numeric failure,
//! 4 I/O failure.

mod commands;
mod config;
mod error;
mod poses;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use nelf_core::data::SynthRig;
use nelf_core::renderer::RenderOptions;
use nelf_core::trainer::Ablation;

use commands::{EvalArgs, PoseSource, RefocusArgs, RenderArgs, TrainArgs};
use config::{RunConfig, TrainOverrides};
use error::CliError;
use poses::{parse_list, Intrinsics, PoseSpec};

#[derive(Parser)]
#[command(name = "nelf", version, about = "Neural 4D light fields: train, render, evaluate and refocus")]
struct Cli {
    /// Worker threads; 0 picks one per core.
    #[arg(long, global = true, env = "NELF_THREADS", default_value_t = 0)]
    threads: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Render a synthetic scene from a planar camera grid and write a dataset.
    MakeSynth(MakeSynthCmd),
    /// Train a light field network on a dataset.
    Train(TrainCmd),
    /// Render views from a checkpoint.
    Render(RenderCmd),
    /// Score a checkpoint on a dataset's test split.
    Eval(EvalCmd),
    /// Synthetic-aperture refocusing at one or more depths.
    Refocus(RefocusCmd),
}

#[derive(Args)]
struct MakeSynthCmd {
    /// Built-in scene name (two-plane-checker, sine-card) or a scene TOML file.
    #[arg(long, default_value = "two-plane-checker")]
    scene: String,
    /// Output dataset directory.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 5)]
    rows: usize,
    #[arg(long, default_value_t = 5)]
    cols: usize,
    #[arg(long, default_value_t = 32)]
    width: usize,
    #[arg(long, default_value_t = 32)]
    height: usize,
    /// Distance between neighboring cameras.
    #[arg(long, default_value_t = 0.1)]
    spacing: f64,
    /// Focal length in pixels.
    #[arg(long, default_value_t = 32.0)]
    focal: f64,
}

#[derive(Clone, Copy, ValueEnum)]
enum AblateArg {
    NoFsl,
    NoRbl,
}

#[derive(Args)]
struct TrainCmd {
    /// Run configuration file (preset, [data], [train] overlay, [render]).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Dataset directory or manifest; overrides [data] dir.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Train on every stride-th grid row and column; overrides [data] stride.
    #[arg(long)]
    stride: Option<usize>,
    /// paper or desk; overrides the config's preset.
    #[arg(long)]
    preset: Option<String>,
    /// Drop one regularizer.
    #[arg(long, value_enum)]
    ablate: Option<AblateArg>,
    /// Directory for checkpoints, logs and the resolved run.toml.
    #[arg(long)]
    out: PathBuf,
    /// Continue from this checkpoint.
    #[arg(long)]
    resume: Option<PathBuf>,
    #[arg(long)]
    iterations: Option<u64>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    lambda_s: Option<f64>,
    #[arg(long)]
    lambda_r: Option<f64>,
    /// Ray bundle angle in degrees.
    #[arg(long)]
    theta: Option<f64>,
    #[arg(long)]
    checkpoint_interval: Option<u64>,
    /// Four seeds: init,shuffle,virtual_camera,bundle.
    #[arg(long, value_parser = parse_seeds)]
    seeds: Option<[u64; 4]>,
    /// No per-iteration progress on stderr.
    #[arg(long)]
    quiet: bool,
}

#[derive(Args)]
struct PoseArgs {
    /// Camera position x,y,z.
    #[arg(long, value_parser = parse_list::<3>, group = "pose_source", allow_hyphen_values = true)]
    position: Option<[f64; 3]>,
    /// Point the camera looks at (default: straight down +z).
    #[arg(long, value_parser = parse_list::<3>, requires = "position", allow_hyphen_values = true)]
    look_at: Option<[f64; 3]>,
    /// TOML file with [[pose]] entries.
    #[arg(long, group = "pose_source")]
    poses: Option<PathBuf>,
    /// Training view id where an interpolated path starts (needs --data and --to).
    #[arg(long, group = "pose_source", requires_all = ["to", "data"])]
    from: Option<String>,
    /// Training view id where the path ends.
    #[arg(long, requires = "from")]
    to: Option<String>,
    /// Frames along the path.
    #[arg(long, default_value_t = 2)]
    frames: usize,
    /// Dataset holding the --from/--to views.
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long)]
    width: Option<usize>,
    #[arg(long)]
    height: Option<usize>,
    /// Focal length in pixels.
    #[arg(long)]
    focal: Option<f64>,
}

impl PoseArgs {
    fn source(&self) -> Result<PoseSource, CliError> {
        if let Some(position) = self.position {
            return Ok(PoseSource::Inline(PoseSpec {
                position,
                look_at: self.look_at,
                ..Default::default()
            }));
        }
        if let Some(path) = &self.poses {
            return Ok(PoseSource::File(path.clone()));
        }
        if let (Some(from), Some(to), Some(data)) = (&self.from, &self.to, &self.data) {
            return Ok(PoseSource::Path {
                data: data.clone(),
                from: from.clone(),
                to: to.clone(),
                frames: self.frames,
            });
        }
        Err(CliError::Validation(
            "give a pose: --position, --poses or --from/--to with --data".into(),
        ))
    }

    fn intrinsics(&self) -> Intrinsics {
        Intrinsics {
            focal_px: self.focal,
            width: self.width,
            height: self.height,
        }
    }
}

#[derive(Args)]
struct RenderOpts {
    /// Clamp out-of-field coordinates to the normalization box.
    #[arg(long)]
    clamp: bool,
    /// Run configuration whose [render] section supplies the defaults.
    #[arg(long)]
    config: Option<PathBuf>,
}

impl RenderOpts {
    fn options(&self) -> Result<RenderOptions, CliError> {
        let mut opts = match &self.config {
            Some(path) => RunConfig::load(path)?.render.options(),
            None => RenderOptions::default(),
        };
        opts.clamp_to_box |= self.clamp;
        Ok(opts)
    }
}

#[derive(Args)]
struct RenderCmd {
    #[arg(long)]
    checkpoint: PathBuf,
    #[command(flatten)]
    pose: PoseArgs,
    #[command(flatten)]
    render: RenderOpts,
    /// Output directory for frame_NNNN.png and timing.csv.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EvalCmd {
    #[arg(long)]
    checkpoint: PathBuf,
    #[arg(long)]
    data: PathBuf,
    /// Evaluate on the views left out by training with this stride.
    #[arg(long)]
    stride: Option<usize>,
    /// Output directory for eval.csv and images.
    #[arg(long)]
    out: PathBuf,
    /// Write per-view |difference| heat maps.
    #[arg(long)]
    heatmaps: bool,
    /// Write the rendered test views.
    #[arg(long)]
    renders: bool,
    #[command(flatten)]
    render: RenderOpts,
}

#[derive(Args)]
struct RefocusCmd {
    #[arg(long)]
    checkpoint: PathBuf,
    #[command(flatten)]
    pose: PoseArgs,
    /// Focus depth (world z); a comma-separated list renders a sweep.
    #[arg(long, value_delimiter = ',', required = true)]
    depth: Vec<f64>,
    /// Lens radius in scene units; 0 gives a pinhole image.
    #[arg(long, default_value_t = 0.05)]
    aperture: f64,
    /// Rays averaged per pixel.
    #[arg(long, default_value_t = 16)]
    rays: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Focus depths must lie before this z.
    #[arg(long, default_value_t = f64::INFINITY)]
    far_bound: f64,
    /// Region x0,y0,x1,y1 whose gradient energy is written to sharpness.csv.
    #[arg(long, value_parser = parse_region)]
    region: Option<[usize; 4]>,
    #[command(flatten)]
    render: RenderOpts,
    /// Output directory for refocus_NN.png.
    #[arg(long)]
    out: PathBuf,
}

fn parse_seeds(s: &str) -> Result<[u64; 4], String> {
    let v: Vec<u64> = s
        .split(',')
        .map(|p| p.trim().parse::<u64>().map_err(|e| format!("`{p}`: {e}")))
        .collect::<Result<_, _>>()?;
    v.try_into().map_err(|_| "expected four comma-separated seeds".to_string())
}

fn parse_region(s: &str) -> Result<[usize; 4], String> {
    let v: Vec<usize> = s
        .split(',')
        .map(|p| p.trim().parse::<usize>().map_err(|e| format!("`{p}`: {e}")))
        .collect::<Result<_, _>>()?;
    v.try_into().map_err(|_| "expected x0,y0,x1,y1".to_string())
}

fn run(cli: Cli) -> Result<(), CliError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads)
        .build_global()
        .map_err(|e| CliError::Runtime(format!("thread pool: {e}")))?;
    match cli.command {
        Command::MakeSynth(c) => {
            let rig = SynthRig {
                rows: c.rows,
                cols: c.cols,
                width: c.width,
                height: c.height,
                spacing: c.spacing,
                focal_px: c.focal,
            };
            commands::make_synth(&c.scene, &rig, &c.out)?;
        }
        Command::Train(c) => {
            let mut run = match &c.config {
                Some(path) => RunConfig::load(path)?,
                None => RunConfig::default(),
            };
            if let Some(p) = c.preset {
                run.preset = p;
            }
            if let Some(d) = c.data {
                run.data.dir = Some(d);
            }
            if let Some(s) = c.stride {
                run.data.stride = Some(s);
            }
            let overrides = TrainOverrides {
                iterations: c.iterations,
                batch_size: c.batch_size,
                lambda_s: c.lambda_s,
                lambda_r: c.lambda_r,
                theta_deg: c.theta,
                checkpoint_interval: c.checkpoint_interval,
                seeds: c.seeds,
                ablation: c.ablate.map(|a| match a {
                    AblateArg::NoFsl => Ablation::NoFsl,
                    AblateArg::NoRbl => Ablation::NoRbl,
                }),
            };
            commands::cmd_train(TrainArgs {
                run,
                overrides,
                out: c.out,
                resume: c.resume,
                quiet: c.quiet,
            })?;
        }
        Command::Render(c) => {
            commands::cmd_render(RenderArgs {
                checkpoint: c.checkpoint,
                poses: c.pose.source()?,
                intrinsics: c.pose.intrinsics(),
                options: c.render.options()?,
                out: c.out,
            })?;
        }
        Command::Eval(c) => {
            commands::cmd_eval(EvalArgs {
                checkpoint: c.checkpoint,
                data: c.data,
                stride: c.stride,
                out: c.out,
                heatmaps: c.heatmaps,
                renders: c.renders,
                options: c.render.options()?,
            })?;
        }
        Command::Refocus(c) => {
            commands::cmd_refocus(RefocusArgs {
                checkpoint: c.checkpoint,
                pose: c.pose.source()?,
                intrinsics: c.pose.intrinsics(),
                depths: c.depth,
                aperture: c.aperture,
                rays: c.rays,
                seed: c.seed,
                far_bound: c.far_bound,
                region: c.region,
                options: c.render.options()?,
                out: c.out,
            })?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
