use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use ndarray::Array2;

use nelf_core::data::{builtin_scene, oracle_view, rig_pose, SynthRig};
use nelf_core::losses::fft2d;
use nelf_core::network::{backward, forward};
use nelf_core::renderer::{render, RenderOptions, RenderRequest};
use nelf_core::trainer::{TrainConfig, Trainer, TrainingSet};

fn desk_set(cfg: &TrainConfig) -> (TrainingSet, SynthRig) {
    let scene = builtin_scene("two-plane-checker").unwrap();
    let rig = SynthRig {
        rows: 5,
        cols: 5,
        width: 32,
        height: 32,
        spacing: 0.1,
        focal_px: 32.0,
    };
    let poses: Vec<_> = (0..25).map(|k| rig_pose(&rig, (k / 5) as f64, (k % 5) as f64)).collect();
    let images = poses.iter().map(|p| oracle_view(&scene, p)).collect();
    let ts = TrainingSet::from_views_with(images, poses, scene.st_depth, cfg.loss_resolution, cfg.normalization).unwrap();
    (ts, rig)
}

fn fft(c: &mut Criterion) {
    let x = Array2::from_shape_fn((32, 32), |(i, j)| ((i * 31 + j * 17) % 13) as f64 / 13.0);
    c.bench_function("fft2d 32x32", |b| b.iter(|| fft2d(black_box(x.view())).unwrap()));
}

fn network(c: &mut Criterion) {
    let cfg = TrainConfig::desk();
    let (ts, _) = desk_set(&cfg);
    let trainer = Trainer::new(cfg.clone(), &ts).unwrap();
    let model = trainer.model();
    let x = model.embedding.embed_batch::<f32>(&ts.coords[..cfg.batch_size]);
    c.bench_function("forward 4096 rays", |b| b.iter(|| forward(&model.params, black_box(x.view())).unwrap()));
    c.bench_function("forward+backward 4096 rays", |b| {
        b.iter(|| {
            let tape = forward(&model.params, x.view()).unwrap();
            let d_out = Array2::<f32>::ones(tape.output().raw_dim());
            backward(&model.params, &tape, d_out.view()).unwrap()
        })
    });
}

fn rendering(c: &mut Criterion) {
    let cfg = TrainConfig::desk();
    let (ts, rig) = desk_set(&cfg);
    let model = Trainer::new(cfg, &ts).unwrap().model();
    let pose = rig_pose(&rig, 2.0, 2.0);
    let opts = RenderOptions::default();
    for size in [64, 128] {
        let req = RenderRequest::new(pose.clone(), size, size).unwrap();
        c.bench_function(&format!("render {size}x{size}"), |b| b.iter(|| render(&model, &req, &opts)));
    }
}

fn training(c: &mut Criterion) {
    let cfg = TrainConfig::desk();
    let (ts, _) = desk_set(&cfg);
    let mut group = c.benchmark_group("train step");
    group.sample_size(20);
    group.bench_function("desk, all losses", |b| {
        b.iter_batched(
            || Trainer::new(cfg.clone(), &ts).unwrap(),
            |mut t| t.step().unwrap(),
            BatchSize::LargeInput,
        )
    });
    group.finish();
}

criterion_group!(benches, fft, network, rendering, training);
criterion_main!(benches);
