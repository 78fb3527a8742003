//! Parallel versus sequential timings of the main kernels.
//!
//! Each kernel runs inside a one-thread rayon pool and inside the default
//! pool. Building with `--no-default-features` compiles the library
//! without rayon; the group names then carry a `sequential-build` prefix.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use ndarray::Array2;
use rayon::ThreadPool;

use scalesteer::detector::{Detector, DetectorConfig};
use scalesteer::evalkit::{default_log_sigmas, log_baseline};
use scalesteer::frame::{analyze, FilterBank, MeyerProfile, RadialNorm};
use scalesteer::multipliers::{MultiplierBank, TrigMultiplierSpec};
use scalesteer::par::is_parallel;
use scalesteer::simdata::{gen_scene, FbmParams, SceneParams};

fn pools() -> Vec<(String, ThreadPool)> {
    let default = rayon::current_num_threads();
    let mut out = vec![(
        "1-thread".to_string(),
        rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap(),
    )];
    if default > 1 {
        out.push((
            format!("{default}-threads"),
            rayon::ThreadPoolBuilder::new()
                .num_threads(default)
                .build()
                .unwrap(),
        ));
    }
    out
}

fn group_name(kernel: &str) -> String {
    if is_parallel() {
        kernel.to_string()
    } else {
        format!("sequential-build/{kernel}")
    }
}

fn scene(size: usize) -> Array2<f64> {
    let p = SceneParams {
        rows: size,
        cols: size,
        ..SceneParams::default()
    };
    gen_scene(
        5,
        &p,
        &FbmParams {
            std: 2.0,
            ..FbmParams::default()
        },
    )
    .unwrap()
    .1
}

fn bench_analyze(c: &mut Criterion) {
    let mut g = c.benchmark_group(group_name("analyze"));
    for n in [128usize, 256] {
        let profile = MeyerProfile::default();
        let j = FilterBank::max_scales(n, n, &profile);
        let bank = FilterBank::new(n, j, profile, RadialNorm::Euclidean).unwrap();
        let m = MultiplierBank::evaluate(&TrigMultiplierSpec::bspline_nine(), bank.grid(), 1.0);
        let img = scene(n);
        for (label, pool) in pools() {
            g.bench_with_input(BenchmarkId::new(label, n), &img, |b, img| {
                b.iter(|| pool.install(|| analyze(img, &bank, Some(&m)).unwrap()))
            });
        }
    }
    g.finish();
}

fn bench_detect(c: &mut Criterion) {
    let mut g = c.benchmark_group(group_name("detect"));
    g.sample_size(10);
    let n = 512;
    let img = scene(n);
    let config = DetectorConfig::default();
    let det = Detector::new(config.clone(), n, n, None).unwrap();
    let sigmas = default_log_sigmas();
    for (label, pool) in pools() {
        g.bench_function(BenchmarkId::new(format!("multichannel/{label}"), n), |b| {
            b.iter(|| pool.install(|| det.detect(&img).unwrap()))
        });
        g.bench_function(BenchmarkId::new(format!("log/{label}"), n), |b| {
            b.iter(|| pool.install(|| log_baseline(&img, &sigmas, &config).unwrap()))
        });
    }
    g.finish();
}

criterion_group!(benches, bench_analyze, bench_detect);
criterion_main!(benches);
