//! Single-worker versus all-core runs of the heaviest stages. Build with
//! `--no-default-features` to measure the sequential fallback instead.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use persona_probe::controls::shuffled_baseline;
use persona_probe::corpus::{make_split, StratifyKey};
use persona_probe::par;
use persona_probe::probe::{labelled_ids, layer_sweep, ProbeConfig, Target};
use persona_probe::synth::{generate, SynthConfig};

fn corpus() -> SynthConfig {
    let mut c = SynthConfig {
        n_examples: 120,
        n_layers: 12,
        hidden_dim: 32,
        tokens_min: 60,
        tokens_max: 90,
        strength_profile: vec![0.0; 12],
        ..SynthConfig::default()
    };
    c.strength_profile[6] = 3.0;
    c
}

fn bench(c: &mut Criterion) {
    let (store, meta, _) = generate(&corpus()).unwrap();
    let split = make_split(&meta, 0.8, StratifyKey::Nationality, 1).unwrap();
    let cfg = ProbeConfig::default();
    let all = std::thread::available_parallelism().map_or(2, |n| n.get().max(2));
    let mode = if par::is_parallel() { "rayon" } else { "sequential" };
    let (ids, y) = labelled_ids(&meta, &split.train_ids, Target::Nationality);
    let x = store.centroid_matrix(&ids, 6).unwrap();
    let classes = Target::Nationality.class_order();

    let mut g = c.benchmark_group(format!("layer_sweep/{mode}"));
    g.sample_size(10);
    for workers in [1, all] {
        g.bench_with_input(BenchmarkId::from_parameter(workers), &workers, |b, &w| {
            b.iter(|| par::with_workers(w, || layer_sweep(&store, &meta, Target::Nationality, &split, &cfg).unwrap()))
        });
    }
    g.finish();

    let mut g = c.benchmark_group(format!("shuffled_baseline/{mode}"));
    g.sample_size(10);
    for workers in [1, all] {
        g.bench_with_input(BenchmarkId::from_parameter(workers), &workers, |b, &w| {
            b.iter(|| par::with_workers(w, || shuffled_baseline(&x, &y, &classes, &cfg, 20, 3).unwrap()))
        });
    }
    g.finish();

    let mut g = c.benchmark_group(format!("synth/{mode}"));
    g.sample_size(10);
    for workers in [1, all] {
        g.bench_with_input(BenchmarkId::from_parameter(workers), &workers, |b, &w| {
            b.iter(|| par::with_workers(w, || generate(&corpus()).unwrap()))
        });
    }
    g.finish();
}

criterion_group!(benches, bench);
criterion_main!(benches);
