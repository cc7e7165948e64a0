use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use nalgebra::Vector2;

use dcac_core::config::ExperimentPreset;
use dcac_core::dynamics::{forward_dynamics, regressor, RegressorVariant};
use dcac_core::{run, ManipulatorParams, RobotState};

fn dynamics(c: &mut Criterion) {
    let theta = ManipulatorParams::default().theta().unwrap();
    let state = RobotState::new(Vector2::new(0.3, -0.7), Vector2::new(1.1, 0.4));
    let tau = Vector2::new(2.0, -1.0);
    c.bench_function("forward_dynamics", |b| {
        b.iter(|| forward_dynamics(black_box(&state), &tau, &Vector2::zeros(), &theta).unwrap())
    });
    let zdot = Vector2::new(-0.4, 0.9);
    let s = Vector2::new(0.2, 0.1);
    c.bench_function("regressor", |b| {
        b.iter(|| regressor(black_box(&state.q), &state.qdot, &zdot, &s, 10.0, RegressorVariant::WithFilterPole))
    });
}

fn presets(c: &mut Criterion) {
    let mut group = c.benchmark_group("preset_1s");
    group.sample_size(20);
    for preset in [ExperimentPreset::Fig1, ExperimentPreset::Fig2, ExperimentPreset::Fig5] {
        let mut cfg = preset.config();
        cfg.t_end = 1.0;
        group.bench_function(preset.name(), |b| b.iter(|| run(black_box(&cfg)).unwrap()));
    }
    group.finish();
}

criterion_group!(benches, dynamics, presets);
criterion_main!(benches);
