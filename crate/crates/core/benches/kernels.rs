use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use skyrme_core::coeffs::verify_coeffs_fd_with;
use skyrme_core::grid::{FieldForm, FieldState, RadialGrid};
use skyrme_core::model::ModelParams;
use skyrme_core::physical::{evolve_physical, EvolveControls};
use skyrme_core::similarity::{shoot_t, Perturbation, Projection, ShootControls, SimControls, SimilarityGrid};
use skyrme_core::spectral::assemble_l_with;
use skyrme_core::Execution;
use std::hint::black_box;

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn physical_rhs(c: &mut Criterion) {
    let mut group = c.benchmark_group("physical_steps");
    group.sample_size(10);
    let grid = RadialGrid::new(6.0, 16384).unwrap();
    let init = FieldState::from_fn(FieldForm::Angle, &grid, |r| (0.5 * r * (-r * r).exp(), 0.0));
    let params = ModelParams::full(1.0, 1.0, 1.0);
    let t_end = 32.0 * 0.5 * grid.spacing;
    for (name, exec) in MODES {
        let controls = EvolveControls { snapshot_stride: 1 << 20, exec, ..EvolveControls::default() };
        group.bench_function(BenchmarkId::new(name, grid.n), |b| {
            b.iter(|| evolve_physical(&params, &grid, black_box(&init), t_end, 0.5, &controls).unwrap())
        });
    }
    group.finish();
}

fn coefficient_sweep(c: &mut Criterion) {
    let mut group = c.benchmark_group("coefficient_sweep");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_function(BenchmarkId::new(name, 400), |b| b.iter(|| verify_coeffs_fd_with(exec, black_box(400), 1e-6).unwrap()));
    }
    group.finish();
}

fn spectrum_assembly(c: &mut Criterion) {
    let mut group = c.benchmark_group("spectrum_assembly");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_function(BenchmarkId::new(name, 192), |b| b.iter(|| assemble_l_with(exec, black_box(192), true).unwrap()));
    }
    group.finish();
}

fn shooting(c: &mut Criterion) {
    let mut group = c.benchmark_group("shooting");
    group.sample_size(10);
    let g = SimilarityGrid::new(50).unwrap();
    let proj = Projection::from_grid(&g).unwrap();
    let v = Perturbation::Gaussian { a1: 1e-3, a2: 0.0, width: 0.5 };
    // Auto keeps the per-step loops of a small grid sequential and runs the bracket endpoints concurrently.
    for (name, exec) in [("sequential", Execution::Sequential), ("parallel", Execution::Auto)] {
        let controls = ShootControls { sim: SimControls { exec, record_norm: false, ..SimControls::default() }, ..ShootControls::default() };
        group.bench_function(BenchmarkId::new(name, g.n), |b| {
            b.iter(|| shoot_t(&g, black_box(&v), 0.05, (0.9, 1.1), 1e-4, &controls, &proj).unwrap())
        });
    }
    group.finish();
}

criterion_group!(kernels, physical_rhs, coefficient_sweep, spectrum_assembly, shooting);
criterion_main!(kernels);
