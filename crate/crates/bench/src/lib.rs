//! Criterion benchmarks for the solvers in hjsing-core.
//!
//! Run with `cargo bench -p hjsing-bench`. The weak KAM and tracing groups
//! take seconds per iteration and use small sample counts.

use std::hint::black_box;
use std::time::Duration;

use criterion::Criterion;
use hjsing_core::models::{free_particle, harmonic, pendulum};
use hjsing_core::{
    fixture_by_id, fundamental_solution, fundamental_solution_torus, model_by_id,
    reachable_gradients, sup_convolution, trace_arc, weak_kam_solve, ConvolutionOptions,
    PlanarKernel, SamplingOptions, TraceOptions, WeakKamOptions,
};
use nalgebra::dvector;

pub fn fundamental(c: &mut Criterion) {
    let mut g = c.benchmark_group("fundamental");
    let free = free_particle(2);
    g.bench_function("free_2d", |b| {
        b.iter(|| {
            fundamental_solution(
                &free,
                &dvector![0.0, 0.0],
                black_box(&dvector![1.0, 0.5]),
                0.5,
            )
            .unwrap()
        })
    });
    let osc = harmonic(1, 1.0);
    g.bench_function("harmonic_1d", |b| {
        b.iter(|| {
            fundamental_solution(&osc, &dvector![-0.3], black_box(&dvector![0.8]), 1.5).unwrap()
        })
    });
    let pend = pendulum(1);
    g.bench_function("pendulum_torus", |b| {
        b.iter(|| {
            fundamental_solution_torus(&pend, &dvector![0.9], black_box(&dvector![0.05]), 0.2)
                .unwrap()
        })
    });
    g.finish();
}

pub fn convolution(c: &mut Criterion) {
    let u = fixture_by_id("two_source_eikonal").unwrap();
    let k = PlanarKernel::new(model_by_id("eikonal", 2).unwrap());
    let opts = ConvolutionOptions::default();
    c.bench_function("sup_convolution/two_source", |b| {
        b.iter(|| sup_convolution(&u, &k, black_box(&dvector![0.0, 1.0]), 0.05, &opts).unwrap())
    });
    c.bench_function("reachable_gradients/two_source", |b| {
        b.iter(|| {
            reachable_gradients(
                &u,
                black_box(&dvector![0.0, 1.0]),
                &SamplingOptions::default(),
            )
            .unwrap()
        })
    });
}

pub fn long_running(c: &mut Criterion) {
    let mut g = c.benchmark_group("long_running");
    g.sample_size(10).measurement_time(Duration::from_secs(20));
    let u = fixture_by_id("two_source_eikonal").unwrap();
    let k = PlanarKernel::new(model_by_id("eikonal", 2).unwrap());
    g.bench_function("trace/two_source_h0.5", |b| {
        b.iter(|| trace_arc(&u, &k, &dvector![0.0, 1.0], 0.5, &TraceOptions::default()).unwrap())
    });
    let pend = pendulum(1);
    let opts = WeakKamOptions {
        resolution: 128,
        ..WeakKamOptions::default()
    };
    g.bench_function("weak_kam/pendulum_128", |b| {
        b.iter(|| weak_kam_solve(&pend, &opts).unwrap())
    });
    g.finish();
}
