//! Parallel vs sequential throughput for the two data-parallel hot paths:
//! regime scans and phase-scrambling ensembles. Build with the default
//! `parallel` feature to compare rayon against the single-thread twins.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use num_complex::Complex64;
use std::f64::consts::FRAC_1_SQRT_2;

use sgsim::coherence::{
    scrambling_ensemble, scrambling_ensemble_sequential, JitterSpec, JitterTarget,
};
use sgsim::regime::{scan, scan_sequential, PointSpec, ScanContext};
use sgsim::{GaussianPacket, PhysParams, SpinWeights};

fn equal_spins() -> SpinWeights {
    let h = Complex64::new(FRAC_1_SQRT_2, 0.0);
    SpinWeights::new(h, h).unwrap()
}

fn sweep_points(n_per_axis: usize) -> Vec<PointSpec> {
    let h = Complex64::new(FRAC_1_SQRT_2, 0.0);
    let mut specs = Vec::with_capacity(n_per_axis * n_per_axis);
    for i in 0..n_per_axis {
        for j in 0..n_per_axis {
            specs.push(PointSpec {
                mass: 1.0,
                lambda: 1.0,
                epsilon: 0.05 * (i + 1) as f64,
                x0: 0.0,
                p0: 0.0,
                sigma: 1.0,
                magnet_length: 10.0,
                velocity: 1.0 + j as f64,
                delta_p: None,
                a: h,
                b: h,
            });
        }
    }
    specs
}

fn bench_scan(c: &mut Criterion) {
    let mut group = c.benchmark_group("regime_scan");
    for points_per_axis in [4usize, 8] {
        let specs = sweep_points(points_per_axis);
        // keep per-point ensembles small so the bench exercises the map,
        // not a single giant ensemble
        let ctx = ScanContext {
            n_samples: 2000,
            ..ScanContext::default()
        };
        group.bench_with_input(
            BenchmarkId::new("parallel", specs.len()),
            &specs,
            |b, specs| b.iter(|| scan(specs, &ctx)),
        );
        group.bench_with_input(
            BenchmarkId::new("sequential", specs.len()),
            &specs,
            |b, specs| b.iter(|| scan_sequential(specs, &ctx)),
        );
    }
    group.finish();
}

fn bench_ensemble(c: &mut Criterion) {
    let packet = GaussianPacket::new(0.0, 0.0, 1.0).unwrap();
    let params = PhysParams::new(1.0, 1.0, 0.5).unwrap();
    let spins = equal_spins();
    let jitter = JitterSpec::new(JitterTarget::TransitTime, 0.01).unwrap();

    let mut group = c.benchmark_group("scrambling_ensemble");
    for n in [10_000usize, 100_000] {
        group.bench_with_input(BenchmarkId::new("parallel", n), &n, |b, &n| {
            b.iter(|| scrambling_ensemble(&packet, &params, &spins, 2.0, &jitter, n, 17).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("sequential", n), &n, |b, &n| {
            b.iter(|| {
                scrambling_ensemble_sequential(&packet, &params, &spins, 2.0, &jitter, n, 17)
                    .unwrap()
            })
        });
    }
    group.finish();
}

criterion_group!(benches, bench_scan, bench_ensemble);
criterion_main!(benches);
