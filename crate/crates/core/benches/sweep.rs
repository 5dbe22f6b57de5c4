use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use ttd_aoa::array::generate_observation;
use ttd_aoa::montecarlo::{run_sweep, Execution};
use ttd_aoa::{
    AngleGrid, ArrayConfig, EstimatorKind, FrequencyGrid, MlEstimator, SignalSpec, SweepConfig,
};

fn small_sweep(execution: Execution) -> SweepConfig {
    SweepConfig {
        trials: 64,
        snr_grid_db: vec![0.0, 10.0],
        m_set: vec![8, 32],
        execution,
        ..SweepConfig::default()
    }
}

fn sweep_execution(c: &mut Criterion) {
    let mut group = c.benchmark_group("run_sweep");
    group.sample_size(10);
    for (name, execution) in [
        ("sequential", Execution::Sequential),
        ("parallel", Execution::Parallel),
    ] {
        let cfg = small_sweep(execution);
        group.bench_with_input(BenchmarkId::from_parameter(name), &cfg, |b, cfg| {
            b.iter(|| run_sweep(black_box(cfg)).unwrap())
        });
    }
    group.finish();
}

fn estimators(c: &mut Criterion) {
    let cfg = ArrayConfig::default();
    let grid = FrequencyGrid::for_array(512, &cfg).unwrap();
    let sig = SignalSpec::unit(cfg.bandwidth);
    let obs = generate_observation(0.1, 0.0, 1, &grid, &sig, &cfg).unwrap();
    let ml = MlEstimator::new(&AngleGrid::default(), &grid, &sig, &cfg).unwrap();
    c.bench_function("ml_estimate_2401x512", |b| {
        b.iter(|| ml.estimate(black_box(&obs)).unwrap())
    });

    let peak_only = SweepConfig {
        estimators: vec![EstimatorKind::Peak],
        ..small_sweep(Execution::Sequential)
    };
    c.bench_function("peak_sweep_sequential", |b| {
        b.iter(|| run_sweep(black_box(&peak_only)).unwrap())
    });
}

criterion_group!(benches, sweep_execution, estimators);
criterion_main!(benches);
