use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use tdram_bench::{cell, rc_ladder};
use tdram_core::montecarlo::evaluate;
use tdram_core::*;

fn device(c: &mut Criterion) {
    let dev = CntfetDevice::new(Polarity::N, Chirality::zigzag(19).unwrap()).with_tubes(4);
    c.bench_function("drain_current", |b| {
        b.iter(|| drain_current(black_box(&dev), black_box(0.7), black_box(0.9), 25.0))
    });
}

fn netlist(c: &mut Criterion) {
    let (circuit, _, _) = cell(&[0, 1, 2]);
    let text = circuit.to_netlist();
    c.bench_function("parse_cell_deck", |b| {
        b.iter(|| parse_netlist(black_box(&text)))
    });
}

fn transient_runs(c: &mut Criterion) {
    let mut g = c.benchmark_group("transient");
    g.sample_size(10);
    for stages in [1, 4, 16] {
        let ladder = rc_ladder(stages);
        let cfg = SolverConfig::default().with_dt(1e-12).with_stop(2e-9);
        g.bench_with_input(BenchmarkId::new("rc_ladder", stages), &ladder, |b, l| {
            b.iter(|| transient(l, &cfg).unwrap())
        });
    }
    let (circuit, _, cfg) = cell(&[0, 1, 2]);
    g.bench_function("cell_012", |b| {
        b.iter(|| transient(&circuit, &cfg).unwrap())
    });
    g.finish();
}

fn mc_trial(c: &mut Criterion) {
    let cfg = McConfig::default();
    let params = TrialParams::nominal(&cfg.cell, cfg.temperature_c);
    let mut g = c.benchmark_group("montecarlo");
    g.sample_size(10);
    g.bench_function("one_trial", |b| {
        b.iter(|| evaluate(&cfg, black_box(&params)).unwrap())
    });
    g.finish();
}

criterion_group!(benches, device, netlist, transient_runs, mc_trial);
criterion_main!(benches);
