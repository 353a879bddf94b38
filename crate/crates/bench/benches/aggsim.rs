use std::hint::black_box;

use aggsim_bench::{cluster, link_params};
use aggsim_core::agg_protocol::{decades, derive_k1, scaling_experiment, RateConstants};
use aggsim_core::grid_routing::{build_tree, GridNetwork};
use aggsim_core::phy_channel::{sample_channel, ChannelParams};
use aggsim_core::trc_link::compute_x;
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

fn channel(c: &mut Criterion) {
    let mut group = c.benchmark_group("sample_channel");
    for ratio in [8.0, 64.0, 256.0] {
        let p = link_params(ratio);
        group.bench_with_input(BenchmarkId::from_parameter(ratio), &p, |b, p| {
            let mut seed = 0u64;
            b.iter(|| {
                seed += 1;
                sample_channel(p, seed).unwrap()
            })
        });
    }
    group.finish();
}

fn decision_statistic(c: &mut Criterion) {
    let mut group = c.benchmark_group("compute_x");
    let p = link_params(64.0);
    for m in [16usize, 64, 256] {
        let channels = cluster(&p, m, 7);
        group.bench_with_input(BenchmarkId::from_parameter(m), &channels, |b, ch| {
            b.iter(|| compute_x(black_box(ch), 1.0, &p).unwrap())
        });
    }
    group.finish();
}

fn routing(c: &mut Criterion) {
    let mut group = c.benchmark_group("build_tree");
    group.sample_size(20);
    for side in [51usize, 101, 201] {
        let net = GridNetwork::new(side).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(side * side), &net, |b, net| {
            b.iter(|| build_tree(black_box(net)))
        });
    }
    group.finish();
}

fn interference_constant(c: &mut Criterion) {
    let mut group = c.benchmark_group("derive_k1");
    for alpha in [2.5, 3.0, 4.0] {
        group.bench_with_input(BenchmarkId::from_parameter(alpha), &alpha, |b, &alpha| {
            b.iter(|| derive_k1(1, alpha).unwrap())
        });
    }
    group.finish();
}

fn scaling(c: &mut Criterion) {
    let params = ChannelParams::new(1.0, 1.0, 8).with_alpha(3.0);
    let consts = RateConstants::derive(&params).unwrap();
    let ns = decades(4, 12);
    c.bench_function("scaling_sweep", |b| {
        b.iter(|| scaling_experiment(black_box(&ns), 0.35, 0.3, &consts, &params).unwrap())
    });
}

criterion_group!(
    benches,
    channel,
    decision_statistic,
    routing,
    interference_constant,
    scaling
);
criterion_main!(benches);
