use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use lqglab::gff::{
    covariance_matrix, sample_grid, CircleProbe, FieldSource, KernelQuadrature, ProbeSet, SamplerKind, SpectralSampler,
};
use lqglab::metric::{build_graph, mollify, shortest_paths};
use lqglab::{GridSpec, LqgParams};
use std::hint::black_box;

fn grid(nx: usize) -> GridSpec {
    GridSpec::centered(nx, nx / 2, 2.0 / nx as f64).unwrap()
}

fn spectral(c: &mut Criterion) {
    let mut g = c.benchmark_group("spectral_sample");
    for nx in [256, 512, 1024] {
        let sampler = SpectralSampler::new(grid(nx)).unwrap();
        g.bench_with_input(BenchmarkId::from_parameter(nx), &sampler, |b, s| b.iter(|| s.sample(black_box(7))));
    }
    g.finish();
}

fn smoothing(c: &mut Criterion) {
    let mut g = c.benchmark_group("mollify");
    for nx in [256, 512, 1024] {
        let spec = grid(nx);
        let field = sample_grid(spec, 1, SamplerKind::Spectral).unwrap();
        g.bench_with_input(BenchmarkId::from_parameter(nx), &field, |b, f| {
            b.iter(|| mollify(f, 2.0 * spec.spacing).unwrap())
        });
    }
    g.finish();
}

fn dijkstra(c: &mut Criterion) {
    let mut g = c.benchmark_group("shortest_paths");
    g.sample_size(20);
    let params = LqgParams::brownian();
    for nx in [256, 512, 1024] {
        let spec = grid(nx);
        let field = sample_grid(spec, 1, SamplerKind::Spectral).unwrap().normalize().unwrap();
        let graph = build_graph(&field, &params, 2.0 * spec.spacing, 1.0, None).unwrap();
        let source = spec.boundary_vertex(0.0).unwrap();
        g.bench_with_input(BenchmarkId::from_parameter(nx), &graph, |b, gr| {
            b.iter(|| shortest_paths(gr, black_box(&[source])).unwrap())
        });
    }
    g.finish();
}

fn covariance(c: &mut Criterion) {
    let mut g = c.benchmark_group("covariance_matrix");
    g.sample_size(10);
    let quad = KernelQuadrature::default();
    for n in [64, 256] {
        let probes: Vec<CircleProbe> =
            (0..n).map(|k| CircleProbe::semicircle(-0.5 + k as f64 / n as f64, 1.0 / n as f64).unwrap()).collect();
        let set = ProbeSet::new(probes).unwrap();
        g.bench_with_input(BenchmarkId::from_parameter(n), &set, |b, s| b.iter(|| covariance_matrix(s, &quad)));
    }
    g.finish();
}

criterion_group!(benches, spectral, smoothing, dijkstra, covariance);
criterion_main!(benches);
