//! Brute-force oracles for smoothing, edge weights and shortest paths.

use lqglab::geodesics::{path_length, trace_geodesic};
use lqglab::gff::{sample_grid, FieldGrid, SamplerKind};
use lqglab::metric::{build_graph, mollify, point_distance, shortest_paths, MetricGraph};
use lqglab::profile::{restricted_distance, restricted_distance_in};
use lqglab::{GridSpec, LqgParams, Point};
use proptest::prelude::*;

fn spectral(nx: usize, ny: usize, spacing: f64, seed: u64) -> FieldGrid {
    sample_grid(GridSpec::centered(nx, ny, spacing).unwrap(), seed, SamplerKind::Spectral).unwrap()
}

#[test]
fn mollify_matches_direct_convolution() {
    let f = spectral(32, 32, 1.0 / 16.0, 11);
    let eps = 3.0 / 16.0;
    let out = mollify(&f, eps).unwrap();
    let sigma = eps / (2f64.sqrt() * f.grid.spacing);
    let reach = (4.0 * sigma).ceil() as i64;
    let g = |d: i64| if d.abs() <= reach { (-(d * d) as f64 / (2.0 * sigma * sigma)).exp() } else { 0.0 };
    let mut worst: f64 = 0.0;
    for j in 0..32i64 {
        for i in 0..32i64 {
            let (mut num, mut den) = (0.0, 0.0);
            for jp in 0..32i64 {
                let wy = g(j - jp) + if jp > 0 { g(j + jp) } else { 0.0 };
                for ip in 0..32i64 {
                    let w = g(i - ip) * wy;
                    num += w * f.at(ip as usize, jp as usize);
                    den += w;
                }
            }
            worst = worst.max((num / den - out.at(i as usize, j as usize)).abs());
        }
    }
    assert!(worst < 1e-12, "max deviation {worst}");
}

/// All-pairs distances by Floyd–Warshall over independently computed edge weights.
fn floyd(smooth: &FieldGrid, xi: f64, a_eps: f64) -> Vec<Vec<f64>> {
    let g = smooth.grid;
    let n = g.len();
    let mut d = vec![vec![f64::INFINITY; n]; n];
    let h = |i: i64, j: i64| smooth.at(i as usize, j as usize);
    for v in 0..n {
        d[v][v] = 0.0;
        let (i, j) = g.coords(v);
        let (i, j) = (i as i64, j as i64);
        for (di, dj) in [(1, 0), (0, 1), (1, 1), (-1, 1), (-1, 0), (0, -1), (-1, -1), (1, -1)] {
            let (k, l) = (i + di, j + dj);
            if k < 0 || l < 0 || k >= g.nx as i64 || l >= g.ny as i64 {
                continue;
            }
            let w = if di != 0 && dj != 0 {
                let c = (h(i, j) + h(k, l) + h(i, l) + h(k, j)) / 4.0;
                2f64.sqrt() * g.spacing / a_eps * (xi * c).exp()
            } else {
                g.spacing / a_eps * (xi * (h(i, j) + h(k, l)) / 2.0).exp()
            };
            d[v][g.index(k as usize, l as usize)] = w;
        }
    }
    for k in 0..n {
        for a in 0..n {
            for b in 0..n {
                let via = d[a][k] + d[k][b];
                if via < d[a][b] {
                    d[a][b] = via;
                }
            }
        }
    }
    d
}

#[test]
fn dijkstra_matches_floyd_warshall_on_small_lattices() {
    let p = LqgParams::brownian();
    for (n, seed) in [(4usize, 1u64), (16, 2)] {
        let f = spectral(n, n, 1.0 / 8.0, seed).map_values(|v| 2.0 * v).unwrap();
        let smooth = mollify(&f, 1.0 / 8.0).unwrap();
        let graph = MetricGraph::from_smoothed(&smooth, p.xi, 1.0 / 8.0, 0.7, None).unwrap();
        let oracle = floyd(&smooth, p.xi, 0.7);
        for s in 0..graph.len() {
            let t = shortest_paths(&graph, &[s]).unwrap();
            for v in 0..graph.len() {
                assert!((t.dist[v] - oracle[s][v]).abs() <= 1e-12 * oracle[s][v].max(1.0));
            }
        }
        // Several sources: the pointwise minimum.
        let sources = [0, n + 1, graph.len() - 1];
        let t = shortest_paths(&graph, &sources).unwrap();
        for v in 0..graph.len() {
            let best = sources.iter().map(|&s| oracle[s][v]).fold(f64::INFINITY, f64::min);
            assert!((t.dist[v] - best).abs() <= 1e-12 * best.max(1.0));
        }
    }
}

#[test]
fn geodesic_lengths_resum_to_distances() {
    let f = spectral(48, 32, 1.0 / 16.0, 5);
    let p = LqgParams::brownian();
    let graph = build_graph(&f, &p, 2.0 / 16.0, 1.0, None).unwrap();
    let t = shortest_paths(&graph, &[graph.grid.index(20, 10)]).unwrap();
    for v in (0..graph.len()).step_by(37) {
        let path = trace_geodesic(&t, v).unwrap();
        let len = path_length(&path, |a, b| graph.weight(a, b));
        assert!((len - t.dist[v]).abs() <= 1e-12 * t.dist[v].max(1.0));
    }
}

#[test]
fn masks_only_lengthen_distances() {
    let f = spectral(16, 16, 1.0 / 8.0, 9);
    let p = LqgParams::brownian();
    let full = build_graph(&f, &p, 0.25, 1.0, None).unwrap();
    let g = full.grid;
    let mask: Vec<bool> = (0..g.len()).map(|v| g.position(v).dist(Point::new(0.0, 0.0)) < 0.8).collect();
    let masked = build_graph(&f, &p, 0.25, 1.0, Some(mask.clone())).unwrap();
    let s = g.boundary_vertex(0.0).unwrap();
    let (a, b) = (shortest_paths(&full, &[s]).unwrap(), shortest_paths(&masked, &[s]).unwrap());
    for v in 0..g.len() {
        assert!(b.dist[v] >= a.dist[v] - 1e-15);
        if !mask[v] {
            assert!(b.dist[v].is_infinite());
        }
    }
}

#[test]
fn restricted_distance_only_sees_its_half_disk() {
    let f = spectral(64, 32, 1.0 / 16.0, 4);
    let p = LqgParams::brownian();
    let eps = 2.0 / 16.0;
    let c = Point::boundary(0.0);
    let r = 0.5;
    // Changing the field far outside the disk (beyond the smoothing reach) changes nothing.
    let reach = r + 6.0 * eps;
    let g = f.clone().add_function(|q| if q.dist(c) > reach { 3.0 * q.x.sin() + 1.0 } else { 0.0 }).unwrap();
    let (ga, gb) = (build_graph(&f, &p, eps, 1.0, None).unwrap(), build_graph(&g, &p, eps, 1.0, None).unwrap());
    let da = restricted_distance_in(&ga, -0.25, 0.25, c, r).unwrap();
    let db = restricted_distance_in(&gb, -0.25, 0.25, c, r).unwrap();
    assert_eq!(da, db);
    assert_eq!(restricted_distance(&ga, -0.25, 0.25).unwrap(), da);
    // The unrestricted distance can only be shorter.
    let u = ga.grid.boundary_vertex(-0.25).unwrap();
    let v = ga.grid.boundary_vertex(0.25).unwrap();
    assert!(point_distance(&ga, u, v).unwrap() <= da + 1e-15);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn distances_form_a_metric(seed in 0u64..1_000, a in 0usize..256, b in 0usize..256, c in 0usize..256) {
        let f = spectral(16, 16, 1.0 / 8.0, seed);
        let graph = build_graph(&f, &LqgParams::brownian(), 0.25, 1.0, None).unwrap();
        let ta = shortest_paths(&graph, &[a]).unwrap();
        let tb = shortest_paths(&graph, &[b]).unwrap();
        prop_assert!((ta.dist[b] - tb.dist[a]).abs() <= 1e-12 * ta.dist[b].max(1e-300));
        prop_assert!(ta.dist[c] <= ta.dist[b] + tb.dist[c] + 1e-12);
        prop_assert_eq!(ta.dist[a], 0.0);
    }

    #[test]
    fn weyl_scaling_is_exact(seed in 0u64..1_000, c in -3.0f64..3.0, v in 0usize..256) {
        let p = LqgParams::brownian();
        let f = spectral(16, 16, 1.0 / 8.0, seed);
        let base = build_graph(&f, &p, 0.25, 1.0, None).unwrap();
        let shifted = build_graph(&f.clone().add_constant(c).unwrap(), &p, 0.25, 1.0, None).unwrap();
        let (a, b) = (shortest_paths(&base, &[0]).unwrap(), shortest_paths(&shifted, &[0]).unwrap());
        if v != 0 {
            prop_assert!((b.dist[v] - (p.xi * c).exp() * a.dist[v]).abs() <= 1e-12 * b.dist[v]);
        }
    }
}
