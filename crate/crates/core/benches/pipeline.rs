use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use geobim_core::footprint::{dbscan, overlap_table, FootprintParams};
use geobim_core::geometry::{tessellate_graph, TessellationOptions};
use geobim_core::pipeline::{load_model, Config};
use geobim_core::step::load_ifc;
use geobim_core::ExecMode;
use geobim_fixtures as fx;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const MODES: [(&str, ExecMode); 2] = [("sequential", ExecMode::Sequential), ("parallel", ExecMode::Parallel)];

fn overlaps(c: &mut Criterion) {
    let src = fx::overlap_profile_tower();
    let model = load_model(&[("profile.ifc".into(), src.into_bytes())], &Config::default(), ExecMode::Parallel).unwrap();
    let params = FootprintParams::default();
    let mut g = c.benchmark_group("overlap_table");
    g.sample_size(10);
    for (name, mode) in MODES {
        g.bench_function(BenchmarkId::new(name, "33 storeys"), |b| b.iter(|| overlap_table(&model, &params, 0, mode).unwrap()));
    }
    g.finish();
}

fn tessellation(c: &mut Criterion) {
    let graph = load_ifc(fx::peak_height_tower(fx::LengthUnit::Metre).as_bytes(), "peak.ifc", false).unwrap();
    let opts = TessellationOptions::default();
    let mut g = c.benchmark_group("tessellate_graph");
    for (name, mode) in MODES {
        g.bench_function(BenchmarkId::new(name, "30 storeys"), |b| b.iter(|| tessellate_graph(&graph, &opts, mode)));
    }
    g.finish();
}

fn clustering(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut g = c.benchmark_group("dbscan");
    for n in [2_000, 20_000] {
        let pts: Vec<[f64; 2]> = (0..n).map(|_| [rng.random_range(0.0..200.0), rng.random_range(0.0..200.0)]).collect();
        for (name, mode) in MODES {
            g.bench_with_input(BenchmarkId::new(name, n), &pts, |b, pts| b.iter(|| dbscan(pts, 1.0, 4, mode)));
        }
    }
    g.finish();
}

criterion_group!(benches, overlaps, tessellation, clustering);
criterion_main!(benches);
