use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use knva::atlas::{AtlasConfig, BasisAtlas, BasisIndex, ComplexLiteral};
use knva::par;
use knva::tables::{compute_tables, TablesConfig};

fn atlases() -> Vec<(&'static str, BasisAtlas)> {
    let g0 = BasisAtlas::build(AtlasConfig::genus0(10).with_lambdas(-2, 3)).unwrap();
    let g1 = AtlasConfig::genus1(
        BasisIndex(11),
        30,
        ComplexLiteral::new("0", "1"),
        ComplexLiteral::new("0.17", "0.31"),
        ComplexLiteral::new("-0.21", "0.12"),
    )
    .with_lambdas(-1, 2);
    vec![("genus0", g0), ("genus1", BasisAtlas::build(g1).unwrap())]
}

fn bench_tables(c: &mut Criterion) {
    let mode = if par::is_parallel() { "parallel" } else { "sequential" };
    let mut group = c.benchmark_group("tables");
    group.sample_size(10);
    let cfg = TablesConfig { k_max: 2 };
    for (name, atlas) in atlases() {
        group.bench_function(BenchmarkId::new(mode, name), |b| b.iter(|| compute_tables(&atlas, &cfg).unwrap()));
        #[cfg(feature = "parallel")]
        {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
            group.bench_function(BenchmarkId::new("one-thread", name), |b| {
                b.iter(|| pool.install(|| compute_tables(&atlas, &cfg).unwrap()))
            });
        }
    }
    group.finish();
}

criterion_group!(benches, bench_tables);
criterion_main!(benches);
