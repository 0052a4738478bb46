use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rayon::ThreadPoolBuilder;

use gibbs_transfer::model_file::bundled;
use gibbs_transfer::oracle::{brute_constant, EnumerationBudget};
use gibbs_transfer::spatial::{spatial_constant_directed, SpatialIsingModel, SweepDirection};
use gibbs_transfer::{LogTable, ScaledNonNegMatrix, TransferChain};

// A one-thread pool stands in for the sequential build; with
// `--no-default-features` both variants run sequentially.
fn pools() -> Vec<(&'static str, rayon::ThreadPool)> {
    vec![
        ("threads=1", ThreadPoolBuilder::new().num_threads(1).build().unwrap()),
        ("threads=default", ThreadPoolBuilder::new().build().unwrap()),
    ]
}

fn chain_constants(c: &mut Criterion) {
    let mut group = c.benchmark_group("chain");
    let chain = TransferChain::from_model(&bundled("example2").unwrap().with_length(100_000).unwrap().to_chain().unwrap());
    for (label, pool) in pools() {
        group.bench_function(BenchmarkId::new("sweep", label), |b| {
            b.iter(|| pool.install(|| chain.constant_sweep().unwrap()))
        });
        group.bench_function(BenchmarkId::new("power", label), |b| {
            b.iter(|| pool.install(|| chain.constant_power().unwrap()))
        });
    }
    group.finish();
}

fn dense_products(c: &mut Criterion) {
    let mut group = c.benchmark_group("matmul");
    group.sample_size(20);
    let n = 256;
    let h = LogTable::from_fn(n, |u, v| ((u * 31 + v * 17) % 97) as f64 / 97.0 - 0.5).unwrap();
    let m = ScaledNonNegMatrix::from_log_table(n, n, h.values()).unwrap();
    for (label, pool) in pools() {
        group.bench_function(BenchmarkId::new("n=256", label), |b| {
            b.iter(|| pool.install(|| m.matmul(&m).unwrap()))
        });
    }
    group.finish();
}

fn lattice(c: &mut Criterion) {
    let mut group = c.benchmark_group("lattice");
    group.sample_size(10);
    let sm = SpatialIsingModel::new(10, 100, 0.2, 0.1, 0.1).unwrap();
    for (label, pool) in pools() {
        group.bench_function(BenchmarkId::new("m=10,T=100", label), |b| {
            b.iter(|| pool.install(|| spatial_constant_directed(&sm, SweepDirection::LeftToRight, 1 << 20).unwrap()))
        });
    }
    group.finish();
}

fn enumeration(c: &mut Criterion) {
    let mut group = c.benchmark_group("oracle");
    group.sample_size(10);
    let model = bundled("example1").unwrap().with_length(16).unwrap().to_chain().unwrap();
    for (label, pool) in pools() {
        group.bench_function(BenchmarkId::new("T=16", label), |b| {
            b.iter(|| pool.install(|| brute_constant(&model, EnumerationBudget::new(1 << 20)).unwrap()))
        });
    }
    group.finish();
}

criterion_group!(benches, chain_constants, dense_products, lattice, enumeration);
criterion_main!(benches);
