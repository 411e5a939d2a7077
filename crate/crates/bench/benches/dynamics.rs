use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use fbd_bench::{BODIES_PER_BRANCH, ORDERS, ORDER_SWEEP_BODIES, SEED, SIZE_SWEEP_ORDER};
use fbd_core::benchmark::{branch_tree, Algorithm, Workload};

fn over_bodies(c: &mut Criterion) {
    for algo in [Algorithm::Inverse, Algorithm::Forward] {
        let mut group = c.benchmark_group(format!("{}_over_n", algo.name()));
        for &b in &BODIES_PER_BRANCH {
            let model = branch_tree(b).unwrap();
            let mut work = Workload::new(&model, algo, SIZE_SWEEP_ORDER, SEED).unwrap();
            group.bench_function(BenchmarkId::from_parameter(model.n_bodies()), |bench| {
                bench.iter(|| work.run().unwrap())
            });
        }
        group.finish();
    }
}

fn over_orders(c: &mut Criterion) {
    let model = branch_tree(ORDER_SWEEP_BODIES).unwrap();
    for algo in [Algorithm::Inverse, Algorithm::Forward] {
        let mut group = c.benchmark_group(format!("{}_over_r", algo.name()));
        for &r in &ORDERS {
            let mut work = Workload::new(&model, algo, r, SEED).unwrap();
            group.bench_function(BenchmarkId::from_parameter(r), |bench| bench.iter(|| work.run().unwrap()));
        }
        group.finish();
    }
}

criterion_group!(benches, over_bodies, over_orders);
criterion_main!(benches);
