use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use mddmine::constraints::{resolve_all, scenario};
use mddmine::mpp_miner::mine_resolved;
use mddmine::oracle::mine_ppcc;
use mddmine::seqdb::{attach_attributes, default_generation_columns, generate_attributes, synthetic_database};
use mddmine::MineOptions;

fn mining(c: &mut Criterion) {
    let db = synthetic_database(10_000, 8, 200, 11);
    let table = generate_attributes(&db, 11, &default_generation_columns());
    let db = attach_attributes(db, &table, Some("time")).unwrap();
    let theta = db.len() / 100;

    let mut group = c.benchmark_group("mine");
    group.sample_size(10);
    for n in [1u8, 2] {
        let specs = resolve_all(&scenario(n).unwrap(), &db).unwrap();
        group.bench_with_input(BenchmarkId::new("mpp_sequential", n), &specs, |b, specs| {
            let options = MineOptions { parallel: false, ..MineOptions::default() };
            b.iter(|| mine_resolved(&db, specs, theta, options).unwrap())
        });
        #[cfg(feature = "parallel")]
        group.bench_with_input(BenchmarkId::new("mpp_parallel", n), &specs, |b, specs| {
            b.iter(|| mine_resolved(&db, specs, theta, MineOptions::default()).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("ppcc", n), &specs, |b, specs| {
            b.iter(|| mine_ppcc(&db, specs, theta).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, mining);
criterion_main!(benches);
