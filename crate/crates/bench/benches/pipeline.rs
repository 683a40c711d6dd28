use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use hardy_bench::fixture;
use hardy_core::decompose::atomic_decomposition;
use hardy_core::maximal::grand_maximal;
use hardy_core::operators::apply;
use hardy_core::whitney::{check_family, whitney_decompose, OpenRegion};
use hardy_core::{OperatorKind, OperatorSpec};

fn maximal(c: &mut Criterion) {
    let mut group = c.benchmark_group("grand_maximal");
    for (dim, m) in [(1, 4096), (2, 256)] {
        let (f, fam) = fixture(dim, m, "mexican_hat", 1.0);
        group.bench_with_input(BenchmarkId::new(format!("{dim}d"), m), &f, |b, f| {
            b.iter(|| grand_maximal(f, &fam).unwrap())
        });
    }
    group.finish();
}

fn whitney(c: &mut Criterion) {
    let mut group = c.benchmark_group("whitney");
    for (dim, m) in [(1, 4096), (2, 256)] {
        let (f, _) = fixture(dim, m, "ring", 1.0);
        let region = OpenRegion::from_predicate(*f.grid(), |x| x[0] * x[0] + x[1] * x[1] < 0.25).unwrap();
        group.bench_with_input(BenchmarkId::new(format!("decompose_{dim}d"), m), &region, |b, r| {
            b.iter(|| whitney_decompose(r).unwrap())
        });
        let fam = whitney_decompose(&region).unwrap();
        group.bench_with_input(BenchmarkId::new(format!("check_{dim}d"), m), &fam, |b, fam| {
            b.iter(|| check_family(fam))
        });
    }
    group.finish();
}

fn decomposition(c: &mut Criterion) {
    let mut group = c.benchmark_group("atomic_decomposition");
    group.sample_size(10);
    let (f, fam) = fixture(1, 4096, "haar", 1.0);
    group.bench_function("haar_1d_4096", |b| b.iter(|| atomic_decomposition(&f, 1.0, 2.0, &fam).unwrap()));
    group.finish();
}

fn hilbert(c: &mut Criterion) {
    let (f, _) = fixture(1, 4096, "dipole", 1.0);
    let t = OperatorSpec::new(OperatorKind::TruncatedHilbert { cutoff: None }, 2.0).unwrap();
    let op = t.prepare(*f.grid()).unwrap();
    c.bench_function("hilbert_prepared_4096", |b| b.iter(|| op.apply(&f).unwrap()));
    c.bench_function("hilbert_unprepared_4096", |b| b.iter(|| apply(&t, &f).unwrap()));
}

criterion_group!(benches, maximal, whitney, decomposition, hilbert);
criterion_main!(benches);
