use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use mscr_core::oracle::naive_repair;
use mscr_core::{run_repair, Encoder, Message, ParamSpec, RepairJob};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Case = ((usize, usize, usize, usize), &'static [usize]);

/// `(n, k, d, h)` and the failed nodes.
const CASES: [Case; 3] = [
    ((4, 1, 2, 2), &[0, 1]),
    ((6, 3, 4, 2), &[0, 1]),
    ((6, 2, 3, 3), &[1, 3, 5]),
];

fn repair(c: &mut Criterion) {
    let mut group = c.benchmark_group("repair");
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for ((n, k, d, h), failed) in CASES {
        let p = ParamSpec::new(n, k, d, h).with_modulus(257).validate().unwrap();
        let q = p.field().modulus();
        let syms = (0..p.message_len())
            .map(|_| p.field().reduce(rng.gen_range(0..q).into()))
            .collect();
        let cw = Encoder::new(&p)
            .unwrap()
            .encode(&Message::new(&p, syms).unwrap())
            .unwrap();
        let helpers: Vec<usize> = (0..n).filter(|i| !failed.contains(i)).take(d).collect();
        let job = RepairJob::new(&p, failed, &helpers).unwrap();
        let id = format!("({n},{k},{d},{h})");
        group.bench_function(BenchmarkId::new("cooperative", &id), |b| {
            b.iter(|| run_repair(black_box(&job), cw.columns()).unwrap())
        });
        group.bench_function(BenchmarkId::new("naive", &id), |b| {
            b.iter(|| naive_repair(&p, black_box(failed), cw.columns()).unwrap())
        });
        group.bench_function(BenchmarkId::new("job_setup", &id), |b| {
            b.iter(|| RepairJob::new(&p, black_box(failed), &helpers).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, repair);
criterion_main!(benches);
