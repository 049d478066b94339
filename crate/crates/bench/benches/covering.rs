use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use covering::asymptotics::{chernoff_exponent, Tail};
use covering::bounds::typical_set;
use covering::sim::{estimate_cover_probability, exact_oracle, generate_instance, search_with, SimOptions, Strategy};
use covering::typicality::sample_sequences;
use covering::{CodebookSizes, JointPmf, TypicalityTester, VarSet};
use rand::SeedableRng;

fn pmf(sizes: Vec<usize>) -> JointPmf {
    let len: usize = sizes.iter().product();
    let w: Vec<f64> = (0..len).map(|i| 1.0 + (i * 7 % 5) as f64).collect();
    let total: f64 = w.iter().sum();
    JointPmf::from_table(w.iter().map(|x| x / total).collect(), sizes).unwrap()
}

fn dsbs() -> JointPmf {
    JointPmf::from_table(vec![0.45, 0.05, 0.05, 0.45], vec![1, 2, 2]).unwrap()
}

fn typicality(c: &mut Criterion) {
    let p = pmf(vec![2, 2, 3, 2]);
    let tester = TypicalityTester::new(&p);
    let mut group = c.benchmark_group("typicality");
    for n in [100, 1000, 10_000] {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(n as u64);
        let seqs = sample_sequences(&p, n, &mut rng);
        group.bench_with_input(BenchmarkId::from_parameter(n), &seqs, |b, s| {
            b.iter(|| tester.verdict(black_box(&s.views()), 0.05))
        });
    }
    group.finish();
}

fn search(c: &mut Criterion) {
    let p = pmf(vec![2, 2, 2, 2]);
    let law = p.generation_law();
    let tester = TypicalityTester::new(&p);
    let mut group = c.benchmark_group("search");
    for m in [8u64, 32, 128] {
        let inst = generate_instance(&law, 32, &[m, m], 9).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(m), &inst, |b, inst| {
            b.iter(|| search_with(black_box(inst), &tester, 0.05))
        });
    }
    group.finish();
}

fn oracle(c: &mut Criterion) {
    let p = pmf(vec![2, 2, 2, 2]);
    let mut group = c.benchmark_group("oracle");
    for n in [1usize, 2] {
        let (block, f) = typical_set(&p, n, 0.5).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(n), &(block, f), |b, (block, f)| {
            b.iter(|| exact_oracle(black_box(block), &[2, 2], f, 1e8).unwrap())
        });
    }
    group.finish();
}

fn chernoff(c: &mut Criterion) {
    let p = pmf(vec![3, 3, 3, 3]);
    c.bench_function("chernoff_exponent", |b| {
        b.iter(|| chernoff_exponent(black_box(&p), VarSet::all(4), 0.1, Tail::Upper).unwrap())
    });
}

fn collapsed(c: &mut Criterion) {
    let p = dsbs();
    let law = p.generation_law();
    let opts = SimOptions { strategy: Strategy::Collapsed, ..SimOptions::default() };
    let sizes = CodebookSizes::from_rates(&[0.87], 400).unwrap();
    let mut group = c.benchmark_group("collapsed");
    group.sample_size(10);
    group.bench_function("n400_trials50", |b| {
        b.iter(|| estimate_cover_probability(&law, &p, 400, &sizes, 0.03, 50, 1, &opts).unwrap())
    });
    group.finish();
}

criterion_group!(benches, typicality, search, oracle, chernoff, collapsed);
criterion_main!(benches);
