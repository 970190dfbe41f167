use criterion::{black_box, criterion_group, criterion_main, Criterion};

use infrew_core::clusters::{bullet, orthogonalize, RedexSet};
use infrew_core::spwords::SpWord;
use infrew_core::term::Term;
use infrew_core::testgen;
use infrew_core::trs::{critical_pairs, find_redexes, Trs};

fn a_term(n: usize) -> Term {
    let mut out = Term::constant("c");
    for _ in 0..n {
        out = Term::fun("A", vec![out]);
    }
    out
}

fn bench_critical_pairs(c: &mut Criterion) {
    let trs = Trs::parse(
        "b2: B(B(x)) -> B(x)\n\
         b3: B(B(B(x))) -> B(B(x))\n\
         b5: B(B(B(B(B(x))))) -> B(B(B(B(x))))\n\
         ps: P(S(x)) -> x\n\
         sp: S(P(x)) -> x",
    )
    .unwrap();
    c.bench_function("critical_pairs mixed system", |b| {
        b.iter(|| critical_pairs(black_box(&trs)).unwrap().len())
    });
}

fn bench_orthogonalize(c: &mut Criterion) {
    let trs = testgen::chain_fixture();
    let mut rng = testgen::rng_from_seed(99);
    let subjects: Vec<_> = (0..16)
        .map(|_| testgen::random_subject(&trs, &mut rng, 8))
        .collect();
    c.bench_function("orthogonalize random chain subjects", |b| {
        b.iter(|| {
            for (t, w) in &subjects {
                let _ = orthogonalize(black_box(&trs), t, w).unwrap();
            }
        })
    });
}

fn bench_bullet(c: &mut Criterion) {
    let trs = infrew_core::trs::chain_system();
    let t = a_term(24);
    c.bench_function("bullet on a long chain", |b| {
        b.iter(|| {
            let w = RedexSet::finite(find_redexes(&t, &trs, 32));
            bullet(black_box(&trs), &t, &w).unwrap()
        })
    });
}

fn bench_norms(c: &mut Criterion) {
    let psi = SpWord::parse_spec("psi").unwrap();
    c.bench_function("closed-form norms of the oscillating word", |b| {
        b.iter(|| (black_box(&psi).s_norm(), black_box(&psi).p_norm()))
    });
    c.bench_function("streamed sum over 100k letters", |b| {
        b.iter(|| black_box(&psi).sum(100_000))
    });
}

fn bench_bisim(c: &mut Criterion) {
    let t1 = Term::parse("rec t = f(f(t, a), a)").unwrap();
    let t2 = Term::parse("rec t = f(f(f(t, a), a), a)").unwrap();
    c.bench_function("bisimulation on rational terms", |b| {
        b.iter(|| black_box(&t1).bisim_equal(black_box(&t2)))
    });
}

criterion_group!(
    benches,
    bench_critical_pairs,
    bench_orthogonalize,
    bench_bullet,
    bench_norms,
    bench_bisim
);
criterion_main!(benches);
