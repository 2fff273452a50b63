//! Compares parallel and sequential bounded-model enumeration in the
//! oracle on a formula with a large valuation space.
//!
//! Run with `cargo bench --bench enumerate`.  The parallel path is only
//! compiled when the default `parallel` feature is on; with
//! `--no-default-features` both benches measure the sequential code.

use criterion::{criterion_group, criterion_main, Criterion};
use std::collections::BTreeMap;

use setlang::ast::Type;
use setlang::oracle::{enumerate_models, enumerate_models_seq, DomainBound};
use setlang::parser;
use setlang::typecheck;

fn workload() -> (setlang::ast::Formula, Vec<(String, Type)>, DomainBound) {
    // Four set variables over three atoms and two size variables: a
    // space of roughly 8^4 * 9^2 valuations with meaningful pruning.
    let src = "dec([A,B,C,D], set(enum([a,b,c]))) & dec([N,M], int) & \
               un(A,B,C) & disj(A,B) & diff(C,A,D) & \
               size(A,N) & size(C,M) & N < M.";
    let f = parser::parse_formula(src).unwrap();
    let ctx = typecheck::check_formula(&f, &BTreeMap::new()).unwrap();
    let vars: Vec<(String, Type)> = f
        .free_vars()
        .into_iter()
        .map(|v| {
            let t = ctx.vars.get(&v).unwrap().clone();
            (v, t)
        })
        .collect();
    let bound = DomainBound {
        atom_pool: 3,
        int_lo: -4,
        int_hi: 4,
        max_card: 3,
        max_space: u64::MAX,
    };
    (f, vars, bound)
}

fn bench_enumerate(c: &mut Criterion) {
    let (f, vars, bound) = workload();
    let mut group = c.benchmark_group("enumerate_models");
    group.sample_size(10);
    group.bench_function("parallel", |b| {
        b.iter(|| enumerate_models(&f, &vars, &bound).unwrap())
    });
    group.bench_function("sequential", |b| {
        b.iter(|| enumerate_models_seq(&f, &vars, &bound).unwrap())
    });
    group.finish();
}

criterion_group!(benches, bench_enumerate);
criterion_main!(benches);
