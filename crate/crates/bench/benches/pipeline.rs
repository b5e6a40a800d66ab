use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

use ttrose_core::family::{build_family_map, certify, enumerate_full_words, wrap_word};
use ttrose_core::folds::{canonical_form, stallings_decomposition};
use ttrose_core::nielsen::{unfolding_inp_search, SearchOptions};
use ttrose_core::{FullWord, RoseMap};

fn word(r: usize, n: usize) -> FullWord {
    wrap_word(r, &enumerate_full_words(r, n)[0]).unwrap()
}

fn bench_certify(c: &mut Criterion) {
    let w = word(3, 5);
    c.bench_function("certify r=3 n=5", |b| b.iter(|| certify(3, black_box(&w)).unwrap()));
    let w = word(4, 10);
    c.bench_function("certify r=4 n=10", |b| b.iter(|| certify(4, black_box(&w)).unwrap()));
}

fn bench_folds(c: &mut Criterion) {
    let g = build_family_map(3, &word(3, 5)).unwrap();
    c.bench_function("stallings r=3 n=5", |b| b.iter(|| stallings_decomposition(black_box(&g)).unwrap()));
    c.bench_function("canonical form r=3 n=5", |b| b.iter(|| canonical_form(black_box(&g))));
}

fn bench_spectral(c: &mut Criterion) {
    let m = build_family_map(3, &word(3, 10)).unwrap().transition_matrix();
    c.bench_function("pf eigenvalue r=3 n=10", |b| b.iter(|| black_box(&m).pf_eigenvalue(1e-12).unwrap()));
    let golden = RoseMap::from_strs(2, &["b", "ba"]).unwrap();
    let opts = SearchOptions::default();
    c.bench_function("inp search golden period 2", |b| {
        b.iter(|| unfolding_inp_search(black_box(&golden), 2, &opts).unwrap())
    });
}

criterion_group!(benches, bench_certify, bench_folds, bench_spectral);
criterion_main!(benches);
