//! Criterion benchmarks for certification, folding and spectra. Run with `cargo bench -p ttrose-bench`.
