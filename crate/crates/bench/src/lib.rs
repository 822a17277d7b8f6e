//! Benchmarks for `ringqfi-core` live under `benches/`; run them with
//! `cargo bench -p ringqfi-bench`.
