//! Criterion benchmarks for the inner kernels; see `benches/kernels.rs`.
