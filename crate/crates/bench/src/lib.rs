//! Criterion benchmarks for the pricing kernels; see `benches/pricing.rs`.
