//! Criterion benchmarks for field evaluation and the horizon solver; see `benches/`.
