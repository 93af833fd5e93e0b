//! Criterion benchmarks for ekwave; see `benches/`.
