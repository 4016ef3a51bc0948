//! Criterion benchmarks for fidt-core live under `benches/`.
