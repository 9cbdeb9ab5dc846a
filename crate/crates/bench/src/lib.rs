//! Criterion benchmarks for lmg-core; see `benches/`.
