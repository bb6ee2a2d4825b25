//! Criterion benchmarks for the search core; see `benches/`.
