//! Criterion benchmarks for liepair-core; see `benches/`.
