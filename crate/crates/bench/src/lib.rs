//! Criterion benchmarks for the spectral and geodesic engines; see `benches/`.
