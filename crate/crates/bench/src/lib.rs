//! Benchmarks for the cusplab integrators live in `benches/`.
