//! Benchmarks only; see `benches/exec.rs`.
