//! Benchmark acceptance suite; see `tests/acceptance.rs`.
