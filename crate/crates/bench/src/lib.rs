//! Criterion benchmarks for the propagator, the amplitude engine and the
//! optimization objective; run with `cargo bench -p flyq-bench`.
