//! Benchmarks for apievo. The measured workloads live in
//! `apievo_core::bench` so the CLI `bench` command times the same thing.

pub use apievo_core::bench::{sample_customer, ConversionFixture};
