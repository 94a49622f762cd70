//! Generators and property checks shared by the property tests and the
//! acceptance harness.

#![allow(dead_code)]

pub mod history;
pub mod oracle;
pub mod props;
pub mod values;

use proptest::test_runner::{Config, FileFailurePersistence, TestRunner};

/// A runner with a fixed case count and no failure persistence files, so
/// both test targets behave the same.
pub fn runner(cases: u32) -> TestRunner {
    TestRunner::new(Config {
        cases,
        failure_persistence: Some(Box::new(FileFailurePersistence::Off)),
        max_global_rejects: cases * 4,
        ..Config::default()
    })
}
