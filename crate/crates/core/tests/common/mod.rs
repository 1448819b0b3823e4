#![allow(dead_code)]

pub mod criteria;
pub mod oracle;

use std::path::PathBuf;
use xmcts::scenario::Scenario;

pub fn fixture_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests").join("fixtures").join(name)
}

pub fn golden_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests").join("golden").join(name)
}

pub fn fixture(name: &str) -> Scenario {
    Scenario::load(&fixture_path(name)).expect("fixture scenario loads")
}
