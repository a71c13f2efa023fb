//! Generators and helpers shared by the integration suites.
#![allow(dead_code)]

pub mod entail;
pub mod gen;
pub mod programs;

use std::path::PathBuf;

use ooheap::frontend::parse_source;
use ooheap::ir::Program;
use ooheap::termir::{decode_program, lower_program};

pub fn corpus_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus")
}

pub fn corpus(name: &str) -> String {
    std::fs::read_to_string(corpus_dir().join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

pub fn program(src: &str) -> Program {
    decode_program(&lower_program(&parse_source(src).expect("source parses")).term).expect("term decodes")
}

/// proptest configuration with `cases` cases and no regression files.
pub fn config(cases: u32) -> proptest::test_runner::Config {
    proptest::test_runner::Config { cases, failure_persistence: None, ..Default::default() }
}
