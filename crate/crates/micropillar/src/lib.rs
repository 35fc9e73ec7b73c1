//! File formats, parallel drivers and the command implementations behind the
//! `micropillar` binary.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod measurements;
pub mod output;
pub mod parallel;
pub mod stack_file;

use thiserror::Error;

/// A problem in a text input, located by source name and 1-based line
/// (0 when the input has no lines, e.g. a command-line override).
#[derive(Debug, Error)]
#[error("{}: {message}", locate(.source_name, *.line))]
pub struct FormatError {
    pub source_name: String,
    pub line: usize,
    pub message: String,
}

impl FormatError {
    pub fn new(source_name: &str, line: usize, message: impl Into<String>) -> Self {
        Self {
            source_name: source_name.to_string(),
            line,
            message: message.into(),
        }
    }
}

fn locate(name: &str, line: usize) -> String {
    if line == 0 {
        name.to_string()
    } else {
        format!("{name}:{line}")
    }
}
