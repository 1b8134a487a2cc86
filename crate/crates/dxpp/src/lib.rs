//! File formats, run configuration and the experiment harness behind the
//! `dxpp` command-line tool.

pub mod cli;
pub mod config;
pub mod format;
pub mod harness;
pub mod output;
