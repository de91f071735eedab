//! Std companion to `rfsearch-core`: config files, checkpoints, run
//! directories, HTTP and subprocess backends, the threaded executor, the
//! bench harness and the CLI.

pub mod bench;
pub mod checkpoint;
pub mod cli;
pub mod config;
pub mod exec;
pub mod http;
pub mod report;
pub mod run;
pub mod subprocess;

pub use rfsearch_core as core;
