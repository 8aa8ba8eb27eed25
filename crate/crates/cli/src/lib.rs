//! Operational surface of the electroconvection simulator: configuration,
//! output formats, ensemble orchestration and the self test. The binary in
//! `main.rs` is a thin argument-parsing wrapper over [`runner`].

pub mod config;
pub mod error;
pub mod output;
pub mod runner;
pub mod selftest;
pub mod snapshot;

pub use config::RunConfig;
pub use error::CliError;
