//! File formats, parallel batch certification and the command line for
//! [`dsrs_core`].
//!
//! * [`counts`]: JSON-lines count files (one `CountRecord` per line);
//! * [`output`]: results CSV/JSONL, certified-accuracy tables, curve CSV;
//! * [`config`]: layered run configuration;
//! * [`batch`]: bounded worker pools for certification and sampling;
//! * [`cli`]: the `dsrs` binary's entry point.

pub mod batch;
pub mod cli;
pub mod config;
pub mod counts;
pub mod error;
pub mod output;

pub use cli::cli_main;
pub use error::{CliError, CliResult};
