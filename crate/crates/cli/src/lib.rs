//! Front end of the `usc-laser` tool: strict configs, subcommands, CSV/JSON
//! records with provenance and SVG figures.

// `!(x < tol)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod error;
pub mod oracle;
pub mod output;
pub mod plot;

pub use commands::{run, Command, Outcome};
pub use config::{parse_config, RunConfig};
pub use error::CliError;
