//! Library side of the `stinespring` command-line tool: JSON documents,
//! reports and the subcommands themselves.

pub mod commands;
pub mod document;
pub mod error;

pub use commands::{Outcome, Payload, ReportDocument};
pub use document::{ChannelDocument, MatrixDoc, TolOverrides};
pub use error::CliError;
