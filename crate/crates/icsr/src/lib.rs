//! Command line, files and network for the `icsr-core` engine.
//!
//! [`live`] talks to an OpenAI-compatible chat server, [`config`] reads run
//! configuration files, [`io`] covers datasets, replay scripts and report
//! tables, [`runlog`] streams every model exchange to JSONL, and [`suite`]
//! runs benchmark grids in parallel. [`cli`] ties them together.

pub mod cli;
pub mod config;
pub mod io;
pub mod live;
pub mod runlog;
pub mod suite;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration: {0}")]
    Config(String),
    #[error("{0}")]
    Io(String),
    #[error("{0}")]
    NoValidSeed(String),
}

impl Error {
    /// Process exit status: 1 for configuration and IO problems, 3 when the
    /// search found no usable seed function.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Io(_) => 1,
            Error::NoValidSeed(_) => 3,
        }
    }

    pub(crate) fn io(path: &std::path::Path, e: impl std::fmt::Display) -> Self {
        Error::Io(format!("{}: {e}", path.display()))
    }
}
