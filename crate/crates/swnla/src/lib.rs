//! Harness around the sliding-window sketches in [`swnla_core`]: seeded
//! stream generators (random, adversarial, and counterexample fixtures), an
//! exact window oracle with metric helpers, stream/report file formats, and
//! an experiment runner with a CLI front end.
//!
//! The split mirrors how the pieces are used: `swnla-core` holds the
//! `no_std` sketch algorithms; this crate holds everything that needs files,
//! clocks, or threads.

pub mod formats;
pub mod gen;
pub mod oracle;
pub mod report;
pub mod runner;

pub use swnla_core;

/// Harness-level error: wraps core sketch errors plus IO/parse failures.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error(transparent)]
    Core(#[from] swnla_core::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }
}
