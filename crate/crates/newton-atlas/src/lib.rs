//! File formats, parallel runners, SVG figures and the `newton-atlas`
//! command line, built on `newton-atlas-core`.

pub mod cli;
pub mod config;
pub mod error;
pub mod formats;
pub mod parallel;
pub mod plot;

pub use error::{CliError, Result};
