//! File formats, experiment pipelines and the `gradxplain` command-line tool
//! on top of [`gradxplain_core`].

pub mod cli;
pub mod config;
pub mod error;
pub mod io;
pub mod metrics;
pub mod pipeline;

pub use error::{Error, Result};
pub use gradxplain_core as core;
