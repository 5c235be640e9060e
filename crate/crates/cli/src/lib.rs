//! Dataset layout, file formats, configuration and the pipeline driver for
//! the landmark-map pseudo-labeling toolkit. The algorithms live in
//! `maplabel-core`; this crate owns everything that touches disk or spawns
//! workers.

pub mod config;
pub mod dataset;
pub mod error;
pub mod formats;
pub mod pipeline;
pub mod ppm;
pub mod report;

pub use error::{CliError, Result};
