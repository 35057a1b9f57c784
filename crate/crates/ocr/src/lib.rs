//! File formats, the parallel study runner and the `ocr` command line on top
//! of [`ocr_core`].

pub mod cli;
pub mod config;
pub mod csv_io;
pub mod error;
pub mod model_file;
pub mod report;
pub mod runner;

pub use error::{CliError, Result};
