//! File formats, run configuration and the `vesselmark` command line on top
//! of [`vesselmark_core`].

pub mod case;
pub mod cli;
pub mod commands;
pub mod config;
mod error;
pub mod fsutil;
pub mod landmarks;
pub mod metaimage;
pub mod nifti;
pub mod report;
pub mod volume_io;

pub use error::{Error, Result};
