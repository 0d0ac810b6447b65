//! Monte-Carlo harness, matrix file formats and command-line front end for
//! [`spikeshrink_core`].

pub mod cli;
pub mod config;
pub mod error;
pub mod io;
pub mod montecarlo;

pub use error::{Error, Result};
pub use spikeshrink_core as core;
