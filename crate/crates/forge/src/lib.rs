//! Training, file formats and command line for flash-photograph SVBRDF
//! recovery.

#![deny(missing_docs)]

pub mod adam;
pub mod bench;
pub mod checkpoint;
pub mod cli;
pub mod config;
pub mod error;
pub mod io;
pub mod losses;
pub mod networks;
pub mod perceptual;
pub mod render;
pub mod tensor;
pub mod trainer;

pub use error::{ForgeError, Result};
