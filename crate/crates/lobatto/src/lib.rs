//! File formats, experiment pipelines and the command line around
//! [`lobatto_core`].

pub mod commands;
pub mod config;
pub mod error;
pub mod fft;
pub mod hhg;
pub mod io;
pub mod manifest;
pub mod system;

pub use error::{AppError, AppResult};
