//! File formats, persistence, threading and the command line for
//! [`tsica_core`].

pub mod cli;
pub mod error;
pub mod exec;
pub mod format;
pub mod image;
pub mod store;
pub mod table;

pub use error::{IoError, Result};
