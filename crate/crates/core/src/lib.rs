//! Spatial and temporal independent component analysis of 4D volumetric
//! time series.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, the command
//! line and threading live in the companion `tsica` crate.
//!
//! The temporal orientation never forms the voxel-by-voxel covariance: its
//! leading eigenpairs are lifted from the small time-by-time Gram matrix
//! (see [`duality`]).

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod analysis;
pub mod duality;
pub mod eigen;
pub mod error;
pub mod exec;
pub mod fastica;
pub mod math;
pub mod matrix;
pub mod pipeline;
pub mod rng;
pub mod simgen;
pub mod volume;

pub use error::{Error, Result};
pub use matrix::Matrix;
pub use volume::{MaskVolume, Volume4D};
