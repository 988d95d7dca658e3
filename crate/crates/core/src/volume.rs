//! In-memory 4D volumes and masks.
//!
//! Samples are stored x fastest, then y, z and t: the value at `(x, y, z, t)`
//! sits at `x + nx * (y + ny * (z + nz * t))`.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Spatial extents `(nx, ny, nz)`.
pub type Extents3 = [usize; 3];

#[derive(Debug, Clone, PartialEq)]
pub struct Volume4D {
    extents: [usize; 4],
    samples: Vec<f64>,
    /// Physical voxel size in mm along x, y, z.
    pub voxel_size: [f64; 3],
    /// Seconds between frames.
    pub time_step: f64,
}

impl Volume4D {
    pub fn new(extents: [usize; 4], samples: Vec<f64>) -> Result<Self> {
        if extents.contains(&0) {
            return Err(Error::InvalidArgument("volume extents must be positive"));
        }
        if samples.len() != extents.iter().product::<usize>() {
            return Err(Error::ShapeMismatch("sample count differs from extents"));
        }
        if samples.iter().any(|v| !v.is_finite()) {
            return Err(Error::DegenerateInput("non-finite sample"));
        }
        Ok(Self {
            extents,
            samples,
            voxel_size: [1.0; 3],
            time_step: 1.0,
        })
    }

    pub fn zeros(extents: [usize; 4]) -> Self {
        Self::new(extents, vec![0.0; extents.iter().product()]).expect("positive extents")
    }

    pub fn with_geometry(mut self, voxel_size: [f64; 3], time_step: f64) -> Self {
        self.voxel_size = voxel_size;
        self.time_step = time_step;
        self
    }

    pub fn extents(&self) -> [usize; 4] {
        self.extents
    }

    pub fn spatial_extents(&self) -> Extents3 {
        [self.extents[0], self.extents[1], self.extents[2]]
    }

    pub fn frames(&self) -> usize {
        self.extents[3]
    }

    /// Voxels per frame.
    pub fn voxel_count(&self) -> usize {
        self.extents[0] * self.extents[1] * self.extents[2]
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn samples_mut(&mut self) -> &mut [f64] {
        &mut self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    #[inline]
    pub fn index(&self, x: usize, y: usize, z: usize, t: usize) -> usize {
        let [nx, ny, nz, _] = self.extents;
        x + nx * (y + ny * (z + nz * t))
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, z: usize, t: usize) -> f64 {
        self.samples[self.index(x, y, z, t)]
    }

    /// One 3D frame, x fastest.
    pub fn frame(&self, t: usize) -> &[f64] {
        let v = self.voxel_count();
        &self.samples[t * v..(t + 1) * v]
    }

    pub fn frame_mut(&mut self, t: usize) -> &mut [f64] {
        let v = self.voxel_count();
        &mut self.samples[t * v..(t + 1) * v]
    }

    /// Time course of the voxel with linear spatial index `voxel`.
    pub fn time_course(&self, voxel: usize) -> Vec<f64> {
        let v = self.voxel_count();
        (0..self.frames()).map(|t| self.samples[voxel + t * v]).collect()
    }
}

/// Linear spatial index of `(x, y, z)`.
#[inline]
pub fn spatial_index(extents: Extents3, x: usize, y: usize, z: usize) -> usize {
    x + extents[0] * (y + extents[1] * z)
}

/// Inverse of [`spatial_index`].
#[inline]
pub fn spatial_coords(extents: Extents3, index: usize) -> (usize, usize, usize) {
    let x = index % extents[0];
    let y = (index / extents[0]) % extents[1];
    let z = index / (extents[0] * extents[1]);
    (x, y, z)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MaskVolume {
    extents: Extents3,
    include: Vec<bool>,
    count: usize,
}

impl MaskVolume {
    pub fn new(extents: Extents3, include: Vec<bool>) -> Result<Self> {
        if include.len() != extents.iter().product::<usize>() {
            return Err(Error::ShapeMismatch("mask length differs from extents"));
        }
        let count = include.iter().filter(|&&b| b).count();
        if count == 0 {
            return Err(Error::EmptyMask);
        }
        Ok(Self {
            extents,
            include,
            count,
        })
    }

    pub fn full(extents: Extents3) -> Self {
        Self::new(extents, vec![true; extents.iter().product()]).expect("non-empty extents")
    }

    /// Includes every voxel whose value is nonzero.
    pub fn from_values(extents: Extents3, values: &[f64]) -> Result<Self> {
        Self::new(extents, values.iter().map(|&v| v != 0.0).collect())
    }

    pub fn extents(&self) -> Extents3 {
        self.extents
    }

    pub fn includes(&self, voxel: usize) -> bool {
        self.include[voxel]
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.include
    }

    /// Number of included voxels.
    pub fn count(&self) -> usize {
        self.count
    }

    /// Included voxels in canonical order.
    pub fn voxels(&self) -> impl Iterator<Item = usize> + '_ {
        self.include
            .iter()
            .enumerate()
            .filter_map(|(i, &b)| b.then_some(i))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_order() {
        let samples: Vec<f64> = (0..2 * 3 * 4 * 5).map(|i| i as f64).collect();
        let v = Volume4D::new([2, 3, 4, 5], samples).unwrap();
        assert_eq!(v.get(1, 2, 3, 4), (1 + 2 * (2 + 3 * (3 + 4 * 4))) as f64);
        assert_eq!(v.time_course(0), vec![0.0, 24.0, 48.0, 72.0, 96.0]);
        let idx = spatial_index([2, 3, 4], 1, 2, 3);
        assert_eq!(spatial_coords([2, 3, 4], idx), (1, 2, 3));
    }

    #[test]
    fn rejects_bad_volumes() {
        assert!(Volume4D::new([2, 2, 1, 1], vec![0.0; 3]).is_err());
        assert!(Volume4D::new([1, 1, 1, 1], vec![f64::NAN]).is_err());
        assert!(Volume4D::new([0, 1, 1, 1], vec![]).is_err());
    }

    #[test]
    fn empty_mask() {
        assert_eq!(MaskVolume::new([2, 1, 1], vec![false, false]), Err(Error::EmptyMask));
        assert_eq!(MaskVolume::full([2, 2, 1]).count(), 4);
    }
}
