//! From a 4D volume to an ICA decomposition and back to voxel space.
//!
//! Stages: optional Gaussian smoothing, masking, unrolling into a spatial
//! (`v x t`) or temporal (`t x v`) matrix, component count, centering,
//! reduction and whitening, FastICA. Voxels are always unrolled in canonical
//! order (x fastest).

use alloc::borrow::Cow;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::duality::{
    center_columns, column_correlation_spectrum, reduce_and_whiten_with,
    row_correlation_spectrum, select_component_count, ComponentCount, Orientation,
    ReducedBasis,
};
use crate::error::{Error, Result};
use crate::exec::{Executor, Sequential};
use crate::fastica::{
    extract_sources, fastica_kurtosis, mixing_in_data_space, Convergence, FastIcaConfig, Scheme,
};
use crate::math;
use crate::matrix::Matrix;
use crate::volume::{spatial_coords, Extents3, MaskVolume, Volume4D};

/// Cap on the fallback component count when the automatic rule finds nothing.
pub const FALLBACK_CAP: usize = 20;

/// Column (temporal) or row (spatial) index `j` to voxel index, in canonical order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VoxelIndexMap {
    extents: Extents3,
    voxels: Vec<usize>,
}

impl VoxelIndexMap {
    pub fn from_mask(mask: &MaskVolume) -> Self {
        Self {
            extents: mask.extents(),
            voxels: mask.voxels().collect(),
        }
    }

    pub fn extents(&self) -> Extents3 {
        self.extents
    }

    pub fn len(&self) -> usize {
        self.voxels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.voxels.is_empty()
    }

    pub fn voxel(&self, j: usize) -> usize {
        self.voxels[j]
    }

    pub fn coords(&self, j: usize) -> (usize, usize, usize) {
        spatial_coords(self.extents, self.voxels[j])
    }

    /// Inverse lookup; `None` for voxels outside the mask.
    pub fn position(&self, voxel: usize) -> Option<usize> {
        self.voxels.binary_search(&voxel).ok()
    }

    pub fn voxels(&self) -> &[usize] {
        &self.voxels
    }

    /// Scatters one value per mapped voxel into a full 3D map, zeros elsewhere.
    pub fn fold(&self, values: &[f64]) -> Result<Vec<f64>> {
        if values.len() != self.voxels.len() {
            return Err(Error::ShapeMismatch("one value per mapped voxel expected"));
        }
        let mut out = vec![0.0; self.extents.iter().product()];
        for (&v, &x) in self.voxels.iter().zip(values) {
            out[v] = x;
        }
        Ok(out)
    }
}

fn check_extents(volume: &Volume4D, mask: &MaskVolume) -> Result<()> {
    if volume.spatial_extents() != mask.extents() {
        return Err(Error::ExtentMismatch);
    }
    Ok(())
}

/// Copy of `volume` with excluded voxels zeroed in every frame.
pub fn apply_mask(volume: &Volume4D, mask: &MaskVolume) -> Result<Volume4D> {
    check_extents(volume, mask)?;
    let mut out = volume.clone();
    let include = mask.as_slice();
    for t in 0..out.frames() {
        for (v, keep) in out.frame_mut(t).iter_mut().zip(include) {
            if !keep {
                *v = 0.0;
            }
        }
    }
    Ok(out)
}

/// Truncated Gaussian taps `exp(-k²/2σ²)` for `k = -R..=R`, `R = ceil(4σ)`.
fn gaussian_taps(sigma: f64) -> Vec<f64> {
    let radius = math::ceil(4.0 * sigma) as isize;
    (-radius..=radius)
        .map(|k| math::exp(-((k * k) as f64) / (2.0 * sigma * sigma)))
        .collect()
}

fn convolve_axis(frame: &mut [f64], scratch: &mut [f64], extents: Extents3, axis: usize, taps: &[f64]) {
    let radius = (taps.len() / 2) as isize;
    let stride = match axis {
        0 => 1,
        1 => extents[0],
        _ => extents[0] * extents[1],
    };
    let len = extents[axis] as isize;
    for (i, out) in scratch.iter_mut().enumerate() {
        let pos = match axis {
            0 => i % extents[0],
            1 => (i / extents[0]) % extents[1],
            _ => i / (extents[0] * extents[1]),
        } as isize;
        let base = i as isize - pos * stride as isize;
        let lo = (pos - radius).max(0);
        let hi = (pos + radius).min(len - 1);
        let mut acc = 0.0;
        let mut weight = 0.0;
        for q in lo..=hi {
            let w = taps[(q - pos + radius) as usize];
            acc += w * frame[(base + q * stride as isize) as usize];
            weight += w;
        }
        *out = acc / weight;
    }
    frame.copy_from_slice(scratch);
}

/// Separable Gaussian smoothing of every frame. `fwhm` is in millimetres per
/// spatial axis; zero disables an axis. Near the border the kernel is
/// renormalized over the in-volume support.
pub fn smooth_gaussian(volume: &Volume4D, fwhm: [f64; 3]) -> Result<Volume4D> {
    smooth_gaussian_with(volume, fwhm, &Sequential)
}

pub fn smooth_gaussian_with(
    volume: &Volume4D,
    fwhm: [f64; 3],
    exec: &dyn Executor,
) -> Result<Volume4D> {
    let mut taps: [Option<Vec<f64>>; 3] = [None, None, None];
    for axis in 0..3 {
        let f = fwhm[axis];
        if !f.is_finite() || f < 0.0 {
            return Err(Error::InvalidArgument("fwhm must be finite and >= 0"));
        }
        if f == 0.0 {
            continue;
        }
        let size = volume.voxel_size[axis];
        if !size.is_finite() || size <= 0.0 {
            return Err(Error::InvalidArgument("voxel size must be positive to smooth"));
        }
        let sigma = f / (2.0 * math::sqrt(2.0 * math::ln(2.0))) / size;
        taps[axis] = Some(gaussian_taps(sigma));
    }
    let mut out = volume.clone();
    if taps.iter().all(Option::is_none) {
        return Ok(out);
    }
    let extents = volume.spatial_extents();
    let frame_len = volume.voxel_count();
    exec.for_each_row(out.samples_mut(), frame_len, &|_, frame| {
        let mut scratch = vec![0.0; frame.len()];
        for (axis, t) in taps.iter().enumerate() {
            if let Some(t) = t {
                convolve_axis(frame, &mut scratch, extents, axis, t);
            }
        }
    });
    Ok(out)
}

/// Unrolls the masked voxels into a matrix: `t x v` for the temporal
/// orientation (rows are time points), `v x t` for the spatial one.
pub fn unroll(
    volume: &Volume4D,
    mask: &MaskVolume,
    orientation: Orientation,
) -> Result<(Matrix, VoxelIndexMap)> {
    check_extents(volume, mask)?;
    let map = VoxelIndexMap::from_mask(mask);
    if map.is_empty() {
        return Err(Error::EmptyMask);
    }
    let (nt, nv) = (volume.frames(), map.len());
    let m = match orientation {
        Orientation::Temporal => {
            let mut m = Matrix::zeros(nt, nv);
            for t in 0..nt {
                let frame = volume.frame(t);
                for (out, &v) in m.row_mut(t).iter_mut().zip(map.voxels()) {
                    *out = frame[v];
                }
            }
            m
        }
        Orientation::Spatial => {
            let mut m = Matrix::zeros(nv, nt);
            for t in 0..nt {
                let frame = volume.frame(t);
                for (j, &v) in map.voxels().iter().enumerate() {
                    m[(j, t)] = frame[v];
                }
            }
            m
        }
    };
    Ok((m, map))
}

/// Inverse of [`unroll`] on the mask support; other voxels are zero.
pub fn fold(matrix: &Matrix, map: &VoxelIndexMap, orientation: Orientation) -> Result<Volume4D> {
    let (nt, nv) = match orientation {
        Orientation::Temporal => matrix.shape(),
        Orientation::Spatial => (matrix.cols(), matrix.rows()),
    };
    if nv != map.len() {
        return Err(Error::ShapeMismatch("matrix does not match the voxel map"));
    }
    let e = map.extents();
    let mut vol = Volume4D::zeros([e[0], e[1], e[2], nt]);
    for t in 0..nt {
        let frame = vol.frame_mut(t);
        for (j, &v) in map.voxels().iter().enumerate() {
            frame[v] = match orientation {
                Orientation::Temporal => matrix[(t, j)],
                Orientation::Spatial => matrix[(j, t)],
            };
        }
    }
    Ok(vol)
}

#[derive(Debug, Clone, PartialEq)]
pub struct IcaRunConfig {
    pub orientation: Orientation,
    pub components: ComponentCount,
    pub seed: u64,
    /// Smoothing FWHM in millimetres per spatial axis, 0 = off.
    pub fwhm: [f64; 3],
    /// Smooth the whole volume and then mask (default), or mask first.
    /// Masking first keeps excluded voxels from leaking into the kernel.
    pub smooth_before_mask: bool,
    /// Scale every variable to unit variance before whitening.
    pub standardize: bool,
    pub scheme: Scheme,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for IcaRunConfig {
    fn default() -> Self {
        let ica = FastIcaConfig::default();
        Self {
            orientation: Orientation::Temporal,
            components: ComponentCount::Auto,
            seed: 0,
            fwhm: [0.0; 3],
            smooth_before_mask: true,
            standardize: false,
            scheme: ica.scheme,
            tol: ica.tol,
            max_iter: ica.max_iter,
        }
    }
}

impl IcaRunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.fwhm.iter().any(|f| !f.is_finite() || *f < 0.0) {
            return Err(Error::InvalidArgument("fwhm must be finite and >= 0"));
        }
        if self.components == ComponentCount::Fixed(0) {
            return Err(Error::InvalidArgument("component count must be >= 1"));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidArgument("max_iter must be >= 1"));
        }
        if self.tol.is_nan() || self.tol <= 0.0 {
            return Err(Error::InvalidArgument("tol must be positive"));
        }
        Ok(())
    }

    fn fastica(&self) -> FastIcaConfig {
        FastIcaConfig {
            seed: self.seed,
            max_iter: self.max_iter,
            tol: self.tol,
            scheme: self.scheme,
        }
    }
}

#[derive(Debug, Clone)]
pub struct IcaDecomposition {
    /// Sources as columns (`n x m`), zero mean and unit variance.
    pub sources: Matrix,
    /// Whitened-space mixing `A = Wᵀ` with source scales folded in.
    pub mixing: Matrix,
    /// Data-space mixing `aˣ` (`p x m`).
    pub data_mixing: Matrix,
    pub unmixing: Matrix,
    pub basis: ReducedBasis,
    pub orientation: Orientation,
    pub voxel_map: VoxelIndexMap,
    pub seed: u64,
    pub convergence: Convergence,
    /// Time-point correlation eigenvalues used by the automatic count; empty
    /// for a fixed count.
    pub count_spectrum: Vec<f64>,
    pub time_step: f64,
    pub voxel_size: [f64; 3],
    pub warnings: Vec<String>,
}

impl IcaDecomposition {
    pub fn count(&self) -> usize {
        self.sources.cols()
    }

    fn check_index(&self, k: usize) -> Result<()> {
        if k >= self.count() {
            return Err(Error::IndexOutOfRange {
                index: k,
                count: self.count(),
            });
        }
        Ok(())
    }

    /// Values of component `k` (0-based) over the mapped voxels.
    pub fn component_map_values(&self, k: usize) -> Result<Vec<f64>> {
        self.check_index(k)?;
        Ok(match self.orientation {
            Orientation::Temporal => self.data_mixing.column(k),
            Orientation::Spatial => self.sources.column(k),
        })
    }

    /// Time course of component `k` (0-based), one value per frame.
    pub fn component_time_course(&self, k: usize) -> Result<Vec<f64>> {
        self.check_index(k)?;
        Ok(match self.orientation {
            Orientation::Temporal => self.sources.column(k),
            Orientation::Spatial => self.data_mixing.column(k),
        })
    }

    pub fn frames(&self) -> usize {
        match self.orientation {
            Orientation::Temporal => self.sources.rows(),
            Orientation::Spatial => self.data_mixing.rows(),
        }
    }
}

/// Spatial map of component `k` (0-based) folded over the full 3D grid;
/// voxels outside the mask are zero.
pub fn component_to_volume(dec: &IcaDecomposition, k: usize) -> Result<Vec<f64>> {
    dec.voxel_map.fold(&dec.component_map_values(k)?)
}

pub fn run_ica(volume: &Volume4D, mask: &MaskVolume, cfg: &IcaRunConfig) -> Result<IcaDecomposition> {
    run_ica_with(volume, mask, cfg, &Sequential)
}

pub fn run_ica_with(
    volume: &Volume4D,
    mask: &MaskVolume,
    cfg: &IcaRunConfig,
    exec: &dyn Executor,
) -> Result<IcaDecomposition> {
    cfg.validate()?;
    check_extents(volume, mask)?;
    if volume.frames() < 2 {
        return Err(Error::DegenerateInput("need at least two frames"));
    }
    if mask.count() < 2 {
        return Err(Error::DegenerateInput("need at least two voxels in the mask"));
    }
    let smoothing = cfg.fwhm.iter().any(|&f| f > 0.0);
    let source: Cow<'_, Volume4D> = match (smoothing, cfg.smooth_before_mask) {
        (false, _) => Cow::Borrowed(volume),
        (true, true) => Cow::Owned(smooth_gaussian_with(volume, cfg.fwhm, exec)?),
        (true, false) => Cow::Owned(smooth_gaussian_with(&apply_mask(volume, mask)?, cfg.fwhm, exec)?),
    };
    let (raw, voxel_map) = unroll(&source, mask, cfg.orientation)?;
    drop(source);

    let mut warnings = Vec::new();
    let frames = volume.frames();
    let (mut m, count_spectrum) = match cfg.components {
        ComponentCount::Fixed(m) => (m, Vec::new()),
        ComponentCount::Auto => {
            let spectrum = match cfg.orientation {
                Orientation::Temporal => row_correlation_spectrum(&raw, exec)?,
                Orientation::Spatial => column_correlation_spectrum(&raw, exec)?,
            };
            match select_component_count(&spectrum, ComponentCount::Auto) {
                Ok(m) => (m, spectrum),
                Err(Error::NoComponent) => {
                    let m = (frames - 1).clamp(1, FALLBACK_CAP);
                    warnings.push(format!(
                        "no correlation eigenvalue above 1; falling back to {m} components"
                    ));
                    (m, spectrum)
                }
                Err(e) => return Err(e),
            }
        }
    };

    let centered = center_columns(raw, cfg.standardize, cfg.orientation)?;
    let (z, basis) = match reduce_and_whiten_with(&centered, m, exec) {
        Err(Error::RankDeficient { available, .. }) if available > 0 => {
            warnings.push(format!(
                "requested {m} components but the data has rank {available}"
            ));
            m = available;
            reduce_and_whiten_with(&centered, m, exec)?
        }
        other => other?,
    };
    drop(centered);

    let unmixing = fastica_kurtosis(&z, &cfg.fastica())?;
    let sources = extract_sources(&z, &unmixing.w)?;
    let data_mixing = mixing_in_data_space(&basis, &sources.a)?;
    let stalled = unmixing.convergence.converged.iter().filter(|&&c| !c).count();
    if stalled > 0 {
        warnings.push(format!("{stalled} component(s) did not converge"));
    }
    Ok(IcaDecomposition {
        sources: sources.s,
        mixing: sources.a,
        data_mixing,
        unmixing: unmixing.w,
        basis,
        orientation: cfg.orientation,
        voxel_map,
        seed: cfg.seed,
        convergence: unmixing.convergence,
        count_spectrum,
        time_step: volume.time_step,
        voxel_size: volume.voxel_size,
        warnings,
    })
}
