//! On-disk layout of decompositions and simulated datasets.
//!
//! A decomposition directory holds one map volume per component
//! (`component_001`, ...), the analysis mask, `timecourses.tsv` and
//! `metadata.txt` (`key=value` lines in a fixed order).

use std::fs;
use std::path::{Path, PathBuf};

use tsica_core::duality::Orientation;
use tsica_core::pipeline::{component_to_volume, IcaDecomposition};
use tsica_core::simgen::GroundTruth;
use tsica_core::volume::Extents3;
use tsica_core::Volume4D;

use crate::error::{IoError, Result};
use crate::format::{self, DataType, FormatKind, VolumeHeader};
use crate::table::Table;

pub const METADATA_FILE: &str = "metadata.txt";
pub const TIMECOURSE_FILE: &str = "timecourses.tsv";
pub const MASK_STEM: &str = "mask";

/// Container and sample type used for written volumes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VolumeFormat {
    pub kind: FormatKind,
    pub datatype: DataType,
}

impl Default for VolumeFormat {
    fn default() -> Self {
        Self {
            kind: FormatKind::NiftiSingle,
            datatype: DataType::F32,
        }
    }
}

pub fn volume_path(dir: &Path, stem: &str, kind: FormatKind) -> PathBuf {
    dir.join(format!("{stem}.{}", kind.extension()))
}

pub fn component_stem(k: usize) -> String {
    format!("component_{:03}", k + 1)
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| IoError::io(dir, e))
}

/// Writes a volume under `dir/stem` and returns its path and any warnings.
pub fn write_volume_as(
    dir: &Path,
    stem: &str,
    volume: &Volume4D,
    format: VolumeFormat,
) -> Result<(PathBuf, Vec<String>)> {
    let mut header = VolumeHeader::for_volume(volume, format.kind, format.datatype);
    if volume.frames() == 1 {
        header.dims.truncate(3);
    }
    let path = volume_path(dir, stem, format.kind);
    let warnings = format::write_volume(&path, volume, &header)?;
    Ok((path, warnings))
}

fn map_volume(values: Vec<f64>, extents: Extents3, voxel_size: [f64; 3], time_step: f64) -> Result<Volume4D> {
    let [nx, ny, nz] = extents;
    Ok(Volume4D::new([nx, ny, nz, 1], values)?.with_geometry(voxel_size, time_step))
}

/// Ordered `key=value` pairs.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Metadata(pub Vec<(String, String)>);

impl Metadata {
    pub fn push(&mut self, key: &str, value: impl ToString) {
        self.0.push((key.to_string(), value.to_string()));
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.0.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn require(&self, key: &str) -> Result<&str> {
        self.get(key)
            .ok_or_else(|| IoError::Table(format!("metadata key {key:?} missing")))
    }

    pub fn render(&self) -> String {
        self.0.iter().map(|(k, v)| format!("{k}={v}\n")).collect()
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut out = Metadata::default();
        for line in text.lines().map(str::trim) {
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| IoError::Table(format!("expected key=value, got {line:?}")))?;
            out.push(k.trim(), v.trim());
        }
        Ok(out)
    }
}

pub fn join<T: ToString>(values: &[T]) -> String {
    values.iter().map(T::to_string).collect::<Vec<_>>().join(",")
}

fn parse_list<T: std::str::FromStr>(s: &str) -> Result<Vec<T>> {
    if s.is_empty() {
        return Ok(Vec::new());
    }
    s.split(',')
        .map(|v| v.trim().parse().map_err(|_| IoError::Table(format!("bad list entry {v:?}"))))
        .collect()
}

/// Writes `dec` into `dir`. `extra` entries are appended to the metadata.
pub fn save_decomposition(
    dir: &Path,
    dec: &IcaDecomposition,
    format: VolumeFormat,
    extra: &Metadata,
) -> Result<Vec<String>> {
    create_dir(dir)?;
    let extents = dec.voxel_map.extents();
    let mut warnings = Vec::new();
    for k in 0..dec.count() {
        let vol = map_volume(component_to_volume(dec, k)?, extents, dec.voxel_size, dec.time_step)?;
        warnings.extend(write_volume_as(dir, &component_stem(k), &vol, format)?.1);
    }
    let mut mask = vec![0.0; extents.iter().product()];
    for &v in dec.voxel_map.voxels() {
        mask[v] = 1.0;
    }
    let mask_format = VolumeFormat {
        kind: format.kind,
        datatype: DataType::U8,
    };
    let mask_vol = map_volume(mask, extents, dec.voxel_size, dec.time_step)?;
    warnings.extend(write_volume_as(dir, MASK_STEM, &mask_vol, mask_format)?.1);

    let frames = dec.frames();
    let mut names = vec!["time".to_string()];
    let mut columns = vec![(0..frames).map(|t| t as f64 * dec.time_step).collect::<Vec<_>>()];
    for k in 0..dec.count() {
        names.push(component_stem(k));
        columns.push(dec.component_time_course(k)?);
    }
    Table::new(names, columns)?.write(&dir.join(TIMECOURSE_FILE))?;

    let conv = &dec.convergence;
    let mut meta = Metadata::default();
    meta.push("orientation", dec.orientation.name());
    meta.push("components", dec.count());
    meta.push("frames", frames);
    meta.push("extents", join(&extents));
    meta.push("voxels", dec.voxel_map.len());
    meta.push("time_step", dec.time_step);
    meta.push("voxel_size", join(&dec.voxel_size));
    meta.push("seed", dec.seed);
    meta.push("map_format", format.kind.name());
    meta.push("map_datatype", format.datatype.name());
    meta.push("converged", conv.all_converged());
    meta.push("iterations", join(&conv.iterations));
    meta.push("final_deltas", join(&conv.deltas));
    meta.push("count_spectrum", join(&dec.count_spectrum));
    for (i, w) in dec.warnings.iter().chain(&warnings).enumerate() {
        meta.push(&format!("warning_{}", i + 1), w);
    }
    meta.0.extend(extra.0.iter().cloned());
    let path = dir.join(METADATA_FILE);
    fs::write(&path, meta.render()).map_err(|e| IoError::io(&path, e))?;
    Ok(warnings)
}

/// A decomposition read back from disk.
#[derive(Debug, Clone)]
pub struct SavedDecomposition {
    pub metadata: Metadata,
    pub orientation: Orientation,
    pub extents: Extents3,
    pub time_step: f64,
    pub voxel_size: [f64; 3],
    pub kind: FormatKind,
    /// Full-grid map of each component.
    pub maps: Vec<Vec<f64>>,
    pub mask: Vec<bool>,
    pub time_courses: Vec<Vec<f64>>,
}

impl SavedDecomposition {
    pub fn count(&self) -> usize {
        self.maps.len()
    }

    /// Map values restricted to the mask, in canonical voxel order.
    pub fn masked_map(&self, k: usize) -> Vec<f64> {
        self.maps[k]
            .iter()
            .zip(&self.mask)
            .filter_map(|(&v, &m)| m.then_some(v))
            .collect()
    }
}

fn kind_from_name(name: &str) -> Result<FormatKind> {
    [FormatKind::NiftiSingle, FormatKind::NiftiPair, FormatKind::Analyze75]
        .into_iter()
        .find(|k| k.name() == name)
        .ok_or_else(|| IoError::Table(format!("unknown map format {name:?}")))
}

pub fn load_decomposition(dir: &Path) -> Result<SavedDecomposition> {
    let path = dir.join(METADATA_FILE);
    let text = fs::read_to_string(&path).map_err(|e| IoError::io(&path, e))?;
    let metadata = Metadata::parse(&text)?;
    let orientation = match metadata.require("orientation")? {
        "temporal" => Orientation::Temporal,
        "spatial" => Orientation::Spatial,
        other => return Err(IoError::Table(format!("unknown orientation {other:?}"))),
    };
    let count: usize = parse_list(metadata.require("components")?)?
        .first()
        .copied()
        .ok_or_else(|| IoError::Table("empty component count".into()))?;
    let ext: Vec<usize> = parse_list(metadata.require("extents")?)?;
    let vs: Vec<f64> = parse_list(metadata.require("voxel_size")?)?;
    if ext.len() != 3 || vs.len() != 3 {
        return Err(IoError::Table("extents and voxel_size need three entries".into()));
    }
    let time_step: f64 = parse_list(metadata.require("time_step")?)?[0];
    let kind = kind_from_name(metadata.require("map_format")?)?;
    let extents = [ext[0], ext[1], ext[2]];
    let read_map = |stem: &str| -> Result<Vec<f64>> {
        let (vol, _) = format::read_volume(&volume_path(dir, stem, kind))?;
        let [nx, ny, nz] = extents;
        if vol.extents() != [nx, ny, nz, 1] {
            return Err(IoError::SizeMismatch(format!("{stem}: extents {:?}", vol.extents())));
        }
        Ok(vol.into_samples())
    };
    let maps = (0..count).map(|k| read_map(&component_stem(k))).collect::<Result<Vec<_>>>()?;
    let mask = read_map(MASK_STEM)?.into_iter().map(|v| v != 0.0).collect();
    let table = Table::read(&dir.join(TIMECOURSE_FILE))?;
    let time_courses = (0..count)
        .map(|k| {
            table
                .column(&component_stem(k))
                .map(<[f64]>::to_vec)
                .ok_or_else(|| IoError::Table(format!("time course {} missing", component_stem(k))))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SavedDecomposition {
        metadata,
        orientation,
        extents,
        time_step,
        voxel_size: [vs[0], vs[1], vs[2]],
        kind,
        maps,
        mask,
        time_courses,
    })
}

pub const VOLUME_STEM: &str = "volume";
pub const LABELS_STEM: &str = "labels";
pub const REFERENCES_FILE: &str = "references.tsv";
pub const EVENTS_FILE: &str = "events.tsv";
pub const REGIONS_FILE: &str = "regions.txt";

/// Region voxel counts as ordered `key=value` pairs.
pub fn region_summary(truth: &GroundTruth) -> Metadata {
    let (pure, overlap, background) = truth.region_counts();
    let mut m = Metadata::default();
    for (k, n) in pure.iter().enumerate() {
        m.push(&format!("tube_{}_pure", k + 1), n);
    }
    for (k, n) in overlap.iter().enumerate() {
        m.push(&format!("overlap_{}_{}", k + 1, k + 2), n);
    }
    m.push("background", background);
    m
}

/// Writes a simulated volume with its ground truth: region labels,
/// reference time courses, realized events (when any) and region counts.
pub fn save_simulation(
    dir: &Path,
    volume: &Volume4D,
    truth: &GroundTruth,
    format: VolumeFormat,
) -> Result<Vec<String>> {
    create_dir(dir)?;
    let mut warnings = write_volume_as(dir, VOLUME_STEM, volume, format)?.1;
    let labels = map_volume(truth.label_map(), truth.extents, volume.voxel_size, volume.time_step)?;
    let label_format = VolumeFormat {
        kind: format.kind,
        datatype: DataType::U8,
    };
    warnings.extend(write_volume_as(dir, LABELS_STEM, &labels, label_format)?.1);

    let frames = volume.frames();
    let time: Vec<f64> = (0..frames).map(|t| t as f64 * truth.time_step).collect();
    let mut names = vec!["time".to_string()];
    let mut columns = vec![time.clone()];
    for (k, r) in truth.references.iter().enumerate() {
        names.push(format!("tube_{}", k + 1));
        columns.push(r.clone());
    }
    names.push("background".into());
    columns.push(truth.background_course.clone());
    Table::new(names, columns)?.write(&dir.join(REFERENCES_FILE))?;

    if truth.events.iter().any(Option::is_some) {
        let mut names = vec!["time".to_string()];
        let mut columns = vec![time];
        for (k, e) in truth.events.iter().enumerate() {
            if let Some(e) = e {
                names.push(format!("tube_{}", k + 1));
                columns.push(e.values().iter().map(|&v| v as f64).collect());
            }
        }
        Table::new(names, columns)?.write(&dir.join(EVENTS_FILE))?;
    }
    let path = dir.join(REGIONS_FILE);
    fs::write(&path, region_summary(truth).render()).map_err(|e| IoError::io(&path, e))?;
    Ok(warnings)
}
