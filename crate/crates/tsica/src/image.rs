//! Slice extraction and static raster exports (binary PGM and PPM).

use std::fs;
use std::path::Path;

use tsica_core::volume::{spatial_index, Extents3};

use crate::error::{IoError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SliceAxis {
    /// Fixed z; the image spans x (columns) and y (rows).
    Axial,
    /// Fixed y; x by z.
    Coronal,
    /// Fixed x; y by z.
    Sagittal,
}

impl SliceAxis {
    pub fn name(self) -> &'static str {
        match self {
            SliceAxis::Axial => "axial",
            SliceAxis::Coronal => "coronal",
            SliceAxis::Sagittal => "sagittal",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "axial" | "z" => Some(SliceAxis::Axial),
            "coronal" | "y" => Some(SliceAxis::Coronal),
            "sagittal" | "x" => Some(SliceAxis::Sagittal),
            _ => None,
        }
    }
}

/// A 2D field of values in row-major order, row 0 at the top.
#[derive(Debug, Clone, PartialEq)]
pub struct Slice {
    pub width: usize,
    pub height: usize,
    pub values: Vec<f64>,
}

/// Cuts one plane out of a 3D field stored x fastest. Rows run from the
/// highest second-axis coordinate down so that images appear upright.
pub fn extract_slice<T: Copy>(
    values: &[T],
    extents: Extents3,
    axis: SliceAxis,
    index: usize,
) -> Result<(usize, usize, Vec<T>)> {
    let [nx, ny, nz] = extents;
    let fixed = match axis {
        SliceAxis::Axial => nz,
        SliceAxis::Coronal => ny,
        SliceAxis::Sagittal => nx,
    };
    if index >= fixed {
        return Err(IoError::SliceOutOfRange {
            axis: axis.name(),
            index,
            extent: fixed,
        });
    }
    let (w, h) = match axis {
        SliceAxis::Axial => (nx, ny),
        SliceAxis::Coronal => (nx, nz),
        SliceAxis::Sagittal => (ny, nz),
    };
    let mut out = Vec::with_capacity(w * h);
    for row in 0..h {
        let b = h - 1 - row;
        for a in 0..w {
            let i = match axis {
                SliceAxis::Axial => spatial_index(extents, a, b, index),
                SliceAxis::Coronal => spatial_index(extents, a, index, b),
                SliceAxis::Sagittal => spatial_index(extents, index, a, b),
            };
            out.push(values[i]);
        }
    }
    Ok((w, h, out))
}

pub fn slice_of(values: &[f64], extents: Extents3, axis: SliceAxis, index: usize) -> Result<Slice> {
    let (width, height, values) = extract_slice(values, extents, axis, index)?;
    Ok(Slice {
        width,
        height,
        values,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RgbImage {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<[u8; 3]>,
}

const MID_GRAY: u8 = 128;

fn min_max(values: &[f64]) -> (f64, f64) {
    values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
}

fn to_byte(x: f64) -> u8 {
    (x * 255.0).round().clamp(0.0, 255.0) as u8
}

/// Min-max scaling to 0..=255; a constant field renders mid gray.
pub fn grayscale(slice: &Slice) -> GrayImage {
    let (lo, hi) = min_max(&slice.values);
    let pixels = if hi > lo {
        slice.values.iter().map(|&v| to_byte((v - lo) / (hi - lo))).collect()
    } else {
        vec![MID_GRAY; slice.values.len()]
    };
    GrayImage {
        width: slice.width,
        height: slice.height,
        pixels,
    }
}

/// Signed two-colour map: white at zero, red for positive and blue for
/// negative values, saturating at the largest magnitude.
pub fn diverging(slice: &Slice) -> RgbImage {
    let peak = slice.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let pixels = slice
        .values
        .iter()
        .map(|&v| {
            let s = if peak > 0.0 { v / peak } else { 0.0 };
            let fade = to_byte(1.0 - s.abs());
            if s >= 0.0 {
                [255, fade, fade]
            } else {
                [fade, fade, 255]
            }
        })
        .collect();
    RgbImage {
        width: slice.width,
        height: slice.height,
        pixels,
    }
}

/// Grayscale rendering of `base` with pure red (positive value) or blue
/// (negative value) wherever `mask` is set.
pub fn overlay(base: &Slice, mask: &[bool]) -> RgbImage {
    let gray = grayscale(base);
    let pixels = gray
        .pixels
        .iter()
        .zip(&base.values)
        .zip(mask)
        .map(|((&g, &v), &on)| match (on, v >= 0.0) {
            (false, _) => [g, g, g],
            (true, true) => [255, 0, 0],
            (true, false) => [0, 0, 255],
        })
        .collect();
    RgbImage {
        width: base.width,
        height: base.height,
        pixels,
    }
}

/// Black polyline of `series` on a white canvas, min-max scaled vertically.
pub fn line_plot(series: &[f64], width: usize, height: usize) -> GrayImage {
    let mut pixels = vec![255u8; width * height];
    if series.is_empty() || width == 0 || height == 0 {
        return GrayImage {
            width,
            height,
            pixels,
        };
    }
    let (lo, hi) = min_max(series);
    let y_of = |v: f64| {
        let s = if hi > lo { (v - lo) / (hi - lo) } else { 0.5 };
        ((1.0 - s) * (height - 1) as f64).round() as usize
    };
    let x_of = |i: usize| {
        if series.len() == 1 {
            0
        } else {
            i * (width - 1) / (series.len() - 1)
        }
    };
    let mut plot = |x: usize, y: usize| pixels[y * width + x] = 0;
    for i in 0..series.len() {
        let (x0, y0) = (x_of(i), y_of(series[i]));
        plot(x0, y0);
        if i + 1 < series.len() {
            let (x1, y1) = (x_of(i + 1), y_of(series[i + 1]));
            let steps = (x1 - x0).max(y0.abs_diff(y1)).max(1);
            for s in 1..=steps {
                let x = x0 + (x1 - x0) * s / steps;
                let y = (y0 as f64 + (y1 as f64 - y0 as f64) * s as f64 / steps as f64).round() as usize;
                plot(x, y);
            }
        }
    }
    GrayImage {
        width,
        height,
        pixels,
    }
}

impl GrayImage {
    pub fn to_pgm(&self) -> Vec<u8> {
        let mut out = format!("P5\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.extend_from_slice(&self.pixels);
        out
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_pgm()).map_err(|e| IoError::io(path, e))
    }
}

impl RgbImage {
    pub fn to_ppm(&self) -> Vec<u8> {
        let mut out = format!("P6\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.extend(self.pixels.iter().flatten());
        out
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_ppm()).map_err(|e| IoError::io(path, e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slices_follow_axis_conventions() {
        let ext = [2, 3, 4];
        let values: Vec<usize> = (0..24).collect();
        let (w, h, axial) = extract_slice(&values, ext, SliceAxis::Axial, 1).unwrap();
        assert_eq!((w, h), (2, 3));
        // Top row is y = 2 at z = 1.
        assert_eq!(&axial[..2], &[spatial_index(ext, 0, 2, 1), spatial_index(ext, 1, 2, 1)]);
        let (w, h, sag) = extract_slice(&values, ext, SliceAxis::Sagittal, 1).unwrap();
        assert_eq!((w, h), (3, 4));
        assert!(sag.iter().all(|&i| i % 2 == 1));
        assert!(matches!(
            extract_slice(&values, ext, SliceAxis::Axial, 4),
            Err(IoError::SliceOutOfRange { extent: 4, .. })
        ));
    }

    #[test]
    fn constant_slice_is_uniform_gray() {
        let s = Slice {
            width: 3,
            height: 2,
            values: vec![4.2; 6],
        };
        let img = grayscale(&s);
        assert!(img.pixels.iter().all(|&p| p == MID_GRAY));
        assert!(img.to_pgm().starts_with(b"P5\n3 2\n255\n"));
    }

    #[test]
    fn min_max_scaling_hits_both_ends() {
        let s = Slice {
            width: 3,
            height: 1,
            values: vec![-1.0, 0.0, 3.0],
        };
        assert_eq!(grayscale(&s).pixels, vec![0, 64, 255]);
        let d = diverging(&s);
        assert_eq!(d.pixels[2], [255, 0, 0]);
        assert_eq!(d.pixels[1], [255, 255, 255]);
        assert_eq!(d.pixels[0][2], 255);
    }

    #[test]
    fn overlay_colours_only_masked_pixels() {
        let s = Slice {
            width: 4,
            height: 1,
            values: vec![1.0, -2.0, 0.5, 0.0],
        };
        let img = overlay(&s, &[true, true, false, false]);
        assert_eq!(img.pixels[0], [255, 0, 0]);
        assert_eq!(img.pixels[1], [0, 0, 255]);
        for p in &img.pixels[2..] {
            assert!(p[0] == p[1] && p[1] == p[2]);
        }
    }

    #[test]
    fn line_plot_marks_extremes() {
        let img = line_plot(&[0.0, 1.0, 0.0], 5, 4);
        assert_eq!(img.pixels[3 * 5], 0);
        assert_eq!(img.pixels[2], 0);
        assert_eq!(img.pixels[3 * 5 + 4], 0);
    }
}
