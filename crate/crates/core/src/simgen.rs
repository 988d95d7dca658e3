//! Seeded tube phantoms: four concentric annular tubes through every slice of
//! a `128 x 128 x 3` grid, each carrying its own time course, inside a noisy
//! background.
//!
//! Randomness comes from [`Rng`] streams of the same seed: stream 0 draws the
//! Bernoulli events, stream 1 the background time course shared by every
//! background voxel, stream 2 the independent per-sample noise. Samples are
//! generated in canonical volume order.

use alloc::vec;
use alloc::vec::Vec;

use crate::analysis::{BinarySequence, TimeCourse};
use crate::error::{Error, Result};
use crate::math::{self, PI};
use crate::rng::Rng;
use crate::volume::{spatial_coords, Extents3, Volume4D};

/// Area in voxels of one full tube cross-section in the default specs.
pub const TUBE_AREA: f64 = 1640.0;
/// Area in voxels shared by neighbouring tubes in the overlapping specs.
pub const OVERLAP_AREA: f64 = 300.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Signal {
    Sinusoid { frequency: f64, phase: f64 },
    /// `+1` on the first half of each period (measured from `phase`), `-1` on
    /// the second half.
    Square { frequency: f64, phase: f64 },
    /// Independent events with probability `p`, valued `amplitude` or 0.
    Bernoulli { p: f64 },
}

impl Signal {
    fn deterministic(&self, t: f64) -> Option<f64> {
        match *self {
            Signal::Sinusoid { frequency, phase } => Some(math::sin(2.0 * PI * frequency * t + phase)),
            Signal::Square { frequency, phase } => {
                let frac = math::wrap(frequency * t + phase / (2.0 * PI), 1.0);
                Some(if frac < 0.5 { 1.0 } else { -1.0 })
            }
            Signal::Bernoulli { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TubePhantomSpec {
    pub extents: Extents3,
    /// `[inner, outer)` radius of each tube in voxels, measured in-plane from
    /// the grid centre.
    pub radii: Vec<[f64; 2]>,
    /// Voxels at or beyond this radius form the background.
    pub background_radius: f64,
    pub signals: Vec<Signal>,
    /// Event height for Bernoulli tubes.
    pub amplitude: f64,
    pub background_sd: f64,
    pub global_sd: f64,
    pub frames: usize,
    pub time_step: f64,
    pub voxel_size: [f64; 3],
}

/// Radii of `count` concentric tubes of equal cross-section `area`, each
/// sharing `overlap` voxels of area with the next one.
pub fn tube_radii(area: f64, overlap: f64, count: usize) -> Vec<[f64; 2]> {
    let mut out = Vec::with_capacity(count);
    let mut inner2: f64 = 0.0;
    for _ in 0..count {
        let outer2 = inner2 + area / PI;
        out.push([math::sqrt(inner2), math::sqrt(outer2)]);
        inner2 = (outer2 - overlap / PI).max(0.0);
    }
    out
}

impl TubePhantomSpec {
    fn tubes(signals: Vec<Signal>, overlap: f64, frames: usize) -> Self {
        let radii = tube_radii(TUBE_AREA, overlap, signals.len());
        let background_radius = radii.last().map_or(0.0, |r| r[1]);
        Self {
            extents: [128, 128, 3],
            radii,
            background_radius,
            signals,
            amplitude: 1.0,
            background_sd: 0.2,
            global_sd: 0.1,
            frames,
            time_step: 1.0,
            voxel_size: [1.0; 3],
        }
    }

    /// Two sinusoids and two square waves in overlapping tubes, 100 frames.
    pub fn multisignal() -> Self {
        Self::tubes(
            vec![
                Signal::Sinusoid { frequency: 1.0 / 11.0, phase: 0.0 },
                Signal::Square { frequency: 1.0 / 10.0, phase: 0.0 },
                Signal::Sinusoid { frequency: 1.0 / 16.0, phase: 0.0 },
                Signal::Square { frequency: 1.0 / 4.0, phase: 0.0 },
            ],
            OVERLAP_AREA,
            100,
        )
    }

    /// Bernoulli events in disjoint tubes, 100 frames, expected event counts
    /// 9, 17, 11 and 7.
    pub fn event_related() -> Self {
        Self::tubes(
            [0.09, 0.17, 0.11, 0.07]
                .iter()
                .map(|&p| Signal::Bernoulli { p })
                .collect(),
            0.0,
            100,
        )
    }

    /// Phase-shifted sinusoids at 1/16 Hz in overlapping tubes, 240 frames.
    pub fn traveling_wave() -> Self {
        Self::tubes(
            (0..4)
                .map(|k| Signal::Sinusoid {
                    frequency: 1.0 / 16.0,
                    phase: k as f64 * PI / 4.0,
                })
                .collect(),
            OVERLAP_AREA,
            240,
        )
    }

    pub fn validate(&self) -> Result<()> {
        if self.extents.contains(&0) || self.frames < 2 {
            return Err(Error::InvalidArgument("extents must be positive and frames >= 2"));
        }
        if self.radii.is_empty() || self.radii.len() != self.signals.len() || self.radii.len() > 8 {
            return Err(Error::InvalidArgument("one signal per tube, 1 to 8 tubes"));
        }
        for (k, r) in self.radii.iter().enumerate() {
            if !(r[0] >= 0.0 && r[0] < r[1]) {
                return Err(Error::InvalidArgument("tube radii must satisfy 0 <= inner < outer"));
            }
            if let Some(next) = self.radii.get(k + 1) {
                if !(next[0] > r[0] && next[1] > r[1]) {
                    return Err(Error::InvalidArgument("tube radii must increase"));
                }
            }
            if let Some(after) = self.radii.get(k + 2) {
                if after[0] < r[1] {
                    return Err(Error::InvalidArgument("only neighbouring tubes may overlap"));
                }
            }
        }
        if self.background_radius < self.radii.last().map_or(0.0, |r| r[1]) {
            return Err(Error::InvalidArgument("background must lie outside the tubes"));
        }
        for s in &self.signals {
            if let Signal::Bernoulli { p } = s {
                if !(0.0..=1.0).contains(p) {
                    return Err(Error::InvalidArgument("event probability must lie in [0, 1]"));
                }
            }
        }
        let sds = [self.background_sd, self.global_sd, self.amplitude];
        if sds.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidArgument("noise levels and amplitude must be >= 0"));
        }
        if !(self.time_step > 0.0) || self.voxel_size.iter().any(|v| !(*v > 0.0)) {
            return Err(Error::InvalidArgument("time step and voxel size must be positive"));
        }
        Ok(())
    }

    fn radius(&self, voxel: usize) -> f64 {
        let (x, y, _) = spatial_coords(self.extents, voxel);
        let cx = (self.extents[0] as f64 - 1.0) / 2.0;
        let cy = (self.extents[1] as f64 - 1.0) / 2.0;
        math::hypot(x as f64 - cx, y as f64 - cy)
    }
}

/// Bit `k` of a label marks membership in tube `k`.
pub type Label = u8;

#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub extents: Extents3,
    pub labels: Vec<Label>,
    pub background: Vec<bool>,
    /// Noise-free time course of each tube.
    pub references: Vec<Vec<f64>>,
    /// Realized events of Bernoulli tubes, `None` for the others.
    pub events: Vec<Option<BinarySequence>>,
    /// Shared background time course, before global noise.
    pub background_course: Vec<f64>,
    pub time_step: f64,
}

impl GroundTruth {
    pub fn tubes(&self) -> usize {
        self.references.len()
    }

    /// Every voxel of tube `k`, overlaps included.
    pub fn tube_region(&self, k: usize) -> Vec<bool> {
        self.labels.iter().map(|&l| l & (1 << k) != 0).collect()
    }

    /// Voxels belonging to tube `k` only.
    pub fn pure_region(&self, k: usize) -> Vec<bool> {
        self.labels.iter().map(|&l| l == 1 << k).collect()
    }

    /// Voxels shared by tubes `k` and `l`.
    pub fn overlap_region(&self, k: usize, l: usize) -> Vec<bool> {
        let both = (1 << k) | (1 << l);
        self.labels.iter().map(|&v| v & both == both).collect()
    }

    /// Pure voxel count of each tube, then overlap count of each neighbouring
    /// pair, then the background count.
    pub fn region_counts(&self) -> (Vec<usize>, Vec<usize>, usize) {
        let count = |r: Vec<bool>| r.iter().filter(|&&b| b).count();
        let n = self.tubes();
        let pure = (0..n).map(|k| count(self.pure_region(k))).collect();
        let overlap = (1..n).map(|k| count(self.overlap_region(k - 1, k))).collect();
        let bg = self.background.iter().filter(|&&b| b).count();
        (pure, overlap, bg)
    }

    pub fn reference_course(&self, k: usize) -> Result<TimeCourse> {
        TimeCourse::new(self.references[k].clone(), self.time_step)
    }

    pub fn event_counts(&self) -> Vec<Option<usize>> {
        self.events
            .iter()
            .map(|e| e.as_ref().map(BinarySequence::count_nonzero))
            .collect()
    }

    /// Region code per voxel: the tube bitmask, plus `1 << tubes` for the
    /// background.
    pub fn label_map(&self) -> Vec<f64> {
        let bg = (1u32 << self.tubes()) as f64;
        self.labels
            .iter()
            .zip(&self.background)
            .map(|(&l, &b)| l as f64 + if b { bg } else { 0.0 })
            .collect()
    }
}

/// Generates the phantom described by `spec`.
pub fn simulate(spec: &TubePhantomSpec, seed: u64) -> Result<(Volume4D, GroundTruth)> {
    spec.validate()?;
    let [nx, ny, nz] = spec.extents;
    let nvox = nx * ny * nz;
    let nt = spec.frames;

    let mut labels = vec![0 as Label; nvox];
    let mut background = vec![false; nvox];
    for v in 0..nvox {
        let r = spec.radius(v);
        for (k, [lo, hi]) in spec.radii.iter().enumerate() {
            if r >= *lo && r < *hi {
                labels[v] |= 1 << k;
            }
        }
        background[v] = r >= spec.background_radius;
    }

    let mut event_rng = Rng::stream(seed, 0);
    let mut references: Vec<Vec<f64>> = Vec::with_capacity(spec.signals.len());
    let mut events = Vec::with_capacity(spec.signals.len());
    for s in &spec.signals {
        match s {
            Signal::Bernoulli { p } => {
                let hits: Vec<bool> = (0..nt).map(|_| event_rng.bernoulli(*p)).collect();
                references.push(hits.iter().map(|&h| if h { spec.amplitude } else { 0.0 }).collect());
                events.push(Some(BinarySequence::from_events(&hits)));
            }
            other => {
                let course = (0..nt)
                    .map(|t| other.deterministic(t as f64 * spec.time_step).expect("deterministic"))
                    .collect();
                references.push(course);
                events.push(None);
            }
        }
    }

    let mut bg_rng = Rng::stream(seed, 1);
    let background_course: Vec<f64> = (0..nt).map(|_| spec.background_sd * bg_rng.normal()).collect();

    let mut noise = Rng::stream(seed, 2);
    let mut samples = Vec::with_capacity(nvox * nt);
    for t in 0..nt {
        for v in 0..nvox {
            let mut value = 0.0;
            let l = labels[v];
            for (k, course) in references.iter().enumerate() {
                if l & (1 << k) != 0 {
                    value += course[t];
                }
            }
            if background[v] {
                value += background_course[t];
            }
            if spec.global_sd > 0.0 {
                value += spec.global_sd * noise.normal();
            }
            samples.push(value);
        }
    }
    let volume = Volume4D::new([nx, ny, nz, nt], samples)?.with_geometry(spec.voxel_size, spec.time_step);
    Ok((
        volume,
        GroundTruth {
            extents: spec.extents,
            labels,
            background,
            references,
            events,
            background_course,
            time_step: spec.time_step,
        },
    ))
}

pub fn simulate_multisignal(seed: u64) -> Result<(Volume4D, GroundTruth)> {
    simulate(&TubePhantomSpec::multisignal(), seed)
}

pub fn simulate_event_related(seed: u64) -> Result<(Volume4D, GroundTruth)> {
    simulate(&TubePhantomSpec::event_related(), seed)
}

pub fn simulate_traveling_wave(seed: u64) -> Result<(Volume4D, GroundTruth)> {
    simulate(&TubePhantomSpec::traveling_wave(), seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::dominant_frequency_phase;

    fn quiet(mut spec: TubePhantomSpec) -> TubePhantomSpec {
        spec.background_sd = 0.0;
        spec.global_sd = 0.0;
        spec
    }

    #[test]
    fn radii_from_areas() {
        let r = tube_radii(TUBE_AREA, OVERLAP_AREA, 4);
        for [lo, hi] in &r {
            assert!((PI * (hi * hi - lo * lo) - TUBE_AREA).abs() < 1e-9);
        }
        for w in r.windows(2) {
            let shared = PI * (w[0][1] * w[0][1] - w[1][0] * w[1][0]);
            assert!((shared - OVERLAP_AREA).abs() < 1e-9);
        }
        let disjoint = tube_radii(TUBE_AREA, 0.0, 4);
        for w in disjoint.windows(2) {
            assert_eq!(w[0][1], w[1][0]);
        }
    }

    #[test]
    fn geometry_is_consistent() {
        let (_, gt) = simulate(&quiet(TubePhantomSpec::multisignal()), 1).unwrap();
        let (pure, overlap, bg) = gt.region_counts();
        for &p in &pure {
            assert!(p >= 3 * 500, "{pure:?}");
        }
        assert!(overlap.iter().all(|&o| o > 0));
        assert!(bg > 0);
        for (l, b) in gt.labels.iter().zip(&gt.background) {
            assert!(l.count_ones() <= 2);
            assert!(!(*b && *l != 0));
        }
        let (_, gt) = simulate(&quiet(TubePhantomSpec::event_related()), 1).unwrap();
        assert!(gt.labels.iter().all(|l| l.count_ones() <= 1));
        let (_, overlap, _) = gt.region_counts();
        assert!(overlap.iter().all(|&o| o == 0));
    }

    #[test]
    fn noise_free_voxels_equal_signals() {
        let (vol, gt) = simulate(&quiet(TubePhantomSpec::multisignal()), 4).unwrap();
        for k in 0..4 {
            let v = gt.pure_region(k).iter().position(|&b| b).unwrap();
            assert_eq!(vol.time_course(v), gt.references[k]);
        }
        let v = gt.overlap_region(1, 2).iter().position(|&b| b).unwrap();
        let sum: Vec<f64> = (0..100).map(|t| gt.references[1][t] + gt.references[2][t]).collect();
        assert_eq!(vol.time_course(v), sum);
    }

    #[test]
    fn square_wave_has_even_duty_cycle() {
        let (_, gt) = simulate(&quiet(TubePhantomSpec::multisignal()), 0).unwrap();
        assert_eq!(&gt.references[3][..8], &[1.0, 1.0, -1.0, -1.0, 1.0, 1.0, -1.0, -1.0]);
        assert_eq!(gt.references[1].iter().sum::<f64>(), 0.0);
        let tc = gt.reference_course(2).unwrap();
        // 100 frames: 1/16 Hz falls nearest to bin 6.
        assert_eq!(dominant_frequency_phase(&tc).unwrap().bin, 6);
    }

    #[test]
    fn events_match_references() {
        let (_, gt) = simulate_event_related(12).unwrap();
        for (k, e) in gt.events.iter().enumerate() {
            let e = e.as_ref().unwrap();
            let ones = gt.references[k].iter().filter(|&&v| v == 1.0).count();
            assert_eq!(e.count_nonzero(), ones);
            assert_eq!(gt.event_counts()[k], Some(ones));
        }
    }

    #[test]
    fn deterministic_per_seed() {
        let (a, _) = simulate_traveling_wave(7).unwrap();
        let (b, _) = simulate_traveling_wave(7).unwrap();
        let (c, _) = simulate_traveling_wave(8).unwrap();
        assert_eq!(a.frames(), 240);
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn background_noise_level() {
        let (vol, gt) = simulate_multisignal(3).unwrap();
        let target = (0.2f64 * 0.2 + 0.1 * 0.1).sqrt();
        let v = gt.background.iter().position(|&b| b).unwrap();
        let tc = vol.time_course(v);
        let mean = tc.iter().sum::<f64>() / tc.len() as f64;
        let sd = (tc.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (tc.len() - 1) as f64).sqrt();
        assert!((sd - target).abs() <= 0.15 * target, "{sd}");
    }

    #[test]
    fn rejects_invalid_specs() {
        let mut s = TubePhantomSpec::multisignal();
        s.radii.swap(0, 1);
        assert!(s.validate().is_err());
        let mut s = TubePhantomSpec::multisignal();
        s.global_sd = -1.0;
        assert!(s.validate().is_err());
        let mut s = TubePhantomSpec::event_related();
        s.signals[0] = Signal::Bernoulli { p: 1.5 };
        assert!(s.validate().is_err());
    }
}
