//! Post-hoc characterization of extracted components: dominant frequency
//! and phase, correlation-based assignment to reference signals, quantile
//! thresholding, binary event correlation, energy-index disambiguation,
//! discrete sinusoid moments and phase-constrained least squares.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math::{self, PI};
use crate::matrix::Matrix;

/// A sampled signal with its sampling period in seconds.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeCourse {
    samples: Vec<f64>,
    dt: f64,
}

impl TimeCourse {
    pub fn new(samples: Vec<f64>, dt: f64) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::DegenerateInput("time course needs at least two samples"));
        }
        if samples.iter().any(|v| !v.is_finite()) {
            return Err(Error::DegenerateInput("time course has non-finite samples"));
        }
        if !dt.is_finite() || dt <= 0.0 {
            return Err(Error::InvalidArgument("sample period must be positive"));
        }
        Ok(Self { samples, dt })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// A sequence over the alphabet {-1, 0, +1}.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinarySequence(Vec<i8>);

impl BinarySequence {
    pub fn new(values: Vec<i8>) -> Result<Self> {
        if values.iter().any(|v| !(-1..=1).contains(v)) {
            return Err(Error::InvalidArgument("binary sequence values must be -1, 0 or 1"));
        }
        Ok(Self(values))
    }

    /// `+1` where `events` is true, `0` elsewhere.
    pub fn from_events(events: &[bool]) -> Self {
        Self(events.iter().map(|&e| e as i8).collect())
    }

    pub fn values(&self) -> &[i8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn count_nonzero(&self) -> usize {
        self.0.iter().filter(|&&v| v != 0).count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Spectral {
    /// Frequency of the dominant bin in Hz.
    pub frequency: f64,
    /// Argument of the DFT coefficient, reduced modulo π into `[0, π)`.
    pub phase: f64,
    pub magnitude: f64,
    pub bin: usize,
}

/// Largest-magnitude DFT bin of the mean-removed signal among bins
/// `1..=T/2`; ties go to the lowest bin.
pub fn dominant_frequency_phase(tc: &TimeCourse) -> Result<Spectral> {
    let x = tc.samples();
    let n = x.len();
    if n < 4 {
        return Err(Error::DegenerateInput("need at least four samples"));
    }
    let mean = x.iter().sum::<f64>() / n as f64;
    let mut best: Option<(usize, f64, f64, f64)> = None;
    for k in 1..=n / 2 {
        let (mut re, mut im) = (0.0, 0.0);
        for (t, &v) in x.iter().enumerate() {
            // Reduce k·t modulo n before scaling to keep the angle exact.
            let angle = 2.0 * PI * ((k * t) % n) as f64 / n as f64;
            re += (v - mean) * math::cos(angle);
            im -= (v - mean) * math::sin(angle);
        }
        let mag = math::hypot(re, im);
        if best.is_none_or(|(_, m, _, _)| mag > m) {
            best = Some((k, mag, re, im));
        }
    }
    let (bin, magnitude, re, im) = best.expect("at least one bin");
    if magnitude <= 1e-12 * n as f64 {
        return Err(Error::NoDominantBin);
    }
    Ok(Spectral {
        frequency: bin as f64 / (n as f64 * tc.dt()),
        phase: math::wrap(math::atan2(im, re), PI),
        magnitude,
        bin,
    })
}

/// Sample Pearson correlation.
pub fn pearson(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::ShapeMismatch("signals differ in length"));
    }
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa <= 0.0 || sbb <= 0.0 {
        return Err(Error::ZeroVariance);
    }
    Ok((sab / math::sqrt(saa * sbb)).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pair {
    pub component: usize,
    pub source: usize,
    /// Signed correlation (Pearson or binary) driving the assignment.
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Assignment {
    pub pairs: Vec<Pair>,
    pub unassigned: Vec<usize>,
}

impl Assignment {
    pub fn pair_for(&self, component: usize) -> Option<&Pair> {
        self.pairs.iter().find(|p| p.component == component)
    }

    pub fn components_of(&self, source: usize) -> Vec<usize> {
        self.pairs
            .iter()
            .filter(|p| p.source == source)
            .map(|p| p.component)
            .collect()
    }

    /// True when no source holds more than one component.
    pub fn is_one_to_one(&self) -> bool {
        let mut seen: Vec<usize> = self.pairs.iter().map(|p| p.source).collect();
        seen.sort_unstable();
        seen.windows(2).all(|w| w[0] != w[1])
    }
}

fn argmax_abs(scores: &[f64]) -> (usize, f64) {
    let mut best = (0, scores[0]);
    for (j, &s) in scores.iter().enumerate().skip(1) {
        if math::abs(s) > math::abs(best.1) {
            best = (j, s);
        }
    }
    best
}

/// Assigns every component to the reference of largest absolute Pearson
/// correlation. Several components may land on the same reference.
pub fn pearson_assign<C: AsRef<[f64]>, R: AsRef<[f64]>>(
    components: &[C],
    references: &[R],
) -> Result<Assignment> {
    if references.is_empty() {
        return Err(Error::InvalidArgument("at least one reference required"));
    }
    let mut pairs = Vec::with_capacity(components.len());
    for (k, c) in components.iter().enumerate() {
        let scores = references
            .iter()
            .map(|r| pearson(c.as_ref(), r.as_ref()))
            .collect::<Result<Vec<_>>>()?;
        let (source, score) = argmax_abs(&scores);
        pairs.push(Pair {
            component: k,
            source,
            score,
        });
    }
    Ok(Assignment {
        pairs,
        unassigned: Vec::new(),
    })
}

/// Empirical quantile with linear interpolation between order statistics:
/// for sorted `x_0 <= .. <= x_{n-1}` and `h = (n - 1) q`, returns
/// `x_⌊h⌋ + (h - ⌊h⌋)(x_⌊h⌋+1 - x_⌊h⌋)`.
pub fn quantile(values: &[f64], q: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::InvalidArgument("quantile of an empty set"));
    }
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::InvalidArgument("quantile order must lie in [0, 1]"));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let h = (sorted.len() - 1) as f64 * q;
    let lo = math::floor(h) as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    Ok(sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo]))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ThresholdMode {
    /// Keep values above the `q_hi` quantile (positive) or below the `q_lo`
    /// quantile (negative).
    TwoSided { q_hi: f64, q_lo: f64, positive: bool },
    /// Keep values whose magnitude exceeds the `q` quantile of magnitudes.
    AbsQuantile(f64),
}

pub fn threshold_map(values: &[f64], mode: ThresholdMode) -> Result<Vec<bool>> {
    match mode {
        ThresholdMode::TwoSided { q_hi, positive: true, .. } => {
            let t = quantile(values, q_hi)?;
            Ok(values.iter().map(|&v| v > t).collect())
        }
        ThresholdMode::TwoSided { q_lo, positive: false, .. } => {
            let t = quantile(values, q_lo)?;
            Ok(values.iter().map(|&v| v < t).collect())
        }
        ThresholdMode::AbsQuantile(q) => {
            let mags: Vec<f64> = values.iter().map(|v| math::abs(*v)).collect();
            let t = quantile(&mags, q)?;
            Ok(mags.iter().map(|&v| v > t).collect())
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Polarity {
    Positive,
    Negative,
}

/// Keeps the half of the signal holding the larger peak magnitude and zeroes
/// the other half. Equal peaks keep the positive half.
pub fn select_signed_part(x: &[f64]) -> Result<(Vec<f64>, Polarity)> {
    if x.iter().all(|&v| v == 0.0) {
        return Err(Error::AllZero);
    }
    let max = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = x.iter().copied().fold(f64::INFINITY, f64::min);
    if max >= -min {
        Ok((x.iter().map(|&v| v.max(0.0)).collect(), Polarity::Positive))
    } else {
        Ok((x.iter().map(|&v| v.min(0.0)).collect(), Polarity::Negative))
    }
}

/// Samples whose magnitude exceeds the `q` quantile of magnitudes keep their
/// sign; all others become 0.
pub fn binarize_timecourse(x: &[f64], q: f64) -> Result<BinarySequence> {
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::InvalidArgument("binarization quantile must lie in (0, 1)"));
    }
    let mags: Vec<f64> = x.iter().map(|v| math::abs(*v)).collect();
    let t = quantile(&mags, q)?;
    Ok(BinarySequence(
        x.iter()
            .zip(&mags)
            .map(|(&v, &m)| if m > t { sign(v) } else { 0 })
            .collect(),
    ))
}

fn sign(v: f64) -> i8 {
    if v > 0.0 {
        1
    } else if v < 0.0 {
        -1
    } else {
        0
    }
}

/// `Σ sign(u_t v_t) / Σ (|u_t| + |v_t| - |u_t v_t|)` on ternary sequences.
pub fn binary_correlation(u: &BinarySequence, v: &BinarySequence) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::ShapeMismatch("sequences differ in length"));
    }
    let (mut num, mut den) = (0i64, 0i64);
    for (&a, &b) in u.values().iter().zip(v.values()) {
        let (a, b) = (a as i64, b as i64);
        num += a * b;
        den += a.abs() + b.abs() - (a * b).abs();
    }
    if den == 0 {
        return Err(Error::BothAllZero);
    }
    Ok(num as f64 / den as f64)
}

/// Assigns each component to the reference of largest `|bcor|`, where the
/// component's signed part is binarized at the reference's own quantile.
pub fn binary_assign<C: AsRef<[f64]>>(
    components: &[C],
    references: &[BinarySequence],
    quantiles: &[f64],
) -> Result<Assignment> {
    if references.is_empty() || references.len() != quantiles.len() {
        return Err(Error::InvalidArgument("one quantile per reference required"));
    }
    let mut pairs = Vec::with_capacity(components.len());
    let mut unassigned = Vec::new();
    for (k, c) in components.iter().enumerate() {
        let (part, _) = select_signed_part(c.as_ref())?;
        let mut scores = Vec::with_capacity(references.len());
        for (r, &q) in references.iter().zip(quantiles) {
            let b = binarize_timecourse(&part, q)?;
            scores.push(match binary_correlation(&b, r) {
                Ok(s) => s,
                Err(Error::BothAllZero) => 0.0,
                Err(e) => return Err(e),
            });
        }
        let (source, score) = argmax_abs(&scores);
        if score == 0.0 {
            unassigned.push(k);
        } else {
            pairs.push(Pair {
                component: k,
                source,
                score,
            });
        }
    }
    Ok(Assignment { pairs, unassigned })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyIndex {
    pub e1: f64,
    pub e2: f64,
    /// 0 for the first input, 1 for the second; ties go to the first.
    pub winner: usize,
    pub threshold: f64,
}

/// Compares two signed parts competing for one source. Each is scaled to
/// unit peak magnitude; the threshold is half the `q_src` quantile of
/// `|C*_1| + |C*_2|` and each energy sums the magnitudes above it.
pub fn energy_index(c1: &[f64], c2: &[f64], q_src: f64) -> Result<EnergyIndex> {
    if c1.len() != c2.len() {
        return Err(Error::ShapeMismatch("signals differ in length"));
    }
    let peak = |c: &[f64]| c.iter().fold(0.0f64, |m, v| m.max(math::abs(*v)));
    let (p1, p2) = (peak(c1), peak(c2));
    if p1 == 0.0 || p2 == 0.0 {
        return Err(Error::AllZero);
    }
    let n1: Vec<f64> = c1.iter().map(|v| math::abs(*v) / p1).collect();
    let n2: Vec<f64> = c2.iter().map(|v| math::abs(*v) / p2).collect();
    let sum: Vec<f64> = n1.iter().zip(&n2).map(|(a, b)| a + b).collect();
    let threshold = 0.5 * quantile(&sum, q_src)?;
    if threshold == 0.0 {
        return Err(Error::DegenerateThreshold);
    }
    let energy = |n: &[f64]| n.iter().filter(|&&v| v > threshold).sum::<f64>();
    let (e1, e2) = (energy(&n1), energy(&n2));
    Ok(EnergyIndex {
        e1,
        e2,
        winner: if e2 > e1 { 1 } else { 0 },
        threshold,
    })
}

/// Resolves sources claimed by several components. Competitors are compared
/// in component order with [`energy_index`] on their signed parts, at the
/// source's quantile `q_src[source]`; losers move to `unassigned`.
pub fn disambiguate<P: AsRef<[f64]>>(
    assignment: &Assignment,
    parts: &[P],
    q_src: &[f64],
) -> Result<(Assignment, Vec<(usize, EnergyIndex)>)> {
    let mut out = Assignment {
        pairs: Vec::new(),
        unassigned: assignment.unassigned.clone(),
    };
    let mut contests = Vec::new();
    let mut sources: Vec<usize> = assignment.pairs.iter().map(|p| p.source).collect();
    sources.sort_unstable();
    sources.dedup();
    for source in sources {
        let q = *q_src
            .get(source)
            .ok_or(Error::IndexOutOfRange { index: source, count: q_src.len() })?;
        let claims: Vec<&Pair> = assignment.pairs.iter().filter(|p| p.source == source).collect();
        let mut champion = claims[0];
        for &challenger in &claims[1..] {
            let e = energy_index(
                parts[champion.component].as_ref(),
                parts[challenger.component].as_ref(),
                q,
            )?;
            contests.push((source, e));
            let loser = if e.winner == 0 {
                challenger
            } else {
                let l = champion;
                champion = challenger;
                l
            };
            out.unassigned.push(loser.component);
        }
        out.pairs.push(*champion);
    }
    out.pairs.sort_by_key(|p| p.component);
    out.unassigned.sort_unstable();
    Ok((out, contests))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moments {
    pub ex: f64,
    pub ey: f64,
    pub exy: f64,
    pub cov: f64,
}

/// `Σ_{k=0}^{n-1} (sin, cos)(α + kβ)` in closed form.
fn trig_sums(alpha: f64, beta: f64, n: usize) -> (f64, f64) {
    let half = math::sin(beta / 2.0);
    if math::abs(half) < 1e-9 {
        let (mut s, mut c) = (0.0, 0.0);
        for k in 0..n {
            s += math::sin(alpha + k as f64 * beta);
            c += math::cos(alpha + k as f64 * beta);
        }
        return (s, c);
    }
    let ratio = math::sin(n as f64 * beta / 2.0) / half;
    let mid = alpha + (n as f64 - 1.0) * beta / 2.0;
    (ratio * math::sin(mid), ratio * math::cos(mid))
}

/// Moments of `X = sin(φ₁ + 2πfU)` and `Y = sin(φ₂ + 2πfU)` for `U`
/// uniform on the integers `a..=b`.
pub fn sinusoid_moments(f: f64, phi1: f64, phi2: f64, a: i64, b: i64) -> Result<Moments> {
    if b < a {
        return Err(Error::InvalidArgument("need b >= a"));
    }
    let n = (b - a + 1) as usize;
    let base = 2.0 * PI * math::wrap(f * a as f64, 1.0);
    let beta = 2.0 * PI * f;
    let ex = trig_sums(phi1 + base, beta, n).0 / n as f64;
    let ey = trig_sums(phi2 + base, beta, n).0 / n as f64;
    let (_, c) = trig_sums(phi1 + phi2 + 2.0 * base, 2.0 * beta, n);
    let exy = 0.5 * (math::cos(phi1 - phi2) - c / n as f64);
    Ok(Moments {
        ex,
        ey,
        exy,
        cov: exy - ex * ey,
    })
}

/// Grid size for the phase search in [`phase_constrained_lsq`].
pub const DEFAULT_PHASE_GRID: usize = 1024;

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseFit {
    /// Phase in `[0, π)`.
    pub phase: f64,
    /// One coefficient per column of the signal matrix.
    pub coefficients: Vec<f64>,
    pub residual: f64,
}

/// Lower-triangular Cholesky factor of a symmetric positive definite matrix.
fn cholesky(a: &Matrix) -> Result<Matrix> {
    let n = a.rows();
    let scale = (0..n).map(|i| a[(i, i)]).fold(0.0f64, f64::max);
    let mut l = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            if i == j {
                if s <= 1e-12 * scale || scale <= 0.0 {
                    return Err(Error::SingularNormalEquations);
                }
                l[(i, i)] = math::sqrt(s);
            } else {
                l[(i, j)] = s / l[(j, j)];
            }
        }
    }
    Ok(l)
}

fn cholesky_solve(l: &Matrix, b: &[f64]) -> Vec<f64> {
    let n = l.rows();
    let mut y = b.to_vec();
    for i in 0..n {
        for k in 0..i {
            y[i] -= l[(i, k)] * y[k];
        }
        y[i] /= l[(i, i)];
    }
    for i in (0..n).rev() {
        for k in i + 1..n {
            y[i] -= l[(k, i)] * y[k];
        }
        y[i] /= l[(i, i)];
    }
    y
}

struct PhaseProblem {
    chol: Matrix,
    /// `Xᵀ sin(2πfU)` and `Xᵀ cos(2πfU)`.
    xs: Vec<f64>,
    xc: Vec<f64>,
    ss: f64,
    sc: f64,
    cc: f64,
}

impl PhaseProblem {
    fn solve(&self, phi: f64) -> (Vec<f64>, f64) {
        let (cp, sp) = (math::cos(phi), math::sin(phi));
        // target(φ) = cos φ · sin(2πfU) + sin φ · cos(2πfU)
        let rhs: Vec<f64> = self.xs.iter().zip(&self.xc).map(|(s, c)| cp * s + sp * c).collect();
        let coef = cholesky_solve(&self.chol, &rhs);
        let energy = cp * cp * self.ss + 2.0 * cp * sp * self.sc + sp * sp * self.cc;
        let explained: f64 = coef.iter().zip(&rhs).map(|(a, b)| a * b).sum();
        (coef, (energy - explained).max(0.0))
    }

    fn residual(&self, phi: f64) -> f64 {
        self.solve(phi).1
    }
}

/// Fits `sin(2πfU_t + φ_i) ≈ Σ_j a_ij X_j(t)` for `i = 1..m`.
///
/// The coefficients solve the normal equations for each phase; the phase
/// profile residual is scanned on `grid` points of `[0, π)` and each local
/// minimum is refined by golden-section search. The `m` deepest minima are
/// returned, deepest first. When the profile has fewer than `m` local minima
/// the remaining fits come from the best remaining grid points.
pub fn phase_constrained_lsq(
    x: &Matrix,
    f: f64,
    times: &[f64],
    m: usize,
    grid: usize,
) -> Result<Vec<PhaseFit>> {
    let (n, p) = x.shape();
    if times.len() != n {
        return Err(Error::ShapeMismatch("one sample time per row required"));
    }
    if m == 0 || n < 2 * m {
        return Err(Error::InvalidArgument("need 1 <= m and T >= 2m"));
    }
    if grid < 3 {
        return Err(Error::InvalidArgument("phase grid needs at least three points"));
    }
    let s: Vec<f64> = times.iter().map(|&t| math::sin(2.0 * PI * f * t)).collect();
    let c: Vec<f64> = times.iter().map(|&t| math::cos(2.0 * PI * f * t)).collect();
    let mut xs = vec![0.0; p];
    let mut xc = vec![0.0; p];
    for t in 0..n {
        for j in 0..p {
            xs[j] += x[(t, j)] * s[t];
            xc[j] += x[(t, j)] * c[t];
        }
    }
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(u, v)| u * v).sum::<f64>();
    let problem = PhaseProblem {
        chol: cholesky(&x.col_gram())?,
        ss: dot(&s, &s),
        sc: dot(&s, &c),
        cc: dot(&c, &c),
        xs,
        xc,
    };

    let step = PI / grid as f64;
    let profile: Vec<f64> = (0..grid).map(|i| problem.residual(i as f64 * step)).collect();
    // The profile has period π, so neighbours wrap around.
    let mut minima: Vec<usize> = (0..grid)
        .filter(|&i| {
            let prev = profile[(i + grid - 1) % grid];
            let next = profile[(i + 1) % grid];
            profile[i] <= prev && profile[i] < next
        })
        .collect();
    minima.sort_by(|&a, &b| profile[a].total_cmp(&profile[b]).then(a.cmp(&b)));
    if minima.len() < m {
        let mut rest: Vec<usize> = (0..grid).filter(|i| !minima.contains(i)).collect();
        rest.sort_by(|&a, &b| profile[a].total_cmp(&profile[b]).then(a.cmp(&b)));
        for i in rest {
            if minima.len() >= m {
                break;
            }
            let far = minima.iter().all(|&j| {
                let d = i.abs_diff(j);
                d.min(grid - d) > 1
            });
            if far {
                minima.push(i);
            }
        }
    }

    let fits = minima
        .iter()
        .take(m)
        .map(|&i| {
            let phi = refine(&problem, i as f64 * step, step);
            let (coefficients, residual) = problem.solve(phi);
            PhaseFit {
                phase: math::wrap(phi, PI),
                coefficients,
                residual,
            }
        })
        .collect();
    Ok(fits)
}

/// Golden-section search for the residual minimum within `center ± width`.
fn refine(problem: &PhaseProblem, center: f64, width: f64) -> f64 {
    let g = (math::sqrt(5.0) - 1.0) / 2.0;
    let (mut a, mut b) = (center - width, center + width);
    let mut x1 = b - g * (b - a);
    let mut x2 = a + g * (b - a);
    let mut f1 = problem.residual(x1);
    let mut f2 = problem.residual(x2);
    for _ in 0..80 {
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - g * (b - a);
            f1 = problem.residual(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + g * (b - a);
            f2 = problem.residual(x2);
        }
    }
    let mid = 0.5 * (a + b);
    if problem.residual(center) < problem.residual(mid) {
        center
    } else {
        mid
    }
}
