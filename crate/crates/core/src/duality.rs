//! Centering, Gram-duality eigendecomposition and PCA whitening.
//!
//! For a centered `n x p` data matrix `X` with `p` much larger than `n`, the
//! nonzero eigenpairs of the `p x p` matrix `XᵀX` are recovered from the
//! `n x n` Gram matrix `XXᵀ`: if `XXᵀ g = d² g` then `f = Xᵀ g / d` is a unit
//! eigenvector of `XᵀX` with the same eigenvalue. Only `n x n` and `p x r`
//! arrays are ever allocated.

use alloc::vec;
use alloc::vec::Vec;

use crate::eigen::{canonical_sign, symmetric_eigen};
use crate::error::{Error, Result};
use crate::exec::{Executor, Sequential};
use crate::math;
use crate::matrix::Matrix;

/// Default relative rank threshold on `d²`.
pub const DEFAULT_RANK_EPS: f64 = 1e-12;
/// Default cap on the Gram matrix side.
pub const DEFAULT_GRAM_CAP: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Orientation {
    /// Voxels are observations, time points are variables (`v x t`).
    Spatial,
    /// Time points are observations, voxels are variables (`t x v`).
    Temporal,
}

impl Orientation {
    pub fn name(self) -> &'static str {
        match self {
            Orientation::Spatial => "spatial",
            Orientation::Temporal => "temporal",
        }
    }
}

/// A data matrix whose columns have zero mean (and unit variance when
/// standardized). Rows are observations.
#[derive(Debug, Clone)]
pub struct CenteredMatrix {
    values: Matrix,
    column_means: Vec<f64>,
    column_scales: Vec<f64>,
    zero_variance: Vec<bool>,
    orientation: Orientation,
    standardized: bool,
}

impl CenteredMatrix {
    pub fn values(&self) -> &Matrix {
        &self.values
    }

    pub fn into_values(self) -> Matrix {
        self.values
    }

    pub fn column_means(&self) -> &[f64] {
        &self.column_means
    }

    pub fn column_scales(&self) -> &[f64] {
        &self.column_scales
    }

    /// Columns that were constant and have been replaced by zeros.
    pub fn zero_variance(&self) -> &[bool] {
        &self.zero_variance
    }

    pub fn orientation(&self) -> Orientation {
        self.orientation
    }

    pub fn standardized(&self) -> bool {
        self.standardized
    }

    /// Number of observations `n`.
    pub fn observations(&self) -> usize {
        self.values.rows()
    }

    /// Number of variables.
    pub fn variables(&self) -> usize {
        self.values.cols()
    }
}

/// Centers every column in place and optionally scales it to unit variance
/// (normalized by `n`). Constant columns become zero columns and are flagged.
pub fn center_columns(
    mut matrix: Matrix,
    standardize: bool,
    orientation: Orientation,
) -> Result<CenteredMatrix> {
    let (n, p) = matrix.shape();
    if n < 2 {
        return Err(Error::DegenerateInput("need at least two observations"));
    }
    if matrix.as_slice().iter().any(|v| !v.is_finite()) {
        return Err(Error::DegenerateInput("non-finite entry"));
    }
    let mut means = vec![0.0; p];
    for i in 0..n {
        for (m, &v) in means.iter_mut().zip(matrix.row(i)) {
            *m += v;
        }
    }
    means.iter_mut().for_each(|m| *m /= n as f64);

    let mut sumsq = vec![0.0; p];
    for i in 0..n {
        let row = matrix.row_mut(i);
        for ((v, &m), s) in row.iter_mut().zip(&means).zip(sumsq.iter_mut()) {
            *v -= m;
            *s += *v * *v;
        }
    }

    let mut scales = vec![1.0; p];
    let mut zero_variance = vec![false; p];
    for j in 0..p {
        let sd = math::sqrt(sumsq[j] / n as f64);
        if sd <= 1e-12 * (math::abs(means[j]) + 1.0) {
            zero_variance[j] = true;
        } else if standardize {
            scales[j] = sd;
        }
    }
    if zero_variance.iter().all(|&z| z) {
        return Err(Error::DegenerateInput("every column has zero variance"));
    }
    for i in 0..n {
        let row = matrix.row_mut(i);
        for j in 0..p {
            if zero_variance[j] {
                row[j] = 0.0;
            } else if standardize {
                row[j] /= scales[j];
            }
        }
    }
    Ok(CenteredMatrix {
        values: matrix,
        column_means: means,
        column_scales: scales,
        zero_variance,
        orientation,
        standardized: standardize,
    })
}

/// Eigenpairs `(d_k², g_k)` of the Gram matrix `XXᵀ`, descending.
#[derive(Debug, Clone)]
pub struct GramEigens {
    pub d2: Vec<f64>,
    /// `g_k` as columns (`n x n`).
    pub vectors: Matrix,
}

pub fn gram_eigens(x: &Matrix, cap: usize) -> Result<GramEigens> {
    gram_eigens_with(x, cap, &Sequential)
}

pub fn gram_eigens_with(x: &Matrix, cap: usize, exec: &dyn Executor) -> Result<GramEigens> {
    if x.rows() > cap {
        return Err(Error::InvalidArgument("Gram matrix side exceeds the configured cap"));
    }
    let gram = x.row_gram_with(None, exec);
    let eig = symmetric_eigen(&gram)?;
    let d2 = clamp_spectrum(eig.values)?;
    Ok(GramEigens {
        d2,
        vectors: eig.vectors,
    })
}

/// Zeroes round-off negatives of a PSD spectrum.
fn clamp_spectrum(mut values: Vec<f64>) -> Result<Vec<f64>> {
    let trace: f64 = values.iter().map(|v| math::abs(*v)).sum();
    for v in values.iter_mut() {
        if *v < 0.0 {
            if *v < -1e-10 * trace {
                return Err(Error::NumericalFailure);
            }
            *v = 0.0;
        }
    }
    Ok(values)
}

/// Leading eigenpairs of the covariance `XᵀX / n` obtained through the Gram
/// matrix.
#[derive(Debug, Clone)]
pub struct DualEigens {
    /// Covariance eigenvalues `d_k² / n`, descending.
    pub eigenvalues: Vec<f64>,
    pub d2: Vec<f64>,
    /// `g_k` as columns (`n x r`).
    pub small_vectors: Matrix,
    /// `f_k` as columns (`p x r`).
    pub lifted_vectors: Matrix,
    /// Eigenvalues discarded by the rank threshold.
    pub dropped: usize,
}

impl DualEigens {
    pub fn rank(&self) -> usize {
        self.eigenvalues.len()
    }
}

/// Lifts every Gram eigenvector above the rank threshold to `f_k = Xᵀ g_k / d_k`.
pub fn lift_eigenvectors(x: &Matrix, gram: &GramEigens, eps_rank: f64) -> Result<DualEigens> {
    lift_eigenvectors_with(x, gram, eps_rank, None, &Sequential)
}

/// As [`lift_eigenvectors`], lifting at most `limit` leading vectors.
pub fn lift_eigenvectors_with(
    x: &Matrix,
    gram: &GramEigens,
    eps_rank: f64,
    limit: Option<usize>,
    exec: &dyn Executor,
) -> Result<DualEigens> {
    let n = x.rows();
    if gram.vectors.rows() != n {
        return Err(Error::ShapeMismatch("Gram eigenvectors do not match the data"));
    }
    let largest = gram.d2.first().copied().unwrap_or(0.0);
    let rank = gram
        .d2
        .iter()
        .take_while(|&&d2| largest > 0.0 && d2 > eps_rank * largest)
        .count();
    if rank == 0 {
        return Err(Error::RankDeficient {
            requested: 1,
            available: 0,
        });
    }
    let r = limit.map_or(rank, |l| l.min(rank));

    let mut small = Matrix::zeros(n, r);
    for i in 0..n {
        for k in 0..r {
            small[(i, k)] = gram.vectors[(i, k)];
        }
    }
    let mut lifted = x.t_matmul_with(&small, exec)?;
    let p = lifted.rows();
    for k in 0..r {
        let inv_d = 1.0 / math::sqrt(gram.d2[k]);
        let mut col: Vec<f64> = (0..p).map(|j| lifted[(j, k)] * inv_d).collect();
        if canonical_sign(&mut col) {
            for i in 0..n {
                small[(i, k)] = -small[(i, k)];
            }
        }
        lifted.set_column(k, &col);
    }
    Ok(DualEigens {
        eigenvalues: gram.d2[..r].iter().map(|d2| d2 / n as f64).collect(),
        d2: gram.d2[..r].to_vec(),
        small_vectors: small,
        lifted_vectors: lifted,
        dropped: gram.d2.len() - rank,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ComponentCount {
    /// Keep correlation-matrix eigenvalues strictly greater than one.
    Auto,
    Fixed(usize),
}

/// Applies the component-count rule to a descending spectrum.
pub fn select_component_count(eigenvalues: &[f64], mode: ComponentCount) -> Result<usize> {
    match mode {
        ComponentCount::Auto => match eigenvalues.iter().filter(|&&v| v > 1.0).count() {
            0 => Err(Error::NoComponent),
            m => Ok(m),
        },
        ComponentCount::Fixed(0) => Err(Error::InvalidArgument("component count must be >= 1")),
        ComponentCount::Fixed(m) => match eigenvalues.iter().filter(|&&v| v > 0.0).count() {
            0 => Err(Error::RankDeficient {
                requested: m,
                available: 0,
            }),
            nonzero => Ok(m.min(nonzero)),
        },
    }
}

/// Eigenvalues of the correlation matrix between the rows of `x` (rows are
/// variables, columns are observations), computed from the small row Gram
/// matrix. Constant rows contribute zero eigenvalues.
pub fn row_correlation_spectrum(x: &Matrix, exec: &dyn Executor) -> Result<Vec<f64>> {
    let (rows, cols) = x.shape();
    if cols < 2 {
        return Err(Error::DegenerateInput("need at least two observations"));
    }
    let means: Vec<f64> = (0..rows)
        .map(|i| x.row(i).iter().sum::<f64>() / cols as f64)
        .collect();
    let mut gram = x.row_gram_with(Some(&means), exec);
    let sd: Vec<f64> = (0..rows)
        .map(|i| math::sqrt(gram[(i, i)] / cols as f64))
        .collect();
    for i in 0..rows {
        for j in 0..rows {
            let s = sd[i] * sd[j];
            let degenerate = sd[i] <= 1e-12 * (math::abs(means[i]) + 1.0)
                || sd[j] <= 1e-12 * (math::abs(means[j]) + 1.0);
            gram[(i, j)] = if degenerate { 0.0 } else { gram[(i, j)] / (cols as f64 * s) };
        }
    }
    clamp_spectrum(symmetric_eigen(&gram)?.values)
}

/// Eigenvalues of the correlation matrix between the columns of `x`.
pub fn column_correlation_spectrum(x: &Matrix, exec: &dyn Executor) -> Result<Vec<f64>> {
    let n = x.rows();
    let c = center_columns(x.clone(), true, Orientation::Spatial)?;
    let mut cov = c.values().col_gram_with(exec);
    cov.scale(1.0 / n as f64);
    clamp_spectrum(symmetric_eigen(&cov)?.values)
}

/// The `m` leading principal axes retained for whitening.
#[derive(Debug, Clone)]
pub struct ReducedBasis {
    /// Eigenvectors as columns (`p x m`), orthonormal.
    pub vectors: Matrix,
    /// Matching covariance eigenvalues, strictly positive and descending.
    pub values: Vec<f64>,
    /// Every covariance eigenvalue above the rank threshold.
    pub spectrum: Vec<f64>,
}

impl ReducedBasis {
    pub fn count(&self) -> usize {
        self.values.len()
    }
}

/// `Z = Λ^{-1/2} Eᵀ Xᵀ`, one whitened signal per row (`m x n`).
#[derive(Debug, Clone)]
pub struct WhitenedData {
    pub z: Matrix,
}

impl WhitenedData {
    pub fn components(&self) -> usize {
        self.z.rows()
    }

    pub fn observations(&self) -> usize {
        self.z.cols()
    }

    /// Largest entry of `|ZZᵀ/n - I|`.
    pub fn whiteness_error(&self) -> f64 {
        let n = self.observations() as f64;
        let mut cov = self.z.row_gram();
        cov.scale(1.0 / n);
        cov.max_abs_diff(&Matrix::identity(self.components()))
    }
}

/// Covariance eigenpairs of a centered matrix, choosing the Gram route when
/// variables outnumber observations.
pub fn principal_axes(
    x: &CenteredMatrix,
    limit: Option<usize>,
    eps_rank: f64,
    exec: &dyn Executor,
) -> Result<(Matrix, Vec<f64>, Vec<f64>)> {
    let (n, p) = x.values().shape();
    if p > n {
        let gram = gram_eigens_with(x.values(), DEFAULT_GRAM_CAP.max(n), exec)?;
        let spectrum: Vec<f64> = {
            let largest = gram.d2[0];
            gram.d2
                .iter()
                .take_while(|&&d2| largest > 0.0 && d2 > eps_rank * largest)
                .map(|d2| d2 / n as f64)
                .collect()
        };
        let dual = lift_eigenvectors_with(x.values(), &gram, eps_rank, limit, exec)?;
        Ok((dual.lifted_vectors, dual.eigenvalues, spectrum))
    } else {
        let mut cov = x.values().col_gram_with(exec);
        cov.scale(1.0 / n as f64);
        let eig = symmetric_eigen(&cov)?;
        let values = clamp_spectrum(eig.values)?;
        let largest = values[0];
        let rank = values
            .iter()
            .take_while(|&&v| largest > 0.0 && v > eps_rank * largest)
            .count();
        if rank == 0 {
            return Err(Error::RankDeficient {
                requested: 1,
                available: 0,
            });
        }
        let r = limit.map_or(rank, |l| l.min(rank));
        let mut vectors = Matrix::zeros(p, r);
        for j in 0..p {
            for k in 0..r {
                vectors[(j, k)] = eig.vectors[(j, k)];
            }
        }
        Ok((vectors, values[..r].to_vec(), values[..rank].to_vec()))
    }
}

pub fn reduce_and_whiten(x: &CenteredMatrix, m: usize) -> Result<(WhitenedData, ReducedBasis)> {
    reduce_and_whiten_with(x, m, &Sequential)
}

pub fn reduce_and_whiten_with(
    x: &CenteredMatrix,
    m: usize,
    exec: &dyn Executor,
) -> Result<(WhitenedData, ReducedBasis)> {
    if m == 0 {
        return Err(Error::InvalidArgument("component count must be >= 1"));
    }
    let (vectors, values, spectrum) = principal_axes(x, Some(m), DEFAULT_RANK_EPS, exec)?;
    if values.len() < m {
        return Err(Error::RankDeficient {
            requested: m,
            available: spectrum.len(),
        });
    }
    let n = x.observations();
    let scores = x.values().matmul_with(&vectors, exec)?;
    let mut z = Matrix::zeros(m, n);
    for k in 0..m {
        let inv = 1.0 / math::sqrt(values[k]);
        for i in 0..n {
            z[(k, i)] = scores[(i, k)] * inv;
        }
    }
    Ok((
        WhitenedData { z },
        ReducedBasis {
            vectors,
            values,
            spectrum,
        },
    ))
}
