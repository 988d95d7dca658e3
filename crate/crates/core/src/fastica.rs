//! Fixed-point FastICA with the kurtosis contrast.
//!
//! Works on whitened data `Z` (`m x n`, identity sample covariance). Each
//! unmixing row is updated with `w <- E[z (wᵀz)³] - 3w` and renormalized;
//! expectations are plain means over all `n` observations, summed in
//! observation order.

use alloc::vec;
use alloc::vec::Vec;

use crate::duality::{ReducedBasis, WhitenedData};
use crate::eigen::symmetric_eigen;
use crate::error::{Error, Result};
use crate::math;
use crate::matrix::{dot, Matrix};
use crate::rng::Rng;

/// Tolerance on `|ZZᵀ/n - I|` accepted as whitened input.
pub const WHITENESS_TOLERANCE: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    /// One component at a time, Gram-Schmidt against the ones found.
    Deflation,
    /// All components together, symmetric orthogonalization every sweep.
    Symmetric,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FastIcaConfig {
    pub seed: u64,
    pub max_iter: usize,
    /// Convergence when `|<w_new, w_old>| >= 1 - tol`.
    pub tol: f64,
    pub scheme: Scheme,
}

impl Default for FastIcaConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            max_iter: 1000,
            tol: 1e-8,
            scheme: Scheme::Deflation,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Convergence {
    pub iterations: Vec<usize>,
    /// Final `1 - |<w_new, w_old>|` per component.
    pub deltas: Vec<f64>,
    pub converged: Vec<bool>,
}

impl Convergence {
    pub fn all_converged(&self) -> bool {
        self.converged.iter().all(|&c| c)
    }
}

/// Rows are orthonormal unmixing vectors in whitened space.
#[derive(Debug, Clone, PartialEq)]
pub struct UnmixingMatrix {
    pub w: Matrix,
    pub convergence: Convergence,
    pub seed: u64,
}

pub fn fastica_kurtosis(z: &WhitenedData, cfg: &FastIcaConfig) -> Result<UnmixingMatrix> {
    if cfg.max_iter == 0 {
        return Err(Error::InvalidArgument("max_iter must be >= 1"));
    }
    if cfg.tol.is_nan() || cfg.tol <= 0.0 {
        return Err(Error::InvalidArgument("tol must be positive"));
    }
    let deviation = z.whiteness_error();
    if deviation.is_nan() || deviation > WHITENESS_TOLERANCE {
        return Err(Error::NotWhitened { deviation });
    }
    let m = z.components();
    // Observations as rows for contiguous access.
    let obs = z.z.transpose();

    let mut rng = Rng::new(cfg.seed);
    let mut init = Matrix::zeros(m, m);
    init.as_mut_slice().iter_mut().for_each(|v| *v = rng.normal());

    let (w, convergence) = match cfg.scheme {
        Scheme::Deflation => deflation(&obs, init, cfg),
        Scheme::Symmetric => symmetric(&obs, init, cfg)?,
    };
    let (w, convergence) = order_by_kurtosis(&obs, w, convergence);
    Ok(UnmixingMatrix {
        w,
        convergence,
        seed: cfg.seed,
    })
}

/// `E[z (wᵀz)³] - 3w`.
fn fixed_point_step(obs: &Matrix, w: &[f64]) -> Vec<f64> {
    let (n, m) = obs.shape();
    let mut acc = vec![0.0; m];
    for i in 0..n {
        let z = obs.row(i);
        let y = dot(w, z);
        let y3 = y * y * y;
        for (a, &zj) in acc.iter_mut().zip(z) {
            *a += zj * y3;
        }
    }
    acc.iter()
        .zip(w)
        .map(|(a, wj)| a / n as f64 - 3.0 * wj)
        .collect()
}

fn normalize(v: &mut [f64]) -> bool {
    let norm = math::sqrt(dot(v, v));
    if norm < 1e-300 || !norm.is_finite() {
        return false;
    }
    v.iter_mut().for_each(|x| *x /= norm);
    true
}

fn project_out(v: &mut [f64], basis: &[Vec<f64>]) {
    for b in basis {
        let c = dot(v, b);
        v.iter_mut().zip(b).for_each(|(x, bj)| *x -= c * bj);
    }
}

fn deflation(obs: &Matrix, init: Matrix, cfg: &FastIcaConfig) -> (Matrix, Convergence) {
    let m = init.rows();
    let mut found: Vec<Vec<f64>> = Vec::with_capacity(m);
    let mut conv = Convergence::default();
    for p in 0..m {
        let mut w = init.row(p).to_vec();
        project_out(&mut w, &found);
        if !normalize(&mut w) {
            w = completion_vector(&found, m);
        }
        let mut iterations = 0;
        let mut delta = f64::INFINITY;
        let mut converged = false;
        while iterations < cfg.max_iter {
            iterations += 1;
            let mut next = fixed_point_step(obs, &w);
            project_out(&mut next, &found);
            if !normalize(&mut next) {
                break;
            }
            delta = 1.0 - math::abs(dot(&next, &w));
            w = next;
            if delta < cfg.tol {
                converged = true;
                break;
            }
        }
        conv.iterations.push(iterations);
        conv.deltas.push(delta);
        conv.converged.push(converged);
        found.push(w);
    }
    let w = Matrix::from_rows(&found).expect("equal row lengths");
    (w, conv)
}

/// A unit vector orthogonal to `found`, taken from the canonical basis.
fn completion_vector(found: &[Vec<f64>], m: usize) -> Vec<f64> {
    for e in 0..m {
        let mut v = vec![0.0; m];
        v[e] = 1.0;
        project_out(&mut v, found);
        if normalize(&mut v) {
            return v;
        }
    }
    vec![0.0; m]
}

/// `(WWᵀ)^{-1/2} W`.
fn symmetric_orthogonalize(w: &Matrix) -> Result<Matrix> {
    let m = w.rows();
    let eig = symmetric_eigen(&w.row_gram())?;
    let mut inv_sqrt = Matrix::zeros(m, m);
    for i in 0..m {
        for j in 0..m {
            let mut s = 0.0;
            for k in 0..m {
                let lambda = eig.values[k];
                if lambda <= 0.0 {
                    return Err(Error::NumericalFailure);
                }
                s += eig.vectors[(i, k)] * eig.vectors[(j, k)] / math::sqrt(lambda);
            }
            inv_sqrt[(i, j)] = s;
        }
    }
    inv_sqrt.matmul(w)
}

fn symmetric(obs: &Matrix, init: Matrix, cfg: &FastIcaConfig) -> Result<(Matrix, Convergence)> {
    let m = init.rows();
    let mut w = symmetric_orthogonalize(&init)?;
    let mut iterations = 0;
    let mut deltas = vec![f64::INFINITY; m];
    let mut converged = false;
    while iterations < cfg.max_iter {
        iterations += 1;
        let rows: Vec<Vec<f64>> = (0..m).map(|i| fixed_point_step(obs, w.row(i))).collect();
        let next = symmetric_orthogonalize(&Matrix::from_rows(&rows)?)?;
        for (i, d) in deltas.iter_mut().enumerate() {
            *d = 1.0 - math::abs(dot(next.row(i), w.row(i)));
        }
        w = next;
        if deltas.iter().all(|&d| d < cfg.tol) {
            converged = true;
            break;
        }
    }
    let conv = Convergence {
        iterations: vec![iterations; m],
        converged: deltas.iter().map(|&d| converged || d < cfg.tol).collect(),
        deltas,
    };
    Ok((w, conv))
}

/// Excess kurtosis `E[y⁴] - 3` of `y = wᵀz` for whitened `z`.
fn projected_kurtosis(obs: &Matrix, w: &[f64]) -> f64 {
    let n = obs.rows();
    let mut m4 = 0.0;
    for i in 0..n {
        let y = dot(w, obs.row(i));
        m4 += y * y * y * y;
    }
    m4 / n as f64 - 3.0
}

fn order_by_kurtosis(obs: &Matrix, w: Matrix, conv: Convergence) -> (Matrix, Convergence) {
    let m = w.rows();
    let kurt: Vec<f64> = (0..m).map(|i| math::abs(projected_kurtosis(obs, w.row(i)))).collect();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| kurt[b].total_cmp(&kurt[a]).then(a.cmp(&b)));
    let rows: Vec<Vec<f64>> = order.iter().map(|&i| w.row(i).to_vec()).collect();
    let conv = Convergence {
        iterations: order.iter().map(|&i| conv.iterations[i]).collect(),
        deltas: order.iter().map(|&i| conv.deltas[i]).collect(),
        converged: order.iter().map(|&i| conv.converged[i]).collect(),
    };
    (Matrix::from_rows(&rows).expect("equal row lengths"), conv)
}

/// Unit-variance sources and the matching whitened-space mixing matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Sources {
    /// One source per column (`n x m`).
    pub s: Matrix,
    /// `A = Wᵀ` with column `k` multiplied by the scale removed from source `k`,
    /// so that `Z = A Sᵀ`.
    pub a: Matrix,
}

pub fn extract_sources(z: &WhitenedData, w: &Matrix) -> Result<Sources> {
    let m = z.components();
    if w.shape() != (m, m) {
        return Err(Error::ShapeMismatch("unmixing matrix does not match whitened data"));
    }
    let n = z.observations();
    let y = w.matmul(&z.z)?;
    let mut s = Matrix::zeros(n, m);
    let mut a = w.transpose();
    for k in 0..m {
        let row = y.row(k);
        let mean = row.iter().sum::<f64>() / n as f64;
        let var = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
        let sd = if var > 0.0 { math::sqrt(var) } else { 1.0 };
        for (i, &v) in row.iter().enumerate() {
            s[(i, k)] = v / sd;
        }
        for i in 0..m {
            a[(i, k)] *= sd;
        }
    }
    Ok(Sources { s, a })
}

/// `aˣ = E_red Λ_red^{1/2} A`, one column per component.
pub fn mixing_in_data_space(basis: &ReducedBasis, a: &Matrix) -> Result<Matrix> {
    let m = basis.count();
    if a.rows() != m {
        return Err(Error::ShapeMismatch("mixing matrix does not match the basis"));
    }
    let mut scaled = a.clone();
    for k in 0..m {
        let s = math::sqrt(basis.values[k]);
        scaled.row_mut(k).iter_mut().for_each(|v| *v *= s);
    }
    basis.vectors.matmul(&scaled)
}

/// `Σ_j aˣ_{•j} ⊗ s_{•j}`: the rank-m approximation of `Ẋᵀ`.
pub fn reconstruct(a_x: &Matrix, s: &Matrix) -> Result<Matrix> {
    if a_x.cols() != s.cols() {
        return Err(Error::ShapeMismatch("component counts differ"));
    }
    let (p, n) = (a_x.rows(), s.rows());
    let mut out = Matrix::zeros(p, n);
    for j in 0..a_x.cols() {
        let sj = s.column(j);
        for r in 0..p {
            let a = a_x[(r, j)];
            if a != 0.0 {
                for (o, &v) in out.row_mut(r).iter_mut().zip(&sj) {
                    *o += a * v;
                }
            }
        }
    }
    Ok(out)
}
