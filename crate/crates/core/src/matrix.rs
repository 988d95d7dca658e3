use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Index, IndexMut};

use crate::error::{Error, Result};
use crate::exec::{Executor, Sequential};
use crate::math;

/// Dense row-major matrix of `f64`.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::ShapeMismatch("data length differs from rows * cols"));
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix from equally long rows.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(Error::ShapeMismatch("ragged rows"));
            }
            data.extend_from_slice(r);
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            data,
        })
    }

    /// Builds a matrix whose columns are the given slices.
    pub fn from_columns<C: AsRef<[f64]>>(cols: &[C]) -> Result<Self> {
        let rows = cols.first().map_or(0, |c| c.as_ref().len());
        let mut m = Self::zeros(rows, cols.len());
        for (j, c) in cols.iter().enumerate() {
            let c = c.as_ref();
            if c.len() != rows {
                return Err(Error::ShapeMismatch("ragged columns"));
            }
            for (i, &v) in c.iter().enumerate() {
                m[(i, j)] = v;
            }
        }
        Ok(m)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn set_column(&mut self, j: usize, values: &[f64]) {
        for (i, &v) in values.iter().enumerate() {
            self[(i, j)] = v;
        }
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn scale(&mut self, s: f64) {
        self.data.iter_mut().for_each(|v| *v *= s);
    }

    pub fn frobenius_norm(&self) -> f64 {
        math::sqrt(self.data.iter().map(|v| v * v).sum())
    }

    /// Largest absolute entry of `self - other`.
    pub fn max_abs_diff(&self, other: &Matrix) -> f64 {
        assert_eq!(self.shape(), other.shape());
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| math::abs(a - b))
            .fold(0.0, f64::max)
    }

    pub fn sub(&self, other: &Matrix) -> Result<Matrix> {
        if self.shape() != other.shape() {
            return Err(Error::ShapeMismatch("operands of subtraction"));
        }
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect();
        Ok(Matrix {
            rows: self.rows,
            cols: self.cols,
            data,
        })
    }

    /// `self * other`.
    pub fn matmul(&self, other: &Matrix) -> Result<Matrix> {
        self.matmul_with(other, &Sequential)
    }

    pub fn matmul_with(&self, other: &Matrix, exec: &dyn Executor) -> Result<Matrix> {
        if self.cols != other.rows {
            return Err(Error::ShapeMismatch("inner dimensions of product"));
        }
        let mut out = Matrix::zeros(self.rows, other.cols);
        let n = other.cols;
        exec.for_each_row(&mut out.data, n, &|i, row| {
            for (k, &a) in self.row(i).iter().enumerate() {
                if a != 0.0 {
                    for (o, &b) in row.iter_mut().zip(other.row(k)) {
                        *o += a * b;
                    }
                }
            }
        });
        Ok(out)
    }

    /// `selfᵀ * other`, without materializing the transpose.
    pub fn t_matmul_with(&self, other: &Matrix, exec: &dyn Executor) -> Result<Matrix> {
        if self.rows != other.rows {
            return Err(Error::ShapeMismatch("row counts of transposed product"));
        }
        let mut out = Matrix::zeros(self.cols, other.cols);
        let n = other.cols;
        exec.for_each_row(&mut out.data, n, &|i, row| {
            for k in 0..self.rows {
                let a = self.data[k * self.cols + i];
                if a != 0.0 {
                    for (o, &b) in row.iter_mut().zip(other.row(k)) {
                        *o += a * b;
                    }
                }
            }
        });
        Ok(out)
    }

    pub fn t_matmul(&self, other: &Matrix) -> Result<Matrix> {
        self.t_matmul_with(other, &Sequential)
    }

    /// `self * otherᵀ`.
    pub fn matmul_t(&self, other: &Matrix) -> Result<Matrix> {
        if self.cols != other.cols {
            return Err(Error::ShapeMismatch("column counts of product with transpose"));
        }
        let mut out = Matrix::zeros(self.rows, other.rows);
        for i in 0..self.rows {
            for j in 0..other.rows {
                out[(i, j)] = dot(self.row(i), other.row(j));
            }
        }
        Ok(out)
    }

    /// Row Gram matrix `self * selfᵀ`, optionally after subtracting a
    /// per-row offset from every entry.
    pub fn row_gram_with(&self, row_offsets: Option<&[f64]>, exec: &dyn Executor) -> Matrix {
        let n = self.rows;
        let mut out = Matrix::zeros(n, n);
        exec.for_each_row(&mut out.data, n, &|i, row| {
            let a = self.row(i);
            for (j, o) in row.iter_mut().enumerate() {
                let b = self.row(j);
                *o = match row_offsets {
                    None => dot(a, b),
                    Some(mu) => {
                        let (ma, mb) = (mu[i], mu[j]);
                        a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum()
                    }
                };
            }
        });
        out
    }

    pub fn row_gram(&self) -> Matrix {
        self.row_gram_with(None, &Sequential)
    }

    /// Column Gram matrix `selfᵀ * self`.
    pub fn col_gram_with(&self, exec: &dyn Executor) -> Matrix {
        self.t_matmul_with(self, exec).expect("shapes agree")
    }

    pub fn col_gram(&self) -> Matrix {
        self.col_gram_with(&Sequential)
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    math::sqrt(dot(a, a))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn products_agree() {
        let a = Matrix::from_rows(&[[1.0, 2.0, 3.0], [4.0, 5.0, 6.0]]).unwrap();
        let b = Matrix::from_rows(&[[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]]).unwrap();
        let ab = a.matmul(&b).unwrap();
        assert_eq!(ab, Matrix::from_rows(&[[4.0, 5.0], [10.0, 11.0]]).unwrap());
        let atb = a.transpose().t_matmul(&b).unwrap();
        assert_eq!(atb, ab);
        assert_eq!(a.row_gram(), a.matmul(&a.transpose()).unwrap());
        assert_eq!(a.col_gram(), a.transpose().matmul(&a).unwrap());
        assert_eq!(a.matmul_t(&a).unwrap(), a.row_gram());
    }

    #[test]
    fn centered_row_gram() {
        let a = Matrix::from_rows(&[[1.0, 3.0], [2.0, 6.0]]).unwrap();
        let g = a.row_gram_with(Some(&[2.0, 4.0]), &Sequential);
        assert_eq!(g, Matrix::from_rows(&[[2.0, 4.0], [4.0, 8.0]]).unwrap());
    }

    #[test]
    fn shape_errors() {
        let a = Matrix::zeros(2, 3);
        assert!(a.matmul(&a).is_err());
        assert!(Matrix::from_vec(2, 2, vec![1.0]).is_err());
        assert!(Matrix::from_rows(&[vec![1.0], vec![1.0, 2.0]]).is_err());
    }
}
