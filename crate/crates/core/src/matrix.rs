//! Dense row-major matrices of [`Scalar`] entries.
//!
//! Only what the map algebra needs: products, transposes, inverses and kernels.
//! All-rational matrices are handled exactly by Gauss-Jordan elimination over
//! `BigRational`; anything containing a double falls back to pivoted `f64`
//! elimination with a tolerance.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{QpError, Result};
use crate::scalar::Scalar;

/// Float inverses with a 1-norm condition estimate above this are rejected.
pub const MAX_CONDITION: f64 = 1e12;

#[derive(Clone, Debug, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<Scalar>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![Scalar::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m.set(i, i, Scalar::one());
        }
        m
    }

    /// Builds from nested rows. `cols` is needed so that `0 x k` and `k x 0`
    /// shapes survive the round trip.
    pub fn from_rows(rows: Vec<Vec<Scalar>>, cols: usize) -> Result<Self> {
        let nrows = rows.len();
        let mut data = Vec::with_capacity(nrows * cols);
        for (i, r) in rows.into_iter().enumerate() {
            if r.len() != cols {
                return Err(QpError::DimensionMismatch(format!(
                    "row {i} has {} entries, expected {cols}",
                    r.len()
                )));
            }
            data.extend(r);
        }
        Ok(Matrix {
            rows: nrows,
            cols,
            data,
        })
    }

    /// Convenience constructor for exact integer matrices.
    pub fn from_i64(rows: &[&[i64]]) -> Self {
        let cols = rows.first().map_or(0, |r| r.len());
        let rows = rows
            .iter()
            .map(|r| r.iter().map(|&v| Scalar::int(v)).collect())
            .collect();
        Matrix::from_rows(rows, cols).expect("ragged integer matrix")
    }

    pub fn from_f64(rows: usize, cols: usize, values: &[f64]) -> Self {
        assert_eq!(values.len(), rows * cols);
        Matrix {
            rows,
            cols,
            data: values.iter().map(|&v| Scalar::Real(v)).collect(),
        }
    }

    pub fn to_rows(&self) -> Vec<Vec<Scalar>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &Scalar {
        &self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: Scalar) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[Scalar] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn col(&self, j: usize) -> Vec<Scalar> {
        (0..self.rows).map(|i| self.get(i, j).clone()).collect()
    }

    pub fn is_exact(&self) -> bool {
        self.data.iter().all(Scalar::is_exact)
    }

    pub fn entries(&self) -> impl Iterator<Item = &Scalar> {
        self.data.iter()
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.set(j, i, self.get(i, j).clone());
            }
        }
        t
    }

    pub fn mul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.rows, "matrix product shape mismatch");
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for j in 0..other.cols {
                let v: Scalar = (0..self.cols)
                    .map(|k| self.get(i, k) * other.get(k, j))
                    .sum();
                out.set(i, j, v);
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[Scalar]) -> Vec<Scalar> {
        assert_eq!(self.cols, v.len(), "matrix-vector shape mismatch");
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// `[v | self]`: prepends a column.
    pub fn prepend_col(&self, v: &[Scalar]) -> Matrix {
        assert_eq!(v.len(), self.rows);
        let mut out = Matrix::zeros(self.rows, self.cols + 1);
        for i in 0..self.rows {
            out.set(i, 0, v[i].clone());
            for j in 0..self.cols {
                out.set(i, j + 1, self.get(i, j).clone());
            }
        }
        out
    }

    pub fn to_dmatrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.rows, self.cols, |i, j| self.get(i, j).to_f64())
    }

    pub fn approx_eq(&self, other: &Matrix, eps: f64) -> bool {
        self.rows == other.rows
            && self.cols == other.cols
            && self
                .data
                .iter()
                .zip(&other.data)
                .all(|(a, b)| a.approx_eq(b, eps))
    }

    /// Inverse of a square matrix. Exact when every entry is rational.
    pub fn inverse(&self) -> Result<Matrix> {
        if self.rows != self.cols {
            return Err(QpError::DimensionMismatch(format!(
                "cannot invert a {}x{} matrix",
                self.rows, self.cols
            )));
        }
        if self.is_exact() {
            self.inverse_exact()
        } else {
            self.inverse_float()
        }
    }

    fn inverse_exact(&self) -> Result<Matrix> {
        let n = self.rows;
        let mut a = self.clone();
        let mut inv = Matrix::identity(n);
        for col in 0..n {
            let pivot = (col..n)
                .find(|&r| !a.get(r, col).is_exactly_zero())
                .ok_or(QpError::SingularC)?;
            a.swap_rows(pivot, col);
            inv.swap_rows(pivot, col);
            let p = a.get(col, col).clone();
            a.scale_row(col, &p);
            inv.scale_row(col, &p);
            for r in 0..n {
                if r == col || a.get(r, col).is_exactly_zero() {
                    continue;
                }
                let f = a.get(r, col).clone();
                a.sub_row_multiple(r, col, &f);
                inv.sub_row_multiple(r, col, &f);
            }
        }
        Ok(inv)
    }

    fn inverse_float(&self) -> Result<Matrix> {
        let n = self.rows;
        let m = self.to_dmatrix();
        let inv = m.clone().lu().try_inverse().ok_or(QpError::SingularC)?;
        let cond = one_norm(&m) * one_norm(&inv);
        if !cond.is_finite() || cond > MAX_CONDITION {
            return Err(QpError::IllConditioned(cond));
        }
        Ok(Matrix::from_f64(
            n,
            n,
            &(0..n * n).map(|k| inv[(k / n, k % n)]).collect::<Vec<_>>(),
        ))
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.cols {
            self.data.swap(a * self.cols + j, b * self.cols + j);
        }
    }

    fn scale_row(&mut self, r: usize, divisor: &Scalar) {
        for j in 0..self.cols {
            let v = self.get(r, j).checked_div(divisor).expect("zero pivot");
            self.set(r, j, v);
        }
    }

    /// row[r] -= f * row[src]
    fn sub_row_multiple(&mut self, r: usize, src: usize, f: &Scalar) {
        for j in 0..self.cols {
            let v = self.get(r, j) - &(f * self.get(src, j));
            self.set(r, j, v);
        }
    }

    /// Reduced row echelon form in place; returns the pivot columns.
    ///
    /// Exact matrices pivot on the first nonzero entry. Otherwise the largest
    /// entry in the column is chosen and anything at or below
    /// `eps * max(1, max|a_ij|)` counts as zero.
    fn rref(&mut self, eps: f64) -> Vec<usize> {
        let exact = self.is_exact();
        let scale = self
            .data
            .iter()
            .map(|x| x.to_f64().abs())
            .fold(1.0_f64, f64::max);
        let thresh = eps * scale;
        let mut pivots = Vec::new();
        let mut prow = 0;
        for col in 0..self.cols {
            if prow == self.rows {
                break;
            }
            let candidate = if exact {
                (prow..self.rows).find(|&r| !self.get(r, col).is_exactly_zero())
            } else {
                (prow..self.rows)
                    .max_by(|&a, &b| {
                        let (x, y) = (self.get(a, col).to_f64().abs(), self.get(b, col).to_f64().abs());
                        x.partial_cmp(&y).unwrap_or(std::cmp::Ordering::Equal)
                    })
                    .filter(|&r| self.get(r, col).to_f64().abs() > thresh)
            };
            let Some(r) = candidate else {
                if !exact {
                    for rr in prow..self.rows {
                        self.set(rr, col, Scalar::Real(0.0));
                    }
                }
                continue;
            };
            self.swap_rows(r, prow);
            let p = self.get(prow, col).clone();
            self.scale_row(prow, &p);
            for rr in 0..self.rows {
                if rr == prow || self.get(rr, col).is_exactly_zero() {
                    continue;
                }
                let f = self.get(rr, col).clone();
                self.sub_row_multiple(rr, prow, &f);
                if !exact {
                    self.set(rr, col, Scalar::Real(0.0));
                }
            }
            pivots.push(col);
            prow += 1;
        }
        pivots
    }

    pub fn rank(&self, eps: f64) -> usize {
        self.clone().rref(eps).len()
    }

    /// Basis of `{v : self * v = 0}`, one vector per free column.
    pub fn nullspace(&self, eps: f64) -> Vec<Vec<Scalar>> {
        let mut a = self.clone();
        let pivots = a.rref(eps);
        let free: Vec<usize> = (0..self.cols).filter(|c| !pivots.contains(c)).collect();
        let zero = if self.is_exact() {
            Scalar::zero()
        } else {
            Scalar::Real(0.0)
        };
        free.iter()
            .map(|&fc| {
                let mut v = vec![zero.clone(); self.cols];
                v[fc] = if self.is_exact() {
                    Scalar::one()
                } else {
                    Scalar::Real(1.0)
                };
                for (row, &pc) in pivots.iter().enumerate() {
                    v[pc] = -a.get(row, fc);
                }
                v
            })
            .collect()
    }
}

fn one_norm(m: &DMatrix<f64>) -> f64 {
    m.column_iter()
        .map(|c| c.iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// JSON shape: array of rows.
impl Serialize for Matrix {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_rows().serialize(s)
    }
}

/// Deserialization cannot recover the column count of a matrix with no rows;
/// such matrices come back as `0 x 0`. Callers that know the shape fix it up.
impl<'de> Deserialize<'de> for Matrix {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let rows: Vec<Vec<Scalar>> = Vec::deserialize(d)?;
        let cols = rows.first().map_or(0, |r| r.len());
        Matrix::from_rows(rows, cols).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::EPS_STRUCT;

    #[test]
    fn exact_inverse_roundtrip() {
        let c = Matrix::from_i64(&[&[1, -1, -1], &[0, 1, 0], &[0, 0, 1]]);
        let inv = c.inverse().unwrap();
        assert_eq!(inv, Matrix::from_i64(&[&[1, 1, 1], &[0, 1, 0], &[0, 0, 1]]));
        assert_eq!(c.mul(&inv), Matrix::identity(3));
    }

    #[test]
    fn singular_detected() {
        let c = Matrix::from_i64(&[&[1, 2], &[2, 4]]);
        assert_eq!(c.inverse(), Err(QpError::SingularC));
        let f = Matrix::from_f64(2, 2, &[1.0, 2.0, 2.0, 4.0]);
        assert!(f.inverse().is_err());
    }

    #[test]
    fn ill_conditioned_float_rejected() {
        let f = Matrix::from_f64(2, 2, &[1.0, 1.0, 1.0, 1.0 + 1e-14]);
        assert!(matches!(f.inverse(), Err(QpError::IllConditioned(_)) | Err(QpError::SingularC)));
    }

    #[test]
    fn float_inverse() {
        let f = Matrix::from_f64(2, 2, &[2.0, 1.0, 1.0, 3.0]);
        let inv = f.inverse().unwrap();
        assert!(f.mul(&inv).approx_eq(&Matrix::identity(2), 1e-14));
    }

    #[test]
    fn nullspace_exact() {
        // kernel of [[1,1,1],[1,-1,0]] is spanned by (1,1,-2)
        let m = Matrix::from_i64(&[&[1, 1, 1], &[1, -1, 0]]);
        let k = m.nullspace(EPS_STRUCT);
        assert_eq!(k.len(), 1);
        let prod = m.mul_vec(&k[0]);
        assert!(prod.iter().all(|x| x.is_exactly_zero()));
        assert_eq!(m.rank(EPS_STRUCT), 2);
    }

    #[test]
    fn nullspace_float_threshold() {
        let m = Matrix::from_f64(2, 3, &[1.0, 2.0, 3.0, 2.0, 4.0, 6.0 + 1e-15]);
        assert_eq!(m.nullspace(EPS_STRUCT).len(), 2);
    }
}
