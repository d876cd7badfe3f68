//! Dense semantic matrices and the design-matrix abstraction shared by the
//! solvers.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Row-per-word dense matrix of semantic vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct SemanticMatrix(DMatrix<f64>);

impl SemanticMatrix {
    pub fn new(data: DMatrix<f64>) -> Result<Self> {
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            let (i, j) = (pos % data.nrows(), pos / data.nrows());
            return Err(Error::NonFinite(format!("semantic matrix entry ({i}, {j})")));
        }
        Ok(SemanticMatrix(data))
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let q = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != q) {
            return Err(Error::Dimension("semantic rows differ in length".into()));
        }
        Self::new(DMatrix::from_fn(rows.len(), q, |i, j| rows[i][j]))
    }

    pub fn nrows(&self) -> usize {
        self.0.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.0.ncols()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.0
    }

    pub fn row_vec(&self, i: usize) -> Vec<f64> {
        self.0.row(i).iter().copied().collect()
    }

    /// Keeps the listed rows, in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> SemanticMatrix {
        SemanticMatrix(self.0.select_rows(rows))
    }
}

/// A design (input) matrix for the least-squares and incremental solvers.
///
/// Implemented for the sparse [`CueMatrix`](crate::cues::CueMatrix) and for
/// dense matrices, so every solver runs in both the comprehension (cues to
/// semantics) and production (semantics to cues) direction.
pub trait Design: Sync {
    fn nrows(&self) -> usize;
    fn ncols(&self) -> usize;

    /// Writes the nonzero entries of row `i` into `buf` as `(column, value)`.
    fn row_into(&self, i: usize, buf: &mut Vec<(usize, f64)>);

    fn all_finite(&self) -> bool {
        let mut buf = Vec::new();
        (0..self.nrows()).all(|i| {
            self.row_into(i, &mut buf);
            buf.iter().all(|(_, v)| v.is_finite())
        })
    }

    /// `Xᵀ diag(w) X`, or `XᵀX` when `weights` is `None`.
    fn weighted_gram(&self, weights: Option<&[f64]>) -> DMatrix<f64> {
        let a = self.ncols();
        let mut gram = DMatrix::zeros(a, a);
        let mut buf = Vec::new();
        for i in 0..self.nrows() {
            let w = weights.map_or(1.0, |w| w[i]);
            if w == 0.0 {
                continue;
            }
            self.row_into(i, &mut buf);
            for &(j, xj) in &buf {
                for &(k, xk) in &buf {
                    gram[(j, k)] += w * xj * xk;
                }
            }
        }
        gram
    }

    /// `Xᵀ diag(w) Y`, or `XᵀY` when `weights` is `None`.
    fn weighted_cross(&self, weights: Option<&[f64]>, target: &DMatrix<f64>) -> DMatrix<f64> {
        let (a, b) = (self.ncols(), target.ncols());
        // row-major accumulator; rows of Y are scattered into rows of the result
        let mut acc = vec![0.0; a * b];
        let mut buf = Vec::new();
        let mut yrow = vec![0.0; b];
        for i in 0..self.nrows() {
            let w = weights.map_or(1.0, |w| w[i]);
            if w == 0.0 {
                continue;
            }
            self.row_into(i, &mut buf);
            if buf.is_empty() {
                continue;
            }
            for (k, y) in yrow.iter_mut().enumerate() {
                *y = target[(i, k)];
            }
            for &(j, xj) in &buf {
                let scale = w * xj;
                let out = &mut acc[j * b..(j + 1) * b];
                for (o, y) in out.iter_mut().zip(&yrow) {
                    *o += scale * y;
                }
            }
        }
        DMatrix::from_row_slice(a, b, &acc)
    }

    /// `X · rhs`.
    fn multiply(&self, rhs: &DMatrix<f64>) -> DMatrix<f64> {
        let b = rhs.ncols();
        let mut acc = vec![0.0; self.nrows() * b];
        let mut buf = Vec::new();
        for i in 0..self.nrows() {
            self.row_into(i, &mut buf);
            let out = &mut acc[i * b..(i + 1) * b];
            for &(j, xj) in &buf {
                for (k, o) in out.iter_mut().enumerate() {
                    *o += xj * rhs[(j, k)];
                }
            }
        }
        DMatrix::from_row_slice(self.nrows(), b, &acc)
    }

    fn to_dense(&self) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(self.nrows(), self.ncols());
        let mut buf = Vec::new();
        for i in 0..self.nrows() {
            self.row_into(i, &mut buf);
            for &(j, v) in &buf {
                out[(i, j)] = v;
            }
        }
        out
    }
}

impl Design for DMatrix<f64> {
    fn nrows(&self) -> usize {
        self.nrows()
    }

    fn ncols(&self) -> usize {
        self.ncols()
    }

    fn row_into(&self, i: usize, buf: &mut Vec<(usize, f64)>) {
        buf.clear();
        buf.extend(self.row(i).iter().enumerate().filter(|(_, v)| **v != 0.0).map(|(j, v)| (j, *v)));
    }

    fn all_finite(&self) -> bool {
        self.iter().all(|v| v.is_finite())
    }

    fn weighted_gram(&self, weights: Option<&[f64]>) -> DMatrix<f64> {
        match weights {
            None => self.tr_mul(self),
            Some(w) => {
                let mut scaled = self.clone();
                for (i, mut row) in scaled.row_iter_mut().enumerate() {
                    row *= w[i];
                }
                self.tr_mul(&scaled)
            }
        }
    }

    fn weighted_cross(&self, weights: Option<&[f64]>, target: &DMatrix<f64>) -> DMatrix<f64> {
        match weights {
            None => self.tr_mul(target),
            Some(w) => {
                let mut scaled = target.clone();
                for (i, mut row) in scaled.row_iter_mut().enumerate() {
                    row *= w[i];
                }
                self.tr_mul(&scaled)
            }
        }
    }

    fn multiply(&self, rhs: &DMatrix<f64>) -> DMatrix<f64> {
        self * rhs
    }

    fn to_dense(&self) -> DMatrix<f64> {
        self.clone()
    }
}

impl Design for SemanticMatrix {
    fn nrows(&self) -> usize {
        self.0.nrows()
    }

    fn ncols(&self) -> usize {
        self.0.ncols()
    }

    fn row_into(&self, i: usize, buf: &mut Vec<(usize, f64)>) {
        Design::row_into(&self.0, i, buf)
    }

    fn all_finite(&self) -> bool {
        true
    }

    fn weighted_gram(&self, weights: Option<&[f64]>) -> DMatrix<f64> {
        self.0.weighted_gram(weights)
    }

    fn weighted_cross(&self, weights: Option<&[f64]>, target: &DMatrix<f64>) -> DMatrix<f64> {
        self.0.weighted_cross(weights, target)
    }

    fn multiply(&self, rhs: &DMatrix<f64>) -> DMatrix<f64> {
        &self.0 * rhs
    }

    fn to_dense(&self) -> DMatrix<f64> {
        self.0.clone()
    }
}
