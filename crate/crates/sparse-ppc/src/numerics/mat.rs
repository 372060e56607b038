//! Dense row-major matrices sized for this crate's problems (state dimension
//! below ~10, lifted horizon matrices a few hundred entries per side).

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Sub};

/// Dense real matrix, row-major storage: `data[i * ncols + j]`.
#[derive(Clone, PartialEq)]
pub struct Mat {
    nrows: usize,
    ncols: usize,
    data: Vec<f64>,
}

impl Mat {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self { nrows, ncols, data: vec![0.0; nrows * ncols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    /// Build from row slices. Panics on ragged input; callers validate
    /// user-supplied data before reaching this constructor.
    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let nrows = rows.len();
        assert!(nrows > 0, "matrix needs at least one row");
        let ncols = rows[0].len();
        let mut data = Vec::with_capacity(nrows * ncols);
        for r in rows {
            assert_eq!(r.len(), ncols, "ragged rows");
            data.extend_from_slice(r);
        }
        Self { nrows, ncols, data }
    }

    pub fn from_vec(nrows: usize, ncols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), nrows * ncols, "data length mismatch");
        Self { nrows, ncols, data }
    }

    pub fn from_fn(nrows: usize, ncols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(nrows, ncols);
        for i in 0..nrows {
            for j in 0..ncols {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    /// n×1 column matrix from a slice.
    pub fn column(v: &[f64]) -> Self {
        Self { nrows: v.len(), ncols: 1, data: v.to_vec() }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn is_square(&self) -> bool {
        self.nrows == self.ncols
    }

    pub fn t(&self) -> Mat {
        let mut out = Mat::zeros(self.ncols, self.nrows);
        for i in 0..self.nrows {
            for j in 0..self.ncols {
                out[(j, i)] = self[(i, j)];
            }
        }
        out
    }

    /// Matrix-vector product `self * v`.
    pub fn matvec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.ncols, "matvec dimension mismatch");
        let mut out = vec![0.0; self.nrows];
        for i in 0..self.nrows {
            let row = &self.data[i * self.ncols..(i + 1) * self.ncols];
            out[i] = dot(row, v);
        }
        out
    }

    /// Transposed matrix-vector product `selfᵀ * v` without forming the
    /// transpose.
    pub fn t_matvec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.nrows, "t_matvec dimension mismatch");
        let mut out = vec![0.0; self.ncols];
        for i in 0..self.nrows {
            let row = &self.data[i * self.ncols..(i + 1) * self.ncols];
            let vi = v[i];
            for (o, &r) in out.iter_mut().zip(row) {
                *o += r * vi;
            }
        }
        out
    }

    pub fn col(&self, j: usize) -> Vec<f64> {
        (0..self.nrows).map(|i| self[(i, j)]).collect()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.ncols..(i + 1) * self.ncols]
    }

    /// Submatrix made of the given columns, in the given order.
    pub fn select_cols(&self, idx: &[usize]) -> Mat {
        let mut out = Mat::zeros(self.nrows, idx.len());
        for (jo, &j) in idx.iter().enumerate() {
            for i in 0..self.nrows {
                out[(i, jo)] = self[(i, j)];
            }
        }
        out
    }

    /// Copy `block` into self with top-left corner at (i0, j0).
    pub fn set_block(&mut self, i0: usize, j0: usize, block: &Mat) {
        assert!(i0 + block.nrows <= self.nrows && j0 + block.ncols <= self.ncols);
        for i in 0..block.nrows {
            for j in 0..block.ncols {
                self[(i0 + i, j0 + j)] = block[(i, j)];
            }
        }
    }

    /// k-th matrix power of a square matrix; `pow(0)` is the identity.
    pub fn pow(&self, k: usize) -> Mat {
        assert!(self.is_square(), "matrix power needs a square matrix");
        let mut out = Mat::identity(self.nrows);
        for _ in 0..k {
            out = &out * self;
        }
        out
    }

    pub fn scale(&self, s: f64) -> Mat {
        let mut out = self.clone();
        for v in &mut out.data {
            *v *= s;
        }
        out
    }

    pub fn fro_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |acc, v| acc.max(v.abs()))
    }

    pub fn trace(&self) -> f64 {
        assert!(self.is_square());
        (0..self.nrows).map(|i| self[(i, i)]).sum()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }
}

impl Index<(usize, usize)> for Mat {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.ncols + j]
    }
}

impl IndexMut<(usize, usize)> for Mat {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.ncols + j]
    }
}

impl Mul for &Mat {
    type Output = Mat;
    fn mul(self, rhs: &Mat) -> Mat {
        assert_eq!(self.ncols, rhs.nrows, "matmul dimension mismatch");
        let mut out = Mat::zeros(self.nrows, rhs.ncols);
        for i in 0..self.nrows {
            for l in 0..self.ncols {
                let a = self[(i, l)];
                if a == 0.0 {
                    continue;
                }
                let rrow = &rhs.data[l * rhs.ncols..(l + 1) * rhs.ncols];
                let orow = &mut out.data[i * rhs.ncols..(i + 1) * rhs.ncols];
                for (o, &r) in orow.iter_mut().zip(rrow) {
                    *o += a * r;
                }
            }
        }
        out
    }
}

impl Add for &Mat {
    type Output = Mat;
    fn add(self, rhs: &Mat) -> Mat {
        assert_eq!((self.nrows, self.ncols), (rhs.nrows, rhs.ncols));
        let data = self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect();
        Mat { nrows: self.nrows, ncols: self.ncols, data }
    }
}

impl Sub for &Mat {
    type Output = Mat;
    fn sub(self, rhs: &Mat) -> Mat {
        assert_eq!((self.nrows, self.ncols), (rhs.nrows, rhs.ncols));
        let data = self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect();
        Mat { nrows: self.nrows, ncols: self.ncols, data }
    }
}

impl fmt::Debug for Mat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Mat {}x{} [", self.nrows, self.ncols)?;
        for i in 0..self.nrows {
            writeln!(f, "  {:?}", self.row(i))?;
        }
        write!(f, "]")
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matmul_and_transpose() {
        let a = Mat::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0], vec![5.0, 6.0]]);
        let b = Mat::from_rows(&[vec![1.0, 0.0], vec![0.0, 2.0]]);
        let c = &a * &b;
        assert_eq!(c[(2, 1)], 12.0);
        let at = a.t();
        assert_eq!(at.nrows(), 2);
        assert_eq!(at[(1, 2)], 6.0);
    }

    #[test]
    fn t_matvec_matches_explicit_transpose() {
        let a = Mat::from_rows(&[vec![1.0, -2.0, 0.5], vec![3.0, 4.0, -1.0]]);
        let v = vec![2.0, -1.0];
        let lhs = a.t_matvec(&v);
        let rhs = a.t().matvec(&v);
        for (x, y) in lhs.iter().zip(&rhs) {
            assert!((x - y).abs() < 1e-15);
        }
    }

    #[test]
    fn pow_zero_is_identity() {
        let a = Mat::from_rows(&[vec![0.0, 1.0], vec![-1.0, 0.0]]);
        assert_eq!(a.pow(0), Mat::identity(2));
        assert_eq!(a.pow(2), (&a * &a));
    }
}
