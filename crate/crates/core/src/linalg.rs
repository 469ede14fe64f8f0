//! Dense vectors and matrices over a [`Scalar`] backend, plus the small
//! Gaussian solver used for the restricted systems along the path.

use std::ops::{Index, IndexMut};


use crate::error::{Error, Result};
use crate::scalar::{Scalar, Tolerance};

/// A fixed-length column vector.
#[derive(Clone, Debug, PartialEq)]
pub struct Vector<S>(Vec<S>);

impl<S: Scalar> Vector<S> {
    pub fn new(components: Vec<S>) -> Self {
        Vector(components)
    }

    pub fn zeros(n: usize) -> Self {
        Vector(vec![S::zero(); n])
    }

    pub fn from_ints(values: &[i64]) -> Self {
        Vector(values.iter().map(|&v| S::from_int(v)).collect())
    }

    pub fn ones(n: usize) -> Self {
        Vector(vec![S::one(); n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, S> {
        self.0.iter()
    }

    pub fn as_slice(&self) -> &[S] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<S> {
        self.0
    }

    pub fn dot(&self, other: &Vector<S>) -> S {
        assert_eq!(self.len(), other.len(), "dot length mismatch");
        let mut acc = S::zero();
        for (a, b) in self.0.iter().zip(other.0.iter()) {
            acc = acc + a.clone() * b.clone();
        }
        acc
    }

    pub fn norm_sq(&self) -> S {
        self.dot(self)
    }

    pub fn l1_norm(&self) -> S {
        let mut acc = S::zero();
        for a in &self.0 {
            acc = acc + a.abs();
        }
        acc
    }

    pub fn add(&self, other: &Vector<S>) -> Vector<S> {
        assert_eq!(self.len(), other.len());
        Vector(
            self.0
                .iter()
                .zip(other.0.iter())
                .map(|(a, b)| a.clone() + b.clone())
                .collect(),
        )
    }

    pub fn sub(&self, other: &Vector<S>) -> Vector<S> {
        assert_eq!(self.len(), other.len());
        Vector(
            self.0
                .iter()
                .zip(other.0.iter())
                .map(|(a, b)| a.clone() - b.clone())
                .collect(),
        )
    }

    pub fn scale(&self, c: &S) -> Vector<S> {
        Vector(self.0.iter().map(|a| a.clone() * c.clone()).collect())
    }

    /// `self + c * other`.
    pub fn add_scaled(&self, c: &S, other: &Vector<S>) -> Vector<S> {
        assert_eq!(self.len(), other.len());
        Vector(
            self.0
                .iter()
                .zip(other.0.iter())
                .map(|(a, b)| a.clone() + c.clone() * b.clone())
                .collect(),
        )
    }

    /// Indices of exactly-nonzero components, in increasing order.
    pub fn support(&self) -> Vec<usize> {
        self.0
            .iter()
            .enumerate()
            .filter(|(_, v)| !v.is_zero())
            .map(|(i, _)| i)
            .collect()
    }
}

impl<S> Index<usize> for Vector<S> {
    type Output = S;
    fn index(&self, i: usize) -> &S {
        &self.0[i]
    }
}

impl<S> IndexMut<usize> for Vector<S> {
    fn index_mut(&mut self, i: usize) -> &mut S {
        &mut self.0[i]
    }
}

/// A dense row-major matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix<S> {
    rows: usize,
    cols: usize,
    data: Vec<S>,
}

impl<S: Scalar> Matrix<S> {
    pub fn from_rows(rows: Vec<Vec<S>>) -> Result<Self> {
        if rows.is_empty() || rows[0].is_empty() {
            return Err(Error::DimensionMismatch("empty matrix".into()));
        }
        let cols = rows[0].len();
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::DimensionMismatch("ragged matrix rows".into()));
        }
        let nrows = rows.len();
        Ok(Matrix {
            rows: nrows,
            cols,
            data: rows.into_iter().flatten().collect(),
        })
    }

    pub fn from_int_rows(rows: &[&[i64]]) -> Self {
        Matrix::from_rows(
            rows.iter()
                .map(|r| r.iter().map(|&v| S::from_int(v)).collect())
                .collect(),
        )
        .expect("non-empty integer rows")
    }

    pub fn identity(n: usize) -> Self {
        let mut data = vec![S::zero(); n * n];
        for i in 0..n {
            data[i * n + i] = S::one();
        }
        Matrix {
            rows: n,
            cols: n,
            data,
        }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![S::zero(); rows * cols],
        }
    }

    pub fn nrows(&self) -> usize {
        self.rows
    }

    pub fn ncols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &S {
        &self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: S) {
        self.data[i * self.cols + j] = v;
    }

    pub fn transpose(&self) -> Matrix<S> {
        let mut out = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.set(j, i, self.get(i, j).clone());
            }
        }
        out
    }

    /// `A x`.
    pub fn matvec(&self, x: &Vector<S>) -> Vector<S> {
        assert_eq!(self.cols, x.len(), "matvec dimension mismatch");
        let mut out = Vec::with_capacity(self.rows);
        for i in 0..self.rows {
            let mut acc = S::zero();
            for j in 0..self.cols {
                acc = acc + self.get(i, j).clone() * x[j].clone();
            }
            out.push(acc);
        }
        Vector(out)
    }

    /// `A^T x`.
    pub fn tr_matvec(&self, x: &Vector<S>) -> Vector<S> {
        assert_eq!(self.rows, x.len(), "tr_matvec dimension mismatch");
        let mut out = vec![S::zero(); self.cols];
        for i in 0..self.rows {
            for (j, o) in out.iter_mut().enumerate() {
                *o = o.clone() + self.get(i, j).clone() * x[i].clone();
            }
        }
        Vector(out)
    }

    /// Dot product of columns `a` and `b`, i.e. `(A^T A)_{ab}`.
    pub fn col_dot(&self, a: usize, b: usize) -> S {
        let mut acc = S::zero();
        for i in 0..self.rows {
            acc = acc + self.get(i, a).clone() * self.get(i, b).clone();
        }
        acc
    }

    /// The Gram matrix `A^T A` restricted to the given column indices.
    pub fn gram_restricted(&self, indices: &[usize]) -> Matrix<S> {
        let k = indices.len();
        let mut g = Matrix::zeros(k, k);
        for (a, &ia) in indices.iter().enumerate() {
            for (b, &ib) in indices.iter().enumerate().skip(a) {
                let v = self.col_dot(ia, ib);
                g.set(a, b, v.clone());
                g.set(b, a, v);
            }
        }
        g
    }
}

/// Solve `A x = b` by Gaussian elimination with partial pivoting.
///
/// On the rational backend a pivot is singular iff it is exactly zero; on
/// the float backend pivots at or below `zero_abs` times the largest
/// initial entry are treated as singular.
pub fn solve<S: Scalar>(a: &Matrix<S>, b: &Vector<S>, tol: &Tolerance<S>) -> Result<Vector<S>> {
    let n = a.nrows();
    if a.ncols() != n || b.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "solve: {}x{} matrix with rhs of length {}",
            a.nrows(),
            a.ncols(),
            b.len()
        )));
    }
    if n == 0 {
        return Ok(Vector::zeros(0));
    }
    let mut m = a.clone();
    let mut rhs: Vec<S> = b.as_slice().to_vec();

    let mut scale = S::zero();
    for i in 0..n {
        for j in 0..n {
            let v = m.get(i, j).abs();
            if v > scale {
                scale = v;
            }
        }
    }
    let pivot_floor = tol.zero_abs.clone() * scale;

    for col in 0..n {
        let mut piv = col;
        let mut best = m.get(col, col).abs();
        for row in col + 1..n {
            let v = m.get(row, col).abs();
            if v > best {
                best = v;
                piv = row;
            }
        }
        if best.is_zero() || best <= pivot_floor {
            return Err(Error::SingularSystem);
        }
        if piv != col {
            for j in 0..n {
                let tmp = m.get(col, j).clone();
                m.set(col, j, m.get(piv, j).clone());
                m.set(piv, j, tmp);
            }
            rhs.swap(col, piv);
        }
        let p = m.get(col, col).clone();
        for row in col + 1..n {
            if m.get(row, col).is_zero() {
                continue;
            }
            let f = m.get(row, col).clone().try_div(&p)?;
            for j in col..n {
                let v = m.get(row, j).clone() - f.clone() * m.get(col, j).clone();
                m.set(row, j, v);
            }
            rhs[row] = rhs[row].clone() - f * rhs[col].clone();
        }
    }

    let mut x = vec![S::zero(); n];
    for col in (0..n).rev() {
        let mut acc = rhs[col].clone();
        for j in col + 1..n {
            acc = acc - m.get(col, j).clone() * x[j].clone();
        }
        x[col] = acc.try_div(m.get(col, col))?;
    }
    Ok(Vector(x))
}
