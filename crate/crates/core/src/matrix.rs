//! Dense row-major matrices sized for manifold points.
//!
//! Every point and tangent vector handled by the toolkit is a tiny matrix (a
//! Lorentz 4-vector, a 3×3 SPD matrix, a 5×2 orthonormal frame). Storage is
//! inline for up to 16 entries so the training hot loop does not touch the
//! allocator.

use std::fmt;
use std::ops::{Add, AddAssign, Index, IndexMut, Mul, Neg, Sub, SubAssign};

use smallvec::SmallVec;

type Storage = SmallVec<[f64; 16]>;

#[derive(Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Storage,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: SmallVec::from_elem(0.0, rows * cols),
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    /// First `cols` columns of the `rows × rows` identity.
    pub fn eye_frame(rows: usize, cols: usize) -> Self {
        let mut m = Matrix::zeros(rows, cols);
        for i in 0..rows.min(cols) {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_diag(values: &[f64]) -> Self {
        let mut m = Matrix::zeros(values.len(), values.len());
        for (i, &v) in values.iter().enumerate() {
            m[(i, i)] = v;
        }
        m
    }

    /// Builds a matrix from row-major entries.
    ///
    /// Panics when `data.len() != rows * cols`.
    pub fn from_row_slice(rows: usize, cols: usize, data: &[f64]) -> Self {
        assert_eq!(data.len(), rows * cols, "matrix data length mismatch");
        Matrix {
            rows,
            cols,
            data: SmallVec::from_slice(data),
        }
    }

    pub fn from_rows(rows: &[&[f64]]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        let mut data = Storage::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c, "ragged rows");
            data.extend_from_slice(row);
        }
        Matrix {
            rows: r,
            cols: c,
            data,
        }
    }

    /// Column vector.
    pub fn column(values: &[f64]) -> Self {
        Matrix::from_row_slice(values.len(), 1, values)
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Storage::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Matrix { rows, cols, data }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.data.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    #[inline]
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn reshape(mut self, rows: usize, cols: usize) -> Self {
        assert_eq!(rows * cols, self.data.len(), "reshape changes size");
        self.rows = rows;
        self.cols = cols;
        self
    }

    pub fn col(&self, j: usize) -> Matrix {
        Matrix::from_fn(self.rows, 1, |i, _| self[(i, j)])
    }

    pub fn set_col(&mut self, j: usize, v: &[f64]) {
        for (i, &x) in v.iter().enumerate() {
            self[(i, j)] = x;
        }
    }

    pub fn transpose(&self) -> Matrix {
        Matrix::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    /// `self · other`.
    pub fn matmul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.rows, "matmul shape mismatch");
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == 0.0 {
                    continue;
                }
                let row = &other.data[k * other.cols..(k + 1) * other.cols];
                let dst = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (d, &b) in dst.iter_mut().zip(row) {
                    *d += a * b;
                }
            }
        }
        out
    }

    /// `selfᵀ · other`.
    pub fn tr_matmul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.rows, other.rows, "tr_matmul shape mismatch");
        let mut out = Matrix::zeros(self.cols, other.cols);
        for k in 0..self.rows {
            for i in 0..self.cols {
                let a = self.data[k * self.cols + i];
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out.data[i * other.cols + j] += a * other.data[k * other.cols + j];
                }
            }
        }
        out
    }

    /// `self · otherᵀ`.
    pub fn matmul_tr(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.cols, "matmul_tr shape mismatch");
        Matrix::from_fn(self.rows, other.rows, |i, j| {
            let a = &self.data[i * self.cols..(i + 1) * self.cols];
            let b = &other.data[j * other.cols..(j + 1) * other.cols];
            a.iter().zip(b).map(|(x, y)| x * y).sum()
        })
    }

    /// Frobenius inner product `tr(selfᵀ other)`.
    #[inline]
    pub fn dot(&self, other: &Matrix) -> f64 {
        debug_assert_eq!(self.shape(), other.shape());
        self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum()
    }

    #[inline]
    pub fn norm_sq(&self) -> f64 {
        self.data.iter().map(|a| a * a).sum()
    }

    #[inline]
    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, a| m.max(a.abs()))
    }

    pub fn trace(&self) -> f64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn diag(&self) -> Vec<f64> {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).collect()
    }

    pub fn scale(&self, s: f64) -> Matrix {
        let mut out = self.clone();
        out.scale_mut(s);
        out
    }

    pub fn scale_mut(&mut self, s: f64) {
        for a in self.data.iter_mut() {
            *a *= s;
        }
    }

    /// `self += s · other`.
    #[inline]
    pub fn axpy(&mut self, s: f64, other: &Matrix) {
        debug_assert_eq!(self.shape(), other.shape());
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += s * b;
        }
    }

    /// Symmetric part `(A + Aᵀ)/2`.
    pub fn sym(&self) -> Matrix {
        debug_assert!(self.is_square());
        Matrix::from_fn(self.rows, self.cols, |i, j| 0.5 * (self[(i, j)] + self[(j, i)]))
    }

    /// Skew part `(A − Aᵀ)/2`.
    pub fn skew(&self) -> Matrix {
        debug_assert!(self.is_square());
        Matrix::from_fn(self.rows, self.cols, |i, j| 0.5 * (self[(i, j)] - self[(j, i)]))
    }

    /// Largest entrywise asymmetry `max |A_ij − A_ji|`.
    pub fn asymmetry(&self) -> f64 {
        let mut m: f64 = 0.0;
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                m = m.max((self[(i, j)] - self[(j, i)]).abs());
            }
        }
        m
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|a| a.is_finite())
    }

    /// Determinant for n ≤ 3 by cofactors, LU with partial pivoting otherwise.
    pub fn det(&self) -> f64 {
        assert!(self.is_square(), "determinant of a non-square matrix");
        let a = |i, j| self[(i, j)];
        match self.rows {
            0 => 1.0,
            1 => a(0, 0),
            2 => a(0, 0) * a(1, 1) - a(0, 1) * a(1, 0),
            3 => {
                a(0, 0) * (a(1, 1) * a(2, 2) - a(1, 2) * a(2, 1))
                    - a(0, 1) * (a(1, 0) * a(2, 2) - a(1, 2) * a(2, 0))
                    + a(0, 2) * (a(1, 0) * a(2, 1) - a(1, 1) * a(2, 0))
            }
            n => {
                let mut lu = self.clone();
                let mut det = 1.0;
                for k in 0..n {
                    let p = (k..n)
                        .max_by(|&x, &y| lu[(x, k)].abs().total_cmp(&lu[(y, k)].abs()))
                        .unwrap();
                    if lu[(p, k)] == 0.0 {
                        return 0.0;
                    }
                    if p != k {
                        for j in 0..n {
                            let t = lu[(k, j)];
                            lu[(k, j)] = lu[(p, j)];
                            lu[(p, j)] = t;
                        }
                        det = -det;
                    }
                    let piv = lu[(k, k)];
                    det *= piv;
                    for i in (k + 1)..n {
                        let f = lu[(i, k)] / piv;
                        for j in k..n {
                            let v = lu[(k, j)];
                            lu[(i, j)] -= f * v;
                        }
                    }
                }
                det
            }
        }
    }

    /// Sub-block copy.
    pub fn block(&self, r0: usize, c0: usize, rows: usize, cols: usize) -> Matrix {
        Matrix::from_fn(rows, cols, |i, j| self[(r0 + i, c0 + j)])
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

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Matrix{}x{}[", self.rows, self.cols)?;
        for i in 0..self.rows {
            if i > 0 {
                write!(f, "; ")?;
            }
            for j in 0..self.cols {
                if j > 0 {
                    write!(f, ", ")?;
                }
                write!(f, "{:.6e}", self[(i, j)])?;
            }
        }
        write!(f, "]")
    }
}

impl<'a> Add<&'a Matrix> for &'a Matrix {
    type Output = Matrix;

    fn add(self, rhs: &Matrix) -> Matrix {
        let mut out = self.clone();
        out += rhs;
        out
    }
}

impl<'a> Sub<&'a Matrix> for &'a Matrix {
    type Output = Matrix;

    fn sub(self, rhs: &Matrix) -> Matrix {
        let mut out = self.clone();
        out -= rhs;
        out
    }
}

impl<'a> Mul<&'a Matrix> for &'a Matrix {
    type Output = Matrix;

    fn mul(self, rhs: &Matrix) -> Matrix {
        self.matmul(rhs)
    }
}

impl Mul<f64> for &Matrix {
    type Output = Matrix;

    fn mul(self, rhs: f64) -> Matrix {
        self.scale(rhs)
    }
}

impl Neg for &Matrix {
    type Output = Matrix;

    fn neg(self) -> Matrix {
        self.scale(-1.0)
    }
}

impl AddAssign<&Matrix> for Matrix {
    fn add_assign(&mut self, rhs: &Matrix) {
        assert_eq!(self.shape(), rhs.shape(), "add shape mismatch");
        for (a, b) in self.data.iter_mut().zip(&rhs.data) {
            *a += b;
        }
    }
}

impl SubAssign<&Matrix> for Matrix {
    fn sub_assign(&mut self, rhs: &Matrix) {
        assert_eq!(self.shape(), rhs.shape(), "sub shape mismatch");
        for (a, b) in self.data.iter_mut().zip(&rhs.data) {
            *a -= b;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn products_agree() {
        let a = Matrix::from_rows(&[&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0]]);
        let b = Matrix::from_rows(&[&[1.0, 0.5], &[-1.0, 2.0]]);
        assert_eq!(a.tr_matmul(&b), a.transpose().matmul(&b));
        assert_eq!(b.matmul_tr(&b), b.matmul(&b.transpose()));
        let c = Matrix::from_rows(&[&[1.0, 2.0], &[3.0, 4.0], &[5.0, 6.0]]);
        assert_eq!(
            a.matmul(&c),
            Matrix::from_rows(&[&[22.0, 28.0], &[49.0, 64.0]])
        );
    }

    #[test]
    fn determinants() {
        let a = Matrix::from_rows(&[&[2.0, 1.0], &[1.0, 3.0]]);
        assert_eq!(a.det(), 5.0);
        let b = Matrix::from_rows(&[
            &[2.0, 0.0, 1.0, 0.0],
            &[0.0, 1.0, 0.0, 0.0],
            &[1.0, 0.0, 3.0, 0.0],
            &[0.0, 0.0, 0.0, 2.0],
        ]);
        assert!((b.det() - 10.0).abs() < 1e-12);
        let c = Matrix::from_rows(&[&[0.0, 1.0, 2.0], &[1.0, 0.0, 3.0], &[4.0, -3.0, 8.0]]);
        assert!((c.det() - -2.0).abs() < 1e-12);
    }

    #[test]
    fn large_matrices_spill_to_heap() {
        let a = Matrix::identity(6);
        assert_eq!(a.matmul(&a), a);
        assert_eq!(a.trace(), 6.0);
    }
}
