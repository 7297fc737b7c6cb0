use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use nalgebra::{ComplexField, DMatrix};
use num_complex::Complex;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub type Vector<T> = Vec<Complex<T>>;

/// Dense complex matrix, row-major.
#[derive(Clone, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<Complex<T>>,
}

#[inline]
pub(crate) fn c<T: Scalar>(re: T, im: T) -> Complex<T> {
    Complex::new(re, im)
}

#[inline]
pub(crate) fn re<T: Scalar>(x: T) -> Complex<T> {
    Complex::new(x, T::zero())
}

#[inline]
pub(crate) fn cabs<T: Scalar>(z: Complex<T>) -> T {
    ComplexField::modulus(z)
}

impl<T: Scalar> Matrix<T> {
    /// Builds a matrix from row-major entries, rejecting bad sizes and non-finite values.
    pub fn new(rows: usize, cols: usize, data: Vec<Complex<T>>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::DimensionMismatch(format!("empty {rows}x{cols} matrix")));
        }
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        if let Some(p) = data.iter().position(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::NonFinite { row: p / cols, col: p % cols });
        }
        Ok(Self { rows, cols, data })
    }

    pub(crate) fn from_vec_unchecked(rows: usize, cols: usize, data: Vec<Complex<T>>) -> Self {
        debug_assert_eq!(data.len(), rows * cols);
        Self { rows, cols, data }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![Complex::new(T::zero(), T::zero()); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, n, |i, j| if i == j { re(T::one()) } else { re(T::zero()) })
    }

    /// Matrix with every entry equal to one (the Schur-product identity).
    pub fn ones(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![re(T::one()); rows * cols] }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex<T>) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn from_rows(rows: &[Vec<Complex<T>>]) -> Result<Self> {
        let n = rows.len();
        let m = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != m) {
            return Err(Error::DimensionMismatch("ragged rows".into()));
        }
        Self::new(n, m, rows.concat())
    }

    /// Convenience constructor from real `f64` rows.
    pub fn from_real_rows(rows: &[&[f64]]) -> Result<Self> {
        let rows: Vec<Vec<Complex<T>>> =
            rows.iter().map(|r| r.iter().map(|&x| re(T::lit(x))).collect()).collect();
        Self::from_rows(&rows)
    }

    pub fn from_diag(diag: &[Complex<T>]) -> Self {
        let n = diag.len();
        Self::from_fn(n, n, |i, j| if i == j { diag[i] } else { re(T::zero()) })
    }

    pub fn from_real_diag(diag: &[T]) -> Self {
        let n = diag.len();
        Self::from_fn(n, n, |i, j| if i == j { re(diag[i]) } else { re(T::zero()) })
    }

    /// Builds a matrix whose `j`-th column is `cols[j]`.
    pub fn from_columns(columns: &[Vector<T>]) -> Result<Self> {
        let cols = columns.len();
        let rows = columns.first().map_or(0, Vec::len);
        if columns.iter().any(|v| v.len() != rows) {
            return Err(Error::DimensionMismatch("columns of unequal length".into()));
        }
        Self::new(rows, cols, (0..rows * cols).map(|p| columns[p % cols][p / cols]).collect())
    }

    /// `|u⟩⟨v|`.
    pub fn outer(u: &[Complex<T>], v: &[Complex<T>]) -> Self {
        Self::from_fn(u.len(), v.len(), |i, j| u[i] * v[j].conj())
    }

    /// `|k⟩⟨l|` in dimension `n`.
    pub fn unit(n: usize, k: usize, l: usize) -> Self {
        let mut m = Self::zeros(n, n);
        m[(k, l)] = re(T::one());
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    /// Side length; errors when not square.
    pub fn side(&self) -> Result<usize> {
        if self.is_square() {
            Ok(self.rows)
        } else {
            Err(Error::DimensionMismatch(format!("expected square matrix, got {}x{}", self.rows, self.cols)))
        }
    }

    pub fn data(&self) -> &[Complex<T>] {
        &self.data
    }

    pub fn into_data(self) -> Vec<Complex<T>> {
        self.data
    }

    pub fn row(&self, i: usize) -> &[Complex<T>] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vector<T> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn columns(&self) -> Vec<Vector<T>> {
        (0..self.cols).map(|j| self.column(j)).collect()
    }

    pub fn map(&self, f: impl Fn(Complex<T>) -> Complex<T>) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|&z| f(z)).collect() }
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn conj(&self) -> Self {
        self.map(|z| z.conj())
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn scale(&self, s: Complex<T>) -> Self {
        self.map(|z| z * s)
    }

    pub fn scale_real(&self, s: T) -> Self {
        self.map(|z| z * s)
    }

    pub fn trace(&self) -> Complex<T> {
        (0..self.rows.min(self.cols)).fold(re(T::zero()), |acc, i| acc + self[(i, i)])
    }

    pub fn diagonal(&self) -> Vector<T> {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).collect()
    }

    /// Keeps the diagonal, zeroes everything else.
    pub fn diagonal_part(&self) -> Self {
        Self::from_fn(self.rows, self.cols, |i, j| if i == j { self[(i, j)] } else { re(T::zero()) })
    }

    /// Zeroes the diagonal.
    pub fn off_diagonal_part(&self) -> Self {
        Self::from_fn(self.rows, self.cols, |i, j| if i == j { re(T::zero()) } else { self[(i, j)] })
    }

    pub fn hermitian_part(&self) -> Self {
        let half = T::lit(0.5);
        Self::from_fn(self.rows, self.cols, |i, j| (self[(i, j)] + self[(j, i)].conj()) * half)
    }

    pub fn max_norm(&self) -> T {
        self.data.iter().fold(T::zero(), |m, &z| m.max(cabs(z)))
    }

    pub fn frobenius_norm(&self) -> T {
        self.data.iter().fold(T::zero(), |s, z| s + z.norm_sqr()).sqrt()
    }

    /// Max-norm of the entrywise difference; infinite if the shapes differ.
    pub fn max_abs_diff(&self, other: &Self) -> T {
        if self.rows != other.rows || self.cols != other.cols {
            return T::max_value().unwrap_or_else(T::one);
        }
        self.data.iter().zip(&other.data).fold(T::zero(), |m, (&a, &b)| m.max(cabs(a - b)))
    }

    pub fn hermiticity_defect(&self) -> T {
        if !self.is_square() {
            return T::max_value().unwrap_or_else(T::one);
        }
        let mut worst = T::zero();
        for i in 0..self.rows {
            for j in i..self.cols {
                worst = worst.max(cabs(self[(i, j)] - self[(j, i)].conj()));
            }
        }
        worst
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.is_square() && self.hermiticity_defect() <= T::lit(tol)
    }

    pub fn ensure_hermitian(&self, tol: f64) -> Result<()> {
        let dev = self.hermiticity_defect();
        if self.is_square() && dev <= T::lit(tol) {
            Ok(())
        } else {
            Err(Error::NotHermitian { deviation: dev.to_f64_lossy() })
        }
    }

    /// Max-norm of `U†U - 1`.
    pub fn unitarity_defect(&self) -> T {
        if !self.is_square() {
            return T::max_value().unwrap_or_else(T::one);
        }
        (&self.adjoint() * self).max_abs_diff(&Self::identity(self.rows))
    }

    pub fn ensure_unitary(&self, tol: f64) -> Result<()> {
        let dev = self.unitarity_defect();
        if dev <= T::lit(tol) {
            Ok(())
        } else {
            Err(Error::NotUnitary { deviation: dev.to_f64_lossy() })
        }
    }

    /// Standard Kronecker product; entry `(i·rb + p, j·cb + q)` is `a[i,j]·b[p,q]`.
    pub fn kron(&self, other: &Self) -> Self {
        let (rb, cb) = (other.rows, other.cols);
        Self::from_fn(self.rows * rb, self.cols * cb, |r, s| {
            self[(r / rb, s / cb)] * other[(r % rb, s % cb)]
        })
    }

    /// Entrywise (Schur/Hadamard) product.
    pub fn schur(&self, other: &Self) -> Result<Self> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::DimensionMismatch(format!(
                "Schur product of {}x{} and {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| a * b).collect(),
        })
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch(format!(
                "product of {}x{} and {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        Ok(self.matmul_unchecked(other))
    }

    fn matmul_unchecked(&self, other: &Self) -> Self {
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a.re == T::zero() && a.im == T::zero() {
                    continue;
                }
                let orow = &other.data[k * other.cols..(k + 1) * other.cols];
                let dst = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (d, &b) in dst.iter_mut().zip(orow) {
                    *d += a * b;
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[Complex<T>]) -> Vector<T> {
        assert_eq!(self.cols, v.len(), "matrix-vector dimension mismatch");
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(v).fold(re(T::zero()), |acc, (&a, &b)| acc + a * b))
            .collect()
    }

    /// `Tr(A B)` without forming the product.
    pub fn trace_product(&self, other: &Self) -> Complex<T> {
        assert!(self.cols == other.rows && self.rows == other.cols, "trace_product shape mismatch");
        let mut acc = re(T::zero());
        for i in 0..self.rows {
            for k in 0..self.cols {
                acc += self[(i, k)] * other[(k, i)];
            }
        }
        acc
    }

    pub fn to_nalgebra(&self) -> DMatrix<Complex<T>> {
        DMatrix::from_row_slice(self.rows, self.cols, &self.data)
    }

    pub fn from_nalgebra(m: &DMatrix<Complex<T>>) -> Self {
        Self::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
    }

    /// Lossless widening / narrowing between precisions through `f64`.
    pub fn cast<U: Scalar>(&self) -> Matrix<U> {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .map(|z| Complex::new(U::lit(z.re.to_f64_lossy()), U::lit(z.im.to_f64_lossy())))
                .collect(),
        }
    }
}

impl<T> Index<(usize, usize)> for Matrix<T> {
    type Output = Complex<T>;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &Complex<T> {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl<T> IndexMut<(usize, usize)> for Matrix<T> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex<T> {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

impl<T: Scalar> Mul for &Matrix<T> {
    type Output = Matrix<T>;

    /// Panics on a shape mismatch; use [`Matrix::matmul`] for a checked product.
    fn mul(self, rhs: &Matrix<T>) -> Matrix<T> {
        assert_eq!(self.cols, rhs.rows, "matrix product shape mismatch");
        self.matmul_unchecked(rhs)
    }
}

impl<T: Scalar> Add for &Matrix<T> {
    type Output = Matrix<T>;

    fn add(self, rhs: &Matrix<T>) -> Matrix<T> {
        assert!(self.rows == rhs.rows && self.cols == rhs.cols, "matrix sum shape mismatch");
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(&a, &b)| a + b).collect(),
        }
    }
}

impl<T: Scalar> Sub for &Matrix<T> {
    type Output = Matrix<T>;

    fn sub(self, rhs: &Matrix<T>) -> Matrix<T> {
        assert!(self.rows == rhs.rows && self.cols == rhs.cols, "matrix difference shape mismatch");
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(&a, &b)| a - b).collect(),
        }
    }
}

impl<T: Scalar> Neg for &Matrix<T> {
    type Output = Matrix<T>;

    fn neg(self) -> Matrix<T> {
        self.map(|z| -z)
    }
}

impl<T: Scalar> fmt::Debug for Matrix<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            write!(f, "  ")?;
            for z in self.row(i) {
                write!(f, "{:>+.6}{:+.6}i  ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

/// JSON form: `{"rows": r, "cols": c, "data": [[re, im], ...]}` in row-major order.
#[derive(Serialize, Deserialize)]
struct MatrixRepr<T> {
    rows: usize,
    cols: usize,
    data: Vec<[T; 2]>,
}

impl<T: Scalar> Serialize for Matrix<T> {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        MatrixRepr { rows: self.rows, cols: self.cols, data: self.data.iter().map(|z| [z.re, z.im]).collect() }
            .serialize(s)
    }
}

impl<'de, T: Scalar> Deserialize<'de> for Matrix<T> {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let repr = MatrixRepr::<T>::deserialize(d)?;
        let data = repr.data.into_iter().map(|[a, b]| Complex::new(a, b)).collect();
        Matrix::new(repr.rows, repr.cols, data).map_err(D::Error::custom)
    }
}
