//! Classifying the memory of a dephasing superchannel through its correlation matrix.

use std::fmt;

use serde::{Deserialize, Serialize};

use super::DephasingSuperchannel;
use crate::matcore::linalg::{leading_svd, min_eigenvalue};
use crate::matcore::matrix::{cabs, re, Matrix};
use crate::matcore::{partial_transpose, reshuffle, BipartiteShape, Subsystem};
use crate::scalar::Scalar;

/// Rank-one test threshold on `σ₂/σ₁` of the realigned correlation matrix.
const PRODUCT_RATIO: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum MemoryLabel {
    /// `C = C₂ ⊗ C₁`: independent pre- and post-processing.
    Product,
    /// Positive partial transpose. For qubits this means separable.
    Ppt,
    /// Negative partial transpose: the memory is entangled.
    Npt,
}

impl fmt::Display for MemoryLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Product => "PRODUCT",
            Self::Ppt => "PPT",
            Self::Npt => "NPT",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MemoryClass {
    pub label: MemoryLabel,
    pub ppt_min_eig: f64,
    pub product_residual: f64,
}

/// Removes the global phase carried by a singular vector, using the `(0,0)` entry.
fn dephase<T: Scalar>(x: &Matrix<T>) -> Option<Matrix<T>> {
    let z = x[(0, 0)];
    let m = cabs(z);
    if m <= T::zero() {
        return None;
    }
    let phase = z.conj() * re(T::one() / m);
    Some(x.scale(phase))
}

/// Rescales a Hermitian matrix to unit diagonal, `D^{-1/2} X D^{-1/2}`.
fn unit_diagonal<T: Scalar>(x: &Matrix<T>) -> Option<Matrix<T>> {
    let h = x.hermitian_part();
    let scale: Vec<T> = h.diagonal().iter().map(|z| z.re).collect::<Vec<_>>();
    if scale.iter().any(|&s| s <= T::zero()) {
        return None;
    }
    let inv: Vec<T> = scale.iter().map(|&s| T::one() / s.sqrt()).collect();
    Some(Matrix::from_fn(h.rows(), h.cols(), |i, j| h[(i, j)] * re(inv[i] * inv[j])))
}

impl<T: Scalar> DephasingSuperchannel<T> {
    /// Minimum eigenvalue of the partial transpose of `C` on the second factor.
    pub fn ppt_min_eig(&self) -> T {
        let pt = partial_transpose(&self.c, BipartiteShape::square(self.dim), Subsystem::B)
            .expect("C is d²×d²");
        min_eigenvalue(&pt).expect("partial transpose of a Hermitian matrix is Hermitian")
    }

    /// Best factorization `C ≈ C₂ ⊗ C₁` from the leading singular pair of the realigned `C`,
    /// each factor rescaled to unit diagonal. Returns the factors, `σ₂/σ₁` and the Frobenius residual.
    pub fn product_factors(&self) -> (Option<(Matrix<T>, Matrix<T>)>, T, T) {
        let d = self.dim;
        let realigned = reshuffle(&self.c, d).expect("C is d²×d²");
        let svd = leading_svd(&realigned);
        let s = &svd.singular_values;
        let ratio = if s[0] > T::zero() { s.get(1).copied().unwrap_or(T::zero()) / s[0] } else { T::one() };
        // realigned = σ u v†, so C₂ ∝ reshape(u) and C₁ ∝ reshape(conj v)
        let c2 = Matrix::from_fn(d, d, |i, j| svd.u[i * d + j]);
        let c1 = Matrix::from_fn(d, d, |k, l| svd.v[k * d + l].conj());
        let factors = dephase(&c2).and_then(|a| unit_diagonal(&a)).zip(dephase(&c1).and_then(|b| unit_diagonal(&b)));
        let residual = match &factors {
            Some((a, b)) => (&self.c - &a.kron(b)).frobenius_norm(),
            None => self.c.frobenius_norm(),
        };
        (factors, ratio, residual)
    }

    /// PRODUCT, PPT or NPT at tolerance `tol`.
    pub fn memory_class_tol(&self, tol: f64) -> MemoryClass {
        let ppt_min_eig = self.ppt_min_eig().to_f64_lossy();
        let (factors, ratio, residual) = self.product_factors();
        let product_residual = residual.to_f64_lossy();
        let label = if ppt_min_eig < -tol {
            MemoryLabel::Npt
        } else if factors.is_some() && ratio.to_f64_lossy() < PRODUCT_RATIO && product_residual <= tol {
            MemoryLabel::Product
        } else {
            MemoryLabel::Ppt
        };
        MemoryClass { label, ppt_min_eig, product_residual }
    }

    pub fn memory_class(&self) -> MemoryClass {
        self.memory_class_tol(T::tolerances().psd)
    }
}
