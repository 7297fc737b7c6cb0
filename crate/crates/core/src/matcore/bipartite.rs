//! Index bookkeeping for operators on a product space `A ⊗ B`.
//!
//! Composite index `(a, b)` maps to `a·dim_b + b` everywhere in the crate.

use serde::{Deserialize, Serialize};

use super::matrix::{re, Matrix};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BipartiteShape {
    pub dim_a: usize,
    pub dim_b: usize,
}

/// Which tensor factor an operation acts on. `A` is the first (left) factor.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Subsystem {
    A,
    B,
}

impl BipartiteShape {
    pub fn new(dim_a: usize, dim_b: usize) -> Self {
        Self { dim_a, dim_b }
    }

    pub fn square(d: usize) -> Self {
        Self::new(d, d)
    }

    pub fn size(&self) -> usize {
        self.dim_a * self.dim_b
    }

    fn check<T: Scalar>(&self, m: &Matrix<T>) -> Result<()> {
        if self.dim_a == 0 || self.dim_b == 0 || !m.is_square() || m.rows() != self.size() {
            return Err(Error::BadShape { dim_a: self.dim_a, dim_b: self.dim_b, size: m.rows() });
        }
        Ok(())
    }
}

/// Traces out `which`; the result lives on the remaining factor.
pub fn partial_trace<T: Scalar>(m: &Matrix<T>, shape: BipartiteShape, which: Subsystem) -> Result<Matrix<T>> {
    shape.check(m)?;
    let (da, db) = (shape.dim_a, shape.dim_b);
    Ok(match which {
        Subsystem::A => Matrix::from_fn(db, db, |b1, b2| {
            (0..da).fold(re(T::zero()), |acc, a| acc + m[(a * db + b1, a * db + b2)])
        }),
        Subsystem::B => Matrix::from_fn(da, da, |a1, a2| {
            (0..db).fold(re(T::zero()), |acc, b| acc + m[(a1 * db + b, a2 * db + b)])
        }),
    })
}

/// Transposes the indices of factor `which`.
pub fn partial_transpose<T: Scalar>(m: &Matrix<T>, shape: BipartiteShape, which: Subsystem) -> Result<Matrix<T>> {
    shape.check(m)?;
    let db = shape.dim_b;
    let n = shape.size();
    Ok(Matrix::from_fn(n, n, |r, s| {
        let (a1, b1, a2, b2) = (r / db, r % db, s / db, s % db);
        match which {
            Subsystem::A => m[(a2 * db + b1, a1 * db + b2)],
            Subsystem::B => m[(a1 * db + b2, a2 * db + b1)],
        }
    }))
}

/// Realignment: output entry `(ij),(kl)` is input entry `(ik),(jl)`. An exact involution.
pub fn reshuffle<T: Scalar>(m: &Matrix<T>, d: usize) -> Result<Matrix<T>> {
    let n = d * d;
    if d == 0 || !m.is_square() || m.rows() != n {
        return Err(Error::BadShape { dim_a: d, dim_b: d, size: m.rows() });
    }
    Ok(Matrix::from_fn(n, n, |r, s| {
        let (i, j, k, l) = (r / d, r % d, s / d, s % d);
        m[(i * d + k, j * d + l)]
    }))
}
