//! Column-stochastic matrices and the classical channels they induce.

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::Channel;
use crate::error::{Error, Result};
use crate::matcore::matrix::Matrix;
use crate::matcore::random::Rng;
use crate::scalar::Scalar;

/// `T_ij` is the probability of the transition `j → i`; every column sums to one.
#[derive(Clone, Debug, PartialEq)]
pub struct StochasticMatrix<T> {
    dim: usize,
    t: Vec<T>,
}

impl<T: Scalar> StochasticMatrix<T> {
    /// Row-major entries; rejects negative entries and columns not summing to one.
    pub fn new(dim: usize, entries: Vec<T>) -> Result<Self> {
        if dim == 0 || entries.len() != dim * dim {
            return Err(Error::DimensionMismatch(format!("{} entries for dimension {dim}", entries.len())));
        }
        let tol = T::lit(T::tolerances().psd);
        for (idx, &x) in entries.iter().enumerate() {
            if !x.is_finite() || x < -tol {
                return Err(Error::NotStochastic(format!("entry ({}, {}) is {x}", idx / dim, idx % dim)));
            }
        }
        for j in 0..dim {
            let s = (0..dim).fold(T::zero(), |acc, i| acc + entries[i * dim + j]);
            if (s - T::one()).abs() > tol {
                return Err(Error::NotStochastic(format!("column {j} sums to {s}")));
            }
        }
        Ok(Self { dim, t: entries })
    }

    pub(crate) fn from_entries_unchecked(dim: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let t = (0..dim * dim).map(|idx| f(idx / dim, idx % dim)).collect();
        Self { dim, t }
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_entries_unchecked(dim, |i, j| if i == j { T::one() } else { T::zero() })
    }

    /// Columns drawn independently and uniformly from the probability simplex.
    pub fn random(rng: &mut Rng, dim: usize) -> Self {
        let mut t = vec![T::zero(); dim * dim];
        for j in 0..dim {
            let col: Vec<T> = (0..dim).map(|_| -(T::one() - rng.uniform::<T>()).ln()).collect();
            let s = col.iter().fold(T::zero(), |a, &b| a + b);
            for i in 0..dim {
                t[i * dim + j] = col[i] / s;
            }
        }
        Self { dim, t }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.t[i * self.dim + j]
    }

    pub fn entries(&self) -> &[T] {
        &self.t
    }

    pub fn rows(&self) -> Vec<Vec<T>> {
        self.t.chunks(self.dim).map(<[T]>::to_vec).collect()
    }

    /// Largest entrywise difference.
    pub fn max_abs_diff(&self, other: &Self) -> T {
        self.t.iter().zip(&other.t).fold(T::zero(), |m, (&a, &b)| m.max((a - b).abs()))
    }
}

impl<T: Scalar> Serialize for StochasticMatrix<T> {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Repr<T> {
            dim: usize,
            t: Vec<Vec<T>>,
        }
        Repr { dim: self.dim, t: self.rows() }.serialize(s)
    }
}

impl<'de, T: Scalar> Deserialize<'de> for StochasticMatrix<T> {
    fn deserialize<D: Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Repr<T> {
            dim: usize,
            t: Vec<Vec<T>>,
        }
        let r = Repr::<T>::deserialize(de)?;
        if r.t.iter().any(|row| row.len() != r.dim) {
            return Err(D::Error::custom("ragged transition matrix"));
        }
        Self::new(r.dim, r.t.into_iter().flatten().collect()).map_err(D::Error::custom)
    }
}

/// `E_T(ρ) = Σ T_ij ⟨j|ρ|j⟩ |i⟩⟨i|`, with Jamiołkowski matrix `(1/d) Σ T_ij |i⟩⟨i| ⊗ |j⟩⟨j|`.
pub fn classical_channel<T: Scalar>(t: &StochasticMatrix<T>) -> Channel<T> {
    let d = t.dim;
    let inv_d = T::one() / T::from_usize(d).expect("dimension");
    let diag: Vec<T> = (0..d * d).map(|a| t.get(a / d, a % d) * inv_d).collect();
    Channel::from_jamiolkowski_unchecked(d, Matrix::from_real_diag(&diag))
}

impl<T: Scalar> Channel<T> {
    /// True when the Jamiołkowski matrix is diagonal, i.e. the channel is classical.
    pub fn is_classical(&self, tol: f64) -> bool {
        self.jamiolkowski().off_diagonal_part().max_norm() <= T::lit(tol)
    }
}
