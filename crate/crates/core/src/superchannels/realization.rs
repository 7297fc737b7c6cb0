//! Unitary pre/post-processing with a `d²`-dimensional memory.

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize};

use super::DephasingSuperchannel;
use crate::error::{Error, Result};
use crate::matcore::linalg::{complete_isometry, gram_matrix, gram_vectors};
use crate::matcore::matrix::{re, Matrix, Vector};
use crate::matcore::random::{haar_unitary, Rng};
use crate::scalar::Scalar;

/// Unitaries `U_k` (memory preparation) and `V_i` (memory readout), each `d²×d²`,
/// with `C_{ik,jl} = ⟨0|U_l† V_j† V_i U_k|0⟩`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SuperRealization<T: Scalar> {
    pub us: Vec<Matrix<T>>,
    pub vs: Vec<Matrix<T>>,
}

fn memory_vectors<T: Scalar>(us: &[Matrix<T>], vs: &[Matrix<T>]) -> Vec<Vector<T>> {
    let mut out = Vec::with_capacity(vs.len() * us.len());
    for v in vs {
        for u in us {
            out.push(v.mul_vec(&u.column(0)));
        }
    }
    out
}

impl<T: Scalar> SuperRealization<T> {
    pub fn new(us: Vec<Matrix<T>>, vs: Vec<Matrix<T>>) -> Result<Self> {
        let d = us.len();
        if d == 0 || vs.len() != d {
            return Err(Error::DimensionMismatch(format!("{} preparation and {} readout unitaries", us.len(), vs.len())));
        }
        let tol = T::tolerances().unit;
        for m in us.iter().chain(&vs) {
            if m.rows() != d * d || m.cols() != d * d {
                return Err(Error::DimensionMismatch(format!("memory unitaries must be {n}x{n}", n = d * d)));
            }
            m.ensure_unitary(tol)?;
        }
        Ok(Self { us, vs })
    }

    pub fn dim(&self) -> usize {
        self.us.len()
    }

    /// `C_{ik,jl} = ⟨ξ_jl|ξ_ik⟩` with `|ξ_ik⟩ = V_i U_k |0⟩`.
    pub fn correlation(&self) -> Matrix<T> {
        gram_matrix(&memory_vectors(&self.us, &self.vs))
    }

    /// Largest unitarity defect among all stored matrices.
    pub fn unitarity_defect(&self) -> T {
        self.us.iter().chain(&self.vs).map(Matrix::unitarity_defect).fold(T::zero(), |a, b| a.max(b))
    }
}

impl<'de, T: Scalar> Deserialize<'de> for SuperRealization<T> {
    fn deserialize<D: Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(bound = "T: Scalar")]
        struct Repr<T: Scalar> {
            us: Vec<Matrix<T>>,
            vs: Vec<Matrix<T>>,
        }
        let r = Repr::<T>::deserialize(de)?;
        Self::new(r.us, r.vs).map_err(D::Error::custom)
    }
}

impl<T: Scalar> DephasingSuperchannel<T> {
    /// Builds memory unitaries from the Gram vectors `ξ_ik` of `C`.
    ///
    /// `V_i` maps `{ξ_0k}` to `{ξ_ik}`; `U_k` maps `|0⟩` to `ξ_0k`; `V_0 = 𝟙`.
    pub fn realize(&self) -> Result<SuperRealization<T>> {
        let d = self.dim;
        let n = d * d;
        let xi = gram_vectors(&self.c)?;
        let e0: Vector<T> = (0..n).map(|a| re(if a == 0 { T::one() } else { T::zero() })).collect();
        let us = (0..d)
            .map(|k| complete_isometry(&[(e0.clone(), xi[k].clone())], n))
            .collect::<Result<Vec<_>>>()?;
        let mut vs = vec![Matrix::identity(n)];
        for i in 1..d {
            let pairs: Vec<_> = (0..d).map(|k| (xi[k].clone(), xi[i * d + k].clone())).collect();
            vs.push(complete_isometry(&pairs, n)?);
        }
        Ok(SuperRealization { us, vs })
    }

    /// Superchannel realized by the given memory unitaries.
    pub fn from_unitaries(us: Vec<Matrix<T>>, vs: Vec<Matrix<T>>) -> Result<Self> {
        let r = SuperRealization::new(us, vs)?;
        let d = r.dim();
        let c = r.correlation().hermitian_part();
        Self::new(c, d)
    }

    /// Haar-random memory unitaries pushed through [`Self::from_unitaries`].
    pub fn sample(rng: &mut Rng, d: usize) -> Self {
        let n = d * d;
        let us = (0..d).map(|_| haar_unitary(rng, n)).collect();
        let vs = (0..d).map(|_| haar_unitary(rng, n)).collect();
        Self::from_unitaries(us, vs).expect("Haar unitaries give a valid superchannel")
    }
}
