//! Quantum channels on a single `d`-level system.
//!
//! A [`Channel`] is stored canonically as its Jamiołkowski matrix
//! `J_{ik,jl} = ⟨i|E(|k⟩⟨l|)|j⟩ / d`: row index `i·d + k` pairs output `i`
//! with input `k`, and `Tr J = 1`.

mod classical;
mod dephasing;

pub use classical::{classical_channel, StochasticMatrix};
pub use dephasing::{random_correlation, DephasingChannelC};

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::matcore::linalg::{complete_isometry, herm_eig};
use crate::matcore::matrix::{re, Matrix, Vector};
use crate::matcore::random::{haar_unitary, Rng};
use crate::matcore::{partial_trace, reshuffle, BipartiteShape, Subsystem};
use crate::scalar::Scalar;

#[derive(Clone, Debug)]
pub struct Channel<T: Scalar> {
    dim: usize,
    jam: Matrix<T>,
    kraus: Option<Vec<Matrix<T>>>,
}

/// Channels are equal when their Jamiołkowski matrices are; the Kraus cache is ignored.
impl<T: Scalar> PartialEq for Channel<T> {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim && self.jam == other.jam
    }
}

/// Outcome of a complete-positivity / trace-preservation check.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CptpReport {
    pub hermiticity: f64,
    pub min_eigenvalue: f64,
    pub tp_deviation: f64,
    pub passed: bool,
}

fn jam_from_kraus<T: Scalar>(d: usize, ks: &[Matrix<T>]) -> Matrix<T> {
    let n = d * d;
    let inv_d = T::one() / T::from_usize(d).expect("dimension");
    let mut jam = Matrix::zeros(n, n);
    for k in ks {
        // vec(K) row-major: entry i·d + k is K_{ik}
        let v = k.data();
        for a in 0..n {
            let va = v[a] * inv_d;
            for b in 0..n {
                jam[(a, b)] += va * v[b].conj();
            }
        }
    }
    jam
}

/// Max-norm deviation of `Σ K†K` from the identity.
fn completeness_defect<T: Scalar>(d: usize, ks: &[Matrix<T>]) -> T {
    let mut sum = Matrix::zeros(d, d);
    for k in ks {
        sum = &sum + &(&k.adjoint() * k);
    }
    sum.max_abs_diff(&Matrix::identity(d))
}

fn dim_of_side(n: usize) -> Result<usize> {
    let d = (n as f64).sqrt().round() as usize;
    if d == 0 || d * d != n {
        return Err(Error::DimensionMismatch(format!("{n} is not a perfect square")));
    }
    Ok(d)
}

impl<T: Scalar> Channel<T> {
    /// Validated constructor from a Jamiołkowski matrix, default tolerance.
    pub fn from_jamiolkowski(jam: Matrix<T>) -> Result<Self> {
        Self::from_jamiolkowski_tol(jam, T::tolerances().psd)
    }

    pub fn from_jamiolkowski_tol(jam: Matrix<T>, tol: f64) -> Result<Self> {
        let d = dim_of_side(jam.side()?)?;
        let report = cptp_report(d, &jam, tol)?;
        if report.hermiticity > tol {
            return Err(Error::NotHermitian { deviation: report.hermiticity });
        }
        if report.min_eigenvalue < -tol {
            return Err(Error::NotPsd { min_eig: report.min_eigenvalue });
        }
        if report.tp_deviation > tol {
            return Err(Error::NotTracePreserving { deviation: report.tp_deviation });
        }
        Ok(Self { dim: d, jam: jam.hermitian_part(), kraus: None })
    }

    pub(crate) fn from_jamiolkowski_unchecked(dim: usize, jam: Matrix<T>) -> Self {
        Self { dim, jam, kraus: None }
    }

    /// Channel `ρ ↦ Σ K ρ K†`; the operators are cached.
    pub fn from_kraus(ks: Vec<Matrix<T>>) -> Result<Self> {
        let first = ks.first().ok_or_else(|| Error::InvalidArgument("no Kraus operators".into()))?;
        let d = first.side()?;
        if ks.iter().any(|k| k.rows() != d || k.cols() != d) {
            return Err(Error::DimensionMismatch("Kraus operators of different sizes".into()));
        }
        let defect = completeness_defect(d, &ks);
        if defect > T::lit(T::tolerances().psd) {
            return Err(Error::NotComplete { deviation: defect.to_f64_lossy() });
        }
        Ok(Self { dim: d, jam: jam_from_kraus(d, &ks), kraus: Some(ks) })
    }

    pub fn identity(d: usize) -> Self {
        Self::unitary(&Matrix::identity(d)).expect("identity is unitary")
    }

    pub fn unitary(u: &Matrix<T>) -> Result<Self> {
        u.ensure_unitary(T::tolerances().unit)?;
        Self::from_kraus(vec![u.clone()])
    }

    /// `ρ ↦ H ρ H` for the single-qubit Hadamard gate.
    pub fn hadamard() -> Self {
        let h = T::FRAC_1_SQRT_2();
        let m = Matrix::from_fn(2, 2, |i, j| re(if i == 1 && j == 1 { -h } else { h }));
        Self::unitary(&m).expect("Hadamard is unitary")
    }

    /// `Δ(ρ) = Σ ⟨i|ρ|i⟩ |i⟩⟨i|`.
    pub fn completely_dephasing(d: usize) -> Self {
        Self::from_kraus((0..d).map(|i| Matrix::unit(d, i, i)).collect()).expect("projectors are complete")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn jamiolkowski(&self) -> &Matrix<T> {
        &self.jam
    }

    /// Cached Kraus operators, present when the channel was built from them.
    pub fn cached_kraus(&self) -> Option<&[Matrix<T>]> {
        self.kraus.as_deref()
    }

    /// Kraus operators from the eigendecomposition of `d·J`; count equals the rank.
    pub fn to_kraus(&self) -> Vec<Matrix<T>> {
        let d = self.dim;
        let scaled = self.jam.scale_real(T::from_usize(d).expect("dimension"));
        let eig = herm_eig(&scaled).expect("Jamiołkowski matrix is Hermitian");
        let prune = T::lit(T::tolerances().kraus_prune);
        let mut ks = Vec::new();
        for j in (0..d * d).rev() {
            let lambda = eig.values[j];
            if lambda < prune {
                continue;
            }
            let root = lambda.sqrt();
            let v = eig.vector(j);
            ks.push(Matrix::from_vec_unchecked(d, d, v.into_iter().map(|z| z * root).collect()));
        }
        ks
    }

    fn kraus_ops(&self) -> std::borrow::Cow<'_, [Matrix<T>]> {
        match &self.kraus {
            Some(ks) => std::borrow::Cow::Borrowed(ks.as_slice()),
            None => std::borrow::Cow::Owned(self.to_kraus()),
        }
    }

    fn check_state(&self, rho: &Matrix<T>) -> Result<()> {
        if rho.rows() != self.dim || rho.cols() != self.dim {
            return Err(Error::DimensionMismatch(format!(
                "state is {}x{}, channel acts on dimension {}",
                rho.rows(),
                rho.cols(),
                self.dim
            )));
        }
        check_density(rho)
    }

    /// Output state through the Kraus sum.
    pub fn apply(&self, rho: &Matrix<T>) -> Result<Matrix<T>> {
        self.check_state(rho)?;
        Ok(self.apply_kraus_unchecked(rho))
    }

    fn apply_kraus_unchecked(&self, rho: &Matrix<T>) -> Matrix<T> {
        let mut out = Matrix::zeros(self.dim, self.dim);
        for k in self.kraus_ops().iter() {
            out = &out + &(&(k * rho) * &k.adjoint());
        }
        out
    }

    /// Output state through the contraction `d·Tr_2(J (1 ⊗ ρᵀ))`.
    pub fn apply_jamiolkowski(&self, rho: &Matrix<T>) -> Result<Matrix<T>> {
        self.check_state(rho)?;
        Ok(self.apply_linear(rho))
    }

    /// Linear action on an arbitrary `d×d` operator (no state checks).
    pub fn apply_linear(&self, x: &Matrix<T>) -> Matrix<T> {
        let d = self.dim;
        let lifted = Matrix::identity(d).kron(&x.transpose());
        let prod = &self.jam * &lifted;
        partial_trace(&prod, BipartiteShape::square(d), Subsystem::B)
            .expect("square bipartite shape")
            .scale_real(T::from_usize(d).expect("dimension"))
    }

    /// `(E ⊗ I)(ρ)` for `ρ` on `d ⊗ d_b`.
    pub fn apply_extended(&self, rho: &Matrix<T>, d_b: usize) -> Result<Matrix<T>> {
        let n = self.dim * d_b;
        if rho.rows() != n || rho.cols() != n {
            return Err(Error::DimensionMismatch(format!("extended state must be {n}x{n}")));
        }
        let id = Matrix::identity(d_b);
        let mut out = Matrix::zeros(n, n);
        for k in self.kraus_ops().iter() {
            let kk = k.kron(&id);
            out = &out + &(&(&kk * rho) * &kk.adjoint());
        }
        Ok(out)
    }

    /// Heisenberg-picture `(E† ⊗ I)(X) = Σ (K ⊗ I)† X (K ⊗ I)`.
    pub fn adjoint_extended(&self, x: &Matrix<T>, d_b: usize) -> Result<Matrix<T>> {
        let n = self.dim * d_b;
        if x.rows() != n || x.cols() != n {
            return Err(Error::DimensionMismatch(format!("extended operator must be {n}x{n}")));
        }
        let id = Matrix::identity(d_b);
        let mut out = Matrix::zeros(n, n);
        for k in self.kraus_ops().iter() {
            let kk = k.kron(&id);
            out = &out + &(&(&kk.adjoint() * x) * &kk);
        }
        Ok(out)
    }

    /// `Φ_{ij,kl} = Tr(|i⟩⟨j| E(|k⟩⟨l|))`, so that `Φ·vec(ρ) = vec(E(ρ))` with row-major `vec`.
    pub fn superop_matrix(&self) -> Matrix<T> {
        reshuffle(&self.jam, self.dim)
            .expect("Jamiołkowski matrix is d²×d²")
            .scale_real(T::from_usize(self.dim).expect("dimension"))
    }

    /// Channel from a superoperator matrix (inverse of [`Channel::superop_matrix`]).
    pub fn from_superop_matrix(phi: &Matrix<T>) -> Result<Self> {
        let d = dim_of_side(phi.side()?)?;
        let jam = reshuffle(phi, d)?.scale_real(T::one() / T::from_usize(d).expect("dimension"));
        Self::from_jamiolkowski(jam)
    }

    /// Isometry `W = Σ_i K_i ⊗ |i⟩_env` of size `d·r × d`; row index `a·r + i`.
    pub fn stinespring(&self) -> Matrix<T> {
        let ks = self.kraus_ops();
        let (d, r) = (self.dim, ks.len());
        Matrix::from_fn(d * r, d, |row, b| ks[row % r][(row / r, b)])
    }

    /// Unitary on `system ⊗ env` acting as the Stinespring isometry on `|b⟩ ⊗ |0⟩`.
    pub fn stinespring_unitary(&self) -> Result<Matrix<T>> {
        let w = self.stinespring();
        let n = w.rows();
        let r = n / self.dim;
        let pairs: Vec<(Vector<T>, Vector<T>)> = (0..self.dim)
            .map(|b| {
                let src = (0..n).map(|i| re(if i == b * r { T::one() } else { T::zero() })).collect();
                (src, w.column(b))
            })
            .collect();
        complete_isometry(&pairs, n)
    }

    /// `self ∘ other`: `other` acts first.
    pub fn compose(&self, other: &Channel<T>) -> Result<Channel<T>> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch(format!("compose {} with {}", self.dim, other.dim)));
        }
        let phi = &self.superop_matrix() * &other.superop_matrix();
        let d = self.dim;
        let jam = reshuffle(&phi, d)?.scale_real(T::one() / T::from_usize(d).expect("dimension"));
        Ok(Self::from_jamiolkowski_unchecked(d, jam.hermitian_part()))
    }

    /// `T_ij = ⟨i|E(|j⟩⟨j|)|i⟩ = d·J_{ij,ij}`.
    pub fn transition_matrix(&self) -> StochasticMatrix<T> {
        let d = self.dim;
        let scale = T::from_usize(d).expect("dimension");
        StochasticMatrix::from_entries_unchecked(d, |i, j| self.jam[(i * d + j, i * d + j)].re * scale)
    }

    /// `E_Δ = Δ ∘ E ∘ Δ`: keeps the diagonal of `J`, drops the rest.
    pub fn classical_version(&self) -> Channel<T> {
        Self::from_jamiolkowski_unchecked(self.dim, self.jam.diagonal_part())
    }

    /// Complete positivity and trace preservation at tolerance `tol`.
    pub fn check_cptp(&self, tol: f64) -> Result<CptpReport> {
        cptp_report(self.dim, &self.jam, tol)
    }

    pub fn cast<U: Scalar>(&self) -> Channel<U> {
        Channel {
            dim: self.dim,
            jam: self.jam.cast(),
            kraus: self.kraus.as_ref().map(|ks| ks.iter().map(Matrix::cast).collect()),
        }
    }
}

fn cptp_report<T: Scalar>(d: usize, jam: &Matrix<T>, tol: f64) -> Result<CptpReport> {
    let hermiticity = jam.hermiticity_defect().to_f64_lossy();
    let min_eigenvalue = if hermiticity <= T::tolerances().herm.max(tol) {
        herm_eig(&jam.hermitian_part())?.min().to_f64_lossy()
    } else {
        f64::NAN
    };
    let reduced = partial_trace(jam, BipartiteShape::square(d), Subsystem::A)?;
    let target = Matrix::identity(d).scale_real(T::one() / T::from_usize(d).expect("dimension"));
    let tp_deviation = reduced.max_abs_diff(&target).to_f64_lossy();
    let passed = hermiticity <= tol && min_eigenvalue >= -tol && tp_deviation <= tol;
    Ok(CptpReport { hermiticity, min_eigenvalue, tp_deviation, passed })
}

/// Density-matrix check: Hermitian, unit trace, PSD (default tolerances).
pub fn check_density<T: Scalar>(rho: &Matrix<T>) -> Result<()> {
    let tol = T::tolerances();
    if !rho.is_square() {
        return Err(Error::InvalidState(format!("{}x{} is not square", rho.rows(), rho.cols())));
    }
    if !rho.is_hermitian(tol.herm) {
        return Err(Error::InvalidState("not Hermitian".into()));
    }
    let tr = rho.trace();
    if (tr.re - T::one()).abs() > T::lit(tol.psd) || tr.im.abs() > T::lit(tol.psd) {
        return Err(Error::InvalidState(format!("trace {} + {}i", tr.re, tr.im)));
    }
    let min = herm_eig(rho)?.min();
    if min < -T::lit(tol.psd) {
        return Err(Error::InvalidState(format!("negative eigenvalue {min}")));
    }
    Ok(())
}

/// CPTP map from a Haar-random isometry `d → d·rank`.
pub fn random_channel<T: Scalar>(rng: &mut Rng, d: usize, rank: usize) -> Result<Channel<T>> {
    if d == 0 || rank == 0 || rank > d * d {
        return Err(Error::InvalidArgument(format!("rank {rank} outside 1..={}", d * d)));
    }
    let u = haar_unitary::<T>(rng, d * rank);
    // isometry rows indexed (a, m) -> a·rank + m
    let ks = (0..rank)
        .map(|m| Matrix::from_fn(d, d, |a, b| u[(a * rank + m, b)]))
        .collect();
    Channel::from_kraus(ks)
}

#[derive(Serialize, Deserialize)]
#[serde(untagged, bound = "T: Scalar")]
enum ChannelRepr<T: Scalar> {
    Jamiolkowski { dim: usize, jamiolkowski: Matrix<T> },
    Kraus { dim: usize, kraus: Vec<Matrix<T>> },
}

impl<T: Scalar> Serialize for Channel<T> {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        ChannelRepr::Jamiolkowski { dim: self.dim, jamiolkowski: self.jam.clone() }.serialize(s)
    }
}

impl<'de, T: Scalar> Deserialize<'de> for Channel<T> {
    fn deserialize<D: Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        let (dim, ch) = match ChannelRepr::<T>::deserialize(de)? {
            ChannelRepr::Jamiolkowski { dim, jamiolkowski } => (dim, Channel::from_jamiolkowski(jamiolkowski)),
            ChannelRepr::Kraus { dim, kraus } => (dim, Channel::from_kraus(kraus)),
        };
        let ch = ch.map_err(D::Error::custom)?;
        if ch.dim != dim {
            return Err(D::Error::custom(format!("declared dim {dim}, matrices have dim {}", ch.dim)));
        }
        Ok(ch)
    }
}
