//! Dephasing (Schur-product) superchannels `J(E) ↦ J(E) ∘ C`.
//!
//! `C` is a `d²×d²` correlation matrix indexed by pairs `(i, k)`, row index
//! `i·d + k`, matching the output/input split of the Jamiołkowski matrix.

mod memory;
mod realization;

pub use memory::{MemoryClass, MemoryLabel};
pub use realization::SuperRealization;

use std::fmt;

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::channels::{Channel, DephasingChannelC};
use crate::error::{Error, Result};
use crate::matcore::linalg::min_eigenvalue;
use crate::matcore::matrix::{cabs, re, Matrix};
use crate::matcore::{partial_trace, BipartiteShape, Subsystem};
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq)]
pub struct DephasingSuperchannel<T: Scalar> {
    dim: usize,
    c: Matrix<T>,
}

/// One failed condition of the superchannel characterization.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Violation {
    NotPsd { min_eig: f64 },
    /// `C_{jk,jk} ≠ 1`.
    DiagonalNotOne { j: usize, k: usize, value: [f64; 2] },
    /// `C_{i1 k, i1 l} ≠ C_{i0 k, i0 l}` for `k < l`.
    BlocksUnequal { i0: usize, i1: usize, k: usize, l: usize, delta: f64 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::NotPsd { min_eig } => write!(f, "NOT_PSD: minimum eigenvalue {min_eig:e}"),
            Self::DiagonalNotOne { j, k, value } => {
                write!(f, "DIAGONAL_NOT_ONE at ({j},{k}): {} + {}i", value[0], value[1])
            }
            Self::BlocksUnequal { i0, i1, k, l, delta } => {
                write!(f, "BLOCKS_UNEQUAL: blocks {i0} and {i1} differ at ({k},{l}) by {delta:e}")
            }
        }
    }
}

/// Channel whose Schur image under an invalid `C` is not trace preserving.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Witness<T: Scalar> {
    pub violation: Violation,
    pub channel: Channel<T>,
    /// Max-norm deviation of `Tr_1(J ∘ C)` from `𝟙/d`.
    pub defect: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ValidationReport<T: Scalar> {
    pub dim: usize,
    pub violations: Vec<Violation>,
    pub witness: Option<Witness<T>>,
}

impl<T: Scalar> ValidationReport<T> {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

fn check_shape<T: Scalar>(c: &Matrix<T>, d: usize) -> Result<()> {
    if d < 1 || !c.is_square() || c.rows() != d * d {
        return Err(Error::DimensionMismatch(format!(
            "correlation matrix is {}x{}, expected {n}x{n}",
            c.rows(),
            c.cols(),
            n = d * d
        )));
    }
    c.ensure_hermitian(T::tolerances().herm)
}

/// Checks every condition on `c` and, for a diagonal or block violation, builds a witness.
///
/// Violations are ordered: `NOT_PSD` first, then entry violations by `(i,k,j,l)`.
pub fn validate<T: Scalar>(c: &Matrix<T>, d: usize) -> Result<ValidationReport<T>> {
    check_shape(c, d)?;
    let tol = T::lit(T::tolerances().psd);
    let mut violations = Vec::new();
    let min = min_eigenvalue(&c.hermitian_part())?;
    if min < -tol {
        violations.push(Violation::NotPsd { min_eig: min.to_f64_lossy() });
    }
    for i in 0..d {
        for k in 0..d {
            let a = i * d + k;
            let z = c[(a, a)];
            if cabs(z - re(T::one())) > tol {
                violations.push(Violation::DiagonalNotOne {
                    j: i,
                    k,
                    value: [z.re.to_f64_lossy(), z.im.to_f64_lossy()],
                });
            }
            if i == 0 {
                continue;
            }
            for l in k + 1..d {
                let delta = cabs(c[(a, i * d + l)] - c[(k, l)]);
                if delta > tol {
                    violations.push(Violation::BlocksUnequal { i0: 0, i1: i, k, l, delta: delta.to_f64_lossy() });
                }
            }
        }
    }
    let witness = violations
        .iter()
        .find(|v| !matches!(v, Violation::NotPsd { .. }))
        .map(|v| witness(c, d, v))
        .transpose()?;
    Ok(ValidationReport { dim: d, violations, witness })
}

/// Witness channel for a diagonal or block violation of `c`.
///
/// Diagonal entry `(j,k)`: the constant channel onto `|j⟩`, `J = |j⟩⟨j| ⊗ 𝟙 / d`.
/// Blocks `i0, i1` at `(k,l)`: `J = (𝟙 + (|i0⟩⟨i0| − |i1⟩⟨i1|) ⊗ (|k⟩⟨l| + |l⟩⟨k|)) / d²`.
pub fn witness<T: Scalar>(c: &Matrix<T>, d: usize, violation: &Violation) -> Result<Witness<T>> {
    check_shape(c, d)?;
    let tol = T::lit(T::tolerances().psd);
    let n = d * d;
    let jam = match *violation {
        Violation::DiagonalNotOne { j, k, .. } => {
            if j >= d || k >= d || cabs(c[(j * d + k, j * d + k)] - re(T::one())) <= tol {
                return Err(Error::NoViolation);
            }
            let inv_d = T::one() / T::from_usize(d).expect("dimension");
            Matrix::from_fn(n, n, |a, b| re(if a == b && a / d == j { inv_d } else { T::zero() }))
        }
        Violation::BlocksUnequal { i0, i1, k, l, .. } => {
            if i0 >= d || i1 >= d || i0 == i1 || k >= d || l >= d || k == l {
                return Err(Error::NoViolation);
            }
            if cabs(c[(i0 * d + k, i0 * d + l)] - c[(i1 * d + k, i1 * d + l)]) <= tol {
                return Err(Error::NoViolation);
            }
            let inv = T::one() / T::from_usize(n).expect("dimension");
            let mut jam = Matrix::identity(n).scale_real(inv);
            for (i, sign) in [(i0, inv), (i1, -inv)] {
                jam[(i * d + k, i * d + l)] = re(sign);
                jam[(i * d + l, i * d + k)] = re(sign);
            }
            jam
        }
        Violation::NotPsd { .. } => return Err(Error::NoViolation),
    };
    let channel = Channel::from_jamiolkowski(jam)?;
    let image = channel.jamiolkowski().schur(c)?;
    let reduced = partial_trace(&image, BipartiteShape::square(d), Subsystem::A)?;
    let target = Matrix::identity(d).scale_real(T::one() / T::from_usize(d).expect("dimension"));
    let defect = reduced.max_abs_diff(&target).to_f64_lossy();
    Ok(Witness { violation: violation.clone(), channel, defect })
}

impl<T: Scalar> DephasingSuperchannel<T> {
    /// Validated constructor; fails with the full violation list.
    pub fn new(c: Matrix<T>, d: usize) -> Result<Self> {
        let report = validate(&c, d)?;
        if !report.is_valid() {
            return Err(Error::InvalidSuperchannel(report.violations));
        }
        let mut c = c.hermitian_part();
        for a in 0..d * d {
            c[(a, a)] = re(T::one());
        }
        Ok(Self { dim: d, c })
    }

    /// All-ones `C`: `Ξ[E] = E`.
    pub fn identity(d: usize) -> Self {
        Self { dim: d, c: Matrix::ones(d * d, d * d) }
    }

    /// Pre-processing by `D_{c1}` and post-processing by `D_{c2}`: `C = c2 ⊗ c1`.
    pub fn pre_post(c1: &DephasingChannelC<T>, c2: &DephasingChannelC<T>) -> Result<Self> {
        if c1.dim() != c2.dim() {
            return Err(Error::DimensionMismatch(format!("pre {} vs post {}", c1.dim(), c2.dim())));
        }
        Ok(Self { dim: c1.dim(), c: c2.correlation().kron(c1.correlation()) })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn correlation(&self) -> &Matrix<T> {
        &self.c
    }

    pub fn apply(&self, ch: &Channel<T>) -> Result<Channel<T>> {
        if ch.dim() != self.dim {
            return Err(Error::DimensionMismatch(format!("channel dim {} vs superchannel dim {}", ch.dim(), self.dim)));
        }
        let jam = ch.jamiolkowski().schur(&self.c)?;
        Ok(Channel::from_jamiolkowski_unchecked(self.dim, jam))
    }

    /// `Ξ_other ∘ Ξ_self`, which is again Schur-product with `C_self ∘ C_other`.
    pub fn then(&self, other: &Self) -> Result<Self> {
        Ok(Self { dim: self.dim, c: self.c.schur(&other.c)? })
    }

    /// `(1/d²) Σ C_{ik,jl} |ik⟩⟨jl| ⊗ |ik⟩⟨jl|`, a `d⁴×d⁴` matrix.
    pub fn super_jamiolkowski(&self) -> Matrix<T> {
        let n = self.dim * self.dim;
        let inv = T::one() / T::from_usize(n).expect("dimension");
        let mut big = Matrix::zeros(n * n, n * n);
        for a in 0..n {
            for b in 0..n {
                big[(a * n + a, b * n + b)] = self.c[(a, b)] * inv;
            }
        }
        big
    }

    /// `C̃_ij = C_{ii,jj}`.
    pub fn tilde_c(&self) -> DephasingChannelC<T> {
        let d = self.dim;
        let ct = Matrix::from_fn(d, d, |i, j| self.c[(i * d + i, j * d + j)]);
        DephasingChannelC::new(ct).expect("principal submatrix of a correlation matrix")
    }

    /// Image of `D_{C'}`: the dephasing channel with `C' ∘ C̃`.
    pub fn act_on_dephasing(&self, dc: &DephasingChannelC<T>) -> Result<DephasingChannelC<T>> {
        if dc.dim() != self.dim {
            return Err(Error::DimensionMismatch(format!("dephasing dim {} vs {}", dc.dim(), self.dim)));
        }
        dc.then(&self.tilde_c())
    }

    pub fn cast<U: Scalar>(&self) -> DephasingSuperchannel<U> {
        DephasingSuperchannel { dim: self.dim, c: self.c.cast() }
    }
}

/// `J(Ξ[E]) = d² Tr_2(𝐉 (𝟙 ⊗ J(E)ᵀ))`, evaluated from the super-Jamiołkowski matrix.
pub fn apply_via_super_jamiolkowski<T: Scalar>(big: &Matrix<T>, ch: &Channel<T>) -> Result<Matrix<T>> {
    let n = ch.jamiolkowski().rows();
    let lifted = Matrix::identity(n).kron(&ch.jamiolkowski().transpose());
    let prod = big.matmul(&lifted)?;
    Ok(partial_trace(&prod, BipartiteShape::square(n), Subsystem::B)?.scale_real(T::from_usize(n).expect("dimension")))
}

/// Qutrit correlation matrix with diagonal blocks `𝟙`, block `(1,2) = |3⟩⟨1|`,
/// block `(1,3) = |1⟩⟨1|` and a zero `(2,3)` block. PSD, but its partial transpose is not.
pub fn npt_qutrit_example<T: Scalar>() -> Matrix<T> {
    let mut c = Matrix::identity(9);
    for (a, b) in [(2, 3), (0, 6)] {
        c[(a, b)] = re(T::one());
        c[(b, a)] = re(T::one());
    }
    c
}

/// Qubit `C = [[I, −I], [−I, I]]` with `I` the all-ones `2×2` block, i.e. `C_{ik,jl} = s_i s_j`, `s = (1, −1)`.
pub fn sign_flip_example<T: Scalar>() -> Matrix<T> {
    let s = [T::one(), -T::one()];
    Matrix::from_fn(4, 4, |a, b| re(s[a / 2] * s[b / 2]))
}

#[derive(Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
struct SuperRepr<T: Scalar> {
    dim: usize,
    correlation: Matrix<T>,
}

impl<T: Scalar> Serialize for DephasingSuperchannel<T> {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        SuperRepr { dim: self.dim, correlation: self.c.clone() }.serialize(s)
    }
}

impl<'de, T: Scalar> Deserialize<'de> for DephasingSuperchannel<T> {
    fn deserialize<D: Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        let r = SuperRepr::<T>::deserialize(de)?;
        Self::new(r.correlation, r.dim).map_err(D::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::{classical_channel, random_channel, random_correlation, StochasticMatrix};
    use crate::matcore::matrix::c;
    use crate::matcore::random::{random_state, Rng};

    type M = Matrix<f64>;
    type Sc = DephasingSuperchannel<f64>;

    fn npt_example() -> M {
        npt_qutrit_example()
    }

    fn sign_fixture() -> M {
        sign_flip_example()
    }

    #[test]
    fn identity_and_fixture_examples_are_valid() {
        for d in 2..=3 {
            assert!(validate(&M::ones(d * d, d * d), d).unwrap().is_valid());
        }
        let rep = validate(&npt_example(), 3).unwrap();
        assert!(rep.is_valid(), "{:?}", rep.violations);
        assert!(rep.witness.is_none());
    }

    #[test]
    fn unequal_blocks_get_a_witness() {
        // C = C_a ⊕-style blocks: diagonal blocks all-ones and identity (not block constant)
        let d = 2;
        let mut cm = M::identity(4);
        cm[(0, 1)] = c(1.0, 0.0);
        cm[(1, 0)] = c(1.0, 0.0);
        let rep = validate(&cm, d).unwrap();
        assert_eq!(rep.violations, vec![Violation::BlocksUnequal { i0: 0, i1: 1, k: 0, l: 1, delta: 1.0 }]);
        let w = rep.witness.unwrap();
        assert!((w.defect - 1.0 / 4.0).abs() < 1e-15);
        // the image of the witness is not trace preserving
        let image = Channel::from_jamiolkowski(w.channel.jamiolkowski().schur(&cm).unwrap());
        assert!(matches!(image, Err(Error::NotTracePreserving { .. })));
        assert!(matches!(Sc::new(cm, d), Err(Error::InvalidSuperchannel(_))));
    }

    #[test]
    fn diagonal_witness_defect() {
        let d = 2;
        let mut cm = M::identity(4);
        cm[(3, 3)] = c(0.5, 0.0);
        let rep = validate(&cm, d).unwrap();
        assert_eq!(rep.violations.len(), 1);
        assert_eq!(rep.violations[0], Violation::DiagonalNotOne { j: 1, k: 1, value: [0.5, 0.0] });
        let w = rep.witness.unwrap();
        assert!((w.defect - 0.5 / d as f64).abs() < 1e-15);
        let err = witness(&M::ones(4, 4), 2, &Violation::DiagonalNotOne { j: 0, k: 0, value: [1.0, 0.0] });
        assert!(matches!(err, Err(Error::NoViolation)));
    }

    #[test]
    fn perturbed_blocks_after_psd_projection() {
        // perturb the second diagonal block of a valid C, then clip negative eigenvalues
        let mut rng = Rng::new(21);
        let sc = Sc::sample(&mut rng, 2);
        let mut cm = sc.correlation().clone();
        cm[(2, 3)] *= c(0.2, 0.0);
        cm[(3, 2)] *= c(0.2, 0.0);
        let eig = crate::matcore::herm_eig(&cm).unwrap();
        let proj = eig.reconstruct_with(|x| x.max(0.0));
        let scale: Vec<f64> = proj.diagonal().iter().map(|z| 1.0 / z.re.sqrt()).collect();
        let proj = M::from_fn(4, 4, |a, b| proj[(a, b)] * scale[a] * scale[b]);
        let rep = validate(&proj, 2).unwrap();
        assert!(rep.violations.iter().any(|v| matches!(v, Violation::BlocksUnequal { .. })));
        assert!(!rep.violations.iter().any(|v| matches!(v, Violation::NotPsd { .. })));
        assert!(rep.witness.unwrap().defect > 0.0);
    }

    #[test]
    fn non_psd_is_reported_first() {
        let mut cm = M::ones(4, 4);
        cm[(0, 3)] = c(-1.0, 0.0);
        cm[(3, 0)] = c(-1.0, 0.0);
        let rep = validate(&cm, 2).unwrap();
        assert!(matches!(rep.violations[0], Violation::NotPsd { .. }));
        assert!(rep.witness.is_none());
        assert!(validate(&M::ones(4, 4), 3).is_err());
    }

    #[test]
    fn identity_superchannel_is_identity() {
        let mut rng = Rng::new(1);
        let ch: Channel<f64> = random_channel(&mut rng, 3, 4).unwrap();
        assert_eq!(Sc::identity(3).apply(&ch).unwrap().jamiolkowski(), ch.jamiolkowski());
    }

    #[test]
    fn hadamard_sent_to_minus() {
        let sc = Sc::new(sign_fixture(), 2).unwrap();
        let out = sc.apply(&Channel::hadamard()).unwrap();
        let minus = M::from_real_rows(&[&[0.5, -0.5], &[-0.5, 0.5]]).unwrap();
        assert!(out.apply(&M::unit(2, 0, 0)).unwrap().max_abs_diff(&minus) < 1e-15);
    }

    #[test]
    fn classical_channels_are_fixed() {
        let mut rng = Rng::new(2);
        for _ in 0..20 {
            let d = rng.range(2, 3);
            let sc = Sc::sample(&mut rng, d);
            let ch = classical_channel(&StochasticMatrix::random(&mut rng, d));
            assert!(sc.apply(&ch).unwrap().jamiolkowski().max_abs_diff(ch.jamiolkowski()) < 1e-15);
        }
    }

    #[test]
    fn transitions_and_cptp_preserved() {
        let mut rng = Rng::new(3);
        for _ in 0..100 {
            let d = rng.range(2, 3);
            let sc = Sc::sample(&mut rng, d);
            let rank = rng.range(1, d * d);
            let ch: Channel<f64> = random_channel(&mut rng, d, rank).unwrap();
            let out = sc.apply(&ch).unwrap();
            assert!(out.transition_matrix().max_abs_diff(&ch.transition_matrix()) < 1e-12);
            assert!(out.check_cptp(1e-9).unwrap().passed);
        }
    }

    #[test]
    fn super_jamiolkowski_paths() {
        let big = Sc::identity(2).super_jamiolkowski();
        let eig = crate::matcore::herm_eig(&big).unwrap();
        assert!((eig.max() - 1.0).abs() < 1e-14);
        assert!(eig.values[..15].iter().all(|x| x.abs() < 1e-14));
        let mut rng = Rng::new(4);
        for _ in 0..10 {
            let d = rng.range(2, 3);
            let sc = Sc::sample(&mut rng, d);
            let big = sc.super_jamiolkowski();
            let n = d * d;
            for a in 0..n * n {
                let expect = if a / n == a % n { 1.0 / n as f64 } else { 0.0 };
                assert_eq!(big[(a, a)].re, expect);
            }
            let ch: Channel<f64> = random_channel(&mut rng, d, 2).unwrap();
            let via = apply_via_super_jamiolkowski(&big, &ch).unwrap();
            assert!(via.max_abs_diff(sc.apply(&ch).unwrap().jamiolkowski()) < 1e-12);
        }
    }

    #[test]
    fn composition_is_schur() {
        let mut rng = Rng::new(5);
        for _ in 0..20 {
            let d = rng.range(2, 3);
            let a = Sc::sample(&mut rng, d);
            let b = Sc::sample(&mut rng, d);
            let ch: Channel<f64> = random_channel(&mut rng, d, d).unwrap();
            let seq = b.apply(&a.apply(&ch).unwrap()).unwrap();
            let once = a.then(&b).unwrap().apply(&ch).unwrap();
            assert!(seq.jamiolkowski().max_abs_diff(once.jamiolkowski()) < 1e-12);
        }
    }

    #[test]
    fn pre_post_matches_composition() {
        let ones = DephasingChannelC::identity(2);
        let delta = DephasingChannelC::complete(2);
        assert_eq!(Sc::pre_post(&ones, &ones).unwrap(), Sc::identity(2));
        let mut rng = Rng::new(6);
        let ch: Channel<f64> = random_channel(&mut rng, 2, 3).unwrap();
        let post = Sc::pre_post(&ones, &delta).unwrap().apply(&ch).unwrap();
        let direct = Channel::completely_dephasing(2).compose(&ch).unwrap();
        assert!(post.jamiolkowski().max_abs_diff(direct.jamiolkowski()) < 1e-14);
        for _ in 0..30 {
            let d = rng.range(2, 3);
            let c1 = DephasingChannelC::new(random_correlation(&mut rng, d, 2)).unwrap();
            let c2 = DephasingChannelC::new(random_correlation(&mut rng, d, d)).unwrap();
            let rank = rng.range(1, d * d);
            let ch: Channel<f64> = random_channel(&mut rng, d, rank).unwrap();
            let a = Sc::pre_post(&c1, &c2).unwrap().apply(&ch).unwrap();
            let b = c2.channel().compose(&ch.compose(&c1.channel()).unwrap()).unwrap();
            assert!(a.jamiolkowski().max_abs_diff(b.jamiolkowski()) < 1e-12);
        }
    }

    #[test]
    fn tilde_and_dephasing_action() {
        assert_eq!(Sc::identity(3).tilde_c().correlation(), &M::ones(3, 3));
        let npt = Sc::new(npt_example(), 3).unwrap();
        assert_eq!(npt.tilde_c().correlation(), &M::identity(3));
        let mut rng = Rng::new(7);
        for _ in 0..50 {
            let d = rng.range(2, 3);
            let sc = Sc::sample(&mut rng, d);
            let dc = DephasingChannelC::new(random_correlation(&mut rng, d, d)).unwrap();
            let res = sc.act_on_dephasing(&dc).unwrap();
            let via_channel = sc.apply(&dc.channel()).unwrap();
            assert!(via_channel.jamiolkowski().max_abs_diff(res.channel().jamiolkowski()) < 1e-12);
            for i in 0..d {
                for j in 0..d {
                    assert!(res.correlation()[(i, j)].norm() <= dc.correlation()[(i, j)].norm() + 1e-12);
                }
            }
            assert_eq!(Sc::identity(d).act_on_dephasing(&dc).unwrap().correlation(), dc.correlation());
            let fixed = sc.act_on_dephasing(&DephasingChannelC::complete(d)).unwrap();
            assert!(fixed.correlation().max_abs_diff(&M::identity(d)) < 1e-15);
        }
    }

    #[test]
    fn dephasing_apply_preserves_states() {
        let mut rng = Rng::new(8);
        let sc = Sc::sample(&mut rng, 2);
        let out = sc.apply(&Channel::identity(2)).unwrap();
        let rho: M = random_state(&mut rng, 2, false);
        let r = out.apply(&rho).unwrap();
        assert!((r.trace().re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn json_round_trip() {
        let sc = Sc::new(npt_example(), 3).unwrap();
        let s = serde_json::to_string(&sc).unwrap();
        assert!(s.starts_with(r#"{"dim":3,"correlation":"#));
        assert_eq!(serde_json::from_str::<Sc>(&s).unwrap(), sc);
        let bad = serde_json::to_string(&SuperRepr { dim: 2, correlation: M::from_real_diag(&[1.0, 1.0, 1.0, 2.0]) }).unwrap();
        assert!(serde_json::from_str::<Sc>(&bad).is_err());
        let v = Violation::BlocksUnequal { i0: 0, i1: 1, k: 0, l: 1, delta: 0.5 };
        assert_eq!(serde_json::to_value(&v).unwrap()["kind"], "BLOCKS_UNEQUAL");
    }
}
