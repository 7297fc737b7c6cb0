//! Schur-product channels `ρ ↦ ρ ∘ C`.

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize};

use super::Channel;
use crate::error::{Error, Result};
use crate::matcore::linalg::{gram_matrix, gram_vectors, min_eigenvalue};
use crate::matcore::matrix::{cabs, re, Matrix, Vector};
use crate::matcore::random::{random_pure_vector, Rng};
use crate::scalar::Scalar;

/// Dephasing channel `D_C` determined by a correlation matrix `C`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DephasingChannelC<T: Scalar> {
    dim: usize,
    c: Matrix<T>,
}

/// Checks Hermitian, unit diagonal and PSD at the default tolerances.
pub(crate) fn check_correlation<T: Scalar>(c: &Matrix<T>) -> Result<()> {
    let tol = T::tolerances();
    if !c.is_square() {
        return Err(Error::NotCorrelation(format!("{}x{} is not square", c.rows(), c.cols())));
    }
    let herm = c.hermiticity_defect();
    if herm > T::lit(tol.herm) {
        return Err(Error::NotCorrelation(format!("not Hermitian (deviation {:e})", herm.to_f64_lossy())));
    }
    for (i, z) in c.diagonal().iter().enumerate() {
        if cabs(*z - re(T::one())) > T::lit(tol.psd) {
            return Err(Error::NotCorrelation(format!("diagonal entry {i} is {} + {}i", z.re, z.im)));
        }
    }
    let min = min_eigenvalue(c)?;
    if min < -T::lit(tol.psd) {
        return Err(Error::NotCorrelation(format!("negative eigenvalue {:e}", min.to_f64_lossy())));
    }
    Ok(())
}

impl<T: Scalar> DephasingChannelC<T> {
    pub fn new(c: Matrix<T>) -> Result<Self> {
        check_correlation(&c)?;
        Ok(Self { dim: c.rows(), c: c.hermitian_part() })
    }

    /// `C` = all-ones: the identity channel.
    pub fn identity(d: usize) -> Self {
        Self { dim: d, c: Matrix::ones(d, d) }
    }

    /// `C = 𝟙`: complete dephasing.
    pub fn complete(d: usize) -> Self {
        Self { dim: d, c: Matrix::identity(d) }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn correlation(&self) -> &Matrix<T> {
        &self.c
    }

    /// Jamiołkowski form: `J_{ii,jj} = C_ij / d`, zero elsewhere.
    pub fn channel(&self) -> Channel<T> {
        let d = self.dim;
        let inv_d = T::one() / T::from_usize(d).expect("dimension");
        let mut jam = Matrix::zeros(d * d, d * d);
        for i in 0..d {
            for j in 0..d {
                jam[(i * d + i, j * d + j)] = self.c[(i, j)] * inv_d;
            }
        }
        Channel::from_jamiolkowski_unchecked(d, jam)
    }

    /// `ρ ∘ C` after validating `ρ`.
    pub fn apply(&self, rho: &Matrix<T>) -> Result<Matrix<T>> {
        if rho.rows() != self.dim {
            return Err(Error::DimensionMismatch(format!("state dim {} vs {}", rho.rows(), self.dim)));
        }
        super::check_density(rho)?;
        rho.schur(&self.c)
    }

    fn psi(&self) -> Vec<Vector<T>> {
        gram_vectors(&self.c).expect("correlation matrix is PSD")
    }

    /// Diagonal Kraus operators `K_k = Σ_i ⟨k|ψ_i⟩ |i⟩⟨i|`; zero operators are dropped.
    pub fn kraus(&self) -> Vec<Matrix<T>> {
        let psi = self.psi();
        let prune = T::lit(T::tolerances().kraus_prune);
        (0..self.dim)
            .filter(|&k| psi.iter().map(|v| v[k].norm_sqr()).fold(T::zero(), |a, b| a.max(b)) >= prune)
            .map(|k| Matrix::from_diag(&psi.iter().map(|v| v[k]).collect::<Vec<_>>()))
            .collect()
    }

    /// Complementary measure-and-prepare channel `ρ ↦ Σ ρ_ii |ψ_i⟩⟨ψ_i|`.
    pub fn complementary(&self) -> Channel<T> {
        let psi = self.psi();
        let d = self.dim;
        let ks = (0..d)
            .map(|i| Matrix::from_fn(d, d, |a, b| if b == i { psi[i][a] } else { re(T::zero()) }))
            .collect();
        Channel::from_kraus(ks).expect("unit-norm Gram vectors give a complete set")
    }

    /// Composition `D_self ∘ D_other = D_{C_self ∘ C_other}`.
    pub fn then(&self, other: &Self) -> Result<Self> {
        let c = self.c.schur(&other.c)?;
        Ok(Self { dim: self.dim, c })
    }

    pub fn cast<U: Scalar>(&self) -> DephasingChannelC<U> {
        DephasingChannelC { dim: self.dim, c: self.c.cast() }
    }
}

impl<'de, T: Scalar> Deserialize<'de> for DephasingChannelC<T> {
    fn deserialize<D: Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(bound = "T: Scalar")]
        struct Repr<T: Scalar> {
            dim: usize,
            c: Matrix<T>,
        }
        let r = Repr::<T>::deserialize(de)?;
        if r.c.rows() != r.dim {
            return Err(D::Error::custom(format!("declared dim {}, matrix is {}x{}", r.dim, r.c.rows(), r.c.cols())));
        }
        Self::new(r.c).map_err(D::Error::custom)
    }
}

/// Gram matrix of `rank`-dimensional Haar unit vectors: a random correlation matrix.
pub fn random_correlation<T: Scalar>(rng: &mut Rng, d: usize, rank: usize) -> Matrix<T> {
    let vs: Vec<Vector<T>> = (0..d).map(|_| random_pure_vector(rng, rank.max(1))).collect();
    let mut g = gram_matrix(&vs).hermitian_part();
    for i in 0..d {
        g[(i, i)] = re(T::one());
    }
    g
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matcore::matrix::c;
    use crate::matcore::random::random_state;

    type M = Matrix<f64>;
    type Dc = DephasingChannelC<f64>;

    #[test]
    fn trivial_cases() {
        let id = Dc::identity(3).channel();
        assert!(id.jamiolkowski().max_abs_diff(Channel::identity(3).jamiolkowski()) < 1e-15);
        let delta = Dc::complete(3).channel();
        assert!(delta.jamiolkowski().max_abs_diff(Channel::completely_dephasing(3).jamiolkowski()) < 1e-15);

        let ks = Dc::identity(3).kraus();
        assert_eq!(ks.len(), 1);
        assert!((ks[0][(0, 0)].norm() - 1.0).abs() < 1e-12);
        assert!(ks[0].max_abs_diff(&M::identity(3).scale(ks[0][(0, 0)])) < 1e-12);
        let ks = Dc::complete(2).kraus();
        assert_eq!(ks.len(), 2);
    }

    #[test]
    fn qubit_scales_coherence() {
        let coh = c(0.3, -0.4);
        let cm = M::from_rows(&[vec![c(1.0, 0.0), coh], vec![coh.conj(), c(1.0, 0.0)]]).unwrap();
        let dc = Dc::new(cm).unwrap();
        let mut rng = Rng::new(1);
        let rho: M = random_state(&mut rng, 2, false);
        for out in [dc.apply(&rho).unwrap(), dc.channel().apply(&rho).unwrap(), Channel::from_kraus(dc.kraus()).unwrap().apply(&rho).unwrap()] {
            assert!((out[(0, 0)] - rho[(0, 0)]).norm() < 1e-12);
            assert!((out[(1, 1)] - rho[(1, 1)]).norm() < 1e-12);
            assert!((out[(0, 1)] - rho[(0, 1)] * coh).norm() < 1e-12);
        }
    }

    #[test]
    fn kraus_are_diagonal_and_rebuild() {
        let mut rng = Rng::new(2);
        for trial in 0..30 {
            let d = 2 + trial % 3;
            let dc = Dc::new(random_correlation(&mut rng, d, 1 + trial % d)).unwrap();
            let ks = dc.kraus();
            for k in &ks {
                assert!(k.off_diagonal_part().max_norm() == 0.0);
            }
            let rebuilt = Channel::from_kraus(ks).unwrap();
            assert!(rebuilt.jamiolkowski().max_abs_diff(dc.channel().jamiolkowski()) < 1e-10);
            assert!(dc.channel().check_cptp(1e-10).unwrap().passed);
            let t = dc.channel().transition_matrix();
            for i in 0..d {
                for j in 0..d {
                    assert!((t.get(i, j) - if i == j { 1.0 } else { 0.0 }).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn composition_is_schur_product() {
        let mut rng = Rng::new(3);
        for _ in 0..20 {
            let d = rng.range(2, 4);
            let a = Dc::new(random_correlation(&mut rng, d, d)).unwrap();
            let b = Dc::new(random_correlation(&mut rng, d, 2)).unwrap();
            let composed = b.channel().compose(&a.channel()).unwrap();
            assert!(composed.jamiolkowski().max_abs_diff(a.then(&b).unwrap().channel().jamiolkowski()) < 1e-12);
            let other = a.channel().compose(&b.channel()).unwrap();
            assert!(composed.jamiolkowski().max_abs_diff(other.jamiolkowski()) < 1e-12);
        }
    }

    #[test]
    fn complementary_cases() {
        let mut rng = Rng::new(4);
        let rho: M = random_state(&mut rng, 3, false);
        // C = 1: output is a diagonal measurement in the orthonormal |ψ_i⟩ basis
        let comp = Dc::complete(3).complementary();
        let out = comp.apply(&rho).unwrap();
        let eig = crate::matcore::herm_eig(&out).unwrap();
        let mut diag: Vec<f64> = rho.diagonal().iter().map(|z| z.re).collect();
        diag.sort_by(f64::total_cmp);
        for (a, b) in eig.values.iter().zip(&diag) {
            assert!((a - b).abs() < 1e-12);
        }
        // C = all-ones: constant output
        let comp = Dc::identity(3).complementary();
        let a = comp.apply(&rho).unwrap();
        let b = comp.apply(&random_state(&mut rng, 3, true)).unwrap();
        assert!(a.max_abs_diff(&b) < 1e-12);
        // formula oracle
        for _ in 0..20 {
            let d = rng.range(2, 4);
            let cm = random_correlation(&mut rng, d, 2);
            let dc = Dc::new(cm.clone()).unwrap();
            let psi = gram_vectors(&cm).unwrap();
            let rho: M = random_state(&mut rng, d, false);
            let mut expect = M::zeros(d, d);
            for i in 0..d {
                expect = &expect + &M::outer(&psi[i], &psi[i]).scale(rho[(i, i)]);
            }
            assert!(dc.complementary().apply(&rho).unwrap().max_abs_diff(&expect) < 1e-12);
            // depends only on the diagonal
            let dephased = rho.diagonal_part();
            assert!(dc.complementary().apply(&dephased).unwrap().max_abs_diff(&expect) < 1e-12);
        }
    }

    #[test]
    fn rejects_non_correlation() {
        assert!(matches!(Dc::new(M::from_real_diag(&[1.0, 2.0])), Err(Error::NotCorrelation(_))));
        let npsd = M::from_real_rows(&[&[1.0, 2.0], &[2.0, 1.0]]).unwrap();
        assert!(matches!(Dc::new(npsd), Err(Error::NotCorrelation(_))));
        let nonherm = M::from_real_rows(&[&[1.0, 0.5], &[0.0, 1.0]]).unwrap();
        assert!(Dc::new(nonherm).is_err());
    }

    #[test]
    fn json_round_trip() {
        let mut rng = Rng::new(5);
        let dc = Dc::new(random_correlation(&mut rng, 3, 2)).unwrap();
        let s = serde_json::to_string(&dc).unwrap();
        let back: Dc = serde_json::from_str(&s).unwrap();
        assert!(back.correlation().max_abs_diff(dc.correlation()) < 1e-15);
        assert!(serde_json::from_str::<Dc>(r#"{"dim":2,"c":{"rows":2,"cols":2,"data":[[1,0],[3,0],[3,0],[1,0]]}}"#).is_err());
    }
}
