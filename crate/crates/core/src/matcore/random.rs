//! Seeded sampling: Gaussian entries, Haar unitaries and random density matrices.

use nalgebra::ComplexField;
use num_complex::Complex;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::matrix::{c, cabs, Matrix, Vector};
use crate::scalar::Scalar;

/// Seeded random stream. Identical seeds give identical streams on every platform.
///
/// Sampling is done in `f64` and converted, so an `f32` and an `f64` run with
/// the same seed see the same underlying draws.
#[derive(Clone, Debug)]
pub struct Rng {
    seed: u64,
    inner: ChaCha8Rng,
}

impl Rng {
    pub fn new(seed: u64) -> Self {
        Self { seed, inner: ChaCha8Rng::seed_from_u64(seed) }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Independent stream for task `index` of a parallel run (`seed + index`).
    pub fn derive(&self, index: u64) -> Self {
        Self::new(self.seed.wrapping_add(index))
    }

    /// Fresh stream seeded from the next draw of this one.
    pub fn split(&mut self) -> Self {
        Self::new(self.inner.next_u64())
    }

    pub fn normal<T: Scalar>(&mut self) -> T {
        let x: f64 = StandardNormal.sample(&mut self.inner);
        T::lit(x)
    }

    /// Uniform in `[0, 1)`.
    pub fn uniform<T: Scalar>(&mut self) -> T {
        T::lit((self.inner.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64))
    }

    /// Uniform integer in `lo..=hi`.
    pub fn range(&mut self, lo: usize, hi: usize) -> usize {
        assert!(lo <= hi);
        let span = (hi - lo + 1) as u64;
        lo + (self.inner.next_u64() % span) as usize
    }

    /// Standard complex Gaussian, `E|z|² = 1`.
    pub fn complex_normal<T: Scalar>(&mut self) -> Complex<T> {
        let h = T::lit(std::f64::consts::FRAC_1_SQRT_2);
        c(self.normal::<T>() * h, self.normal::<T>() * h)
    }

    /// Ginibre matrix with i.i.d. standard complex Gaussian entries.
    pub fn ginibre<T: Scalar>(&mut self, rows: usize, cols: usize) -> Matrix<T> {
        Matrix::from_fn(rows, cols, |_, _| self.complex_normal())
    }
}

/// Haar-distributed unitary: QR of a Ginibre matrix with the phases of `diag(R)` absorbed into `Q`.
pub fn haar_unitary<T: Scalar>(rng: &mut Rng, d: usize) -> Matrix<T> {
    assert!(d >= 1, "dimension must be positive");
    let g = rng.ginibre::<T>(d, d).to_nalgebra();
    let qr = g.qr();
    let (q, r) = (qr.q(), qr.r());
    let mut u = Matrix::from_nalgebra(&q);
    for j in 0..d {
        let rjj = r[(j, j)];
        let m = cabs(rjj);
        let phase = if m > T::zero() { rjj / Complex::from_real(m) } else { c(T::one(), T::zero()) };
        for i in 0..d {
            u[(i, j)] *= phase;
        }
    }
    u
}

/// Haar-random unit vector in dimension `d`.
pub fn random_pure_vector<T: Scalar>(rng: &mut Rng, d: usize) -> Vector<T> {
    let mut v: Vector<T> = (0..d).map(|_| rng.complex_normal()).collect();
    let n = v.iter().fold(T::zero(), |s, z| s + z.norm_sqr()).sqrt();
    for z in &mut v {
        *z /= Complex::from_real(n);
    }
    v
}

/// Random density matrix: a Haar pure state, or the reduced state of a Haar pure state on `d ⊗ d`.
pub fn random_state<T: Scalar>(rng: &mut Rng, d: usize, pure: bool) -> Matrix<T> {
    if pure {
        let v = random_pure_vector(rng, d);
        return Matrix::outer(&v, &v);
    }
    let v = random_pure_vector::<T>(rng, d * d);
    // reshape |v⟩ into a d×d coefficient matrix; ρ = A A†
    let a = Matrix::from_vec_unchecked(d, d, v);
    let rho = &a * &a.adjoint();
    let tr = rho.trace().re;
    rho.scale_real(T::one() / tr).hermitian_part()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matcore::linalg::herm_eig;

    #[test]
    fn streams_are_reproducible() {
        let mut a = Rng::new(42);
        let mut b = Rng::new(42);
        let ua: Matrix<f64> = haar_unitary(&mut a, 3);
        let ub: Matrix<f64> = haar_unitary(&mut b, 3);
        assert_eq!(ua, ub);
        assert_eq!(a.derive(3).seed(), 45);
    }

    #[test]
    fn haar_is_unitary() {
        let mut rng = Rng::new(1);
        for d in 1..=5 {
            let u: Matrix<f64> = haar_unitary(&mut rng, d);
            assert!(u.unitarity_defect() < 1e-12, "d={d}");
        }
        let u1: Matrix<f64> = haar_unitary(&mut rng, 1);
        assert!((cabs(u1[(0, 0)]) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn haar_first_moment() {
        // E|U_11|^2 = 1/d, Var = (d-1)/(d^2 (d+1))
        let mut rng = Rng::new(2024);
        let d = 3;
        let n = 10_000;
        let mean = (0..n)
            .map(|_| haar_unitary::<f64>(&mut rng, d)[(0, 0)].norm_sqr())
            .sum::<f64>()
            / n as f64;
        let sd = ((d as f64 - 1.0) / ((d * d) as f64 * (d as f64 + 1.0))).sqrt();
        let se = sd / (n as f64).sqrt();
        assert!((mean - 1.0 / d as f64).abs() < 3.0 * se, "mean {mean}");
    }

    #[test]
    fn random_states_are_states() {
        let mut rng = Rng::new(9);
        for d in 2..=4 {
            let p: Matrix<f64> = random_state(&mut rng, d, true);
            assert!((p.trace().re - 1.0).abs() < 1e-12);
            assert!((&p * &p).max_abs_diff(&p) < 1e-10);
            let m: Matrix<f64> = random_state(&mut rng, d, false);
            assert!((m.trace().re - 1.0).abs() < 1e-12);
            let eig = herm_eig(&m).unwrap();
            assert!(eig.values.iter().all(|&x| (-1e-12..=1.0 + 1e-12).contains(&x)));
        }
    }

    #[test]
    fn uniform_in_unit_interval() {
        let mut rng = Rng::new(0);
        for _ in 0..1000 {
            let x: f64 = rng.uniform();
            assert!((0.0..1.0).contains(&x));
        }
        assert!((0..100).all(|_| (2..=4).contains(&rng.range(2, 4))));
    }
}
