//! Hypothesis-testing divergence through the operator Neyman–Pearson test.

use super::ExtendedReal;
use crate::channels::{check_density, Channel};
use crate::error::{Error, Result};
use crate::matcore::linalg::{herm_eig, HermEig};
use crate::matcore::matrix::{re, Matrix};
use crate::matcore::random::{random_pure_vector, Rng};
use crate::scalar::Scalar;

/// Relative width at which the bisection on `t` stops.
const BISECTION_REL: f64 = 1e-12;
const T_MAX_FALLBACK: f64 = 1e6;

/// Threshold below which an optimal `Tr(Qσ)` counts as zero.
fn zero_trace<T: Scalar>() -> f64 {
    T::EPSILON * 1e4
}

/// Projector onto the span of eigenvectors `range` of `eig`.
fn projector<T: Scalar>(eig: &HermEig<T>, range: std::ops::Range<usize>) -> Matrix<T> {
    let n = eig.values.len();
    let mut out = Matrix::zeros(n, n);
    for j in range {
        let v = eig.vector(j);
        out = &out + &Matrix::outer(&v, &v);
    }
    out
}

fn tr_re<T: Scalar>(a: &Matrix<T>, b: &Matrix<T>) -> T {
    a.trace_product(b).re
}

/// Number of eigenvalues above `tol` and their eigendecomposition.
fn positive_part<T: Scalar>(m: &Matrix<T>, tol: T) -> (usize, HermEig<T>) {
    let eig = herm_eig(&m.hermitian_part()).expect("Hermitian by construction");
    let count = eig.values.iter().filter(|&&x| x > tol).count();
    (count, eig)
}

/// `D_H^ε(ρ‖σ) = −log₂ min{Tr(Qσ) : 0 ≤ Q ≤ 1, Tr(Qρ) ≥ 1 − ε}` in bits.
///
/// For `ε > 0` the optimal test is `Q = P₊(ρ − tσ) + α P₀(ρ − tσ)`; `t` is found by bisection
/// on the nonincreasing map `t ↦ Tr(P₊(ρ − tσ) ρ)` and `α` fills `Tr(Qρ) = 1 − ε`.
pub fn hypothesis_test_divergence<T: Scalar>(rho: &Matrix<T>, sigma: &Matrix<T>, eps: f64) -> Result<ExtendedReal> {
    check_density(rho)?;
    check_density(sigma)?;
    if rho.rows() != sigma.rows() {
        return Err(Error::DimensionMismatch(format!("{}x{} vs {}x{} states", rho.rows(), rho.rows(), sigma.rows(), sigma.rows())));
    }
    if !(0.0..1.0).contains(&eps) {
        return Err(Error::InvalidArgument(format!("eps = {eps} outside [0, 1)")));
    }
    let n = rho.rows();
    let rho = rho.hermitian_part();
    let sigma = sigma.hermitian_part();
    let eig_tol = T::lit(T::tolerances().eig);
    let zero = zero_trace::<T>();
    let finish = |q_sigma: T| {
        let x = q_sigma.to_f64_lossy();
        if x <= zero {
            ExtendedReal::Infinite
        } else {
            ExtendedReal::Finite((-x.log2()).max(0.0))
        }
    };

    let rho_eig = herm_eig(&rho)?;
    let sigma_eig = herm_eig(&sigma)?;
    if eps == 0.0 {
        let supp = rho_eig.values.iter().position(|&x| x > eig_tol).unwrap_or(n);
        return Ok(finish(tr_re(&projector(&rho_eig, supp..n), &sigma)));
    }
    let target = T::lit(1.0 - eps);

    // a test supported on ker σ costs nothing
    let ker = sigma_eig.values.iter().filter(|&&x| x <= eig_tol).count();
    if ker > 0 && tr_re(&projector(&sigma_eig, 0..ker), &rho) >= target {
        return Ok(ExtendedReal::Infinite);
    }

    let accepted = |t: T| {
        let (count, eig) = positive_part(&(&rho - &sigma.scale_real(t)), eig_tol);
        let p = projector(&eig, n - count..n);
        (tr_re(&p, &rho), count, eig)
    };
    let mut lo = T::zero();
    let min_pos = sigma_eig.values.iter().copied().filter(|&x| x > eig_tol).fold(T::one(), |a, b| a.min(b));
    let mut hi = rho_eig.max() / min_pos;
    let fallback = T::lit(T_MAX_FALLBACK);
    while accepted(hi).0 > target && hi < fallback {
        lo = hi;
        hi = (hi + hi).min(fallback);
    }
    let rel = T::lit(BISECTION_REL);
    while hi - lo > rel * hi {
        let mid = (lo + hi) / T::lit(2.0);
        if accepted(mid).0 > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let n_lo = accepted(lo).1;
    let (mass_hi, n_hi, eig) = accepted(hi);
    let p_plus = projector(&eig, n - n_hi..n);
    let boundary = projector(&eig, n - n_lo.max(n_hi)..n - n_hi);
    let b_mass = tr_re(&boundary, &rho);
    let alpha = if b_mass > T::zero() {
        ((target - mass_hi) / b_mass).max(T::zero()).min(T::one())
    } else {
        T::zero()
    };
    let q = &p_plus + &boundary.scale(re(alpha));
    Ok(finish(tr_re(&q, &sigma)))
}

/// Maximally entangled state on `d ⊗ d`.
pub(crate) fn max_entangled<T: Scalar>(d: usize) -> Matrix<T> {
    let w = T::one() / T::from_usize(d).expect("dimension");
    Matrix::from_fn(d * d, d * d, |a, b| if a % (d + 1) == 0 && b % (d + 1) == 0 { re(w) } else { re(T::zero()) })
}

/// Lower bound on `sup_ρ D_H^ε((E₁ ⊗ I)ρ ‖ (E₂ ⊗ I)ρ)` over inputs on `d ⊗ d`.
///
/// Candidates: the maximally entangled state, then `restarts` Haar pure states. The result is
/// a running maximum, so it never decreases as `restarts` grows for a fixed seed.
pub fn dh_channel_divergence_lower<T: Scalar>(
    e1: &Channel<T>,
    e2: &Channel<T>,
    eps: f64,
    restarts: usize,
    rng: &mut Rng,
) -> Result<ExtendedReal> {
    let d = e1.dim();
    if e2.dim() != d {
        return Err(Error::DimensionMismatch(format!("channels of dimension {d} and {}", e2.dim())));
    }
    let eval = |rho: &Matrix<T>| -> Result<ExtendedReal> {
        let a = e1.apply_extended(rho, d)?.hermitian_part();
        let b = e2.apply_extended(rho, d)?.hermitian_part();
        hypothesis_test_divergence(&a, &b, eps)
    };
    let mut best = eval(&max_entangled(d))?;
    let mut stream = rng.split();
    for _ in 0..restarts {
        if best.is_infinite() {
            break;
        }
        let v = random_pure_vector::<T>(&mut stream, d * d);
        best = best.max(eval(&Matrix::outer(&v, &v))?);
    }
    Ok(best)
}
