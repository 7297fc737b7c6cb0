//! Hermitian eigendecomposition and the factorizations built on it.

use nalgebra::{ComplexField, SymmetricEigen};
use num_complex::Complex;

use super::matrix::{cabs, re, Matrix, Vector};
use crate::error::{Error, Result};
use crate::scalar::{Scalar, Tolerances};

/// Eigenpairs of a Hermitian matrix; `values` ascending, `vectors` holds them column-wise.
#[derive(Clone, Debug)]
pub struct HermEig<T: Scalar> {
    pub values: Vec<T>,
    pub vectors: Matrix<T>,
}

impl<T: Scalar> HermEig<T> {
    pub fn min(&self) -> T {
        self.values[0]
    }

    pub fn max(&self) -> T {
        self.values[self.values.len() - 1]
    }

    pub fn vector(&self, j: usize) -> Vector<T> {
        self.vectors.column(j)
    }

    /// `V f(Λ) V†`.
    pub fn reconstruct_with(&self, f: impl Fn(T) -> T) -> Matrix<T> {
        let n = self.values.len();
        let fv: Vec<T> = self.values.iter().map(|&x| f(x)).collect();
        let mut out = Matrix::zeros(n, n);
        for (j, &w) in fv.iter().enumerate() {
            if w == T::zero() {
                continue;
            }
            for a in 0..n {
                let va = self.vectors[(a, j)] * w;
                for b in 0..n {
                    out[(a, b)] += va * self.vectors[(b, j)].conj();
                }
            }
        }
        out
    }

    pub fn reconstruct(&self) -> Matrix<T> {
        self.reconstruct_with(|x| x)
    }
}

/// Eigendecomposition of a Hermitian matrix (Hermitian within the default `herm` tolerance).
pub fn herm_eig<T: Scalar>(m: &Matrix<T>) -> Result<HermEig<T>> {
    herm_eig_tol(m, T::tolerances().herm)
}

pub fn herm_eig_tol<T: Scalar>(m: &Matrix<T>, herm_tol: f64) -> Result<HermEig<T>> {
    m.side()?;
    let scale = T::one().max(m.max_norm());
    let dev = m.hermiticity_defect();
    if dev > T::lit(herm_tol) * scale {
        return Err(Error::NotHermitian { deviation: dev.to_f64_lossy() });
    }
    let eig = SymmetricEigen::new(m.hermitian_part().to_nalgebra());
    let n = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].partial_cmp(&eig.eigenvalues[b]).expect("finite eigenvalues"));
    let values = order.iter().map(|&j| eig.eigenvalues[j]).collect();
    let vectors = Matrix::from_fn(n, n, |i, j| eig.eigenvectors[(i, order[j])]);
    Ok(HermEig { values, vectors })
}

pub fn min_eigenvalue<T: Scalar>(m: &Matrix<T>) -> Result<T> {
    Ok(herm_eig(m)?.min())
}

/// True iff the smallest eigenvalue is at least `-tol`.
pub fn is_psd<T: Scalar>(m: &Matrix<T>, tol: f64) -> Result<bool> {
    Ok(min_eigenvalue(m)? >= -T::lit(tol))
}

/// Eigendecomposition with eigenvalues in `[-tol, 0)` clipped to zero; anything lower is an error.
pub fn psd_eig<T: Scalar>(m: &Matrix<T>, tol: f64) -> Result<HermEig<T>> {
    let mut eig = herm_eig(m)?;
    if eig.min() < -T::lit(tol) {
        return Err(Error::NotPsd { min_eig: eig.min().to_f64_lossy() });
    }
    for v in &mut eig.values {
        *v = v.max(T::zero());
    }
    Ok(eig)
}

/// Vectors `v_i` with `⟨v_j|v_i⟩ = C_ij`, each of length `n` (no rank truncation).
///
/// Eigenvalues below `kraus_prune · max(1, λ_max)` are treated as zero.
pub fn gram_vectors<T: Scalar>(c: &Matrix<T>) -> Result<Vec<Vector<T>>> {
    let eig = psd_eig(c, T::tolerances().psd)?;
    let n = eig.values.len();
    // eigenvalues at rounding level would turn into spurious components of size √ε
    let floor = T::lit(T::tolerances().kraus_prune) * eig.max().max(T::one());
    let roots: Vec<T> = eig.values.iter().map(|&x| if x < floor { T::zero() } else { x.sqrt() }).collect();
    Ok((0..n).map(|i| (0..n).map(|m| eig.vectors[(i, m)] * roots[m]).collect()).collect())
}

/// Matrix of inner products `G_ij = ⟨v_j|v_i⟩`.
pub fn gram_matrix<T: Scalar>(vs: &[Vector<T>]) -> Matrix<T> {
    Matrix::from_fn(vs.len(), vs.len(), |i, j| inner(&vs[j], &vs[i]))
}

/// `⟨u|v⟩`, antilinear in the first argument.
pub fn inner<T: Scalar>(u: &[Complex<T>], v: &[Complex<T>]) -> Complex<T> {
    u.iter().zip(v).fold(re(T::zero()), |acc, (&a, &b)| acc + a.conj() * b)
}

pub fn norm<T: Scalar>(v: &[Complex<T>]) -> T {
    v.iter().fold(T::zero(), |s, z| s + z.norm_sqr()).sqrt()
}

fn axpy<T: Scalar>(y: &mut [Complex<T>], a: Complex<T>, x: &[Complex<T>]) {
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi -= a * xi;
    }
}

fn normalized<T: Scalar>(v: &[Complex<T>], n: T) -> Vector<T> {
    v.iter().map(|&z| z / Complex::from_real(n)).collect()
}

/// Orthonormalizes the standard basis vectors against `basis`, in index order, until the basis spans `dim`.
fn complete_basis<T: Scalar>(basis: &mut Vec<Vector<T>>, dim: usize) {
    let threshold = T::lit(1e-6);
    for idx in 0..dim {
        if basis.len() == dim {
            break;
        }
        let mut w: Vector<T> = (0..dim).map(|i| re(if i == idx { T::one() } else { T::zero() })).collect();
        for _ in 0..2 {
            for b in basis.iter() {
                let p = inner(b, &w);
                axpy(&mut w, p, b);
            }
        }
        let n = norm(&w);
        if n > threshold {
            basis.push(normalized(&w, n));
        }
    }
    debug_assert_eq!(basis.len(), dim);
}

/// Unitary `W` with `W·source_k = target_k` for every pair.
///
/// Both collections are orthogonalized with the same pivot order (largest source
/// residual first, threshold `tol.pivot`), then each orthonormal set is completed with
/// standard basis vectors in index order. The two collections must share a Gram matrix.
pub fn complete_isometry<T: Scalar>(pairs: &[(Vector<T>, Vector<T>)], dim: usize) -> Result<Matrix<T>> {
    complete_isometry_tol(pairs, dim, &T::tolerances())
}

pub fn complete_isometry_tol<T: Scalar>(
    pairs: &[(Vector<T>, Vector<T>)],
    dim: usize,
    tol: &Tolerances,
) -> Result<Matrix<T>> {
    if dim == 0 || pairs.iter().any(|(s, t)| s.len() != dim || t.len() != dim) {
        return Err(Error::DimensionMismatch(format!("isometry vectors must have length {dim}")));
    }
    let sources: Vec<Vector<T>> = pairs.iter().map(|(s, _)| s.clone()).collect();
    let targets: Vec<Vector<T>> = pairs.iter().map(|(_, t)| t.clone()).collect();
    let gram_dev = gram_matrix(&sources).max_abs_diff(&gram_matrix(&targets));
    if gram_dev > T::lit(tol.gram) {
        return Err(Error::GramMismatch { deviation: gram_dev.to_f64_lossy() });
    }

    let mut rs = sources.clone();
    let mut rt = targets.clone();
    let mut used = vec![false; pairs.len()];
    let mut es: Vec<Vector<T>> = Vec::new();
    let mut fs: Vec<Vector<T>> = Vec::new();
    let pivot = T::lit(tol.pivot);
    loop {
        let best = (0..pairs.len()).filter(|&k| !used[k]).map(|k| (k, norm(&rs[k]))).fold(
            None,
            |acc: Option<(usize, T)>, (k, n)| match acc {
                Some((_, bn)) if bn >= n => acc,
                _ => Some((k, n)),
            },
        );
        let Some((k, ns)) = best else { break };
        if ns < pivot || es.len() == dim {
            break;
        }
        used[k] = true;
        let nt = norm(&rt[k]);
        if nt < pivot * T::lit(0.5) {
            return Err(Error::GramMismatch { deviation: (nt - ns).abs().to_f64_lossy() });
        }
        let e = normalized(&rs[k], ns);
        let f = normalized(&rt[k], nt);
        for j in 0..pairs.len() {
            if used[j] {
                continue;
            }
            let ps = inner(&e, &rs[j]);
            axpy(&mut rs[j], ps, &e);
            let pt = inner(&f, &rt[j]);
            axpy(&mut rt[j], pt, &f);
        }
        es.push(e);
        fs.push(f);
    }
    complete_basis(&mut es, dim);
    complete_basis(&mut fs, dim);

    let mut w = Matrix::zeros(dim, dim);
    for (e, f) in es.iter().zip(&fs) {
        for a in 0..dim {
            for b in 0..dim {
                w[(a, b)] += f[a] * e[b].conj();
            }
        }
    }

    let scale = T::one().max(sources.iter().map(|s| norm(s)).fold(T::zero(), |m, x| m.max(x)));
    for (s, t) in sources.iter().zip(&targets) {
        let ws = w.mul_vec(s);
        let dev = ws.iter().zip(t).fold(T::zero(), |m, (&a, &b)| m.max(cabs(a - b)));
        if dev > T::lit(tol.gram).max(T::lit(tol.unit)) * scale {
            return Err(Error::GramMismatch { deviation: dev.to_f64_lossy() });
        }
    }
    Ok(w)
}

/// Singular values (descending) and the leading singular pair of a complex matrix.
pub struct LeadingSvd<T: Scalar> {
    pub singular_values: Vec<T>,
    pub u: Vector<T>,
    pub v: Vector<T>,
}

/// Singular values come from a values-only SVD. The leading pair is the top
/// eigenvector `u` of `M M†` with `v = M†u / ‖M†u‖`; nalgebra's SVD with
/// singular vectors is unreliable on rank-deficient input.
pub fn leading_svd<T: Scalar>(m: &Matrix<T>) -> LeadingSvd<T> {
    let mut singular_values: Vec<T> = m.to_nalgebra().svd(false, false).singular_values.iter().copied().collect();
    singular_values.sort_by(|a, b| b.partial_cmp(a).expect("finite"));
    let gram = (m * &m.adjoint()).hermitian_part();
    let eig = herm_eig(&gram).expect("M M† is Hermitian");
    let u = eig.vector(m.rows() - 1);
    let mut v = m.adjoint().mul_vec(&u);
    let n = norm(&v);
    if n > T::zero() {
        v = normalized(&v, n);
    }
    LeadingSvd { singular_values, u, v }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matcore::matrix::c;
    use crate::matcore::random::{haar_unitary, Rng};

    type M = Matrix<f64>;

    fn random_hermitian(rng: &mut Rng, n: usize) -> M {
        let g: M = rng.ginibre(n, n);
        (&g + &g.adjoint()).scale_real(0.5)
    }

    fn random_correlation(rng: &mut Rng, n: usize, rank: usize) -> M {
        let vs: Vec<Vector<f64>> = (0..n)
            .map(|_| {
                let v: Vector<f64> = (0..rank).map(|_| rng.complex_normal()).collect();
                let nv = norm(&v);
                v.into_iter().map(|z| z / nv).collect()
            })
            .collect();
        gram_matrix(&vs)
    }

    #[test]
    fn diagonal_eigenvalues_sorted() {
        let eig = herm_eig(&M::from_real_diag(&[3.0, 1.0, 2.0])).unwrap();
        assert_eq!(eig.values, vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn pauli_x_eigenpairs() {
        let x = M::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]]).unwrap();
        let eig = herm_eig(&x).unwrap();
        assert!((eig.values[0] + 1.0).abs() < 1e-14 && (eig.values[1] - 1.0).abs() < 1e-14);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let minus = [h, -h];
        let plus = [h, h];
        let ov0 = (eig.vectors[(0, 0)] * minus[0] + eig.vectors[(1, 0)] * minus[1]).norm();
        let ov1 = (eig.vectors[(0, 1)] * plus[0] + eig.vectors[(1, 1)] * plus[1]).norm();
        assert!((ov0 - 1.0).abs() < 1e-12 && (ov1 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn reconstruction_and_unitarity() {
        let mut rng = Rng::new(17);
        for n in [2, 5, 9, 16] {
            let h = random_hermitian(&mut rng, n);
            let eig = herm_eig(&h).unwrap();
            assert!(eig.reconstruct().max_abs_diff(&h) < 1e-10 * h.max_norm().max(1.0));
            assert!(eig.vectors.unitarity_defect() < 1e-10);
        }
    }

    #[test]
    fn rejects_non_hermitian() {
        let m = M::from_real_rows(&[&[0.0, 1.0], &[0.0, 0.0]]).unwrap();
        assert!(matches!(herm_eig(&m), Err(Error::NotHermitian { .. })));
        assert!(is_psd(&m, 1e-9).is_err());
    }

    #[test]
    fn psd_checks() {
        assert!(is_psd(&M::identity(3), 1e-9).unwrap());
        assert!(!is_psd(&M::from_real_diag(&[1.0, -0.5]), 1e-9).unwrap());
        assert!(is_psd(&M::from_real_diag(&[1.0, -1e-12]), 1e-9).unwrap());
        assert!(matches!(psd_eig(&M::from_real_diag(&[1.0, -0.5]), 1e-9), Err(Error::NotPsd { .. })));
    }

    #[test]
    fn gram_of_identity_and_ones() {
        let vs = gram_vectors(&M::identity(3)).unwrap();
        assert!(gram_matrix(&vs).max_abs_diff(&M::identity(3)) < 1e-14);
        for v in &vs {
            assert!((norm(v) - 1.0).abs() < 1e-14);
        }
        let vs = gram_vectors(&M::ones(3, 3)).unwrap();
        for v in &vs[1..] {
            let d: f64 = v.iter().zip(&vs[0]).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
            assert!(d < 1e-12);
            assert!((norm(v) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn gram_rebuild_random() {
        let mut rng = Rng::new(8);
        for (n, rank) in [(4, 4), (4, 2), (9, 3), (16, 16)] {
            let cm = random_correlation(&mut rng, n, rank);
            let vs = gram_vectors(&cm).unwrap();
            assert!(gram_matrix(&vs).max_abs_diff(&cm) < 1e-10);
            for (i, v) in vs.iter().enumerate() {
                assert!((norm(v).powi(2) - cm[(i, i)].re).abs() < 1e-10);
            }
        }
    }

    fn basis(n: usize, k: usize) -> Vector<f64> {
        (0..n).map(|i| c(if i == k { 1.0 } else { 0.0 }, 0.0)).collect()
    }

    #[test]
    fn isometry_identity_when_sources_equal_targets() {
        let mut rng = Rng::new(3);
        let vs: Vec<Vector<f64>> = (0..2).map(|_| (0..4).map(|_| rng.complex_normal()).collect()).collect();
        let pairs: Vec<_> = vs.iter().map(|v| (v.clone(), v.clone())).collect();
        let w = complete_isometry(&pairs, 4).unwrap();
        assert!(w.max_abs_diff(&M::identity(4)) < 1e-12);
    }

    #[test]
    fn isometry_single_pair_swaps() {
        let w = complete_isometry(&[(basis(2, 0), basis(2, 1))], 2).unwrap();
        assert!(w.unitarity_defect() < 1e-14);
        let img = w.mul_vec(&basis(2, 0));
        assert!((img[1] - c(1.0, 0.0)).norm() < 1e-14 && img[0].norm() < 1e-14);
    }

    #[test]
    fn isometry_recovers_random_unitary_action() {
        let mut rng = Rng::new(77);
        for (dim, count) in [(4, 2), (4, 4), (9, 5), (9, 12)] {
            let v: M = haar_unitary(&mut rng, dim);
            let sources: Vec<Vector<f64>> =
                (0..count).map(|_| (0..dim).map(|_| rng.complex_normal()).collect()).collect();
            let pairs: Vec<_> = sources.iter().map(|s| (s.clone(), v.mul_vec(s))).collect();
            let w = complete_isometry(&pairs, dim).unwrap();
            assert!(w.unitarity_defect() < 1e-10);
            for (s, t) in &pairs {
                let ws = w.mul_vec(s);
                let dev = ws.iter().zip(t).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
                assert!(dev < 1e-9, "dim {dim} count {count}: {dev}");
            }
        }
    }

    #[test]
    fn isometry_rejects_gram_mismatch() {
        let pairs = vec![(basis(2, 0), basis(2, 0)), (basis(2, 1), basis(2, 0))];
        assert!(matches!(complete_isometry(&pairs, 2), Err(Error::GramMismatch { .. })));
    }

    #[test]
    fn leading_svd_of_rank_one() {
        let u: Vector<f64> = vec![c(1.0, 0.0), c(0.0, 2.0), c(-1.0, 1.0)];
        let v: Vector<f64> = vec![c(0.5, 0.0), c(0.0, -1.0)];
        let m = M::outer(&u, &v);
        let s = leading_svd(&m);
        assert!(s.singular_values[1] / s.singular_values[0] < 1e-12);
        let rebuilt = M::outer(&s.u, &s.v).scale_real(s.singular_values[0]);
        assert!(rebuilt.max_abs_diff(&m) < 1e-12);
    }

    #[test]
    fn leading_svd_of_all_ones() {
        let s = leading_svd(&M::ones(9, 9));
        assert!((s.singular_values[0] - 9.0).abs() < 1e-12);
        assert!(s.u.iter().all(|z| (z.norm() - 1.0 / 3.0).abs() < 1e-12));
    }

    #[test]
    fn singular_values_match_gram_spectrum() {
        let mut rng = Rng::new(17);
        for rank in 1..=4 {
            let m = &rng.ginibre::<f64>(6, rank) * &rng.ginibre::<f64>(rank, 6);
            let s = leading_svd(&m);
            let ev = herm_eig(&(&m.adjoint() * &m).hermitian_part()).unwrap();
            assert!((s.singular_values[0] - ev.max().sqrt()).abs() < 1e-10 * s.singular_values[0]);
            let rebuilt = M::outer(&s.u, &s.v).scale_real(s.singular_values[0]);
            if rank == 1 {
                assert!(rebuilt.max_abs_diff(&m) < 1e-10);
            }
        }
    }

    #[test]
    fn works_in_single_precision() {
        let m = Matrix::<f32>::from_real_rows(&[&[2.0, 1.0], &[1.0, 2.0]]).unwrap();
        let eig = herm_eig(&m).unwrap();
        assert!((eig.values[0] - 1.0).abs() < 1e-5 && (eig.values[1] - 3.0).abs() < 1e-5);
    }
}
