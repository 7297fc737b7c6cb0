//! Brute-force reference solutions used to cross-check the solvers.

use crate::matcore::linalg::herm_eig;
use crate::matcore::matrix::Matrix;

/// Robustness of a qubit channel by search over the two free parameters of the noise diagonal.
///
/// With `O` the off-diagonal part of `J` and `D = diag(α, β, 1−α, 1−β)/2`, the smallest `r` with
/// `r D ⪰ O` is `λ_max(D^{-1/2} O D^{-1/2})`. The map `(α, β) ↦ r` is quasiconvex, so a `0.01`
/// grid is refined four times around the incumbent, down to a spacing of `1e-6`.
pub fn robustness_grid(jam: &Matrix<f64>) -> f64 {
    assert_eq!(jam.rows(), 4, "grid oracle is for qubit channels");
    let off = jam.off_diagonal_part();
    let eval = |a: f64, b: f64| -> f64 {
        let dg = [a / 2.0, b / 2.0, (1.0 - a) / 2.0, (1.0 - b) / 2.0];
        for (i, &x) in dg.iter().enumerate() {
            if x <= 0.0 && (0..4).any(|j| off[(i, j)].norm() > 1e-14) {
                return f64::INFINITY;
            }
        }
        let s: Vec<f64> = dg.iter().map(|&x| if x > 0.0 { 1.0 / x.sqrt() } else { 0.0 }).collect();
        let m = Matrix::from_fn(4, 4, |i, j| off[(i, j)] * s[i] * s[j]);
        herm_eig(&m).expect("Hermitian").max()
    };
    let (mut ca, mut cb, mut best) = (0.5, 0.5, f64::INFINITY);
    let mut h: f64 = 0.01;
    let (mut lo_a, mut hi_a, mut lo_b, mut hi_b): (f64, f64, f64, f64) = (0.0, 1.0, 0.0, 1.0);
    for _ in 0..5 {
        let na = ((hi_a - lo_a) / h).round() as usize;
        let nb = ((hi_b - lo_b) / h).round() as usize;
        for i in 0..=na {
            for j in 0..=nb {
                let (a, b) = (lo_a + i as f64 * h, lo_b + j as f64 * h);
                let v = eval(a, b);
                if v < best {
                    (best, ca, cb) = (v, a, b);
                }
            }
        }
        lo_a = f64::max(0.0, ca - 2.0 * h);
        hi_a = f64::min(1.0, ca + 2.0 * h);
        lo_b = f64::max(0.0, cb - 2.0 * h);
        hi_b = f64::min(1.0, cb + 2.0 * h);
        h /= 10.0;
    }
    best
}

/// `min Σ q_i s_i` subject to `Σ q_i r_i ≥ 1 − ε`, `0 ≤ q ≤ 1`, by enumerating the vertices
/// (at most one fractional coordinate). This is `2^{-D_H^ε}` for commuting states with
/// spectra `r` and `s`.
pub fn dh_diagonal_lp(r: &[f64], s: &[f64], eps: f64) -> f64 {
    let n = r.len();
    assert!(n <= 16 && s.len() == n);
    let mut best = f64::INFINITY;
    for mask in 0u32..(1 << n) {
        let chosen = |i: &usize| mask >> i & 1 == 1;
        let full: f64 = (0..n).filter(chosen).map(|i| r[i]).sum();
        let cost: f64 = (0..n).filter(chosen).map(|i| s[i]).sum();
        if full >= 1.0 - eps - 1e-15 {
            best = best.min(cost);
        }
        for j in (0..n).filter(|j| !chosen(j)) {
            if r[j] > 0.0 {
                let q = (1.0 - eps - full) / r[j];
                if (0.0..=1.0).contains(&q) {
                    best = best.min(cost + q * s[j]);
                }
            }
        }
    }
    best
}
