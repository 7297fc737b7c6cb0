//! Generalized robustness of a channel against the classical (detection-incapable) channels.
//!
//! With `O` the off-diagonal part of `J(E)`, the optimal noise is `Y = r·J(F) = diag(y) − O`,
//! so the program reduces to the `d²` diagonal entries:
//!
//! ```text
//! minimize Σ y  subject to  diag(y) − O ⪰ 0,  Σ_i y_{ik} equal for every input k.
//! ```
//!
//! It is solved by a log-barrier method with Newton steps restricted to the null space of the
//! equality constraints. The dual point `Z = Y⁻¹/t` is projected onto the dual feasible set to
//! give a certified lower bound, so the reported gap is a true optimality gap.

use nalgebra::{Cholesky, DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::channels::{Channel, StochasticMatrix};
use crate::error::{Error, Result};
use crate::matcore::linalg::herm_eig;
use crate::matcore::matrix::Matrix;
use crate::scalar::Scalar;

/// Off-diagonal magnitude below which the channel is treated as classical.
const CLASSICAL_CUTOFF: f64 = 1e-12;
/// Target duality gap of the barrier method.
const GAP_TARGET: f64 = 1e-9;
/// Allowed violation of PSD, diagonality and TP in the final certificate.
pub const FEASIBILITY_TOL: f64 = 1e-8;
const MAX_OUTER: usize = 40;
/// Eigenvalues of `Y` below this (relative) span the space carrying the polished dual point.
const NULL_SPACE: f64 = 1e-5;
/// Reduced-gradient size, relative to `t`, at which a point counts as centered.
const CENTERING: f64 = 1e-14;
const MAX_NEWTON: usize = 200;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct RobustnessCertificate<T: Scalar> {
    /// `R(E)`.
    pub value: f64,
    /// Optimal noise `F*`; absent when `E` is already classical.
    pub noise_channel: Option<Channel<T>>,
    /// Transition matrix of `(E + R·F*)/(1 + R)`.
    pub classical_target: StochasticMatrix<T>,
    /// Primal value minus a certified dual value.
    pub primal_dual_gap: f64,
    /// Largest violation among PSD of `Y`, diagonality of `J + Y` and the TP sums.
    pub feasibility: f64,
}

struct Problem {
    d: usize,
    n: usize,
    /// `O`, the off-diagonal part of `J(E)`.
    off: DMatrix<Complex64>,
    /// Columns span the directions that keep every input column sum equal.
    basis: DMatrix<f64>,
}

impl Problem {
    fn new(jam: &Matrix<f64>, d: usize) -> Self {
        let n = d * d;
        let off = jam.off_diagonal_part().to_nalgebra();
        // e_{0k} − e_{ik} for i ≥ 1, then Σ_k e_{0k}
        let mut basis = DMatrix::zeros(n, n - d + 1);
        let mut col = 0;
        for k in 0..d {
            for i in 1..d {
                basis[(k, col)] = 1.0;
                basis[(i * d + k, col)] = -1.0;
                col += 1;
            }
        }
        for k in 0..d {
            basis[(k, col)] = 1.0;
        }
        Self { d, n, off, basis }
    }

    fn y_matrix(&self, y: &DVector<f64>) -> DMatrix<Complex64> {
        let mut m = -self.off.clone();
        for a in 0..self.n {
            m[(a, a)] += Complex64::new(y[a], 0.0);
        }
        m
    }

    /// Cholesky factor of `diag(y) − O`, or `None` outside the PSD cone interior.
    fn factor(&self, y: &DVector<f64>) -> Option<Factor> {
        Factor::new(&self.y_matrix(y))
    }

    fn barrier(&self, t: f64, y: &DVector<f64>, f: &Factor) -> f64 {
        t * y.sum() - f.logdet()
    }
}

/// Lower-triangular `L` with `L L† = Y`.
struct Factor {
    l: DMatrix<Complex64>,
}

impl Factor {
    /// Fails unless every pivot is strictly positive. (The complex `Cholesky` in nalgebra takes
    /// complex square roots of nonpositive pivots instead of failing.)
    fn new(m: &DMatrix<Complex64>) -> Option<Self> {
        let n = m.nrows();
        let mut l = DMatrix::<Complex64>::zeros(n, n);
        for j in 0..n {
            let mut s = m[(j, j)].re;
            for k in 0..j {
                s -= l[(j, k)].norm_sqr();
            }
            if !(s > 0.0 && s.is_finite()) {
                return None;
            }
            let ljj = s.sqrt();
            l[(j, j)] = Complex64::new(ljj, 0.0);
            for i in j + 1..n {
                let mut v = m[(i, j)];
                for k in 0..j {
                    v -= l[(i, k)] * l[(j, k)].conj();
                }
                l[(i, j)] = v / ljj;
            }
        }
        Some(Self { l })
    }

    fn logdet(&self) -> f64 {
        self.l.diagonal().iter().map(|z| 2.0 * z.re.ln()).sum()
    }

    fn inverse(&self) -> DMatrix<Complex64> {
        let n = self.l.nrows();
        // forward substitution for L⁻¹, then Y⁻¹ = L⁻† L⁻¹
        let mut inv_l = DMatrix::<Complex64>::zeros(n, n);
        for c in 0..n {
            for i in c..n {
                let mut v = if i == c { Complex64::new(1.0, 0.0) } else { Complex64::new(0.0, 0.0) };
                for k in c..i {
                    v -= self.l[(i, k)] * inv_l[(k, c)];
                }
                inv_l[(i, c)] = v / self.l[(i, i)];
            }
        }
        inv_l.adjoint() * inv_l
    }
}

struct Solution {
    y: DVector<f64>,
    gap: f64,
}

fn solve(p: &Problem) -> Result<Solution> {
    let n = p.n;
    let lambda_max = herm_eig(&Matrix::from_nalgebra(&p.off))?.max();
    let mut y = DVector::from_element(n, lambda_max + 1.0);
    let mut t = n as f64 / y.sum();
    // every centered point yields a valid dual bound; keep the best
    let mut dual = f64::NEG_INFINITY;
    for _ in 0..MAX_OUTER {
        newton(p, t, &mut y)?;
        let f = p.factor(&y).ok_or_else(|| Error::Solver("iterate left the PSD cone".into()))?;
        dual = dual.max(dual_bound(p, &f.inverse(), t));
        if n as f64 / t < GAP_TARGET {
            dual = dual.max(polished_dual(p, &y, t).unwrap_or(f64::NEG_INFINITY));
            let gap = y.sum() - dual;
            return Ok(Solution { y, gap });
        }
        t *= 10.0;
    }
    Err(Error::Solver(format!("barrier method did not reach gap {GAP_TARGET:e} in {MAX_OUTER} rounds")))
}

/// Centers `y` for barrier parameter `t`: damped Newton far from the center, full steps close
/// to it, until the reduced gradient is at rounding level relative to `t`.
fn newton(p: &Problem, t: f64, y: &mut DVector<f64>) -> Result<()> {
    let n = p.n;
    let mut best = f64::INFINITY;
    let mut stalled = 0;
    for _ in 0..MAX_NEWTON {
        let f = p.factor(y).ok_or_else(|| Error::Solver("iterate left the PSD cone".into()))?;
        let inv = f.inverse();
        let grad = DVector::from_fn(n, |a, _| t - inv[(a, a)].re);
        let g = p.basis.transpose() * &grad;
        let size = g.amax();
        if size <= CENTERING * t {
            return Ok(());
        }
        // at the rounding floor the reduced gradient stops shrinking
        if size < best {
            best = size;
            stalled = 0;
        } else {
            stalled += 1;
            if stalled >= 3 {
                return Ok(());
            }
        }
        let hess = DMatrix::from_fn(n, n, |a, b| inv[(a, b)].norm_sqr());
        let h = p.basis.transpose() * &hess * &p.basis;
        let dz = newton_direction(h, &g)?;
        let decrement = -g.dot(&dz);
        if !(decrement > 1e-24) {
            return Ok(());
        }
        let dy = &p.basis * dz;
        if decrement < 0.1 {
            let trial = &*y + &dy;
            if p.factor(&trial).is_some() {
                *y = trial;
                continue;
            }
        }
        let f0 = p.barrier(t, y, &f);
        let mut step = 1.0;
        loop {
            let trial = &*y + &dy * step;
            if let Some(c) = p.factor(&trial) {
                if p.barrier(t, &trial, &c) <= f0 - 0.25 * step * decrement {
                    *y = trial;
                    break;
                }
            }
            step *= 0.5;
            if step < 1e-12 {
                // the barrier value no longer resolves the decrease
                return Ok(());
            }
        }
    }
    Err(Error::Solver(format!("Newton iteration did not converge in {MAX_NEWTON} steps")))
}

/// Solves `H Δ = −g` after symmetric Jacobi scaling; `H` is badly scaled near the boundary.
fn newton_direction(h: DMatrix<f64>, g: &DVector<f64>) -> Result<DVector<f64>> {
    let m = g.len();
    let s = DVector::from_fn(m, |i, _| 1.0 / h[(i, i)].sqrt());
    let hs = DMatrix::from_fn(m, m, |i, j| h[(i, j)] * s[i] * s[j]);
    let gs = g.component_mul(&s);
    let x = match Cholesky::new(hs.clone()) {
        Some(c) => c.solve(&(-&gs)),
        None => hs.lu().solve(&(-&gs)).ok_or_else(|| Error::Solver("singular Newton system".into()))?,
    };
    Ok(x.component_mul(&s))
}

/// Dual objective of a PSD `Z` after repairing it into the dual feasible set
/// `{Z ⪰ 0 : Z_{ik,ik} = c_k, Σ_k c_k = d}`, on which the dual objective is `Tr(Z O)`.
///
/// The repair is `θZ + diag(c − θ diag Z)` with `c_k ∝ max_i Z_{ik,ik}`, which makes `θ` as
/// large as possible.
fn repaired_dual(p: &Problem, z: &DMatrix<Complex64>) -> f64 {
    let d = p.d;
    let peak: Vec<f64> = (0..d).map(|k| (0..d).map(|i| z[(i * d + k, i * d + k)].re).fold(0.0, f64::max)).collect();
    let total: f64 = peak.iter().sum();
    if !(total > 0.0) {
        return f64::NEG_INFINITY;
    }
    let mut tr_zo = 0.0;
    for a in 0..p.n {
        for b in 0..p.n {
            tr_zo += (z[(a, b)] * p.off[(b, a)]).re;
        }
    }
    d as f64 / total * tr_zo
}

/// Central-path dual point `Z = Y⁻¹/t`.
fn dual_bound(p: &Problem, inv: &DMatrix<Complex64>, t: f64) -> f64 {
    repaired_dual(p, &(inv / Complex64::new(t, 0.0)))
}

/// Dual point `Z = V W V†` on the near-null space `V` of `Y`, with Hermitian `W ⪰ 0` fitted so
/// that `diag Z` is constant within each input column. Close to the optimum the small
/// eigenvalues of `Y` lose relative precision, while `V` stays accurate.
fn polished_dual(p: &Problem, y: &DVector<f64>, t: f64) -> Option<f64> {
    let (d, n) = (p.d, p.n);
    let eig = herm_eig(&Matrix::from_nalgebra(&p.y_matrix(y))).ok()?;
    let cut = NULL_SPACE * eig.max().max(1.0);
    let m = eig.values.iter().take_while(|&&x| x < cut).count();
    if m == 0 {
        return None;
    }
    // unknowns: W as m² reals (diagonal, then Re/Im of p < q), then c_0..c_{d-1}
    let pairs: Vec<(usize, usize)> = (0..m).flat_map(|a| (a + 1..m).map(move |b| (a, b))).collect();
    let nw = m + 2 * pairs.len();
    let nx = nw + d;
    let v = |a: usize, j: usize| eig.vectors[(a, j)];
    let mut mat = DMatrix::<f64>::zeros(n + 1, nx);
    let mut rhs = DVector::<f64>::zeros(n + 1);
    for a in 0..n {
        for j in 0..m {
            mat[(a, j)] = v(a, j).norm_sqr();
        }
        for (col, &(j, l)) in pairs.iter().enumerate() {
            let g = v(a, j) * v(a, l).conj();
            mat[(a, m + 2 * col)] = 2.0 * g.re;
            mat[(a, m + 2 * col + 1)] = -2.0 * g.im;
        }
        mat[(a, nw + a % d)] = -1.0;
    }
    for k in 0..d {
        mat[(n, nw + k)] = 1.0;
    }
    rhs[n] = d as f64;
    // start from the central-path weights and stay close to them
    let mut x = DVector::<f64>::zeros(nx);
    for j in 0..m {
        x[j] = 1.0 / (t * eig.values[j].max(f64::MIN_POSITIVE));
    }
    for k in 0..d {
        x[nw + k] = 1.0;
    }
    let normal = mat.transpose() * &mat;
    let mu = 1e-12 * normal.amax().max(1.0);
    let reg = &normal + DMatrix::<f64>::identity(nx, nx) * mu;
    let chol = Cholesky::new(reg)?;
    for _ in 0..4 {
        let r = &rhs - &mat * &x;
        x += chol.solve(&(mat.transpose() * r));
    }
    let mut w = DMatrix::<Complex64>::zeros(m, m);
    for j in 0..m {
        w[(j, j)] = Complex64::new(x[j], 0.0);
    }
    for (col, &(j, l)) in pairs.iter().enumerate() {
        let z = Complex64::new(x[m + 2 * col], x[m + 2 * col + 1]);
        w[(j, l)] = z;
        w[(l, j)] = z.conj();
    }
    // clip to the PSD cone; the repair absorbs the change on the diagonal
    let w_eig = herm_eig(&Matrix::from_nalgebra(&w)).ok()?;
    let w = w_eig.reconstruct_with(|x| x.max(0.0)).to_nalgebra();
    let vm = DMatrix::from_fn(n, m, v);
    let z = &vm * w * vm.adjoint();
    Some(repaired_dual(p, &z))
}

/// Independent check of the noise candidate `Y`: PSD, `J + Y` diagonal, equal column sums.
fn feasibility(jam: &Matrix<f64>, y: &Matrix<f64>, d: usize) -> Result<f64> {
    let psd = (-herm_eig(y)?.min()).max(0.0);
    let sum = jam + y;
    let off = sum.off_diagonal_part().max_norm();
    let cols: Vec<f64> = (0..d).map(|k| (0..d).map(|i| y[(i * d + k, i * d + k)].re).sum()).collect();
    let mean = cols.iter().sum::<f64>() / d as f64;
    let tp = cols.iter().map(|c| (c - mean).abs()).fold(0.0, f64::max);
    Ok(psd.max(off).max(tp))
}

/// `T_ij = d·(J + Y)_{ij,ij}/(1 + r)`.
fn target<T: Scalar>(jam: &Matrix<f64>, y: Option<&Matrix<f64>>, r: f64, d: usize) -> StochasticMatrix<T> {
    StochasticMatrix::from_entries_unchecked(d, |i, j| {
        let a = i * d + j;
        let extra = y.map_or(0.0, |y| y[(a, a)].re);
        T::lit(d as f64 * (jam[(a, a)].re + extra) / (1.0 + r))
    })
}

/// `R(E) = min{r ≥ 0 : (E + r F)/(1 + r) is classical for some channel F}`, with certificate.
///
/// Solved in double precision regardless of `T`. Intended for `d ≤ 4`.
pub fn robustness<T: Scalar>(ch: &Channel<T>) -> Result<RobustnessCertificate<T>> {
    let d = ch.dim();
    let jam = ch.jamiolkowski().cast::<f64>().hermitian_part();
    if jam.off_diagonal_part().max_norm() < CLASSICAL_CUTOFF {
        return Ok(RobustnessCertificate {
            value: 0.0,
            noise_channel: None,
            classical_target: target(&jam, None, 0.0, d),
            primal_dual_gap: 0.0,
            feasibility: jam.off_diagonal_part().max_norm(),
        });
    }
    let p = Problem::new(&jam, d);
    let sol = solve(&p)?;
    let y = Matrix::from_nalgebra(&p.y_matrix(&sol.y)).hermitian_part();
    let r = sol.y.sum();
    let feas = feasibility(&jam, &y, d)?;
    if feas > FEASIBILITY_TOL {
        return Err(Error::Solver(format!("certificate infeasible by {feas:e}")));
    }
    let noise = Channel::from_jamiolkowski_tol(y.scale_real(1.0 / r).cast::<T>(), T::tolerances().psd.max(FEASIBILITY_TOL))?;
    Ok(RobustnessCertificate {
        value: r,
        noise_channel: Some(noise),
        classical_target: target(&jam, Some(&y), r, d),
        primal_dual_gap: sol.gap,
        feasibility: feas,
    })
}

impl<T: Scalar> RobustnessCertificate<T> {
    /// Max deviation of `(J(E) + R·J(F*))/(1 + R)` from the diagonal matrix of `classical_target`.
    pub fn mixture_defect(&self, ch: &Channel<T>) -> f64 {
        let d = ch.dim();
        let jam = ch.jamiolkowski().cast::<f64>();
        let mix = match &self.noise_channel {
            Some(f) => (&jam + &f.jamiolkowski().cast::<f64>().scale_real(self.value)).scale_real(1.0 / (1.0 + self.value)),
            None => jam,
        };
        let expected = Matrix::from_fn(d * d, d * d, |a, b| {
            let v = if a == b { self.classical_target.get(a / d, a % d).to_f64_lossy() / d as f64 } else { 0.0 };
            Complex64::new(v, 0.0)
        });
        mix.max_abs_diff(&expected)
    }
}
