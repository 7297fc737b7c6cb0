//! Discriminating dephasing superchannels with one use of a gate.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::divergence::max_entangled;
use super::robustness::{RobustnessCertificate, FEASIBILITY_TOL};
use super::ExtendedReal;
use crate::channels::Channel;
use crate::error::{Error, Result};
use crate::matcore::linalg::{herm_eig, HermEig};
use crate::matcore::matrix::Matrix;
use crate::matcore::random::{random_pure_vector, Rng};
use crate::scalar::Scalar;
use crate::superchannels::DephasingSuperchannel;

const MAX_ITER: usize = 200;
const MAX_REFINE: usize = 100;
/// Improvement below which a restart is considered converged.
const STALL: f64 = 1e-13;
/// Tolerance of the bound `M·p_succ ≤ 1 + R`.
pub const BOUND_TOL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterRecord {
    pub restart: usize,
    pub iter: usize,
    pub objective: f64,
}

/// A strategy for guessing which of `M` equiprobable superchannels acted on `gate`:
/// an input on `d ⊗ d` and a POVM on the output.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct DiscriminationInstance<T: Scalar> {
    pub gate: Channel<T>,
    pub superchannels: Vec<DephasingSuperchannel<T>>,
    pub input_state: Matrix<T>,
    pub povm: Vec<Matrix<T>>,
    pub p_succ: f64,
    /// Accepted iterations of every restart, in restart order.
    #[serde(default, skip_serializing)]
    pub logs: Vec<Vec<IterRecord>>,
}

fn outputs<T: Scalar>(phis: &[Channel<T>], rho: &Matrix<T>) -> Result<Vec<Matrix<T>>> {
    let d = rho.rows() / phis[0].dim();
    phis.iter().map(|p| Ok(p.apply_extended(rho, d)?.hermitian_part())).collect()
}

fn success<T: Scalar>(povm: &[Matrix<T>], states: &[Matrix<T>]) -> f64 {
    let s: f64 = povm.iter().zip(states).map(|(e, s)| e.trace_product(s).re.to_f64_lossy()).sum();
    s / states.len() as f64
}

fn projector<T: Scalar>(eig: &HermEig<T>, keep: impl Fn(T) -> bool) -> Matrix<T> {
    let n = eig.values.len();
    let mut out = Matrix::zeros(n, n);
    for j in (0..n).filter(|&j| keep(eig.values[j])) {
        let v = eig.vector(j);
        out = &out + &Matrix::outer(&v, &v);
    }
    out
}

/// Optimal two-outcome measurement: projector onto the positive part of `σ₀ − σ₁`.
fn helstrom<T: Scalar>(s0: &Matrix<T>, s1: &Matrix<T>) -> Vec<Matrix<T>> {
    let eig = herm_eig(&(s0 - s1).hermitian_part()).expect("difference of Hermitian matrices");
    let e0 = projector(&eig, |x| x > T::zero());
    let e1 = &Matrix::identity(e0.rows()) - &e0;
    vec![e0, e1]
}

/// `X^{-1/2}` on the support of `X`, and the projector onto its kernel.
fn inv_sqrt<T: Scalar>(x: &Matrix<T>) -> (Matrix<T>, Matrix<T>) {
    let eig = herm_eig(&x.hermitian_part()).expect("Hermitian");
    let cut = T::lit(T::tolerances().eig) * eig.max().max(T::one());
    let w = eig.reconstruct_with(|v| if v > cut { T::one() / v.sqrt() } else { T::zero() });
    (w, projector(&eig, |v| v <= cut))
}

/// `E_i = W A_i W` with `W = (Σ A_j)^{-1/2}`, the kernel of `Σ A_j` assigned to outcome 0.
fn normalize<T: Scalar>(parts: Vec<Matrix<T>>) -> Vec<Matrix<T>> {
    let total = parts.iter().skip(1).fold(parts[0].clone(), |acc, a| &acc + a);
    let (w, ker) = inv_sqrt(&total);
    let mut out: Vec<Matrix<T>> = parts.iter().map(|a| (&(&w * a) * &w).hermitian_part()).collect();
    out[0] = &out[0] + &ker;
    out
}

fn pretty_good<T: Scalar>(states: &[Matrix<T>]) -> Vec<Matrix<T>> {
    normalize(states.to_vec())
}

/// Fixed-point improvement `E_i ← Λ^{-1/2} E_i σ_i E_i Λ^{-1/2}`, `Λ = Σ E_j σ_j E_j`,
/// keeping only steps that raise the success probability.
fn refine<T: Scalar>(mut povm: Vec<Matrix<T>>, states: &[Matrix<T>]) -> Vec<Matrix<T>> {
    let mut p = success(&povm, states);
    for _ in 0..MAX_REFINE {
        let parts = povm.iter().zip(states).map(|(e, s)| &(e * s) * e).collect();
        let next = normalize(parts);
        let q = success(&next, states);
        if q <= p + STALL {
            break;
        }
        povm = next;
        p = q;
    }
    povm
}

/// Best measurement found for fixed outputs, never worse than `current`.
fn measurement_step<T: Scalar>(states: &[Matrix<T>], current: Option<Vec<Matrix<T>>>) -> Vec<Matrix<T>> {
    let candidate = if states.len() == 2 { helstrom(&states[0], &states[1]) } else { refine(pretty_good(states), states) };
    match current {
        Some(cur) if success(&cur, states) > success(&candidate, states) => cur,
        _ => candidate,
    }
}

/// Optimal pure input for a fixed measurement: top eigenvector of `(1/M) Σ (Φ_i ⊗ I)†(E_i)`.
fn input_step<T: Scalar>(phis: &[Channel<T>], povm: &[Matrix<T>]) -> Result<Matrix<T>> {
    let d = phis[0].dim();
    let n = d * d;
    let mut g = Matrix::zeros(n, n);
    for (phi, e) in phis.iter().zip(povm) {
        g = &g + &phi.adjoint_extended(e, d)?;
    }
    let eig = herm_eig(&g.hermitian_part())?;
    let v = eig.vector(n - 1);
    Ok(Matrix::outer(&v, &v))
}

struct Run<T: Scalar> {
    rho: Matrix<T>,
    povm: Vec<Matrix<T>>,
    p: f64,
    log: Vec<IterRecord>,
}

fn seesaw_run<T: Scalar>(phis: &[Channel<T>], rho: Matrix<T>, restart: usize) -> Result<Run<T>> {
    let mut rho = rho;
    let mut states = outputs(phis, &rho)?;
    let mut povm = measurement_step(&states, None);
    let mut p = success(&povm, &states);
    let mut log = vec![IterRecord { restart, iter: 0, objective: p }];
    for iter in 1..=MAX_ITER {
        let next_rho = input_step(phis, &povm)?;
        let next_states = outputs(phis, &next_rho)?;
        let next_povm = measurement_step(&next_states, Some(povm.clone()));
        let q = success(&next_povm, &next_states);
        if q < p {
            break;
        }
        (rho, states, povm) = (next_rho, next_states, next_povm);
        log.push(IterRecord { restart, iter, objective: q });
        let stalled = q - p < STALL;
        p = q;
        if stalled {
            break;
        }
    }
    debug_assert_eq!(states.len(), povm.len());
    Ok(Run { rho, povm, p, log })
}

/// Seesaw lower bound on the optimal average success probability of identifying which of
/// the superchannels acted on `gate`, using a reference system of the same dimension.
///
/// Restart 0 starts from the maximally entangled input, the rest from Haar pure inputs drawn
/// from a stream split off `rng`. Within a restart the objective never decreases.
pub fn discrimination_seesaw<T: Scalar>(
    gate: &Channel<T>,
    scs: &[DephasingSuperchannel<T>],
    restarts: usize,
    rng: &mut Rng,
) -> Result<DiscriminationInstance<T>> {
    let d = gate.dim();
    if scs.len() < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 superchannels, got {}", scs.len())));
    }
    if let Some(sc) = scs.iter().find(|s| s.dim() != d) {
        return Err(Error::DimensionMismatch(format!("superchannel of dimension {} for a gate of dimension {d}", sc.dim())));
    }
    let phis = scs.iter().map(|s| s.apply(gate)).collect::<Result<Vec<_>>>()?;
    let base = rng.split();
    let runs = (0..restarts.max(1))
        .into_par_iter()
        .map(|r| {
            let rho = if r == 0 {
                max_entangled(d)
            } else {
                let v = random_pure_vector::<T>(&mut base.derive(r as u64), d * d);
                Matrix::outer(&v, &v)
            };
            seesaw_run(&phis, rho, r)
        })
        .collect::<Result<Vec<_>>>()?;
    let logs = runs.iter().map(|r| r.log.clone()).collect();
    let best = runs
        .into_iter()
        .reduce(|a, b| if b.p > a.p { b } else { a })
        .expect("at least one restart");
    Ok(DiscriminationInstance {
        gate: gate.clone(),
        superchannels: scs.to_vec(),
        input_state: best.rho,
        povm: best.povm,
        p_succ: best.p,
        logs,
    })
}

impl<T: Scalar> DiscriminationInstance<T> {
    pub fn m(&self) -> usize {
        self.superchannels.len()
    }

    /// Success probability of the stored input and measurement.
    pub fn evaluate(&self) -> Result<f64> {
        let phis = self.superchannels.iter().map(|s| s.apply(&self.gate)).collect::<Result<Vec<_>>>()?;
        Ok(success(&self.povm, &outputs(&phis, &self.input_state)?))
    }

    /// Checks that the POVM is PSD and complete and that `p_succ` matches the strategy.
    pub fn check(&self, tol: f64) -> Result<()> {
        if self.povm.len() != self.m() {
            return Err(Error::InvalidArgument(format!("{} POVM elements for {} hypotheses", self.povm.len(), self.m())));
        }
        let n = self.input_state.rows();
        let mut total = Matrix::zeros(n, n);
        for e in &self.povm {
            let min = herm_eig(e)?.min().to_f64_lossy();
            if min < -tol {
                return Err(Error::NotPsd { min_eig: min });
            }
            total = &total + e;
        }
        let dev = total.max_abs_diff(&Matrix::identity(n)).to_f64_lossy();
        if dev > tol {
            return Err(Error::InvalidArgument(format!("POVM sums to identity only within {dev:e}")));
        }
        let p = self.evaluate()?;
        if (p - self.p_succ).abs() > tol {
            return Err(Error::InvalidArgument(format!("stored p_succ {} but strategy gives {p}", self.p_succ)));
        }
        Ok(())
    }

    /// Iteration logs as line-delimited JSON.
    pub fn log_lines(&self) -> String {
        self.logs
            .iter()
            .flatten()
            .map(|r| serde_json::to_string(r).expect("plain record") + "\n")
            .collect()
    }
}

/// Both sides of `M·p_succ ≤ 1 + R(E)` and the two count bounds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub m: usize,
    pub p_succ: f64,
    pub robustness: f64,
    /// `M·p_succ`.
    pub lhs: f64,
    /// `1 + R`.
    pub rhs: f64,
    pub slack: f64,
    pub tol: f64,
    pub passed: bool,
    /// `(1 + R)/p_succ`: most superchannels `E` can tell apart at this success probability.
    pub discrimination_count_bound: f64,
    /// `2^{C_{D_H^ε}(E‖E_Δ)}` with `ε = 1 − p_succ`, from a lower estimate of the divergence.
    pub image_count_bound: Option<ExtendedReal>,
}

pub fn robustness_bound_check<T: Scalar>(
    inst: &DiscriminationInstance<T>,
    cert: &RobustnessCertificate<T>,
) -> Result<BoundReport> {
    let defect = cert.mixture_defect(&inst.gate);
    if defect > FEASIBILITY_TOL {
        return Err(Error::InvalidArgument(format!("certificate does not belong to the gate (defect {defect:e})")));
    }
    let m = inst.m();
    let lhs = m as f64 * inst.p_succ;
    let rhs = 1.0 + cert.value;
    Ok(BoundReport {
        m,
        p_succ: inst.p_succ,
        robustness: cert.value,
        lhs,
        rhs,
        slack: rhs - lhs,
        tol: BOUND_TOL,
        passed: lhs <= rhs + BOUND_TOL,
        discrimination_count_bound: rhs / inst.p_succ,
        image_count_bound: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::{classical_channel, random_channel, StochasticMatrix};
    use crate::coherence::robustness;
    use crate::superchannels::sign_flip_example;

    type Sc = DephasingSuperchannel<f64>;

    fn hadamard_pair() -> Vec<Sc> {
        vec![Sc::identity(2), Sc::new(sign_flip_example(), 2).unwrap()]
    }

    #[test]
    fn hadamard_distinguishes_perfectly() {
        let inst = discrimination_seesaw(&Channel::hadamard(), &hadamard_pair(), 4, &mut Rng::new(1)).unwrap();
        assert!(inst.p_succ >= 1.0 - 1e-9, "{}", inst.p_succ);
        inst.check(1e-9).unwrap();
        let cert = robustness(&Channel::<f64>::hadamard()).unwrap();
        let report = robustness_bound_check(&inst, &cert).unwrap();
        assert!(report.passed && cert.value >= 1.0 - 1e-8);
    }

    #[test]
    fn classical_gates_give_uniform_guessing() {
        let mut rng = Rng::new(2);
        for m in [2, 3, 4] {
            let t = StochasticMatrix::<f64>::random(&mut rng, 2);
            let scs: Vec<Sc> = (0..m).map(|_| Sc::sample(&mut rng, 2)).collect();
            let gate = classical_channel(&t);
            let inst = discrimination_seesaw(&gate, &scs, 3, &mut rng).unwrap();
            assert!((inst.p_succ - 1.0 / m as f64).abs() < 1e-9, "M={m}: {}", inst.p_succ);
            let cert = robustness(&gate).unwrap();
            let r = robustness_bound_check(&inst, &cert).unwrap();
            assert!(r.passed && r.slack.abs() < 1e-9);
        }
    }

    #[test]
    fn random_instances_respect_bounds() {
        let mut rng = Rng::new(3);
        for _ in 0..10 {
            let m = rng.range(2, 3);
            let rank = rng.range(1, 4);
            let gate = random_channel::<f64>(&mut rng, 2, rank).unwrap();
            let scs: Vec<Sc> = (0..m).map(|_| Sc::sample(&mut rng, 2)).collect();
            let inst = discrimination_seesaw(&gate, &scs, 4, &mut rng).unwrap();
            inst.check(1e-9).unwrap();
            assert!(inst.p_succ >= 1.0 / m as f64 - 1e-9);
            let cert = robustness(&gate).unwrap();
            let r = robustness_bound_check(&inst, &cert).unwrap();
            assert!(r.passed, "{r:?}");
            for log in &inst.logs {
                assert!(log.windows(2).all(|w| w[1].objective >= w[0].objective));
            }
        }
    }

    #[test]
    fn restarts_are_reproducible() {
        let mut rng = Rng::new(4);
        let gate = random_channel::<f64>(&mut rng, 2, 2).unwrap();
        let scs: Vec<Sc> = (0..3).map(|_| Sc::sample(&mut rng, 2)).collect();
        let a = discrimination_seesaw(&gate, &scs, 5, &mut Rng::new(9)).unwrap();
        let b = discrimination_seesaw(&gate, &scs, 5, &mut Rng::new(9)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.log_lines(), b.log_lines());
        assert!(a.log_lines().starts_with("{\"restart\":0,\"iter\":0,"));
    }

    #[test]
    fn rejects_bad_inputs() {
        let gate = Channel::<f64>::hadamard();
        assert!(discrimination_seesaw(&gate, &[Sc::identity(2)], 1, &mut Rng::new(0)).is_err());
        assert!(discrimination_seesaw(&gate, &[Sc::identity(2), Sc::identity(3)], 1, &mut Rng::new(0)).is_err());
        let inst = discrimination_seesaw(&gate, &hadamard_pair(), 1, &mut Rng::new(0)).unwrap();
        let other = robustness(&Channel::<f64>::identity(2)).unwrap();
        assert!(robustness_bound_check(&inst, &other).is_err());
    }
}
