//! The acceptance suite: twelve numbered criteria, each a set of worst-case checks.
//!
//! Every check reduces to `value ≤ limit`, with `value` the worst case over the trials.
//! Limits that correspond to a named tolerance are read from the configured table, so
//! tightening a tolerance makes the matching checks fail.

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channels::{classical_channel, random_channel, random_correlation, Channel, DephasingChannelC, StochasticMatrix};
use crate::coherence::{
    discrimination_seesaw, hypothesis_test_divergence, monotonicity_suite, robustness, CoherenceMeasure,
};
use crate::error::Result;
use crate::fixtures;
use crate::matcore::linalg::herm_eig;
use crate::matcore::matrix::Matrix;
use crate::matcore::random::{random_state, Rng};
use crate::matcore::{partial_transpose, BipartiteShape, Subsystem};
use crate::oracles::{dh_diagonal_lp, robustness_grid};
use crate::scalar::Tolerances;
use crate::superchannels::{apply_via_super_jamiolkowski, DephasingSuperchannel};

type Sc = DephasingSuperchannel<f64>;
type M = Matrix<f64>;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyConfig {
    pub seed: u64,
    /// Overrides every Monte Carlo trial count when set.
    pub trials: Option<usize>,
    /// Seesaw restarts per discrimination instance.
    pub restarts: usize,
    pub tolerances: Tolerances,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self { seed: 0, trials: None, restarts: 32, tolerances: Tolerances::default() }
    }
}

impl VerifyConfig {
    fn count(&self, default: usize) -> usize {
        self.trials.unwrap_or(default).max(1)
    }

    /// Independent stream for criterion `id`.
    fn rng(&self, id: u32) -> Rng {
        Rng::new(self.seed.wrapping_add(u64::from(id)))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub what: String,
    /// Worst case observed.
    pub value: f64,
    pub limit: f64,
    pub passed: bool,
}

impl Check {
    fn new(what: impl Into<String>, value: f64, limit: f64) -> Self {
        Self { what: what.into(), value, limit, passed: value <= limit }
    }

    fn failed(what: impl Into<String>, err: &crate::error::Error) -> Self {
        Self { what: format!("{}: {err}", what.into()), value: f64::INFINITY, limit: 0.0, passed: false }
    }

    pub fn margin(&self) -> f64 {
        self.limit - self.value
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriterionResult {
    pub id: u32,
    pub name: String,
    pub trials: usize,
    pub passed: bool,
    pub checks: Vec<Check>,
}

impl fmt::Display for CriterionResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "criterion {:>2} {:<28} {} ({} trials)",
            self.id,
            self.name,
            if self.passed { "PASS" } else { "FAIL" },
            self.trials
        )?;
        for c in &self.checks {
            write!(f, "\n    {:<4} {}: worst {:.3e}, limit {:.1e}", if c.passed { "ok" } else { "FAIL" }, c.what, c.value, c.limit)?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub passed: bool,
    pub criteria: Vec<CriterionResult>,
}

pub const CRITERIA: [(u32, &str); 12] = [
    (1, "npt qutrit example"),
    (2, "qubit ppt"),
    (3, "hadamard steering"),
    (4, "transition invariance"),
    (5, "realization round trip"),
    (6, "schur channel closure"),
    (7, "cohering power monotone"),
    (8, "classical invariance"),
    (9, "robustness sdp"),
    (10, "bound chain"),
    (11, "hypothesis testing"),
    (12, "dual paths"),
];

/// Runs every criterion, in id order.
pub fn run_all(cfg: &VerifyConfig) -> VerifyReport {
    let criteria: Vec<_> = CRITERIA.iter().map(|&(id, _)| run_criterion(id, cfg)).collect();
    VerifyReport { passed: criteria.iter().all(|c| c.passed), criteria }
}

pub fn run_criterion(id: u32, cfg: &VerifyConfig) -> CriterionResult {
    let name = CRITERIA.iter().find(|c| c.0 == id).map_or("unknown", |c| c.1).to_string();
    let (trials, checks) = match id {
        1 => npt_qutrit(cfg),
        2 => qubit_ppt(cfg),
        3 => hadamard_steering(cfg),
        4 => transition_invariance(cfg),
        5 => realization_round_trip(cfg),
        6 => schur_closure(cfg),
        7 => monotone(cfg),
        8 => classical_invariance(cfg),
        9 => robustness_sdp(cfg),
        10 => bound_chain(cfg),
        11 => hypothesis_testing(cfg),
        12 => dual_paths(cfg),
        _ => (0, vec![Check::new(format!("no criterion {id}"), f64::INFINITY, 0.0)]),
    };
    CriterionResult { id, name, trials, passed: checks.iter().all(|c| c.passed), checks }
}

/// Runs `f` on `n` derived streams in parallel and keeps the per-trial vectors of measurements.
fn trials<F>(rng: &mut Rng, n: usize, f: F) -> Result<Vec<Vec<f64>>>
where
    F: Fn(&mut Rng, usize) -> Result<Vec<f64>> + Sync,
{
    let base = rng.split();
    (0..n).into_par_iter().map(|i| f(&mut base.derive(i as u64), i)).collect()
}

/// Worst case of measurement `k` over all trials.
fn worst(rows: &[Vec<f64>], k: usize) -> f64 {
    rows.iter().map(|r| r[k]).fold(f64::NEG_INFINITY, f64::max)
}

/// Folds trial results into checks, or one failing check if any trial errored.
fn checks_from(rows: Result<Vec<Vec<f64>>>, specs: &[(&str, f64)]) -> Vec<Check> {
    match rows {
        Ok(rows) => specs.iter().enumerate().map(|(k, &(what, limit))| Check::new(what, worst(&rows, k), limit)).collect(),
        Err(e) => vec![Check::failed("trial error", &e)],
    }
}

fn random_rank_channel(rng: &mut Rng, d: usize) -> Result<Channel<f64>> {
    let rank = rng.range(1, d * d);
    random_channel(rng, d, rank)
}

fn random_dephasing(rng: &mut Rng, d: usize) -> Result<DephasingChannelC<f64>> {
    let rank = rng.range(1, d);
    DephasingChannelC::new(random_correlation(rng, d, rank))
}

fn npt_qutrit(cfg: &VerifyConfig) -> (usize, Vec<Check>) {
    let sc = fixtures::npt_qutrit();
    let c = sc.correlation();
    let ppt = sc.ppt_min_eig();
    let min_eig = herm_eig(c).map(|e| e.min()).unwrap_or(f64::NEG_INFINITY);
    let diag = (0..9).map(|a| (c[(a, a)].re - 1.0).abs().max(c[(a, a)].im.abs())).fold(0.0, f64::max);
    (
        1,
        vec![
            Check::new("|ppt_min_eig - (1 - sqrt 2)|", (ppt - (1.0 - 2f64.sqrt())).abs(), cfg.tolerances.eig),
            Check::new("-min eigenvalue of C", -min_eig, cfg.tolerances.psd),
            Check::new("|C_aa - 1|", diag, 1e-12),
        ],
    )
}

fn qubit_ppt(cfg: &VerifyConfig) -> (usize, Vec<Check>) {
    let n = cfg.count(1000);
    let rows = trials(&mut cfg.rng(2), n, |rng, _| {
        let sc = Sc::sample(rng, 2);
        let pt = partial_transpose(sc.correlation(), BipartiteShape::square(2), Subsystem::B)?;
        let a = herm_eig(&pt)?.values;
        let b = herm_eig(sc.correlation())?.values;
        let spectral = a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        Ok(vec![-a[0], spectral])
    });
    let limits = [("-ppt_min_eig", cfg.tolerances.psd), ("spectrum(C^T2) vs spectrum(C)", cfg.tolerances.eig)];
    (n, checks_from(rows, &limits))
}

fn hadamard_steering(cfg: &VerifyConfig) -> (usize, Vec<Check>) {
    let h = fixtures::hadamard();
    let flip = fixtures::sign_flip();
    let mut checks = Vec::new();
    match flip.apply(&h) {
        Ok(out) => {
            let rho = out.apply_linear(&M::unit(2, 0, 0));
            // ⟨−|ρ|−⟩ with |−⟩ = (|0⟩ − |1⟩)/√2
            let fid = 0.5 * (rho[(0, 0)] - rho[(0, 1)] - rho[(1, 0)] + rho[(1, 1)]).re;
            checks.push(Check::new("1 - <-|Xi[H](|0><0|)|->", 1.0 - fid, 1e-10));
        }
        Err(e) => checks.push(Check::failed("apply", &e)),
    }
    match discrimination_seesaw(&h, &[Sc::identity(2), flip], cfg.restarts, &mut cfg.rng(3)) {
        Ok(inst) => checks.push(Check::new("1 - p_succ", 1.0 - inst.p_succ, 1e-9)),
        Err(e) => checks.push(Check::failed("seesaw", &e)),
    }
    (1, checks)
}

fn transition_invariance(cfg: &VerifyConfig) -> (usize, Vec<Check>) {
    let n = cfg.count(200);
    let tol = cfg.tolerances.psd;
    let rows = trials(&mut cfg.rng(4), n, |rng, i| {
        let d = 2 + i % 2;
        let sc = Sc::sample(rng, d);
        let ch = random_rank_channel(rng, d)?;
        let out = sc.apply(&ch)?;
        let moved = out.transition_matrix().max_abs_diff(&ch.transition_matrix());
        let r = out.check_cptp(tol)?;
        Ok(vec![moved, r.hermiticity.max(-r.min_eigenvalue).max(r.tp_deviation)])
    });
    (n, checks_from(rows, &[("transition matrix change", 1e-12), ("CPTP defect of output", tol)]))
}

fn realization_round_trip(cfg: &VerifyConfig) -> (usize, Vec<Check>) {
    let n = cfg.count(100);
    let measure = |sc: &Sc| -> Result<Vec<f64>> {
        let r = sc.realize()?;
        let back = Sc::from_unitaries(r.us.clone(), r.vs.clone())?;
        Ok(vec![back.correlation().max_abs_diff(sc.correlation()), r.unitarity_defect()])
    };
    let mut rows = trials(&mut cfg.rng(5), n, |rng, i| measure(&Sc::sample(rng, 2 + i % 2)));
    if let Ok(rows) = rows.as_mut() {
        match measure(&fixtures::npt_qutrit()) {
            Ok(r) => rows.push(r),
            Err(e) => return (n + 1, vec![Check::failed("qutrit fixture", &e)]),
        }
    }
    let limits = [("round-trip error", cfg.tolerances.gram), ("unitarity defect", cfg.tolerances.unit)];
    (n + 1, checks_from(rows, &limits))
}

fn schur_closure(cfg: &VerifyConfig) -> (usize, Vec<Check>) {
    let n = cfg.count(200);
    let rows = trials(&mut cfg.rng(6), n, |rng, i| {
        let d = 2 + i % 2;
        let sc = Sc::sample(rng, d);
        let dc = random_dephasing(rng, d)?;
        let out = sc.apply(&dc.channel())?;
        let image = sc.act_on_dephasing(&dc)?;
        let dist = out.jamiolkowski().max_abs_diff(image.channel().jamiolkowski());
        let c_in = dc.correlation();
        let c_out = image.correlation();
        let mut growth = f64::NEG_INFINITY;
        for a in 0..d {
            for b in 0..d {
                growth = growth.max(c_out[(a, b)].norm() - c_in[(a, b)].norm());
            }
        }
        Ok(vec![dist, growth])
    });
    (n, checks_from(rows, &[("J(Xi[D_C']) vs J(D_{C' o C~})", 1e-12), ("|result_ij| - |C'_ij|", 1e-12)]))
}

fn monotone(cfg: &VerifyConfig) -> (usize, Vec<Check>) {
    let mut rng = cfg.rng(7);
    let (n2, n3) = (cfg.count(1000), cfg.count(200));
    let mut checks = Vec::new();
    for (d, n) in [(2, n2), (3, n3)] {
        match monotonicity_suite::<f64>(&mut rng, n, d, CoherenceMeasure::L1) {
            Ok(r) => checks.push(Check::new(format!("d={d}: C_g(Xi[E]) - C_g(E)"), r.gap.max, r.tolerance)),
            Err(e) => checks.push(Check::failed(format!("d={d}"), &e)),
        }
    }
    (n2 + n3, checks)
}

fn classical_invariance(cfg: &VerifyConfig) -> (usize, Vec<Check>) {
    let n = cfg.count(200);
    let rows = trials(&mut cfg.rng(8), n, |rng, i| {
        let d = 2 + i % 2;
        let sc = Sc::sample(rng, d);
        let t = StochasticMatrix::random(rng, d);
        let ct = classical_channel(&t);
        let fixed = sc.apply(&ct)?.jamiolkowski().max_abs_diff(ct.jamiolkowski());
        let ch = random_rank_channel(rng, d)?;
        let delta = Channel::completely_dephasing(d);
        let sandwiched = delta.compose(&sc.apply(&ch)?)?.compose(&delta)?;
        let direct = delta.compose(&ch)?.compose(&delta)?;
        Ok(vec![fixed, sandwiched.jamiolkowski().max_abs_diff(direct.jamiolkowski())])
    });
    (n, checks_from(rows, &[("Xi[E_T] vs E_T", 1e-12), ("D o Xi[E] o D vs E_D", 1e-12)]))
}

fn robustness_sdp(cfg: &VerifyConfig) -> (usize, Vec<Check>) {
    let n = cfg.count(20);
    let rows = trials(&mut cfg.rng(9), n + 1, |rng, i| {
        let ch = if i == n { fixtures::hadamard() } else { random_rank_channel(rng, 2)? };
        let cert = robustness(&ch)?;
        let grid = robustness_grid(ch.jamiolkowski());
        Ok(vec![(cert.value - grid).abs(), cert.feasibility.max(cert.mixture_defect(&ch)), cert.primal_dual_gap])
    });
    let mut checks =
        checks_from(rows, &[("|R - grid|", 1e-3), ("certificate infeasibility", 1e-8), ("primal-dual gap", 1e-8)]);
    let t = StochasticMatrix::<f64>::random(&mut cfg.rng(9), 2);
    match robustness(&classical_channel(&t)) {
        Ok(cert) => checks.push(Check::new("R(classical)", cert.value.abs(), 0.0)),
        Err(e) => checks.push(Check::failed("classical", &e)),
    }
    (n + 1, checks)
}

fn bound_chain(cfg: &VerifyConfig) -> (usize, Vec<Check>) {
    let n = cfg.count(100);
    let restarts = cfg.restarts;
    let rows = trials(&mut cfg.rng(10), n, |rng, i| {
        let m = 2 + i % 2;
        let gate = random_rank_channel(rng, 2)?;
        let scs: Vec<Sc> = (0..m).map(|_| Sc::sample(rng, 2)).collect();
        let inst = discrimination_seesaw(&gate, &scs, restarts, rng)?;
        let r = robustness(&gate)?.value;
        let mf = m as f64;
        let monotone_logs = inst.logs.iter().flat_map(|l| l.windows(2)).map(|w| w[0].objective - w[1].objective).fold(0.0, f64::max);
        Ok(vec![1.0 / mf - inst.p_succ, inst.p_succ - (1.0 + r) / mf, monotone_logs])
    });
    (n, checks_from(rows, &[("1/M - p_succ", 1e-9), ("p_succ - (1+R)/M", 1e-8), ("objective decrease in a restart", 0.0)]))
}

fn hypothesis_testing(cfg: &VerifyConfig) -> (usize, Vec<Check>) {
    let n = cfg.count(100);
    let dh = |rho: &M, sigma: &M, eps: f64| hypothesis_test_divergence(rho, sigma, eps).map(|v| v.value());
    let rows = trials(&mut cfg.rng(11), n, |rng, i| {
        let d = 2 + i % 3;
        // ρ = σ
        let rho = random_state::<f64>(rng, d, false);
        let eps = [0.0, 0.1, 0.5][i % 3];
        let same = (dh(&rho, &rho, eps)? + (1.0 - eps).log2()).abs();
        // commuting pair against the vertex-enumeration LP
        let spectrum = |rng: &mut Rng| -> Vec<f64> {
            let mut v: Vec<f64> = (0..d).map(|_| if rng.uniform::<f64>() < 0.2 { 0.0 } else { -rng.uniform::<f64>().ln() }).collect();
            if v.iter().all(|&x| x == 0.0) {
                v[0] = 1.0;
            }
            let s: f64 = v.iter().sum();
            v.iter().map(|x| x / s).collect()
        };
        let (r, s) = (spectrum(rng), spectrum(rng));
        let eps_lp = [0.0, 0.05, 0.3, 0.7][i % 4];
        let got = dh(&M::from_real_diag(&r), &M::from_real_diag(&s), eps_lp)?;
        let lp = dh_diagonal_lp(&r, &s, eps_lp);
        let lp_err = match (got.is_infinite(), lp <= 1e-12) {
            (true, true) => 0.0,
            (false, false) => (got + lp.log2()).abs(),
            _ => f64::INFINITY,
        };
        // data processing
        let d2 = 2 + i % 2;
        let rho = random_state::<f64>(rng, d2, false);
        let sigma = random_state::<f64>(rng, d2, false);
        let lambda = random_rank_channel(rng, d2)?;
        let eps = [0.0, 0.1, 0.5][i % 3];
        let before = dh(&rho, &sigma, eps)?;
        let after = dh(&lambda.apply(&rho)?.hermitian_part(), &lambda.apply(&sigma)?.hermitian_part(), eps)?;
        let dpi = if after.is_infinite() && !before.is_infinite() { f64::INFINITY } else { after - before };
        Ok(vec![same, lp_err, if dpi.is_nan() { 0.0 } else { dpi }])
    });
    (n, checks_from(rows, &[("rho = sigma vs -log2(1 - eps)", 1e-10), ("commuting vs LP", 1e-8), ("data processing", 1e-8)]))
}

fn dual_paths(cfg: &VerifyConfig) -> (usize, Vec<Check>) {
    let n = cfg.count(100);
    let rows = trials(&mut cfg.rng(12), n, |rng, i| {
        let d = 2 + i % 2;
        let sc = Sc::sample(rng, d);
        let ch = random_rank_channel(rng, d)?;
        let direct = sc.apply(&ch)?;
        let via_big = apply_via_super_jamiolkowski(&sc.super_jamiolkowski(), &ch)?;
        let a = direct.jamiolkowski().max_abs_diff(&via_big);
        let rho = random_state::<f64>(rng, d, false);
        let b = ch.apply(&rho)?.max_abs_diff(&ch.apply_jamiolkowski(&rho)?);
        let (c1, c2) = (random_dephasing(rng, d)?, random_dephasing(rng, d)?);
        let pp = Sc::pre_post(&c1, &c2)?.apply(&ch)?;
        let explicit = c2.channel().compose(&ch.compose(&c1.channel())?)?;
        let c = pp.jamiolkowski().max_abs_diff(explicit.jamiolkowski());
        Ok(vec![a, b, c])
    });
    let limits = [("apply vs super-Jamiolkowski", 1e-12), ("Kraus vs Jamiolkowski action", 1e-12), ("pre_post vs composition", 1e-12)];
    (n, checks_from(rows, &limits))
}
