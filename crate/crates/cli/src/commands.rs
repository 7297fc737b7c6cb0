use std::path::{Path, PathBuf};

use dephaser_core::channels::{random_channel, random_correlation};
use dephaser_core::coherence::{
    cohering_power, dh_channel_divergence_lower, discrimination_seesaw, robustness, robustness_bound_check,
    CoherenceMeasure, ExtendedReal,
};
use dephaser_core::superchannels::validate;
use dephaser_core::verify::{run_criterion, VerifyConfig, VerifyReport, CRITERIA};
use dephaser_core::{Channel, DephasingChannelC, DephasingSuperchannel, Rng};
use serde::Serialize;
use serde_json::{json, Value};

use crate::args::{Command, Kind};
use crate::{input, Failure, Outcome, RunConfig};

fn to_value(x: impl Serialize) -> Value {
    serde_json::to_value(x).expect("report values serialize")
}

fn ok(results: Value) -> Result<Outcome, Failure> {
    Ok(Outcome { results, passed: None })
}

pub fn run(cmd: &Command, cfg: &RunConfig) -> Result<Outcome, Failure> {
    match cmd {
        Command::Sample { kind } => sample(*kind, cfg),
        Command::Classify { superchannel } => classify(superchannel, cfg),
        Command::Apply { superchannel, channel } => apply(superchannel, channel, cfg),
        Command::Realize { superchannel } => realize(superchannel, cfg),
        Command::Coherence { channel } => coherence(channel, cfg),
        Command::Distinguish { gate, superchannels, log } => distinguish(gate, superchannels, log.as_ref(), cfg),
        Command::Verify => verify(cfg),
    }
}

fn sample(kind: Kind, cfg: &RunConfig) -> Result<Outcome, Failure> {
    let d = cfg.dim;
    let base = Rng::new(cfg.seed);
    let objects = (0..cfg.n.unwrap_or(1))
        .map(|i| {
            let rng = &mut base.derive(i as u64);
            Ok(match kind {
                Kind::Superchannel => to_value(DephasingSuperchannel::sample(rng, d)),
                Kind::Channel => {
                    let rank = rng.range(1, d * d);
                    to_value(random_channel::<f64>(rng, d, rank)?)
                }
                Kind::DephasingChannel => {
                    let rank = rng.range(1, d);
                    to_value(DephasingChannelC::new(random_correlation(rng, d, rank))?)
                }
            })
        })
        .collect::<Result<Vec<_>, dephaser_core::Error>>()?;
    ok(json!({ "kind": kind, "objects": objects }))
}

fn classify(path: &Path, cfg: &RunConfig) -> Result<Outcome, Failure> {
    let raw = input::raw_superchannel(path)?;
    let report = validate(&raw.correlation, raw.dim).map_err(|e| Failure::from(e).context(path))?;
    if !report.is_valid() {
        let msg = report.violations.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ");
        return Err(Failure::semantic(format!("{}: invalid dephasing superchannel: {msg}", path.display()))
            .with_details(to_value(&report)));
    }
    let sc = DephasingSuperchannel::new(raw.correlation, raw.dim)?;
    let class = sc.memory_class_tol(cfg.tolerances.psd);
    ok(json!({
        "dim": sc.dim(),
        "label": class.label,
        "ppt_min_eig": class.ppt_min_eig,
        "product_residual": class.product_residual,
        "tilde_c": sc.tilde_c().correlation(),
    }))
}

fn apply(sc_path: &Path, ch_path: &Path, cfg: &RunConfig) -> Result<Outcome, Failure> {
    let sc = input::superchannel(sc_path)?;
    let ch = input::channel(ch_path)?;
    let out = sc.apply(&ch)?;
    let (t_in, t_out) = (ch.transition_matrix(), out.transition_matrix());
    ok(json!({
        "output": out,
        "transition_in": t_in.rows(),
        "transition_out": t_out.rows(),
        "transition_max_diff": t_in.max_abs_diff(&t_out),
        "cptp": out.check_cptp(cfg.tolerances.psd)?,
    }))
}

fn realize(path: &Path, cfg: &RunConfig) -> Result<Outcome, Failure> {
    let sc = input::superchannel(path)?;
    let r = sc.realize()?;
    let back = DephasingSuperchannel::from_unitaries(r.us.clone(), r.vs.clone())?;
    let defect = r.unitarity_defect();
    ok(json!({
        "dim": sc.dim(),
        "us": r.us,
        "vs": r.vs,
        "round_trip_residual": back.correlation().max_abs_diff(sc.correlation()),
        "unitarity_defect": defect,
        "unitary": defect <= cfg.tolerances.unit,
    }))
}

#[derive(Serialize)]
struct DivergenceRow {
    eps: f64,
    /// Lower estimate of the smoothed divergence between the channel and its classical version.
    dh_lower: ExtendedReal,
    /// `(1 + R)/(1 − ε)`.
    discrimination_count_bound: f64,
    /// `2^{dh_lower}`.
    image_count_bound: ExtendedReal,
}

fn coherence(path: &Path, cfg: &RunConfig) -> Result<Outcome, Failure> {
    let ch = input::channel(path)?;
    let cert = robustness(&ch)?;
    let classical = ch.classical_version();
    let base = Rng::new(cfg.seed);
    let rows = cfg
        .eps
        .iter()
        .enumerate()
        .map(|(i, &eps)| {
            let dh = dh_channel_divergence_lower(&ch, &classical, eps, cfg.restarts, &mut base.derive(i as u64))?;
            Ok(DivergenceRow {
                eps,
                dh_lower: dh,
                discrimination_count_bound: (1.0 + cert.value) / (1.0 - eps),
                image_count_bound: dh.exp2(),
            })
        })
        .collect::<Result<Vec<_>, dephaser_core::Error>>()?;
    ok(json!({
        "dim": ch.dim(),
        "cohering_power": {
            "L1": cohering_power(&ch, CoherenceMeasure::L1),
            "REL_ENT": cohering_power(&ch, CoherenceMeasure::RelEnt),
        },
        "robustness": cert,
        "divergence": rows,
    }))
}

fn distinguish(gate_path: &Path, sc_paths: &[PathBuf], log: Option<&PathBuf>, cfg: &RunConfig) -> Result<Outcome, Failure> {
    let gate: Channel = input::channel(gate_path)?;
    let mut rng = Rng::new(cfg.seed);
    let scs = match sc_paths.len() {
        0 => {
            let m = cfg.n.unwrap_or(2);
            if m < 2 {
                return Err(Failure::usage("at least 2 superchannels are needed"));
            }
            let base = rng.split();
            (0..m).map(|i| DephasingSuperchannel::sample(&mut base.derive(i as u64), gate.dim())).collect()
        }
        1 => return Err(Failure::usage("at least 2 superchannels are needed")),
        _ => sc_paths.iter().map(|p| input::superchannel(p)).collect::<Result<Vec<_>, _>>()?,
    };
    let inst = discrimination_seesaw(&gate, &scs, cfg.restarts, &mut rng)?;
    if let Some(p) = log {
        std::fs::write(p, inst.log_lines()).map_err(|e| Failure::usage(format!("{}: {e}", p.display())))?;
    }
    let cert = robustness(&gate)?;
    let mut bound = robustness_bound_check(&inst, &cert)?;
    let eps = (1.0 - inst.p_succ).clamp(0.0, 1.0 - 1e-12);
    let dh = dh_channel_divergence_lower(&gate, &gate.classical_version(), eps, cfg.restarts, &mut rng)?;
    bound.image_count_bound = Some(dh.exp2());
    let passed = bound.passed;
    Ok(Outcome { results: json!({ "instance": inst, "bound": bound }), passed: Some(passed) })
}

fn verify(cfg: &RunConfig) -> Result<Outcome, Failure> {
    let vc = VerifyConfig { seed: cfg.seed, trials: cfg.trials, restarts: cfg.restarts, tolerances: cfg.tolerances };
    let criteria: Vec<_> = CRITERIA
        .iter()
        .map(|&(id, _)| {
            let r = run_criterion(id, &vc);
            eprintln!("{r}");
            r
        })
        .collect();
    let report = VerifyReport { passed: criteria.iter().all(|c| c.passed), criteria };
    Ok(Outcome { passed: Some(report.passed), results: to_value(&report) })
}
