use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use dephaser_core::channels::classical_channel;
use dephaser_core::matcore::Matrix;
use dephaser_core::{Channel, DephasingChannelC, DephasingSuperchannel, Rng, StochasticMatrix};
use serde_json::{json, Value};
use tempfile::TempDir;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dephaser")).args(args).env_remove("DEPHASER_SEED").output().unwrap()
}

fn report(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stderr)))
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn write(dir: &TempDir, name: &str, v: &impl serde::Serialize) -> String {
    let p = dir.path().join(name);
    std::fs::write(&p, serde_json::to_string(v).unwrap()).unwrap();
    p.to_str().unwrap().to_string()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn sample_is_valid_and_deterministic() {
    let args = ["sample", "--kind", "superchannel", "--dim", "2", "--n", "3", "--seed", "7"];
    let (a, b) = (run(&args), run(&args));
    assert_eq!(code(&a), 0);
    assert_eq!(a.stdout, b.stdout);
    let r = report(&a);
    assert_eq!(r["schema_version"], 1);
    assert_eq!(r["config"]["seed"], 7);
    let objs = r["results"]["objects"].as_array().unwrap();
    assert_eq!(objs.len(), 3);
    for o in objs {
        serde_json::from_value::<DephasingSuperchannel>(o.clone()).unwrap();
    }
    assert_ne!(run(&["sample", "--n", "3", "--seed", "8"]).stdout, a.stdout);
}

#[test]
fn sample_other_kinds() {
    let r = report(&run(&["sample", "--kind", "channel", "--dim", "3", "--n", "2"]));
    for o in r["results"]["objects"].as_array().unwrap() {
        let ch: Channel = serde_json::from_value(o.clone()).unwrap();
        assert_eq!(ch.dim(), 3);
    }
    let out = run(&["sample", "--kind", "dephasing-channel", "--dim", "3"]);
    assert_eq!(code(&out), 0);
}

#[test]
fn seed_falls_back_to_environment() {
    let with_env = Command::new(env!("CARGO_BIN_EXE_dephaser")).args(["sample"]).env("DEPHASER_SEED", "11").output().unwrap();
    assert_eq!(with_env.stdout, run(&["sample", "--seed", "11"]).stdout);
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(code(&run(&["sample", "--dim", "0"])), 2);
    assert_eq!(code(&run(&["sample", "--kind", "nope"])), 2);
    assert_eq!(code(&run(&["coherence", path(&fixture("hadamard.json")), "--eps", "1.5"])), 2);
    assert_eq!(code(&run(&["verify", "--tol.psd", "-1"])), 2);
    assert_eq!(code(&run(&["classify", "/nonexistent.json"])), 2);
    let dir = TempDir::new().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\"dim\": 2, \"correlation\": ").unwrap();
    let out = run(&["classify", path(&bad)]);
    assert_eq!(code(&out), 2);
    assert!(report(&out)["error"]["message"].is_string());
}

#[test]
fn classify_fixtures() {
    let r = report(&run(&["classify", path(&fixture("npt_qutrit.json"))]));
    assert_eq!(r["results"]["label"], "NPT");
    let min = r["results"]["ppt_min_eig"].as_f64().unwrap();
    assert!((min - (1.0 - 2f64.sqrt())).abs() < 1e-10);

    let mut rng = Rng::new(4);
    let c1 = DephasingChannelC::new(dephaser_core::channels::random_correlation(&mut rng, 2, 2)).unwrap();
    let c2 = DephasingChannelC::new(dephaser_core::channels::random_correlation(&mut rng, 2, 1)).unwrap();
    let dir = TempDir::new().unwrap();
    let p = write(&dir, "product.json", &DephasingSuperchannel::pre_post(&c1, &c2).unwrap());
    assert_eq!(report(&run(&["classify", &p]))["results"]["label"], "PRODUCT");
}

#[test]
fn classify_invalid_reports_witness() {
    let dir = TempDir::new().unwrap();
    let mut c = Matrix::<f64>::ones(4, 4);
    c[(0, 1)] = 0.5.into();
    c[(1, 0)] = 0.5.into();
    let p = write(&dir, "bad.json", &json!({ "dim": 2, "correlation": c }));
    let out = run(&["classify", &p]);
    assert_eq!(code(&out), 3);
    let err = &report(&out)["error"];
    assert_eq!(err["exit_code"], 3);
    let witness = &err["details"]["witness"];
    assert!(witness["defect"].as_f64().unwrap() > 1e-9);
    serde_json::from_value::<Channel>(witness["channel"].clone()).unwrap();
}

#[test]
fn apply_identity_and_sign_flip() {
    let dir = TempDir::new().unwrap();
    let id = write(&dir, "id.json", &DephasingSuperchannel::identity(2));
    let h = fixture("hadamard.json");

    let r = report(&run(&["apply", &id, path(&h)]));
    let out: Channel = serde_json::from_value(r["results"]["output"].clone()).unwrap();
    assert!(out.jamiolkowski().max_abs_diff(Channel::hadamard().jamiolkowski()) < 1e-15);
    assert_eq!(r["results"]["transition_in"], r["results"]["transition_out"]);

    let r = report(&run(&["apply", path(&fixture("sign_flip.json")), path(&h)]));
    let out: Channel = serde_json::from_value(r["results"]["output"].clone()).unwrap();
    let rho = out.apply(&Matrix::unit(2, 0, 0)).unwrap();
    let minus = Matrix::from_real_rows(&[&[0.5, -0.5], &[-0.5, 0.5]]).unwrap();
    assert!(rho.max_abs_diff(&minus) < 1e-12);
    assert!(r["results"]["transition_max_diff"].as_f64().unwrap() < 1e-12);
    assert_eq!(r["results"]["cptp"]["passed"], true);
}

#[test]
fn apply_dimension_mismatch_exits_3() {
    let out = run(&["apply", path(&fixture("npt_qutrit.json")), path(&fixture("hadamard.json"))]);
    assert_eq!(code(&out), 3);
}

#[test]
fn realize_round_trips() {
    let dir = TempDir::new().unwrap();
    let id = write(&dir, "id.json", &DephasingSuperchannel::identity(3));
    let r = report(&run(&["realize", &id]));
    assert!(r["results"]["round_trip_residual"].as_f64().unwrap() < 1e-12);
    let r = report(&run(&["realize", path(&fixture("npt_qutrit.json"))]));
    assert!(r["results"]["round_trip_residual"].as_f64().unwrap() < 1e-9);
    assert_eq!(r["results"]["unitary"], true);
    assert_eq!(r["results"]["us"].as_array().unwrap().len(), 3);
}

#[test]
fn coherence_of_classical_channel_is_zero() {
    let dir = TempDir::new().unwrap();
    let ct = classical_channel(&StochasticMatrix::random(&mut Rng::new(2), 3));
    let p = write(&dir, "ct.json", &ct);
    let out = run(&["coherence", &p, "--seed", "5", "--restarts", "4", "--eps", "0,0.25"]);
    assert_eq!(code(&out), 0);
    let r = report(&out);
    assert_eq!(r["config"]["seed"], 5);
    assert_eq!(r["config"]["eps"], json!([0.0, 0.25]));
    let res = &r["results"];
    assert!(res["cohering_power"]["L1"].as_f64().unwrap().abs() < 1e-12);
    assert_eq!(res["robustness"]["value"], 0.0);
    for row in res["divergence"].as_array().unwrap() {
        let eps = row["eps"].as_f64().unwrap();
        assert!(row["dh_lower"].as_f64().unwrap() <= -(1.0 - eps).log2() + 1e-9);
        assert!((row["discrimination_count_bound"].as_f64().unwrap() - 1.0 / (1.0 - eps)).abs() < 1e-12);
    }
}

#[test]
fn coherence_rejects_non_channels() {
    let dir = TempDir::new().unwrap();
    let k = Matrix::<f64>::from_real_rows(&[&[1.0, 0.0], &[0.0, 0.5]]).unwrap();
    let p = write(&dir, "k.json", &json!({ "dim": 2, "kraus": [k] }));
    assert_eq!(code(&run(&["coherence", &p])), 3);
}

#[test]
fn distinguish_hadamard_pair() {
    let dir = TempDir::new().unwrap();
    let id = write(&dir, "id.json", &DephasingSuperchannel::identity(2));
    let log = dir.path().join("log.ndjson");
    let (h, flip) = (fixture("hadamard.json"), fixture("sign_flip.json"));
    let args = ["distinguish", path(&h), &id, path(&flip), "--restarts", "4", "--log", path(&log)];
    let out = run(&args);
    assert_eq!(code(&out), 0);
    let r = report(&out);
    let bound = &r["results"]["bound"];
    assert!(bound["p_succ"].as_f64().unwrap() >= 1.0 - 1e-9);
    assert!(bound["robustness"].as_f64().unwrap() >= 1.0);
    assert_eq!(bound["passed"], true);
    assert!(bound["image_count_bound"].is_number());
    let lines = std::fs::read_to_string(&log).unwrap();
    for line in lines.lines() {
        let rec: Value = serde_json::from_str(line).unwrap();
        assert!(rec["objective"].is_number());
    }
    assert_eq!(run(&args).stdout, out.stdout);
}

#[test]
fn distinguish_random_superchannels() {
    let out = run(&["distinguish", path(&fixture("hadamard.json")), "--n", "3", "--restarts", "2"]);
    assert_eq!(code(&out), 0);
    assert_eq!(report(&out)["results"]["bound"]["m"], 3);
    let one = run(&["distinguish", path(&fixture("hadamard.json")), path(&fixture("sign_flip.json"))]);
    assert_eq!(code(&one), 2);
}

#[test]
fn verify_quick_mode_and_negative_control() {
    let dir = TempDir::new().unwrap();
    let out_path = dir.path().join("verify.json");
    let out = run(&["verify", "--trials", "10", "--restarts", "4", "--out", path(&out_path)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let r: Value = serde_json::from_str(&std::fs::read_to_string(&out_path).unwrap()).unwrap();
    assert_eq!(r["passed"], true);
    let ids: Vec<u64> = r["results"]["criteria"].as_array().unwrap().iter().map(|c| c["id"].as_u64().unwrap()).collect();
    assert_eq!(ids, (1..=12).collect::<Vec<_>>());

    let bad = run(&["verify", "--trials", "10", "--restarts", "4", "--tol.psd", "1e-30"]);
    assert_eq!(code(&bad), 1);
    let r = report(&bad);
    assert_eq!(r["passed"], false);
    assert_eq!(r["config"]["tolerances"]["psd"], 1e-30);
}
