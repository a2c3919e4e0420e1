use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn instance(name: &str) -> String {
    let p: PathBuf = [env!("CARGO_MANIFEST_DIR"), "..", "..", "instances", name].iter().collect();
    p.to_string_lossy().into_owned()
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kms-phase")).args(args).output().expect("binary runs")
}

fn json(args: &[&str]) -> Value {
    let out = run(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("json output")
}

fn close(v: &Value, want: f64) -> bool {
    (v.as_f64().unwrap() - want).abs() < 1e-9
}

#[test]
fn entropy_of_the_two_colour_bouquet() {
    let v = json(&["entropy", &instance("e1.json")]);
    assert!(close(&v["h_s"], 3f64.ln()));
    assert!(close(&v["h_x"], 3f64.ln()));
    assert_eq!(v["header"]["tool"], "kms-phase");
    assert_eq!(v["header"]["instance_sha256"].as_str().unwrap().len(), 64);
}

#[test]
fn slope_table_as_csv() {
    let out = run(&["entropy", &instance("golden.json"), "--k-max", "20", "--format", "csv"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows[0], "k,slope,window_slope");
    let last: Vec<f64> = rows.last().unwrap().split(',').map(|x| x.parse().unwrap()).collect();
    assert_eq!(last[0], 20.0);
    assert!((last[1] - ((1.0 + 5f64.sqrt()) / 2.0).ln()).abs() < 1e-2);
}

#[test]
fn symbolic_and_snapped_beta_agree() {
    let exact = json(&["wold", &instance("diag23.json"), "--beta", "log(3)", "--tau", "0.3,0.7"]);
    let typed = json(&["wold", &instance("diag23.json"), "--beta", "1.0986", "--tau", "0.3,0.7"]);
    for v in [&exact, &typed] {
        assert!(close(&v["fty"], 0.3), "{v}");
        assert!(close(&v["inf"], 0.7), "{v}");
    }
    assert_eq!(typed["header"]["beta_snapped_to"], "log(3)");
    let raw = run(&["wold", &instance("diag23.json"), "--beta", "1.0986", "--tau", "0.3,0.7", "--no-snap"]);
    // taken literally, 1.0986 is just below log 3 and the trace is not admissible
    assert_eq!(raw.status.code(), Some(3));
}

#[test]
fn coexistence_appears_in_the_phase_table() {
    let out = run(&["phase", &instance("e4.json"), "--beta-min", "0.5", "--beta-max", "2", "--steps", "16"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut rows = text.lines().filter(|l| !l.starts_with('#'));
    assert_eq!(rows.next(), Some("beta,F,dim,label,exact_candidate"));
    let crit: Vec<&str> = rows.filter(|l| l.starts_with("1.0986122886681098,")).collect();
    assert!(crit.iter().any(|l| l.contains("\"{1}\"")), "{crit:?}");
    assert!(crit.iter().any(|l| l.contains("\"{2}\"")), "{crit:?}");
}

#[test]
fn simplex_at_the_critical_point() {
    let v = json(&["simplex", &instance("pf_pair.json"), "--beta", "log(2)"]);
    for part in v["parts"].as_array().unwrap() {
        let avt = part["F"] == serde_json::json!([]);
        let want = if avt { serde_json::json!([[0.5, 0.5]]) } else { serde_json::json!([]) };
        assert_eq!(part["extreme_points"], want, "{part}");
    }
}

#[test]
fn state_eval_against_the_fock_sum() {
    let v = json(&[
        "state-eval",
        &instance("e1.json"),
        "--state",
        &instance("e1_state.json"),
        "--query",
        &instance("e1_query.json"),
        "--oracle",
        "10",
    ]);
    assert_eq!(v["oracle"]["agrees"], true, "{v}");
    assert!(v["header"]["state_sha256"].is_string());
}

#[test]
fn verify_dumps_operators() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let v = json(&["verify", &instance("e1.json"), "--K", "2", "--dump-ops", d]);
    assert_eq!(v["all_pass"], true);
    let files = v["dumped"].as_array().unwrap();
    assert!(!files.is_empty());
    for f in files {
        let p = dir.path().join(f.as_str().unwrap());
        let p = if p.exists() { p } else { PathBuf::from(f.as_str().unwrap()) };
        assert!(p.exists(), "{p:?} missing");
    }
}

#[test]
fn verify_checks_a_kms_state() {
    let v = json(&[
        "verify",
        &instance("e4.json"),
        "--K",
        "2",
        "--kms-state",
        &instance("e4_state.json"),
        "--kms-bound",
        "1,1",
    ]);
    assert_eq!(v["kms"]["pass"], true, "{v}");
}

#[test]
fn ground_states_under_the_default_lattice() {
    let v = json(&["ground", &instance("a8.json"), "--ideals", "cnp"]);
    assert_eq!(v["extreme_points"], serde_json::json!([[1.0, 0.0]]));
}

#[test]
fn output_does_not_depend_on_jobs() {
    let one = run(&["phase", &instance("e4.json"), "--beta-min", "0.2", "--beta-max", "3", "--jobs", "1"]);
    let four = run(&["phase", &instance("e4.json"), "--beta-min", "0.2", "--beta-max", "3", "--jobs", "4"]);
    assert!(one.status.success() && four.status.success());
    assert_eq!(one.stdout, four.stdout);
}

#[test]
fn invalid_instance_exits_2() {
    let out = run(&["entropy", &instance("bad.json")]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("commut"));
    assert_eq!(run(&["entropy", "/nonexistent.json"]).status.code(), Some(2));
}

#[test]
fn trace_outside_the_simplex_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let state = dir.path().join("s.json");
    std::fs::write(&state, r#"{"beta":"log(2.5)","components":[{"F":[1],"tau":[1.0],"w":1.0}]}"#).unwrap();
    let out = run(&[
        "state-eval",
        &instance("e1.json"),
        "--state",
        state.to_str().unwrap(),
        "--query",
        &instance("e1_query.json"),
    ]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}
