use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn esym(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_esym"))
        .args(args)
        .env_remove("ESYM_LOG")
        .output()
        .unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p.to_string_lossy().into_owned()
}

fn json(p: &Path) -> Value {
    serde_json::from_slice(&std::fs::read(p).unwrap()).unwrap()
}

const MAGNETIC: &str = r#"
scenario = "magnetic_plane"
[integrator]
method = "rk4_fixed"
dt = 0.01
horizon = 1.0
[output]
format = "both"
plot = ["q1:q2"]
"#;

#[test]
fn list_names_every_scenario() {
    let o = esym(&["list"]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.lines().count() >= 6);
    assert!(text.contains("so3_wong") && text.contains("penrose_blackhole"));

    let o = esym(&["list", "--json"]);
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    let arr = v.as_array().unwrap();
    assert!(arr.len() >= 6);
    assert!(arr.iter().all(|e| e["name"].is_string() && e["state"].is_array()));
}

#[test]
fn usage_errors_and_help() {
    assert_ne!(code(&esym(&["frobnicate"])), 0);
    assert_eq!(code(&esym(&["run"])), 1);
    assert_eq!(code(&esym(&["--help"])), 0);
    assert_eq!(code(&esym(&["--version"])), 0);
    let o = esym(&["verify", "no_such_scope"]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("no_such_scope"));
}

#[test]
fn run_writes_all_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "m.toml", MAGNETIC);
    let out = tmp.path().join("out");
    let o = esym(&["run", "-c", &cfg, "-o", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    for f in ["magnetic_plane.csv", "magnetic_plane.json", "magnetic_plane_report.json", "magnetic_plane_q1_q2.dat", "magnetic_plane_q1_q2.svg"] {
        assert!(out.join(f).exists(), "{f}");
    }
    let doc = json(&out.join("magnetic_plane.json"));
    assert_eq!(doc["status"], "completed");
    assert_eq!(doc["columns"][0], "t");
    assert_eq!(doc["meta"]["config"]["params"]["B"], 1.0);
    assert_eq!(doc["meta"]["config"]["integrator"]["method"], "rk4_fixed");
    let report = json(&out.join("magnetic_plane_report.json"));
    let drift = report["report"]["channels"][0]["max_rel_drift"].as_f64().unwrap();
    assert!(drift < 1e-6);
    let csv = std::fs::read_to_string(out.join("magnetic_plane.csv")).unwrap();
    assert_eq!(csv.lines().count(), 102);
}

#[test]
fn malformed_expression_is_named() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(
        tmp.path(),
        "bad.toml",
        "[custom]\nhamiltonian = \"m1^2 + sin(q1\"\n[custom.frame]\nfamily = \"b\"\nn = 1\n[initial]\nq = [0.5]\nm = [1.0]\n",
    );
    let o = esym(&["run", "-c", &cfg, "-o", tmp.path().to_str().unwrap()]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("m1^2 + sin(q1"), "{}", stderr(&o));
}

#[test]
fn config_errors_exit_one() {
    let tmp = tempfile::tempdir().unwrap();
    let cases = [
        "scenario = \"magnetic_plane\"\nbogus = 1\n",
        "scenario = \"magnetic_plane\"\n[params]\nB = \"strong\"\n",
        "scenario = \"magnetic_plane\"\n[params]\nC = 1.0\n",
        "scenario = \"nowhere\"\n",
        "scenario = \"magnetic_plane\"\n[integrator]\nmethod = \"rk4_fixed\"\nhorizon = 1.0\n",
        "scenario = \"radko_sphere\"\n[initial]\nq = [2.0]\nm = [0.0]\n",
        "[custom]\nhamiltonian = \"m1^2\"\n[custom.frame]\nfamily = \"b\"\nn = 1\n",
    ];
    for (k, body) in cases.iter().enumerate() {
        let cfg = write(tmp.path(), &format!("c{k}.toml"), body);
        let o = esym(&["run", "-c", &cfg, "-o", tmp.path().to_str().unwrap()]);
        assert_eq!(code(&o), 1, "case {k}: {}", stderr(&o));
        assert!(stderr(&o).starts_with("error:"), "case {k}");
    }
}

#[test]
fn collision_infall_stops_with_partial_record() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(
        tmp.path(),
        "inf.toml",
        "scenario = \"mcgehee_3bp\"\n[params]\npotential = \"kepler\"\n[initial]\nq = [1.0, 0.0]\nm = [-0.5, 0.0]\n",
    );
    let o = esym(&["run", "-c", &cfg, "-o", tmp.path().to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    let doc = json(&tmp.path().join("mcgehee_3bp.json"));
    assert_eq!(doc["status"], "step_underflow");
    let rows = doc["rows"].as_array().unwrap();
    assert!(rows.len() > 10);
    let t_end = rows.last().unwrap()[0].as_f64().unwrap();
    assert!(t_end > 1.0 && t_end < 10.0);
}

#[test]
fn trajectory_json_reruns_identically() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "m.toml", MAGNETIC);
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    assert_eq!(code(&esym(&["run", "-c", &cfg, "-o", a.to_str().unwrap()])), 0);
    let rerun = a.join("magnetic_plane.json");
    assert_eq!(code(&esym(&["run", "-c", rerun.to_str().unwrap(), "-o", b.to_str().unwrap()])), 0);
    for f in ["magnetic_plane.csv", "magnetic_plane.json"] {
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn seeded_custom_runs_are_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(
        tmp.path(),
        "c.toml",
        r#"
[custom]
name = "wedge"
hamiltonian = "m1^2 + m2^2 + x*y"
[custom.frame]
family = "corner"
n = 2
k = 1
coords = ["x", "y"]
[initial]
q = [0.3, -0.2]
m = [0.1, 0.4]
[integrator]
method = "rk45_adaptive"
horizon = 2.0
"#,
    );
    let mut outs = Vec::new();
    for d in ["one", "two"] {
        let dir = tmp.path().join(d);
        assert_eq!(code(&esym(&["run", "-c", &cfg, "-o", dir.to_str().unwrap(), "--seed", "9"])), 0);
        outs.push(std::fs::read(dir.join("wedge.json")).unwrap());
    }
    assert_eq!(outs[0], outs[1]);
    let doc = json(&tmp.path().join("one/wedge.json"));
    assert_eq!(doc["meta"]["config"]["seed"], 9);
}

#[test]
fn export_reproduces_csv() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "m.toml", MAGNETIC);
    let a = tmp.path().join("a");
    esym(&["run", "-c", &cfg, "-o", a.to_str().unwrap()]);
    let e = tmp.path().join("e");
    let o = esym(&["export", "-i", a.join("magnetic_plane.json").to_str().unwrap(), "-o", e.to_str().unwrap(), "--plot", "t:energy"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(std::fs::read(a.join("magnetic_plane.csv")).unwrap(), std::fs::read(e.join("magnetic_plane.csv")).unwrap());
    assert!(e.join("magnetic_plane_t_energy.dat").exists());
    let o = esym(&["export", "-i", a.join("magnetic_plane.json").to_str().unwrap(), "-o", e.to_str().unwrap(), "--plot", "t:nope"]);
    assert_eq!(code(&o), 1);
}

#[test]
fn verify_exit_codes() {
    let o = esym(&["verify", "so3_wong", "--samples", "4", "--json"]);
    assert_eq!(code(&o), 0);
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["passed"], true);
    let o = esym(&["verify", "so3_wong", "--samples", "4", "--inject-fault"]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stdout).contains("FAIL"));
}
