use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn hwsn(args: &[&str], env_out: Option<&Path>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_hwsn"));
    cmd.args(args).env_remove("HWSN_OUTPUT_DIR");
    if let Some(d) = env_out {
        cmd.env("HWSN_OUTPUT_DIR", d);
    }
    cmd.output().expect("binary runs")
}

const CONFIG: &str = r#"{
    "name": "small",
    "seed": 11,
    "deployment": {"field_side": 300, "groups_per_side": 3, "sensors_per_group": 30, "radio_range_sensor": 30},
    "schemes": [
        {"kind": "proposed", "m": 10, "m_prime": 20, "t": 10},
        {"kind": "eg", "pool_size": 500, "m": 20},
        {"kind": "lekm"}
    ],
    "metric": "sensor-capture",
    "sweep": {"parameter": "c", "values": [0, 10, 40]},
    "trials": 3
}"#;

#[test]
fn run_then_rerun_from_manifest() {
    let d = tempfile::tempdir().unwrap();
    let cfg = d.path().join("small.json");
    fs::write(&cfg, CONFIG).unwrap();
    let first = d.path().join("a");
    let out = hwsn(&["run", cfg.to_str().unwrap(), "--output", first.to_str().unwrap()], None);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let csv = fs::read_to_string(first.join("small.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 3 * 3);
    assert!(csv.starts_with("scheme,metric,sweep_param,sweep_value,params,analytical,simulated_mean,stderr,trials\n"));
    assert!(csv.lines().filter(|l| l.starts_with("proposed,")).all(|l| l.contains(",0,0,0,3")));

    let second = d.path().join("b");
    let manifest = first.join("small.manifest.json");
    let out = hwsn(&["run", manifest.to_str().unwrap()], Some(&second));
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(fs::read(second.join("small.csv")).unwrap(), csv.as_bytes());
    assert!(second.join("plotdata/small__eg__fraction_compromised.dat").exists());
}

#[test]
fn validate_reports_field() {
    let d = tempfile::tempdir().unwrap();
    let good = d.path().join("good.json");
    fs::write(&good, CONFIG).unwrap();
    assert!(hwsn(&["validate", good.to_str().unwrap()], None).status.success());

    let bad = d.path().join("bad.json");
    fs::write(&bad, CONFIG.replace(r#""m": 10, "m_prime": 20"#, r#""m": 10, "m_prime": 5"#)).unwrap();
    let out = hwsn(&["validate", bad.to_str().unwrap()], None);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("schemes[0]"));

    let out = hwsn(&["validate", d.path().join("missing.json").to_str().unwrap()], None);
    assert!(!out.status.success());
}

#[test]
fn empty_sweep_writes_header_only() {
    let d = tempfile::tempdir().unwrap();
    let cfg = d.path().join("empty.json");
    fs::write(&cfg, CONFIG.replace("[0, 10, 40]", "[]").replace("\"small\"", "\"empty\"")).unwrap();
    let out = hwsn(&["run", cfg.to_str().unwrap()], Some(d.path()));
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(fs::read_to_string(d.path().join("empty.csv")).unwrap().lines().count(), 1);
    assert_eq!(fs::read_to_string(d.path().join("plotdata/empty.dat")).unwrap().lines().count(), 1);
}

#[test]
fn preset_with_overrides() {
    let d = tempfile::tempdir().unwrap();
    let out = hwsn(&["preset", "fig8", "--trials", "1", "--seed", "3"], Some(d.path()));
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(d.path().join("fig8.csv")).unwrap();
    assert!(csv.lines().any(|l| l.starts_with("lekm,n_cluster_head,c,5,,500,")));
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(d.path().join("fig8.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["seed"], 3);
    assert_eq!(manifest["config"]["trials"], 1);

    assert!(!hwsn(&["preset", "fig9"], Some(d.path())).status.success());
}
