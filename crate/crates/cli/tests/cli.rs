use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data").join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_soft-floer"))
        .args(args)
        .env("RUST_LOG", "error")
        .output()
        .expect("binary runs")
}

fn run_json(args: &[&str]) -> Value {
    let out = run(args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn error_of(out: &Output) -> Value {
    serde_json::from_slice(&out.stderr).unwrap()
}

fn input(name: &str) -> String {
    data(name).to_str().unwrap().to_string()
}

#[test]
fn index_of_scalar_family_agrees() {
    let v = run_json(&["index", "--input", &input("family_scalar.json")]);
    let r = &v["result"];
    assert_eq!(r["maslov"], 1);
    assert_eq!(r["galerkin"], 1);
    assert_eq!(r["agree"], true);
    for key in ["config_hash", "seed", "tolerances", "version"] {
        assert!(!v[key].is_null(), "{key}");
    }
}

#[test]
fn index_of_degenerate_mean_exits_one() {
    let out = run(&["index", "--input", &input("family_degenerate.json")]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(error_of(&out)["error"], "DegenerateMeanHessian");
}

#[test]
fn missing_file_is_a_usage_error() {
    let out = run(&["index", "--input", "/nonexistent/family.json"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(error_of(&out)["error"], "UsageError");
    let out = run(&["index"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn morse_report_of_sample_hamiltonian() {
    let v = run_json(&["morse", "--input", &input("hamiltonian_two_well.json")]);
    assert_eq!(v["result"]["check"]["all_ok"], true);
    assert_eq!(v["result"]["inventory"]["orbits"].as_array().unwrap().len(), 4);
}

#[test]
fn morse_of_zero_hamiltonian_exits_one() {
    let out = run(&["morse", "--input", &input("hamiltonian_zero.json")]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(error_of(&out)["error"], "DegenerateProblem");
}

#[test]
fn malformed_mode_reports_field_path() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("bad.json");
    std::fs::write(&p, r#"{"n":1,"modes":[{"k_t":0,"k_q":[1,0],"amp":0.1,"phase":0.0},{"k_t":0,"k_q":[0,1],"amp":"big","phase":0.0}]}"#).unwrap();
    let out = run(&["morse", "--input", p.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let msg = error_of(&out)["message"].as_str().unwrap().to_string();
    assert!(msg.contains("modes[1].amp"), "{msg}");
}

fn carnot_rows(dir: &Path, w: &str, horizon: &str) -> (Vec<[f64; 3]>, Value) {
    let csv = dir.join(format!("m_{}.csv", w.replace(',', "_")));
    let out = run(&[
        "carnot",
        "--input",
        &input("carnot_commuting.json"),
        "--w",
        w,
        "--horizon",
        horizon,
        "--output",
        csv.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t,cdf_b,cdf_r"));
    let rows = lines
        .map(|l| {
            let v: Vec<f64> = l.split(',').map(|x| x.parse().unwrap()).collect();
            [v[0], v[1], v[2]]
        })
        .collect();
    let summary = serde_json::from_str(&std::fs::read_to_string(csv.with_extension("json")).unwrap()).unwrap();
    (rows, summary)
}

#[test]
fn carnot_commuting_blocks() {
    let dir = tempfile::tempdir().unwrap();
    let (rows, summary) = carnot_rows(dir.path(), "1,0", "3");
    for [t, b, r] in rows {
        assert!((b - 2.0 * f64::max(t - 1.0, 0.0)).abs() <= 1e-3, "t {t}: {b}");
        assert!((r - t.min(1.0)).abs() <= 1e-3, "t {t}: {r}");
    }
    assert!((summary["result"]["min_phi"].as_f64().unwrap() - 1.0).abs() < 1e-6);
}

#[test]
fn carnot_scaled_endpoint_is_covariant() {
    let dir = tempfile::tempdir().unwrap();
    let (base, _) = carnot_rows(dir.path(), "1,0", "3");
    let (scaled, _) = carnot_rows(dir.path(), "2,0", "1.5");
    // CDF_{2w}(t) = CDF_w(2t) / 2, with 2t on the base grid at every other row
    for (k, [t, b, r]) in scaled.iter().enumerate() {
        let [t2, b2, r2] = base[k];
        assert!((t2 - 2.0 * t).abs() < 1e-12);
        assert!((b - b2 / 2.0).abs() < 2e-3 && (r - r2 / 2.0).abs() < 2e-3);
    }
}

#[test]
fn carnot_rejects_three_dimensional_w() {
    let out = run(&["carnot", "--input", &input("carnot_dimw3.json")]);
    assert_eq!(out.status.code(), Some(1));
    let e = error_of(&out);
    assert_eq!(e["error"], "UnsupportedDimension");
    assert!(e["message"].as_str().unwrap().contains("dim W = 2"));
}

#[test]
fn degree_reports() {
    let v = run_json(&["degree", "--input", &input("map_identity.json")]);
    assert_eq!(v["result"]["degree"], 1);
    let v = run_json(&["degree", "--input", &input("map_antipodal.json")]);
    assert_eq!(v["result"]["degree"], -1);
    let v = run_json(&["degree", "--input", &input("map_circle_square.json"), "--dims", "2,3,4"]);
    assert_eq!(v["result"]["degree"], 2);
    assert_eq!(v["result"]["per_dim"].as_array().unwrap().len(), 3);
}

#[test]
fn signature_reports() {
    let v = run_json(&["signature", "--input", &input("signature_equal.json")]);
    assert_eq!(v["result"]["value"], 0);
    let v = run_json(&["signature", "--input", &input("signature_galerkin.json")]);
    let tail: Vec<&Value> = v["result"]["trace"]
        .as_array()
        .unwrap()
        .iter()
        .rev()
        .take(3)
        .map(|p| &p["difference"])
        .collect();
    assert!(tail.iter().all(|d| *d == tail[0]), "{tail:?}");
}

#[test]
fn identical_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cases: [(&str, &str); 5] = [
        ("index", "family_trig.json"),
        ("morse", "hamiltonian_two_well.json"),
        ("carnot", "carnot_commuting.json"),
        ("degree", "map_circle_square.json"),
        ("signature", "signature_galerkin.json"),
    ];
    for (cmd, file) in cases {
        let outs: Vec<Vec<u8>> = (0..2)
            .map(|i| {
                let p = dir.path().join(format!("{cmd}_{i}.out"));
                let o = run(&[
                    cmd,
                    "--input",
                    &input(file),
                    "--seed",
                    "7",
                    "--output",
                    p.to_str().unwrap(),
                ]);
                assert!(o.status.success(), "{cmd}: {}", String::from_utf8_lossy(&o.stderr));
                let mut bytes = std::fs::read(&p).unwrap();
                if cmd == "carnot" {
                    bytes.extend(std::fs::read(p.with_extension("json")).unwrap());
                }
                bytes
            })
            .collect();
        assert_eq!(outs[0], outs[1], "{cmd}");
    }
}

#[test]
fn seed_and_hash_track_the_config() {
    let a = run_json(&["degree", "--input", &input("map_identity.json"), "--seed", "1"]);
    let b = run_json(&["degree", "--input", &input("map_identity.json"), "--seed", "2"]);
    assert_eq!(a["seed"], 1);
    assert_ne!(a["config_hash"], b["config_hash"]);
}
