use std::process::{Command, Output};

use serde_json::Value;

fn detcot(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_detcot")).args(args).output().expect("run detcot")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("JSON on stdout")
}

#[test]
fn tetrahedron_spectrum_json() {
    let out = detcot(&["spectrum", "--canonical", "tetrahedron", "--uniform", "1.0", "--kind", "cotan"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["kernel_dim"], 1);
    let ld = v["log_pseudo_det"].as_f64().unwrap();
    assert!((ld - 3.0 * (8.0 / 3f64.sqrt()).ln()).abs() < 1e-10, "{ld}");
}

#[test]
fn torus_normalized_stationarity_passes() {
    let out = detcot(&[
        "stationarity", "--canonical", "torus_9", "--uniform", "1.0", "--kind", "normalized", "--h", "1e-5", "--tol", "1e-6",
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["passed"], true);
}

#[test]
fn octahedron_is_strongly_symmetric() {
    let out = detcot(&["symmetry", "--canonical", "octahedron"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["is_strongly_symmetric"], true);
}

#[test]
fn inverse_structure_passes_on_icosahedron_and_fails_on_bipyramid() {
    let out = detcot(&["inverse-structure", "--canonical", "icosahedron", "--delta", "0.5"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert!(v["recursion"]["max_diff_vs_dense"].as_f64().unwrap() < 1e-10);
    let out = detcot(&["inverse-structure", "--canonical", "bipyramid"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(json(&out)["distance_classes"]["passed"], false);
}

#[test]
fn curvature_totals_match_gauss_bonnet() {
    let out = detcot(&["curvature", "--canonical", "icosahedron", "--convention", "standard"]);
    let total = json(&out)["total"].as_f64().unwrap();
    assert!((total - 4.0 * std::f64::consts::PI).abs() < 1e-10);
}

#[test]
fn sweep_writes_csv_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("sweep.csv");
    let out = detcot(&[
        "sweep", "--canonical", "tetrahedron", "--edges", "0,1,2,3", "--range", "0.8,1.2", "--steps", "5", "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let text = std::fs::read_to_string(&path).unwrap();
    assert_eq!(text.lines().next(), Some("la,lb,log_det"));
    assert_eq!(text.lines().count(), 26);
}

#[test]
fn open_mesh_fails_validation() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("open.mesh");
    std::fs::write(
        &path,
        "vertices 4\nedge 0 1\nedge 0 2\nedge 1 2\nedge 0 3\nedge 1 3\nedge 2 3\ntriangle 0 1 2\ntriangle 0 1 3\ntriangle 0 2 3\n",
    )
    .unwrap();
    let out = detcot(&["validate", "--mesh", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(json(&out)["is_closed"], false);
    let out = detcot(&["spectrum", "--mesh", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("spectrum"));
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(detcot(&["spectrum", "--canonical", "tetrahedron", "--bogus"]).status.code(), Some(2));
    assert_eq!(detcot(&["spectrum"]).status.code(), Some(2));
    assert_eq!(detcot(&["detlog", "--canonical", "tetrahedron", "--uniform", "-1"]).status.code(), Some(2));
    assert_eq!(detcot(&["sweep", "--canonical", "tetrahedron", "--range", "1.2,0.8"]).status.code(), Some(2));
}

#[test]
fn every_subcommand_has_help() {
    for sub in [
        "validate", "curvature", "spectrum", "detlog", "symmetry", "inverse-structure", "stationarity", "hessian", "sweep",
    ] {
        let out = detcot(&[sub, "--help"]);
        assert_eq!(out.status.code(), Some(0), "{sub}");
        let text = String::from_utf8_lossy(&out.stdout);
        assert!(text.contains("--canonical") && text.contains("default"), "{sub}");
    }
}

#[test]
fn output_is_deterministic() {
    let args = ["hessian", "--canonical", "octahedron", "--kind", "normalized"];
    assert_eq!(detcot(&args).stdout, detcot(&args).stdout);
}
