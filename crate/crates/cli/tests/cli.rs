use std::fs;
use std::process::{Command, Output};

fn divstat(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_divstat")).args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn check_passes_on_paraboloid() {
    let o = divstat(&["check", "paraboloid", "--samples", "100", "--tol", "1e-8"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let out = String::from_utf8(o.stdout).unwrap();
    assert!(out.contains("codazzi") && !out.contains("FAIL"));
}

#[test]
fn punctured_plane_antipodes_do_not_connect() {
    let o = divstat(&["connect", "punctured-plane", "--from", "1,0", "--to", "-1,0"]);
    assert_eq!(code(&o), 3);
    assert!(stderr(&o).contains("no converged geodesic"));
}

#[test]
fn invalid_inputs_exit_2() {
    for args in [
        &["geodesic", "nosuch", "--from", "0,0", "--vel", "1,0", "--t-max", "1"][..],
        &["geodesic", "euclidean", "--from", "0,0,0", "--vel", "1,0", "--t-max", "1"],
        &["geodesic", "euclidean", "--from", "0,x", "--vel", "1,0", "--t-max", "1"],
        &["geodesic", "euclidean", "--conn", "bogus", "--from", "0,0", "--vel", "1,0", "--t-max", "1"],
        &["describe", "half-plane-exp", "--at", "0,-1"],
        &["connect", "punctured-plane", "--from", "0,0", "--to", "1,0"],
        &["hadamard", "euclidean", "--grid", "x1:0:1:3"],
        &["check", "euclidean", "--samples", "0"],
    ] {
        let o = divstat(args);
        assert_eq!(code(&o), 2, "{args:?}: {}", stderr(&o));
        assert!(!stderr(&o).is_empty());
    }
}

#[test]
fn geodesic_csv_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for p in [&a, &b] {
        let o = divstat(&[
            "geodesic", "half-plane-exp", "--conn", "lc", "--from", "0,1", "--vel", "1,0", "--t-max", "1", "--steps",
            "50", "--out", p.to_str().unwrap(),
        ]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
    }
    let text = fs::read_to_string(&a).unwrap();
    assert_eq!(text, fs::read_to_string(&b).unwrap());
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "t,x1,x2,v1,v2");
    assert_eq!(lines.len(), 1 + 51 + 1);
    assert_eq!(*lines.last().unwrap(), "# status=completed");
    let last: Vec<f64> = lines[51].split(',').map(|s| s.parse().unwrap()).collect();
    assert_eq!(last[0], 1.0);
    // unit-speed geodesic of the upper half-plane through (0,1) heading along x
    assert!((last[1] - 1f64.tanh()).abs() < 1e-8 && (last[2] - 1.0 / 1f64.cosh()).abs() < 1e-8);
}

#[test]
fn geodesic_leaving_the_domain_is_a_numerical_failure() {
    let o = divstat(&["geodesic", "punctured-plane", "--conn", "lc-tilde", "--from", "1,0", "--vel", "-2,0", "--t-max", "1"]);
    assert_eq!(code(&o), 3);
    let out = String::from_utf8(o.stdout).unwrap();
    assert!(out.trim_end().ends_with("# status=exited-domain"));
}

#[test]
fn connect_writes_identical_json() {
    let dir = tempfile::tempdir().unwrap();
    let mut texts = Vec::new();
    for name in ["a.json", "b.json"] {
        let p = dir.path().join(name);
        let o = divstat(&[
            "connect", "paraboloid", "--conjugate", "--from", "0,0", "--to", "1,0", "--seed", "7", "--multistart", "8",
            "--out", p.to_str().unwrap(),
        ]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        texts.push(fs::read_to_string(p).unwrap());
    }
    assert_eq!(texts[0], texts[1]);
    let v: serde_json::Value = serde_json::from_str(&texts[0]).unwrap();
    assert!((v["tilde_length"].as_f64().unwrap() - 1.0).abs() < 1e-8);
    assert!(v["converged"].as_bool().unwrap());
    assert_eq!(v["nabla_path"]["kind"], "nabla");
    assert_eq!(v["tilde_path"]["kind"], "lc-tilde");
}

#[test]
fn contrast_prints_rho() {
    let o = divstat(&["contrast", "paraboloid", "--p", "0,0", "--q", "1,0"]);
    assert_eq!(code(&o), 0);
    let rho: f64 = String::from_utf8(o.stdout).unwrap().trim().parse().unwrap();
    assert!((rho - std::f64::consts::PI.powi(2) / 8.0).abs() < 1e-6);
}

#[test]
fn hadamard_exit_codes() {
    let o = divstat(&["hadamard", "paraboloid", "--grid", "x1:-1:1:3,x2:-1:1:3"]);
    assert_eq!(code(&o), 1);
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("scan.json");
    let o = divstat(&["hadamard", "half-plane-exp", "--grid", "x1:-5:5:10,x2:0.1:10:10", "--json", p.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(p).unwrap()).unwrap();
    assert_eq!(v["scans"].as_array().unwrap().len(), 2);
    assert_eq!(v["sigma_bounds"]["heuristic"], true);
}

#[test]
fn describe_reports_local_geometry() {
    let o = divstat(&["describe", "paraboloid", "--at", "1,0"]);
    assert_eq!(code(&o), 0);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["g"][0][0].as_f64().unwrap(), 1.0);
    assert_eq!(v["K"][0][0][0].as_f64().unwrap(), 1.5);
    assert_eq!(v["C"][0][0][0].as_f64().unwrap(), -3.0);
    for k in ["lc", "nabla", "bar", "lc-tilde"] {
        assert!(v["christoffel"][k].is_array());
    }
    assert!((v["christoffel"]["bar"][0][0][0].as_f64().unwrap() + 2.0).abs() < 1e-12);
}

#[test]
fn manifold_from_file() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("hyperbolic.json");
    fs::write(
        &p,
        r#"{"name": "hyperbolic", "dim": 2, "coords": ["u", "w"], "domain": "w > 0",
            "metric": [["1/w^2", "0"], ["0", "1/w^2"]], "sigma": "0"}"#,
    )
    .unwrap();
    let o = divstat(&["describe", p.to_str().unwrap(), "--at", "0,2"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["g"][0][0].as_f64().unwrap(), 0.25);
    fs::write(&p, "{ not json").unwrap();
    assert_eq!(code(&divstat(&["describe", p.to_str().unwrap(), "--at", "0,2"])), 2);
}
