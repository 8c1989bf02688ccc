use std::path::PathBuf;
use std::process::{Command, Output};

fn hs(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hs"))
        .args(args)
        .env_remove("HS_THREADS")
        .output()
        .expect("hs runs")
}

fn config(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../configs")
        .join(name)
        .to_string_lossy()
        .into_owned()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn analytic_rho_prints_csv() {
    let o = hs(&["analytic", "rho", "--dim", "3", "--t", "1,8"]);
    assert!(o.status.success());
    // (3 t)^{1/3}
    assert_eq!(stdout(&o), "t,rho\n1,1.44224957\n8,2.88449914\n");
}

#[test]
fn analytic_rescale2d_prints_csv() {
    let o = hs(&["analytic", "rescale2d", "--lambda", "7.38905609893065"]);
    assert!(o.status.success());
    // e² log e = e², so the scale is e.
    assert_eq!(stdout(&o), "lambda,scale\n7.3890561,2.71828183\n");
}

#[test]
fn analytic_radius_starts_at_the_initial_radius() {
    let o = hs(&["analytic", "radius", "--t", "0,1,10"]);
    assert!(o.status.success());
    let out = stdout(&o);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines[0], "t,radius");
    assert_eq!(lines[1], "0,1.5");
    assert_eq!(lines.len(), 4);
}

#[test]
fn check_prints_the_resolved_config() {
    let o = hs(&["check", &config("radial.ini"), "--set", "grid.nodes=33"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let out = stdout(&o);
    assert!(out.contains("grid.nodes = 33\n"));
    assert!(out.contains("scenario = radial-validate\n"));
}

#[test]
fn config_errors_exit_with_4() {
    for args in [
        vec!["check".to_string(), "/nonexistent/config.ini".to_string()],
        vec!["check".to_string(), config("radial.ini"), "--set".to_string(), "grid.nodes=64".to_string()],
        vec!["check".to_string(), config("radial.ini"), "--set".to_string(), "bogus".to_string()],
        vec!["run".to_string()],
        vec!["frobnicate".to_string()],
    ] {
        let args: Vec<&str> = args.iter().map(String::as_str).collect();
        assert_eq!(hs(&args).status.code(), Some(4), "{args:?}");
    }
}

#[test]
fn bad_thread_count_is_a_config_error() {
    let o = Command::new(env!("CARGO_BIN_EXE_hs"))
        .args(["analytic", "rho"])
        .env("HS_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(4));
}

#[test]
fn box_touching_run_exits_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = format!("output.dir={}", dir.path().display());
    let o = hs(&[
        "run",
        &config("radial.ini"),
        "--set",
        "dim=2",
        "--set",
        "grid.extent=3",
        "--set",
        "grid.nodes=17",
        "--set",
        "time.ladder=1,100",
        "--set",
        &out,
    ]);
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn solver_failure_exits_with_3() {
    let dir = tempfile::tempdir().unwrap();
    let out = format!("output.dir={}", dir.path().display());
    let o = hs(&[
        "run",
        &config("radial.ini"),
        "--set",
        "solver.max_iter=3",
        "--set",
        "grid.nodes=33",
        "--set",
        &out,
    ]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn run_writes_csv_and_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let out = format!("output.dir={}", dir.path().display());
    let o = Command::new(env!("CARGO_BIN_EXE_hs"))
        .args([
            "run",
            &config("radial.ini"),
            "--set",
            "dim=2",
            "--set",
            "grid.extent=4",
            "--set",
            "grid.nodes=33",
            "--set",
            "time.ladder=0.5,1,2",
            "--set",
            &out,
            "--print",
        ])
        .env("HS_THREADS", "2")
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(dir.path().join("results.csv")).unwrap();
    assert_eq!(stdout(&o), csv);
    assert!(csv.starts_with(
        "scenario,t,lambda,r_min,r_max,defect,hausdorff,rho_target,alpha_fit,pde_res,comp_res,iters,wall_ms\n"
    ));
    assert_eq!(csv.lines().count(), 4);
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("run.json")).unwrap()).unwrap();
    assert_eq!(json["config"]["dim"], "2");
    assert!(json["seed"].is_u64());
    assert!(json["version"].is_string());
    let stderr = String::from_utf8_lossy(&o.stderr);
    assert!(stderr.contains("PASS radius_error_over_h") || stderr.contains("FAIL radius_error_over_h"));
}

#[test]
fn help_and_version_exit_cleanly() {
    assert!(hs(&["--help"]).status.success());
    let v = hs(&["--version"]);
    assert!(v.status.success());
    assert!(stdout(&v).starts_with("hs v"));
}
