//! Runs the `rgg` binary end to end.

use std::path::Path;
use std::process::{Command, Output};

fn rgg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rgg"))
        .args(args)
        .env_remove("RGG_WORKERS")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn ok(args: &[&str]) -> String {
    let o = rgg(args);
    assert!(o.status.success(), "{args:?} failed: {}", stderr(&o));
    stdout(&o)
}

fn value_of(text: &str, key: &str) -> f64 {
    text.lines()
        .find_map(|l| l.strip_prefix(&format!("{key}: ")))
        .unwrap_or_else(|| panic!("no `{key}` in {text}"))
        .parse()
        .unwrap()
}

fn simulate(out: &Path, extra: &[&str]) -> Output {
    let mut args = vec![
        "simulate", "--n", "300", "--k", "1", "--trials", "40", "--seed", "42", "--out",
    ];
    args.push(out.to_str().unwrap());
    args.extend_from_slice(extra);
    rgg(&args)
}

#[test]
fn xi_for_unit_cube() {
    let v: f64 = ok(&["xi", "--k", "1", "--c", "0", "--area", "6"])
        .trim()
        .parse()
        .unwrap();
    assert!((v - 0.775448897627).abs() < 1e-11);
    let v: f64 = ok(&["xi", "--k", "2", "--c", "0", "--area", "6"])
        .trim()
        .parse()
        .unwrap();
    assert!((v + 0.872469535375).abs() < 1e-11);
}

#[test]
fn radius_values() {
    let v: f64 = ok(&["radius", "--n", "1e6", "--k", "1", "--xi", "0"])
        .trim()
        .parse()
        .unwrap();
    assert!((v - 0.0248846248093).abs() < 1e-12);
    let v: f64 = ok(&["radius", "--dim", "2", "--n", "1e6", "--k", "0", "--c", "0"])
        .trim()
        .parse()
        .unwrap();
    assert!((v - 0.00209704878181).abs() < 1e-13);
}

#[test]
fn three_dimensional_k_zero_is_rejected() {
    let o = rgg(&["xi", "--k", "0", "--c", "0", "--area", "6"]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("k ≥ 1"));
    let o = rgg(&["radius", "--n", "1e6", "--k", "0", "--xi", "0"]);
    assert!(!o.status.success());
}

#[test]
fn nonpositive_numerator_names_the_term() {
    let o = rgg(&["radius", "--n", "10", "--k", "1", "--xi", "-100"]);
    assert!(!o.status.success());
    let err = stderr(&o);
    assert!(err.contains("nonpositive") && err.contains("ξ"), "{err}");
}

#[test]
fn unknown_region_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = rgg(&[
        "simulate",
        "--region",
        "blob",
        "--n",
        "100",
        "--k",
        "1",
        "--trials",
        "2",
        "--out",
        dir.path().join("x.csv").to_str().unwrap(),
    ]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("blob"));
    let o = rgg(&["integral", "--region", "blob", "--n", "1e6", "--k", "1"]);
    assert!(!o.status.success());
}

#[test]
fn integral_one_dimensional_ratio() {
    let out = ok(&["integral", "--n", "1e12", "--k", "1", "--estimator", "1d"]);
    let ratio = value_of(&out, "ratio");
    assert!((ratio - 1.0606).abs() < 1e-3, "{out}");
    assert!(out.lines().any(|l| l.starts_with("csv: region,")));
}

#[test]
fn integral_layered_cube_reports_error() {
    let out = ok(&["integral", "--n", "1e6", "--k", "1"]);
    assert_eq!(
        out.lines().find(|l| l.starts_with("estimator:")),
        Some("estimator: layered")
    );
    assert!(value_of(&out, "value") > 0.0);
    assert!(value_of(&out, "error") >= 0.0);
}

#[test]
fn simulate_writes_rows_and_reruns_identically() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    assert!(simulate(&a, &["--workers", "1"]).status.success());
    assert!(simulate(&b, &["--workers", "3"]).status.success());
    let text = std::fs::read_to_string(&a).unwrap();
    assert_eq!(text.lines().count(), 41);
    assert_eq!(
        text.lines().next().unwrap(),
        "trial,count,rho_delta,rho_kappa,r_n,below_delta,below_kappa,equal"
    );
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert_eq!(
        std::fs::read(dir.path().join("a.summary.json")).unwrap(),
        std::fs::read(dir.path().join("b.summary.json")).unwrap()
    );
}

#[test]
fn poisson_counts_vary() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("p.csv");
    assert!(simulate(&p, &["--process", "poisson"]).status.success());
    let counts: Vec<String> = std::fs::read_to_string(&p)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().to_owned())
        .collect();
    assert!(counts.iter().any(|c| c != &counts[0]));
}

#[test]
fn analyze_round_trip_and_corruption() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("r.csv");
    assert!(simulate(&p, &[]).status.success());
    let out = ok(&["analyze", p.to_str().unwrap()]);
    assert!(out.contains("trials: 40"));
    assert!(out.contains("summary: matches"));

    let text = std::fs::read_to_string(&p).unwrap();
    let mut lines: Vec<String> = text.lines().map(str::to_owned).collect();
    let row = &mut lines[3];
    let last = if row.ends_with('1') { "0" } else { "1" };
    row.replace_range(row.len() - 1.., last);
    std::fs::write(&p, lines.join("\n") + "\n").unwrap();
    let o = rgg(&["analyze", p.to_str().unwrap()]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("line 4"), "{}", stderr(&o));
}

#[test]
fn analyze_rejects_malformed_files() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty.csv");
    std::fs::write(&empty, "").unwrap();
    let o = rgg(&["analyze", empty.to_str().unwrap()]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("empty"));

    let bad = dir.path().join("bad.csv");
    std::fs::write(
        &bad,
        "trial,count,rho_delta,rho_kappa,r_n,below_delta,below_kappa,equal\n0,200,abc,0.2,0.3,1,1,1\n",
    )
    .unwrap();
    let o = rgg(&["analyze", bad.to_str().unwrap()]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("line 2"), "{}", stderr(&o));

    let o = rgg(&["analyze", dir.path().join("missing.csv").to_str().unwrap()]);
    assert!(!o.status.success());
}

#[test]
fn config_file_supplies_defaults_and_flags_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "# cube, unit area scaling\nk = 1\nc = 0\narea = 6\n").unwrap();
    let v: f64 = ok(&["--config", cfg.to_str().unwrap(), "xi"])
        .trim()
        .parse()
        .unwrap();
    assert!((v - 0.775448897627).abs() < 1e-11);
    let v: f64 = ok(&["--config", cfg.to_str().unwrap(), "xi", "--k", "2"])
        .trim()
        .parse()
        .unwrap();
    assert!((v + 0.872469535375).abs() < 1e-11);
}

#[test]
fn workers_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    assert!(simulate(&a, &["--workers", "1"]).status.success());
    let o = Command::new(env!("CARGO_BIN_EXE_rgg"))
        .args([
            "simulate", "--n", "300", "--k", "1", "--trials", "40", "--seed", "42", "--out",
        ])
        .arg(&b)
        .env("RGG_WORKERS", "2")
        .output()
        .unwrap();
    assert!(o.status.success());
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());

    let o = Command::new(env!("CARGO_BIN_EXE_rgg"))
        .args([
            "simulate", "--n", "300", "--k", "1", "--trials", "4", "--out",
        ])
        .arg(&b)
        .env("RGG_WORKERS", "many")
        .output()
        .unwrap();
    assert!(!o.status.success());
}
