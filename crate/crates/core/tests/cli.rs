use std::fs;
use std::path::Path;
use std::process::Command;

use pdfem::output::Summary;

const BASE: &str = "[domain]\nd = 1\n\n[discretization]\nh = 0.05\nepsilon = 0.15\nT = 0.2\n\n[material]\nc = 1\nbeta = 1\n\n[ic]\nu0 = sine_mode(1, 0.01)\n";

fn pdfem(dir: &Path, args: &[&str]) -> i32 {
    Command::new(env!("CARGO_BIN_EXE_pdfem"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
        .status
        .code()
        .expect("exit code")
}

fn write_config(dir: &Path, text: &str) {
    fs::write(dir.join("case.cfg"), text).unwrap();
}

fn summary(dir: &Path) -> Summary {
    Summary::parse(&fs::read_to_string(dir.join("summary.txt")).unwrap())
}

#[test]
fn run_writes_artifacts_with_auto_dt() {
    let tmp = tempfile::tempdir().unwrap();
    write_config(tmp.path(), BASE);
    assert_eq!(pdfem(tmp.path(), &["run", "--config", "case.cfg", "--out", "out"]), 0);
    let out = tmp.path().join("out");
    let s = summary(&out);
    assert_eq!(s.get("status"), Some("ok"));
    assert_eq!(s.get("dt_source"), Some("cfl"));
    let dt: f64 = s.get("dt").unwrap().parse().unwrap();
    let dt_max: f64 = s.get("dt_max").unwrap().parse().unwrap();
    assert!(dt <= 0.9 * dt_max);
    let steps: usize = s.get("steps").unwrap().parse().unwrap();
    let energy = fs::read_to_string(out.join("energy.csv")).unwrap();
    assert_eq!(energy.lines().count(), steps + 2);
    assert!(fs::read_to_string(out.join("snapshots.csv")).unwrap().starts_with("step,time,node,x0,u0,v0\n"));
}

#[test]
fn deterministic_reruns_are_identical() {
    let tmp = tempfile::tempdir().unwrap();
    write_config(tmp.path(), &format!("{BASE}\n[forcing]\nb = constant(0.5)\n"));
    for out in ["a", "b"] {
        assert_eq!(pdfem(tmp.path(), &["run", "--config", "case.cfg", "--out", out, "--deterministic"]), 0);
    }
    for file in ["snapshots.csv", "energy.csv"] {
        let a = fs::read(tmp.path().join("a").join(file)).unwrap();
        let b = fs::read(tmp.path().join("b").join(file)).unwrap();
        assert_eq!(a, b, "{file} differs");
    }
}

#[test]
fn instability_exits_four_and_still_reports() {
    let tmp = tempfile::tempdir().unwrap();
    let text = BASE.replace("T = 0.2", "T = 50\ndt = 0.5\nmodel = linear");
    write_config(tmp.path(), &text);
    assert_eq!(pdfem(tmp.path(), &["run", "--config", "case.cfg", "--out", "out"]), 4);
    let s = summary(&tmp.path().join("out"));
    assert_eq!(s.get("status"), Some("unstable"));
    assert!(s.get("unstable_step").is_some());
    assert!(tmp.path().join("out/snapshots.csv").exists());
}

#[test]
fn config_errors_exit_two() {
    let tmp = tempfile::tempdir().unwrap();
    write_config(tmp.path(), &format!("{BASE}\n[material]\nlambda = 1\n"));
    assert_eq!(pdfem(tmp.path(), &["run", "--config", "case.cfg", "--out", "out"]), 2);

    write_config(tmp.path(), &BASE.replace("c = 1\nbeta = 1", "c = 1\nbeta = 1\nlambda = 1\ng_c = 1"));
    assert_eq!(pdfem(tmp.path(), &["run", "--config", "case.cfg", "--out", "out"]), 2);

    write_config(tmp.path(), &BASE.replace("d = 1", "d = 3"));
    assert_eq!(pdfem(tmp.path(), &["run", "--config", "case.cfg", "--out", "out"]), 2);

    assert_eq!(pdfem(tmp.path(), &["run", "--config", "missing.cfg", "--out", "out"]), 2);
    assert_eq!(pdfem(tmp.path(), &["frobnicate"]), 2);
}

#[test]
fn print_config_round_trips() {
    let tmp = tempfile::tempdir().unwrap();
    write_config(tmp.path(), BASE);
    let out = Command::new(env!("CARGO_BIN_EXE_pdfem"))
        .current_dir(tmp.path())
        .args(["print-config", "--config", "case.cfg"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let a = pdfem::config::Config::parse(BASE, tmp.path()).unwrap();
    let b = pdfem::config::Config::parse(&text, tmp.path()).unwrap();
    assert_eq!(a, b);
}

#[test]
fn cfl_and_calibrate_report_keys() {
    let tmp = tempfile::tempdir().unwrap();
    write_config(tmp.path(), BASE);
    assert_eq!(pdfem::cli::run_cli(["pdfem", "cfl", "--config", &tmp.path().join("case.cfg").to_string_lossy(), "--out", &tmp.path().join("c").to_string_lossy()]), 0);
    let s = summary(&tmp.path().join("c"));
    let mu: f64 = s.get("mu_max").unwrap().parse().unwrap();
    let dt: f64 = s.get("dt_max").unwrap().parse().unwrap();
    assert!((dt - 2.0 / mu.sqrt()).abs() < 1e-12 * dt);

    assert_eq!(pdfem(tmp.path(), &["calibrate", "--config", "case.cfg", "--out", "k"]), 0);
    let s = summary(&tmp.path().join("k"));
    let lambda: f64 = s.get("lambda").unwrap().parse().unwrap();
    assert!(lambda > 0.0);
}

#[test]
fn estimate_for_exponent() {
    let tmp = tempfile::tempdir().unwrap();
    let text = BASE.replace("T = 0.2", "T = 0.2\ndt = 0.001")
        + "\n[verification]\nexponent = 8\nc_t = 1\nsup_u_h2 = 1\n";
    write_config(tmp.path(), &text);
    assert_eq!(pdfem(tmp.path(), &["estimate", "--config", "case.cfg", "--out", "e"]), 0);
    let s = summary(&tmp.path().join("e"));
    let product: f64 = s.get("exponent_times_growth").unwrap().parse().unwrap();
    assert!((product - 8.0 * 8f64.exp()).abs() < 1e-9);
}
