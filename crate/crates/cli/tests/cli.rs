use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn orbcorr(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_orbcorr"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn fixture(name: &str) -> String {
    format!("{}/../core/tests/data/{name}.fcidump", env!("CARGO_MANIFEST_DIR"))
}

fn out_dir(dir: &Path) -> &str {
    dir.to_str().unwrap()
}

#[test]
fn hubbard_dimer_energy() {
    let dir = tempfile::tempdir().unwrap();
    let o = orbcorr(&["fci", "--hubbard", "2", "--t", "1", "--u", "4", "--nelec", "2", "--out", out_dir(dir.path())]);
    assert!(o.status.success());
    assert!(stdout(&o).starts_with("energy = -0.828427125\n"));
    let wfn = fs::read_to_string(dir.path().join("wavefunction.txt")).unwrap();
    assert!(wfn.starts_with("4 1 1\n"));

    let o = orbcorr(&["fci", "--hubbard", "2", "--t", "1", "--u", "0", "--nelec", "2", "--out", out_dir(dir.path())]);
    assert!(stdout(&o).starts_with("energy = -2.000000000\n"));
}

#[test]
fn fcidump_energy_and_chi_truncation() {
    let dir = tempfile::tempdir().unwrap();
    let o = orbcorr(&["fci", &fixture("lih_sto3g"), "--chi", "5", "--out", out_dir(dir.path())]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).starts_with("energy = -7.882324379\n"));
    let wfn = fs::read_to_string(dir.path().join("wavefunction.txt")).unwrap();
    assert_eq!(wfn.lines().count(), 6);
    let json = fs::read_to_string(dir.path().join("fci.json")).unwrap();
    let v: serde_json::Value = serde_json::from_str(&json).unwrap();
    assert_eq!(v["entropy_unit"], "nats");
    assert_eq!(v["chi"], 5);
    assert_eq!(v["version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(v["determinants_written"], 5);
    assert!(v["config"].get("workers").is_none());
}

#[test]
fn bell_state_report() {
    let dir = tempfile::tempdir().unwrap();
    let wfn = dir.path().join("bell.txt");
    fs::write(&wfn, "2 1 0\n10 0.7071067811865476\n01 0.7071067811865476\n").unwrap();
    let o = orbcorr(&["analyze", wfn.to_str().unwrap(), "--out", out_dir(dir.path())]);
    assert!(o.status.success());
    let v: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(v["l1_percent"], 50.0);
    assert!(v["mi_quantum"][0][0].is_null());
    let heat = fs::read_to_string(dir.path().join("heatmap.csv")).unwrap();
    let rows: Vec<&str> = heat.lines().collect();
    assert_eq!(rows[0], "qubit,0,1");
    assert_eq!(rows[1], "0,,1.38629436112");
    assert_eq!(rows[2], "1,0.69314718056,");
    let curves = fs::read_to_string(dir.path().join("curves.csv")).unwrap();
    assert_eq!(curves.lines().count(), 3);
}

#[test]
fn single_determinant_has_undefined_l1() {
    let dir = tempfile::tempdir().unwrap();
    let wfn = dir.path().join("hf.txt");
    fs::write(&wfn, "4 1 1\n1010 1.0\n").unwrap();
    let o = orbcorr(&["analyze", wfn.to_str().unwrap(), "--out", out_dir(dir.path()), "--format", "json"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("l1_percent = undefined"));
    let v: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert!(v["l1_percent"].is_null());
    assert!(v["mi_quantum"][0][1] == 0.0);
    assert!(!dir.path().join("heatmap.csv").exists());
}

#[test]
fn input_errors_exit_with_code_two() {
    let o = orbcorr(&["analyze", "/no/such/wavefunction.txt"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("/no/such/wavefunction.txt"));

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.fcidump");
    fs::write(&bad, "NORB=2\n").unwrap();
    let o = orbcorr(&["fci", bad.to_str().unwrap(), "--nelec", "2", "--out", out_dir(dir.path())]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("bad.fcidump"));
}

#[test]
fn ino_trace_and_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let o = orbcorr(&["ino", "--hubbard", "2", "--u", "4", "--nelec", "2", "--out", out_dir(dir.path())]);
    assert!(o.status.success());
    let trace = fs::read_to_string(dir.path().join("ino_trace.csv")).unwrap();
    let rows: Vec<&str> = trace.lines().collect();
    assert_eq!(rows[0], "iter,energy,gamma,l1_percent");
    assert_eq!(*rows.last().unwrap(), "# converged=true");
    let last: Vec<f64> = rows[rows.len() - 2].split(',').map(|f| f.parse().unwrap()).collect();
    let first: Vec<f64> = rows[1].split(',').map(|f| f.parse().unwrap()).collect();
    assert!(last[2] < 1e-8);
    assert!(last[3] <= first[3]);
    assert!(dir.path().join("final.fcidump").exists());
    assert!(dir.path().join("final_wavefunction.txt").exists());

    // the final basis is a fixed point
    let fixed = dir.path().join("final.fcidump");
    let again = dir.path().join("again");
    let o = orbcorr(&["ino", fixed.to_str().unwrap(), "--nelec", "2", "--out", again.to_str().unwrap()]);
    assert!(o.status.success());
    let trace = fs::read_to_string(again.join("ino_trace.csv")).unwrap();
    assert_eq!(trace.lines().count(), 3);
}

#[test]
fn ino_iteration_cap_is_not_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = orbcorr(&[
        "ino", "--hubbard", "3", "--u", "2", "--nelec", "3", "--max-iter", "1", "--out", out_dir(dir.path()),
    ]);
    assert!(o.status.success());
    let trace = fs::read_to_string(dir.path().join("ino_trace.csv")).unwrap();
    assert!(trace.ends_with("# converged=false\n"));
}

#[test]
fn usage_errors() {
    assert!(!orbcorr(&["fci", "--hubbard", "2", "--nelec", "2"]).status.success());
    assert!(!orbcorr(&["fci"]).status.success());
    let dir = tempfile::tempdir().unwrap();
    let o = orbcorr(&["fci", "--hubbard", "2", "--u", "1", "--nelec", "2", "--ms2", "1", "--out", out_dir(dir.path())]);
    assert_eq!(o.status.code(), Some(1));
    assert!(!orbcorr(&["analyze", "x", "--chi", "0"]).status.success());
}
