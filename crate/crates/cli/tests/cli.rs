use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_fluctlab"))
}

fn golden(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("golden").join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

#[test]
fn golden_config_reproduces_stored_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run.csv");
    let config = golden("golden.conf");
    let result = run(&[
        "verify-fluctuations",
        "--config",
        config.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&result), 0, "{}", String::from_utf8_lossy(&result.stderr));
    let produced = std::fs::read_to_string(&out).unwrap();
    let stored = std::fs::read_to_string(golden("golden.csv")).unwrap();
    assert_eq!(produced, stored);
}

#[test]
fn flags_override_the_config_file() {
    let config = golden("golden.conf");
    let result = run(&[
        "verify-fluctuations",
        "--config",
        config.to_str().unwrap(),
        "--seed",
        "5",
        "--n-grid",
        "8",
    ]);
    let csv = String::from_utf8(result.stdout).unwrap();
    let row: Vec<&str> = csv.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(&row[..6], &["2", "8", "1", "1", "2000", "5"]);
}

#[test]
fn configuration_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.conf");
    std::fs::write(&bad, "case = 1\nflavour = strange\n").unwrap();
    let asym = dir.path().join("asym.txt");
    std::fs::write(&asym, "2\n1 2\n0 1\n").unwrap();
    for args in [
        vec!["verify-fluctuations", "--samples", "5"],
        vec!["verify-fluctuations", "--case", "7"],
        vec!["verify-fluctuations", "--config", bad.to_str().unwrap()],
        vec!["verify-fluctuations", "--config", "/nonexistent/file.conf"],
        vec!["verify-fluctuations", "--d-matrix", asym.to_str().unwrap()],
        vec!["exact-check", "--n-grid", "9"],
        vec!["cumulant-scan", "--order", "6", "--n-grid", "8,16", "--samples", "100"],
        vec!["verify-fluctuations", "--bogus-flag"],
    ] {
        let out = run(&args);
        assert_eq!(code(&out), 2, "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    }
}

#[test]
fn failing_rows_exit_with_one() {
    // diagonal D makes Tr Y vanish identically, so the limit is not approached
    let out = run(&["verify-fluctuations", "--n-grid", "8", "--samples", "200"]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8(out.stdout)
        .unwrap()
        .lines()
        .nth(1)
        .unwrap()
        .ends_with(",false"));
}

#[test]
fn missing_output_directory_names_the_path() {
    let out = run(&[
        "verify-fluctuations",
        "--n-grid",
        "8",
        "--samples",
        "100",
        "--out",
        "/no/such/dir/out.csv",
    ]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("/no/such/dir/out.csv"));
}

#[test]
fn explicit_matrix_file_drives_the_exact_check() {
    let matrix = golden("d3.txt");
    let out = run(&[
        "exact-check",
        "--case",
        "haar",
        "--d-matrix",
        matrix.to_str().unwrap(),
        "--poly",
        "0,1,1",
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let csv = String::from_utf8(out.stdout).unwrap();
    assert!(csv.starts_with("case,N,lhs_re"));
    assert!(csv.lines().nth(1).unwrap().starts_with("haar,3,"));
}

#[test]
fn cumulant_scan_writes_a_table() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("scan.csv");
    let result = run(&[
        "cumulant-scan",
        "--case",
        "1",
        "--m1",
        "2",
        "--m2",
        "2",
        "--n-grid",
        "8,16",
        "--samples",
        "400",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(code(&result) <= 1);
    let text = std::fs::read_to_string(out).unwrap();
    assert_eq!(text.lines().count(), 3);
    assert!(text.starts_with("N,order,cumulant_re"));
}

#[test]
fn classify_pairings_agrees_with_scan() {
    let out = run(&["classify-pairings", "--m1", "2", "--m2", "2"]);
    assert_eq!(code(&out), 0);
    assert!(String::from_utf8(out.stdout)
        .unwrap()
        .contains("8 pairings; exhaustive scan finds 8; sets agree"));
}

#[test]
fn selftest_passes() {
    let out = run(&["selftest"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stdout));
    assert!(!String::from_utf8(out.stdout).unwrap().contains("FAIL"));
}
