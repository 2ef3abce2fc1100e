use std::path::PathBuf;
use std::process::Command;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_hartree-lab"));
    c.env("HARTREE_LAB_THREADS", "1");
    c
}

fn configs() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

#[test]
fn validate_accepts_shipped_configs() {
    for name in ["default.toml", "smoke.toml"] {
        let out = bin().arg("validate").arg(configs().join(name)).output().unwrap();
        assert_eq!(out.status.code(), Some(0), "{name}: {}", String::from_utf8_lossy(&out.stdout));
    }
}

#[test]
fn validate_lists_violations_and_exits_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    std::fs::write(&path, "[hartree_core]\ngamma = 0.3\n").unwrap();
    let out = bin().arg("validate").arg(&path).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stdout).contains("violation: gamma"));
}

#[test]
fn oracle_runs_by_name() {
    let out = bin().args(["oracle", "riesz_radial"]).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("pass"));
    let bad = bin().args(["oracle", "nonsense"]).output().unwrap();
    assert_ne!(bad.status.code(), Some(0));
}

#[test]
fn smoke_run_then_report() {
    let dir = tempfile::tempdir().unwrap();
    let run_dir = dir.path().join("smoke");
    let out = bin()
        .arg("run")
        .arg(configs().join("smoke.toml"))
        .arg("--out")
        .arg(&run_dir)
        .args(["--seed", "3"])
        .output()
        .unwrap();
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert_eq!(out.status.code(), Some(0), "{stdout}{}", String::from_utf8_lossy(&out.stderr));
    assert!(stdout.contains("ALL PASS"));
    let rep = bin().arg("report").arg(&run_dir).output().unwrap();
    assert_eq!(rep.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&rep.stdout).contains("seed 3"));
}

#[test]
fn failing_check_gives_nonzero_exit() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("strict.toml");
    let text = std::fs::read_to_string(configs().join("smoke.toml")).unwrap().replace(
        "[estimates_lab]\n",
        "[estimates_lab]\nholder_band_limit = 1.0\nchecks = [\"holder\", \"involution\"]\n",
    );
    std::fs::write(&path, text).unwrap();
    let out = bin().arg("run").arg(&path).arg("--out").arg(dir.path().join("r")).output().unwrap();
    assert_eq!(out.status.code(), Some(1), "{}", String::from_utf8_lossy(&out.stdout));
    assert!(String::from_utf8_lossy(&out.stdout).contains("FAIL"));
}

#[test]
fn report_on_empty_directory_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin().arg("report").arg(dir.path()).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("summary.json"));
}
