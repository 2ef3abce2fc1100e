use std::path::{Path, PathBuf};

use hartree_lab::asymptotics::{AsymptoticProfile, ProfileOptions};
use hartree_lab::config::ExperimentConfig;
use hartree_lab::data::InitialData;
use hartree_lab::error::LabError;
use hartree_lab::estimates::VDecomposition;
use hartree_lab::grid::{Grid, GridSpec};
use hartree_lab::hartree::ModelParams;
use hartree_lab::mesh::GradedMesh;
use hartree_lab::report::{missing_artifacts, write_report, ARTIFACTS};
use hartree_lab::runner::{run_experiment, run_sweep, RunSummary};
use hartree_lab::solver::{solve_nonlinear_fixed_point, SolverConfig};

fn smoke(out: &Path) -> ExperimentConfig {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs/smoke.toml");
    let mut c = ExperimentConfig::load(&path).unwrap();
    c.output.dir = out.to_path_buf();
    c
}

#[test]
fn smoke_run_writes_every_artifact_and_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_experiment(&smoke(&dir.path().join("run"))).unwrap();
    assert!(out.summary.all_pass, "{:#?}", out.summary.failed().collect::<Vec<_>>());
    assert!(missing_artifacts(&out.dir).is_empty());
    assert_eq!(out.summary.checks.len() + out.summary.skipped.len(), 31);
    for c in &out.summary.checks {
        if let Some(csv) = &c.csv {
            assert!(out.dir.join(csv).exists(), "{csv}");
        }
    }
    let back = RunSummary::read(&out.dir).unwrap();
    assert_eq!(back.checks.len(), out.summary.checks.len());
    let report = write_report(&out.dir).unwrap();
    assert!(report.contains("ALL PASS"));
    assert!(report.contains("[transforms]"));
    assert!(!report.contains("GAPS"));
}

#[test]
fn runs_are_deterministic_for_a_seed() {
    let dir = tempfile::tempdir().unwrap();
    let mut a = smoke(&dir.path().join("a"));
    a.estimates_lab.checks = vec!["va_mass_drift".into(), "holder".into(), "involution".into(), "interpolation".into()];
    let mut b = a.clone();
    b.output.dir = dir.path().join("b");
    run_experiment(&a).unwrap();
    run_experiment(&b).unwrap();
    for f in ["csv/holder.csv", "csv/interpolation.csv", "fixed_point.csv", "trajectory.snap"] {
        let x = std::fs::read(dir.path().join("a").join(f)).unwrap();
        let y = std::fs::read(dir.path().join("b").join(f)).unwrap();
        assert!(x == y, "{f} differs between identical runs");
    }
}

#[test]
fn report_names_missing_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    match write_report(dir.path()) {
        Err(LabError::MissingArtifacts(m)) => assert_eq!(m.len(), ARTIFACTS.len()),
        other => panic!("expected missing artifacts, got {other:?}"),
    }
    let mut c = smoke(&dir.path().join("run"));
    c.estimates_lab.checks = vec!["involution".into()];
    let out = run_experiment(&c).unwrap();
    std::fs::remove_file(out.dir.join("profile.snap")).unwrap();
    let report = write_report(&out.dir).unwrap();
    assert!(report.contains("GAPS: missing artifacts profile.snap"));
}

#[test]
fn sweep_writes_one_directory_per_value() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = smoke(&dir.path().join("sweep"));
    c.estimates_lab.checks = vec!["uc_growth".into(), "holder".into()];
    let values = vec!["0.25".to_string(), "0.5".to_string()];
    let rep = run_sweep(&c, "initial_data.a0", &values).unwrap();
    assert_eq!(rep.runs.len(), 2);
    for (_, path, _) in &rep.runs {
        assert!(path.join("summary.json").exists());
    }
    assert!(dir.path().join("sweep/sweep.json").exists());
    assert!(rep.constants.iter().any(|r| r.constant == "growth"));
}

#[test]
fn invalid_configs_are_rejected_with_every_violation() {
    let text = "[hartree_core]\ngamma = 0.3\n[grid_spectral]\npoints = 12\n";
    let c = ExperimentConfig::from_toml_str(text).unwrap();
    let v = c.violations();
    assert!(v.iter().any(|m| m.contains("gamma")), "{v:?}");
    assert!(v.len() >= 2, "{v:?}");
    for typo in [
        "[hartree_core]\ngama = 0.4\n",
        "[initial_data]\nfamily = \"gaussian\"\na_0 = 0.4\n",
        "[cauchy_solver.calibration]\nsmalness = 1.0\n",
        "[estimates_lab.spot]\ntrails = 5\n",
    ] {
        assert!(ExperimentConfig::from_toml_str(typo).is_err(), "{typo}");
    }
}

fn free_residual(nodes: usize) -> f64 {
    let g = Grid::new(GridSpec::new(2, 32, 20.0).unwrap()).unwrap();
    let p = ModelParams { kappa: 0.0, ..Default::default() };
    let v0 = InitialData::default().sample(&g, p.rho, 0).unwrap();
    let mesh = GradedMesh::new(1.0, nodes, 6.0).unwrap();
    let prof = AsymptoticProfile::build(&v0, &mesh, &p, &ProfileOptions::default()).unwrap();
    let cfg = SolverConfig { t_final: Some(1.0), ..Default::default() };
    let v = solve_nonlinear_fixed_point(&v0, &cfg, &prof).unwrap().trajectory;
    VDecomposition::compute(&v, &prof).unwrap().max_residual()
}

#[test]
fn free_decomposition_residual_converges_under_refinement() {
    let r: Vec<f64> = [64, 128, 256].iter().map(|&k| free_residual(k)).collect();
    eprintln!("kappa = 0 residuals {r:?}");
    assert!(r[2] < 1e-4);
    for w in r.windows(2) {
        assert!((w[0] / w[1]).log2() >= 1.5, "{r:?}");
    }
}
