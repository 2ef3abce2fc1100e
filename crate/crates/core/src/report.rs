//! Plain-text report of a finished run directory.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{LabError, Result};
use crate::estimates::CheckRecord;
use crate::runner::RunSummary;

/// Files a complete run directory holds.
pub const ARTIFACTS: [&str; 6] = [
    "summary.json",
    "config.toml",
    "trajectory.snap",
    "profile.snap",
    "fixed_point.csv",
    "csv",
];

const MODULES: [&str; 4] = ["asymptotics", "cauchy_solver", "transforms", "estimates_lab"];

pub fn missing_artifacts(dir: &Path) -> Vec<String> {
    ARTIFACTS
        .iter()
        .filter(|a| !dir.join(a).exists())
        .map(|a| a.to_string())
        .collect()
}

fn num(v: Option<f64>) -> String {
    match v {
        Some(x) if x == 0.0 || (x.abs() >= 1e-2 && x.abs() < 1e4) => format!("{x:.4}"),
        Some(x) => format!("{x:.3e}"),
        None => "-".into(),
    }
}

fn row(c: &CheckRecord, dir: &Path) -> Vec<String> {
    let csv = match &c.csv {
        Some(rel) if dir.join(rel).exists() => rel.clone(),
        Some(rel) => format!("{rel} (missing)"),
        None => "-".into(),
    };
    let slope = match (c.slope, c.slope_ci) {
        (Some(s), Some(ci)) => format!("{s:.4} ± {ci:.3}"),
        _ => "-".into(),
    };
    vec![
        c.id.clone(),
        c.quantity.clone(),
        c.bound.clone(),
        num(c.predicted),
        slope,
        num(c.band),
        num(c.value),
        num(c.limit),
        if c.pass { "pass".into() } else { "FAIL".into() },
        csv,
    ]
}

fn table(out: &mut String, header: &[&str], rows: &[Vec<String>]) {
    let mut widths: Vec<usize> = header.iter().map(|h| h.chars().count()).collect();
    for r in rows {
        for (w, cell) in widths.iter_mut().zip(r) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let line = |cells: Vec<&str>| {
        let parts: Vec<String> = cells
            .iter()
            .zip(&widths)
            .map(|(c, w)| format!("{c}{}", " ".repeat(w - c.chars().count())))
            .collect();
        parts.join("  ").trim_end().to_string()
    };
    let _ = writeln!(out, "{}", line(header.to_vec()));
    let _ = writeln!(
        out,
        "{}",
        widths.iter().map(|w| "-".repeat(*w)).collect::<Vec<_>>().join("  ")
    );
    for r in rows {
        let _ = writeln!(out, "{}", line(r.iter().map(String::as_str).collect()));
    }
}

/// Render the report; fails only when `summary.json` itself is absent or unreadable.
pub fn write_report(dir: &Path) -> Result<String> {
    let missing = missing_artifacts(dir);
    if missing.iter().any(|m| m == "summary.json") {
        return Err(LabError::MissingArtifacts(missing));
    }
    let summary = RunSummary::read(dir)?;
    let m = &summary.metadata;
    let mut out = String::new();
    let _ = writeln!(out, "run: {}", dir.display());
    let _ = writeln!(
        out,
        "grid {}^{} on [-{}, {}), K = {} (grading {}), T = {:.4e}, a_0 = {:.4}, seed {}",
        m.grid.points,
        m.grid.dim,
        m.grid.length / 2.0,
        m.grid.length / 2.0,
        m.nodes,
        m.grading,
        m.t_final,
        m.a0,
        m.seed
    );
    let _ = writeln!(
        out,
        "gamma = {}, rho = {}, kappa = {}, n = {}; {} threads, {:.1} s wall clock",
        m.params.gamma, m.params.rho, m.params.kappa, m.params.n, m.threads, m.wall_clock_seconds
    );
    if !missing.is_empty() {
        let _ = writeln!(out, "\nGAPS: missing artifacts {}", missing.join(", "));
    }
    let header = [
        "check", "quantity", "bound", "predicted", "slope", "band", "value", "limit", "verdict", "csv",
    ];
    for module in MODULES {
        let rows: Vec<Vec<String>> = summary
            .checks
            .iter()
            .filter(|c| c.module == module)
            .map(|c| row(c, dir))
            .collect();
        if rows.is_empty() {
            continue;
        }
        let _ = writeln!(out, "\n[{module}]");
        table(&mut out, &header, &rows);
    }
    let notes: Vec<&CheckRecord> = summary.checks.iter().filter(|c| !c.note.is_empty()).collect();
    if !notes.is_empty() {
        let _ = writeln!(out, "\nnotes:");
        for c in notes {
            let _ = writeln!(out, "  {}: {}", c.id, c.note);
        }
    }
    if !summary.skipped.is_empty() {
        let _ = writeln!(out, "\nskipped:");
        for s in &summary.skipped {
            let _ = writeln!(out, "  {} ({}): {}", s.id, s.module, s.reason);
        }
    }
    if !summary.constants.is_empty() {
        let _ = writeln!(out, "\nconstants needed:");
        for (k, v) in &summary.constants {
            let _ = writeln!(out, "  {k} = {v:.4e}");
        }
    }
    let failed = summary.failed().count();
    let _ = writeln!(
        out,
        "\n{} checks, {} failed, {} skipped: {}",
        summary.checks.len(),
        failed,
        summary.skipped.len(),
        if summary.all_pass { "ALL PASS" } else { "FAILURES" }
    );
    Ok(out)
}
