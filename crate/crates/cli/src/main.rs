use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use hartree_lab::config::ExperimentConfig;
use hartree_lab::oracles::{run_oracle, ORACLE_NAMES};
use hartree_lab::report::write_report;
use hartree_lab::runner::{run_experiment, run_sweep, with_thread_pool, RunSummary, THREADS_ENV};

#[derive(Parser)]
#[command(name = "hartree-lab", version, about = "Modified wave operator experiments for long-range Hartree equations")]
#[command(after_help = "Worker threads: set HARTREE_LAB_THREADS (default: all cores).")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Overrides {
    /// Grid points per axis.
    #[arg(long)]
    grid: Option<usize>,
    /// Final time `T` (skips the smallness relation).
    #[arg(long)]
    tfinal: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Check a config against every precondition.
    Validate { config: PathBuf },
    /// Run the pipeline and all registered checks.
    Run {
        config: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// One run per value of a config key, plus a constant-stability report.
    Sweep {
        config: PathBuf,
        /// `key=v1,v2,...`, key in dotted form such as `initial_data.a0`.
        #[arg(long)]
        vary: String,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Print the tables of a finished run directory.
    Report { run_dir: PathBuf },
    /// Run a named brute-force oracle.
    Oracle {
        #[arg(value_parser = ORACLE_NAMES)]
        name: String,
        #[arg(long)]
        grid: Option<usize>,
    },
}

fn load(path: &PathBuf, o: &Overrides) -> Result<ExperimentConfig, String> {
    let mut cfg = ExperimentConfig::load(path).map_err(|e| e.to_string())?;
    cfg.apply_overrides(o.grid, o.tfinal, o.seed);
    if let Some(dir) = &o.out {
        cfg.output.dir = dir.clone();
    }
    cfg.validate().map_err(|e| e.to_string())?;
    Ok(cfg)
}

fn run(cli: Cli) -> Result<bool, String> {
    match cli.command {
        Command::Validate { config } => {
            let text = std::fs::read_to_string(&config).map_err(|e| format!("{}: {e}", config.display()))?;
            let cfg = ExperimentConfig::from_toml_str(&text).map_err(|e| e.to_string())?;
            let v = cfg.violations();
            if v.is_empty() {
                println!("{}: valid", config.display());
                Ok(true)
            } else {
                for line in &v {
                    println!("violation: {line}");
                }
                Ok(false)
            }
        }
        Command::Run { config, overrides } => {
            let cfg = load(&config, &overrides)?;
            let out = run_experiment(&cfg).map_err(|e| e.to_string())?;
            print!("{}", write_report(&out.dir).map_err(|e| e.to_string())?);
            Ok(out.summary.all_pass)
        }
        Command::Sweep { config, vary, overrides } => {
            let cfg = load(&config, &overrides)?;
            let (key, values) = vary
                .split_once('=')
                .ok_or_else(|| format!("--vary expects key=v1,v2,..., got `{vary}`"))?;
            let values: Vec<String> = values.split(',').map(|s| s.trim().to_string()).collect();
            let report = run_sweep(&cfg, key, &values).map_err(|e| e.to_string())?;
            for (v, dir, pass) in &report.runs {
                println!("{key} = {v}: {} ({})", if *pass { "pass" } else { "FAIL" }, dir.display());
            }
            println!("\nconstant stability across runs:");
            for row in &report.constants {
                let vals: Vec<String> = row.values.iter().map(|(v, c)| format!("{v}: {c:.4e}")).collect();
                let cal = row.calibrated.map_or("-".to_string(), |c| format!("{c}"));
                println!(
                    "  {:18} spread {:8.3}  calibrated {:8}  {}  [{}]",
                    row.constant,
                    row.spread,
                    cal,
                    if row.pass { "pass" } else { "FAIL" },
                    vals.join(", ")
                );
            }
            println!("\nwrote {}", cfg.output.dir.join("sweep.json").display());
            Ok(report.all_pass)
        }
        Command::Report { run_dir } => {
            print!("{}", write_report(&run_dir).map_err(|e| e.to_string())?);
            let summary = RunSummary::read(&run_dir).map_err(|e| e.to_string())?;
            Ok(summary.all_pass)
        }
        Command::Oracle { name, grid } => {
            let r = run_oracle(&name, grid).map_err(|e| e.to_string())?;
            println!("{}", r.description);
            println!("  reference {:.15e}", r.reference);
            println!("  computed  {:.15e}", r.computed);
            println!("  error     {:.3e} (tolerance {:.0e}): {}", r.error, r.tolerance, if r.pass { "pass" } else { "FAIL" });
            Ok(r.pass)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match with_thread_pool(|| run(cli)) {
        Ok(Ok(true)) => ExitCode::SUCCESS,
        Ok(Ok(false)) => ExitCode::from(1),
        Ok(Err(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e} (check {THREADS_ENV})");
            ExitCode::from(2)
        }
    }
}
