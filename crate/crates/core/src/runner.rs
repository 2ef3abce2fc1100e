//! Experiment pipeline: profile, fixed point, dressing, then the check registry.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::asymptotics::AsymptoticProfile;
use crate::config::ExperimentConfig;
use crate::data::InitialData;
use crate::error::{LabError, Result};
use crate::estimates::{
    exponent_ordering_check, holder_continuity_check, holder_exponent, holder_series, pairing_sup_series,
    series_from, verify_bound, write_series_csv, BoundOptions, CheckRecord, VDecomposition,
};
use crate::grid::{Grid, GridSpec, NormSpec, SpectralField, DEFAULT_PM_EPSILON};
use crate::hartree::ModelParams;
use crate::inequalities::{inequality_spot_check, InequalityCase};
use crate::snapshot::Snapshot;
use crate::solver::{
    a1_of, difference_monitor, gronwall_constant_needed, solve_linearized, solve_nonlinear_fixed_point,
    FixedPointRun, SolverConfig,
};
use crate::trajectory::Trajectory;
use crate::transforms::{free_propagate, growth_envelope, pseudoconformal_invert, DressedState};

/// Environment variable holding the worker thread count.
pub const THREADS_ENV: &str = "HARTREE_LAB_THREADS";

/// `(id, module, meaningful at κ = 0)`.
pub const REGISTRY: &[(&str, &str, bool)] = &[
    ("va_mass_drift", "asymptotics", true),
    ("s0_alpha0", "asymptotics", false),
    ("s0_alpha1", "asymptotics", false),
    ("sb", "asymptotics", false),
    ("sc", "asymptotics", false),
    ("sc_two_forms", "asymptotics", false),
    ("phi", "asymptotics", false),
    ("linear_l2_drift", "cauchy_solver", true),
    ("fixed_point", "cauchy_solver", true),
    ("holder", "cauchy_solver", true),
    ("gronwall", "cauchy_solver", true),
    ("difference_scaling", "cauchy_solver", false),
    ("involution", "transforms", true),
    ("unitarity", "transforms", true),
    ("uc_growth", "transforms", true),
    ("decomposition_residual", "estimates_lab", true),
    ("v2_assembly", "estimates_lab", false),
    ("v1", "estimates_lab", false),
    ("v2", "estimates_lab", false),
    ("v3", "estimates_lab", false),
    ("v5", "estimates_lab", false),
    ("v4_pairing", "estimates_lab", false),
    ("cutoff_v1", "estimates_lab", false),
    ("cutoff_v3", "estimates_lab", false),
    ("cutoff_v4", "estimates_lab", false),
    ("cutoff_v5", "estimates_lab", false),
    ("exponent_ordering", "estimates_lab", true),
    ("interpolation", "estimates_lab", true),
    ("leibniz", "estimates_lab", true),
    ("product", "estimates_lab", true),
    ("commutator", "estimates_lab", true),
];

pub const CHECK_IDS: [&str; 31] = {
    let mut out = [""; 31];
    let mut i = 0;
    while i < 31 {
        out[i] = REGISTRY[i].0;
        i += 1;
    }
    out
};

pub fn module_of(id: &str) -> Option<&'static str> {
    REGISTRY.iter().find(|r| r.0 == id).map(|r| r.1)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SkippedCheck {
    pub id: String,
    pub module: String,
    pub reason: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunMetadata {
    pub version: String,
    pub seed: u64,
    pub grid: GridSpec,
    pub params: ModelParams,
    pub nodes: usize,
    pub grading: f64,
    pub t_final: f64,
    pub a0: f64,
    pub threads: usize,
    pub fixed_point_iterations: usize,
    pub stage_seconds: Vec<(String, f64)>,
    pub wall_clock_seconds: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunSummary {
    pub all_pass: bool,
    pub checks: Vec<CheckRecord>,
    pub skipped: Vec<SkippedCheck>,
    /// Constants each calibrated bound needed on this run.
    pub constants: BTreeMap<String, f64>,
    pub metadata: RunMetadata,
}

impl RunSummary {
    pub fn read(dir: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(dir.join("summary.json"))?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn failed(&self) -> impl Iterator<Item = &CheckRecord> {
        self.checks.iter().filter(|c| !c.pass)
    }
}

/// Thread count from [`THREADS_ENV`], if set to a positive integer.
pub fn thread_count() -> Option<usize> {
    std::env::var(THREADS_ENV).ok()?.trim().parse().ok().filter(|&n| n > 0)
}

/// Run `f` on a pool sized by [`THREADS_ENV`] (rayon's default otherwise).
pub fn with_thread_pool<R: Send>(f: impl FnOnce() -> R + Send) -> Result<R> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = thread_count() {
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| LabError::Config(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}

/// Everything the checks read.
struct Context<'a> {
    cfg: &'a ExperimentConfig,
    params: ModelParams,
    grid: Arc<Grid>,
    v0: SpectralField,
    a0: f64,
    t_final: f64,
    solver: SolverConfig,
    profile: AsymptoticProfile,
    fp: FixedPointRun,
    decomp: Option<VDecomposition>,
}

struct Outcome {
    record: CheckRecord,
    series: Option<(Vec<(f64, f64)>, f64)>,
    constant: Option<(&'static str, f64)>,
}

impl Outcome {
    fn plain(record: CheckRecord) -> Self {
        Outcome {
            record,
            series: None,
            constant: None,
        }
    }

    fn with_series(mut self, series: Vec<(f64, f64)>, predicted: f64) -> Self {
        self.series = Some((series, predicted));
        self
    }

    fn with_constant(mut self, name: &'static str, value: f64) -> Self {
        self.constant = Some((name, value));
        self
    }
}

pub struct RunOutput {
    pub dir: PathBuf,
    pub summary: RunSummary,
}

fn timed<T>(stages: &mut Vec<(String, f64)>, name: &'static str, f: impl FnOnce() -> Result<T>) -> Result<T> {
    let start = Instant::now();
    let out = f().map_err(|e| e.in_stage(name))?;
    stages.push((name.to_string(), start.elapsed().as_secs_f64()));
    Ok(out)
}

fn thin(traj: &Trajectory, stride: usize) -> Result<Trajectory> {
    let n = traj.len();
    let keep: Vec<usize> = (0..n).filter(|k| k % stride == 0 || *k == n - 1).collect();
    Trajectory::new(
        keep.iter().map(|&k| traj.times()[k]).collect(),
        keep.iter().map(|&k| traj.state(k).clone()).collect(),
    )
}

/// Run the full pipeline and write the run directory named in the config.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunOutput> {
    cfg.validate()?;
    with_thread_pool(|| run_inner(cfg))?
}

fn run_inner(cfg: &ExperimentConfig) -> Result<RunOutput> {
    let clock = Instant::now();
    let mut stages = Vec::new();
    let dir = cfg.output.dir.clone();
    std::fs::create_dir_all(dir.join("csv"))?;
    std::fs::write(dir.join("config.toml"), cfg.to_toml_string()?)?;

    let params = cfg.hartree_core;
    let (grid, v0) = timed(&mut stages, "initial_data", || {
        let grid = Grid::new(cfg.grid_spec()?)?;
        let v0 = cfg.initial_data.sample(&grid, params.rho, cfg.seed)?;
        Ok((grid, v0))
    })?;
    let a0 = v0.spectrum().norm(&NormSpec::sobolev(params.rho));
    let solver_cfg = {
        let mut s = cfg.cauchy_solver.clone();
        s.t_final = Some(s.select_t_final(a0, &params));
        s
    };
    let t_final = solver_cfg.t_final.expect("set above");

    let mesh = cfg.asymptotics.mesh(t_final, &params)?;
    let profile = timed(&mut stages, "asymptotics", || {
        AsymptoticProfile::build(&v0, &mesh, &params, &cfg.asymptotics.profile_options())
    })?;
    let fp = timed(&mut stages, "cauchy_solver", || solve_nonlinear_fixed_point(&v0, &solver_cfg, &profile))?;
    timed(&mut stages, "snapshots", || {
        let stride = cfg.output.snapshot_stride;
        Snapshot::from_trajectories(&[&thin(&fp.trajectory, stride)?])?.write(&dir.join("trajectory.snap"))?;
        let va = thin(&profile.va_trajectory(), stride)?;
        let phases = Trajectory::new(
            va.times().to_vec(),
            (0..mesh.count())
                .filter(|k| k % stride == 0 || *k == mesh.count() - 1)
                .map(|k| SpectralField::from_real(&grid, &profile.phase_node(k)))
                .collect::<Result<Vec<_>>>()?,
        )?;
        Snapshot::from_trajectories(&[&va, &phases])?.write(&dir.join("profile.snap"))?;
        write_fixed_point_csv(&dir.join("fixed_point.csv"), &fp)
    })?;

    let ctx = Context {
        cfg,
        params,
        grid: Arc::clone(&grid),
        v0,
        a0,
        t_final,
        solver: solver_cfg,
        profile,
        fp,
        decomp: None,
    };

    let selected: Vec<&str> = if cfg.estimates_lab.checks.is_empty() {
        CHECK_IDS.to_vec()
    } else {
        CHECK_IDS
            .iter()
            .copied()
            .filter(|id| cfg.estimates_lab.checks.iter().any(|c| c == id))
            .collect()
    };
    let free = params.kappa == 0.0;
    let mut skipped = Vec::new();
    let mut active = Vec::new();
    for id in selected {
        let (_, module, kappa_free) = REGISTRY.iter().find(|r| r.0 == id).expect("registered");
        if free && !kappa_free {
            skipped.push(SkippedCheck {
                id: id.into(),
                module: (*module).into(),
                reason: "not applicable at kappa = 0: the profile, phase and remainders vanish".into(),
            });
        } else {
            active.push(id);
        }
    }

    let mut ctx = ctx;
    if active.iter().any(|id| needs_decomposition(id)) {
        ctx.decomp = Some(timed(&mut stages, "decomposition", || {
            VDecomposition::compute(&ctx.fp.trajectory, &ctx.profile)
        })?);
    }
    let ctx = ctx;
    let start = Instant::now();
    let outcomes: Vec<Outcome> = active
        .par_iter()
        .map(|id| {
            evaluate(id, &ctx).unwrap_or_else(|e| {
                Outcome::plain(CheckRecord::failed(id, module_of(id).unwrap_or(""), &e))
            })
        })
        .collect();
    stages.push(("checks".into(), start.elapsed().as_secs_f64()));

    let mut checks = Vec::new();
    let mut constants = BTreeMap::new();
    for mut o in outcomes {
        if let Some((series, predicted)) = &o.series {
            let rel = format!("csv/{}.csv", o.record.id);
            write_series_csv(&dir.join(&rel), series, *predicted)?;
            o.record.csv = Some(rel);
        }
        if let Some((name, v)) = o.constant {
            constants.insert(name.to_string(), v);
        }
        checks.push(o.record);
    }

    let summary = RunSummary {
        all_pass: checks.iter().all(|c| c.pass),
        checks,
        skipped,
        constants,
        metadata: RunMetadata {
            version: env!("CARGO_PKG_VERSION").into(),
            seed: cfg.seed,
            grid: *grid.spec(),
            params,
            nodes: mesh.count(),
            grading: mesh.power(),
            t_final,
            a0,
            threads: rayon::current_num_threads(),
            fixed_point_iterations: ctx.fp.iterations,
            stage_seconds: stages,
            wall_clock_seconds: clock.elapsed().as_secs_f64(),
        },
    };
    std::fs::write(dir.join("summary.json"), serde_json::to_string_pretty(&summary)?)?;
    Ok(RunOutput { dir, summary })
}

fn write_fixed_point_csv(path: &Path, fp: &FixedPointRun) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["iteration", "distance", "ratio"])?;
    for (i, d) in fp.distances.iter().enumerate() {
        let ratio = if i == 0 { String::new() } else { format!("{:.17e}", fp.ratios[i - 1]) };
        w.write_record(&[format!("{}", i + 1), format!("{d:.17e}"), ratio])?;
    }
    w.flush()?;
    Ok(())
}

fn exponent_outcome(id: &str, module: &str, quantity: &str, bound: &str, series: Vec<(f64, f64)>, predicted: f64, opts: &BoundOptions) -> Result<Outcome> {
    let r = verify_bound(id, quantity, bound, &series, predicted, opts)?;
    Ok(Outcome::plain(CheckRecord::from_report(id, module, &r)).with_series(series, predicted))
}

fn node_series(ctx: &Context, f: impl Fn(usize, f64) -> f64 + Sync) -> Vec<(f64, f64)> {
    let nodes = ctx.profile.mesh().nodes();
    let hi = 2.0 * ctx.cfg.estimates_lab.window.1;
    nodes
        .par_iter()
        .enumerate()
        .filter(|(_, &t)| t <= hi)
        .map(|(k, &t)| (t, f(k, t)))
        .collect()
}

fn evaluate(id: &str, ctx: &Context) -> Result<Outcome> {
    let module = module_of(id).unwrap_or("");
    let est = &ctx.cfg.estimates_lab;
    let opts = est.bound_options();
    let p = &ctx.params;
    let e = p.exponents();
    let half_n = p.n as f64 / 2.0;
    let (l0, l1) = (e.lambda(0.0), e.lambda(1.0));
    let calib = &ctx.solver.calibration;
    let pm = |s: f64| NormSpec::pm(s, DEFAULT_PM_EPSILON);
    let decomp = || {
        ctx.decomp
            .as_ref()
            .ok_or_else(|| LabError::Config("decomposition was not computed".into()))
    };
    let out = match id {
        "va_mass_drift" => {
            let mass = ctx.profile.mass_series();
            let m0 = mass[0];
            let series: Vec<(f64, f64)> = ctx
                .profile
                .mesh()
                .nodes()
                .iter()
                .zip(mass)
                .map(|(&t, m)| (t, (m - m0).abs() / m0))
                .collect();
            Outcome::plain(CheckRecord::threshold(
                id,
                module,
                "max_t abs(||v_a(t)||² / ||v_0||² - 1)",
                "mass of v_a is conserved",
                ctx.profile.mass_drift(),
                est.drift_limit,
            ))
            .with_series(series, 0.0)
        }
        "s0_alpha0" => exponent_outcome(
            id,
            module,
            "||ω^{n/2±0} s_0||",
            "<= C a_0² t^{λ_0-1}",
            node_series(ctx, |_, t| ctx.profile.s0(t).map_or(f64::NAN, |s| s.norm(&pm(half_n)))),
            l0 - 1.0,
            &opts,
        )?,
        "s0_alpha1" => exponent_outcome(
            id,
            module,
            "||ω^{1+n/2±0} s_0||",
            "<= C a_0² t^{λ_1-1}",
            node_series(ctx, |_, t| ctx.profile.s0(t).map_or(f64::NAN, |s| s.norm(&pm(1.0 + half_n)))),
            l1 - 1.0,
            &opts,
        )?,
        "sb" => exponent_outcome(
            id,
            module,
            "||ω^{n/2±0} s_b||",
            "<= C a_0⁴ (1-2γ)^{-1} t^{λ_0+λ_1-1}",
            node_series(ctx, |k, _| ctx.profile.sb_node(k).norm(&pm(half_n))),
            l0 + l1 - 1.0,
            &opts,
        )?,
        "sc" => exponent_outcome(
            id,
            module,
            "||ω^{n/2±0} s_c||",
            "<= C a_0² a_a² γ^{-1} (1-2γ)^{-1} t^{λ_0+λ_1-1}",
            node_series(ctx, |k, _| ctx.profile.sc_node(k).norm(&pm(half_n))),
            l0 + l1 - 1.0,
            &opts,
        )?,
        "sc_two_forms" => {
            let series = node_series(ctx, |k, _| {
                let single = ctx.profile.sc_node(k);
                match ctx.profile.sc_double_node(k) {
                    Some(double) => {
                        double.sub(&single).l2_norm() / single.l2_norm().max(1e-300)
                    }
                    None => f64::NAN,
                }
            });
            let (lo, hi) = est.window;
            let worst = series
                .iter()
                .filter(|(t, _)| *t >= lo && *t <= hi)
                .map(|s| s.1)
                .fold(0.0, |a: f64, b| if b.is_nan() { f64::NAN } else { a.max(b) });
            if worst.is_nan() {
                return Err(LabError::Config("sc_two_forms needs asymptotics.double_form = true".into()));
            }
            Outcome::plain(CheckRecord::threshold(
                id,
                module,
                "||s_c (single) - s_c (double)|| / ||s_c||",
                "both integral forms of s_c agree",
                worst,
                est.sc_two_form_limit,
            ))
            .with_series(series, 0.0)
        }
        "phi" => exponent_outcome(
            id,
            module,
            "||ω^{n/2} φ||",
            "<= C t^{γ-1}",
            node_series(ctx, |k, _| ctx.profile.real_norm(&ctx.profile.phase_node(k), &NormSpec::homogeneous(half_n))),
            p.gamma - 1.0,
            &opts,
        )?,
        "linear_l2_drift" => Outcome::plain(CheckRecord::threshold(
            id,
            module,
            "max_t abs(||v′(t)|| / ||v′_0|| - 1)",
            "||v′(t)|| = ||v′_0||",
            ctx.fp.l2_drift,
            est.drift_limit,
        )),
        "fixed_point" => {
            let ratio = ctx.fp.max_ratio();
            let cap = 2.0 * ctx.a0;
            let mut rec = CheckRecord::threshold(
                id,
                module,
                "max contraction ratio of the Γ iteration",
                "ratio < 1/2 and sup_t ||v; H^ρ|| <= 2 a_0",
                ratio,
                est.contraction_limit,
            )
            .with_note(format!(
                "T = {:.4e}, {} iterations, sup ||v; H^ρ|| = {:.4e} (2 a_0 = {:.4e})",
                ctx.t_final, ctx.fp.iterations, ctx.fp.sup_norm, cap
            ));
            rec.pass &= ctx.fp.sup_norm <= cap && ratio < est.contraction_limit;
            let series = series_from(
                &(1..=ctx.fp.distances.len()).map(|i| i as f64).collect::<Vec<_>>(),
                &ctx.fp.distances,
            );
            Outcome::plain(rec).with_series(series, 0.0).with_constant("contraction_ratio", ratio)
        }
        "holder" => {
            let traj = &ctx.fp.trajectory;
            let rho_prime = ctx.solver.rho_prime;
            let hopts = BoundOptions {
                window: est.holder_window,
                band_limit: est.holder_band_limit,
                ..opts
            };
            let r = holder_continuity_check(traj, rho_prime, p, &hopts)?;
            let h = holder_exponent(rho_prime, p.gamma);
            let a = ctx.fp.sup_norm;
            let a1 = a1_of(a, ctx.t_final, calib.a1, p);
            let pref = (1.0 + a * a).powi(2)
                * (1.0 + a1 * a1).powi(2)
                * traj.state(0).spectrum().norm(&NormSpec::sobolev(rho_prime));
            let series = holder_series(traj);
            let need = series
                .iter()
                .filter(|(dt, _)| *dt > 0.0)
                .map(|(dt, v)| v / (dt.powf(h) * pref))
                .fold(0.0, f64::max);
            let mut rec = CheckRecord::from_report(id, module, &r);
            rec.value = Some(need);
            rec.limit = Some(calib.holder);
            rec.pass &= need <= calib.holder;
            Outcome::plain(rec.with_note("value: constant needed in the Hölder modulus"))
                .with_series(series, h)
                .with_constant("holder", need)
        }
        "gronwall" => {
            let traj = &ctx.fp.trajectory;
            let norms = traj.norms(&NormSpec::sobolev(ctx.solver.rho_prime));
            let a = ctx.fp.sup_norm;
            let a1 = a1_of(a, ctx.t_final, calib.a1, p);
            let need = gronwall_constant_needed(traj.times(), &norms, a, a1, p);
            Outcome::plain(CheckRecord::threshold(
                id,
                module,
                "||v′(t); H^{ρ′}|| / ||v′(t_1); H^{ρ′}||",
                "<= exp{C a²(1+a²)(1+a_1²)² |t-t_1|^{2γ+λ_1-1}}",
                need,
                calib.gronwall,
            ))
            .with_series(series_from(traj.times(), &norms), 0.0)
            .with_constant("gronwall", need)
        }
        "difference_scaling" => difference_scaling(ctx)?,
        "involution" => {
            let w = ctx.v0.clone();
            let back = pseudoconformal_invert(&pseudoconformal_invert(&w)?)?;
            let err = back.sub(&w).l2_norm() / w.l2_norm();
            Outcome::plain(CheckRecord::threshold(
                id,
                module,
                "||T T w - w|| / ||w||",
                "pseudoconformal inversion is an involution",
                err,
                1e-12,
            ))
        }
        "unitarity" => {
            let t = ctx.cfg.transforms.unitarity_time;
            let u = free_propagate(&ctx.v0, t);
            let worst = [0.0, p.rho, 2.0]
                .iter()
                .map(|&s| {
                    let spec = NormSpec::homogeneous(s);
                    let n0 = ctx.v0.spectrum().norm(&spec);
                    (u.spectrum().norm(&spec) - n0).abs() / n0
                })
                .fold(0.0, f64::max);
            Outcome::plain(CheckRecord::threshold(
                id,
                module,
                "max_σ abs(||ω^σ U(t) v|| / ||ω^σ v|| - 1), σ ∈ {0, ρ, 2}",
                "U(t) preserves every H^σ",
                worst,
                1e-12,
            ))
        }
        "uc_growth" => {
            let limit = ctx.cfg.transforms.alias_limit;
            let spec = NormSpec::sobolev(p.rho);
            let traj = &ctx.fp.trajectory;
            let rows: Vec<(f64, f64, bool)> = (0..traj.len())
                .into_par_iter()
                .map(|k| {
                    let t = traj.times()[k];
                    let s = DressedState::new(t, traj.state(k).clone(), ctx.profile.phase_node(k))?;
                    Ok((t, s.norm(&spec), s.added_alias() <= limit))
                })
                .collect::<Result<_>>()?;
            let resolved: Vec<&(f64, f64, bool)> = rows.iter().filter(|r| r.2).collect();
            if resolved.is_empty() {
                return Err(LabError::Domain("no node resolves u_c within transforms.alias_limit".into()));
            }
            let need = resolved
                .iter()
                .map(|(t, n, _)| n / growth_envelope(*t, ctx.a0, p.gamma, p.rho))
                .fold(0.0, f64::max);
            let first = resolved[0].0;
            Outcome::plain(
                CheckRecord::threshold(
                    id,
                    module,
                    "||u_c(t); H^ρ|| / envelope(t)",
                    "<= C a_0 (1 + a_0²(1 + a_0² t^γ) t^{γ-1})^{1+[ρ]}",
                    need,
                    calib.growth,
                )
                .with_note(format!(
                    "{} of {} nodes resolved (t >= {first:.3e})",
                    resolved.len(),
                    rows.len()
                )),
            )
            .with_series(rows.iter().map(|r| (r.0, r.1)).collect(), 0.0)
            .with_constant("growth", need)
        }
        id if needs_decomposition(id) => evaluate_remainder(id, ctx, decomp()?)?,
        "exponent_ordering" => {
            let r = exponent_ordering_check(p.n, 40);
            let mut rec = CheckRecord::threshold(
                id,
                module,
                "minus the smaller margin over a (γ, ρ, σ) lattice",
                "λ_0+λ_2 >= 2λ_0+λ_1-1 and λ_★ term dominated",
                -r.worst_ordering.min(r.worst_domination),
                1e-12,
            )
            .with_note(format!(
                "{} samples, ordering margin {:.4}, domination margin {:.4}",
                r.samples, r.worst_ordering, r.worst_domination
            ));
            rec.pass = r.pass;
            Outcome::plain(rec)
        }
        "interpolation" | "leibniz" | "product" | "commutator" => {
            let case = InequalityCase::standard(id, p.n, ctx.solver.rho_prime)?;
            let r = inequality_spot_check(&case, p.n, &est.spot_seeds, &est.spot)?;
            let mut rec = CheckRecord::threshold(
                id,
                module,
                "stability (max/min) of the worst LHS/RHS ratio",
                &r.parameters,
                r.stability,
                est.spot.stability_limit,
            )
            .with_note(format!(
                "worst ratio {:.4e}; per grid {:?}; per seed {:?}",
                r.worst, r.per_grid, r.per_seed
            ));
            rec.pass = r.pass;
            let series: Vec<(f64, f64)> = r.per_grid.iter().map(|(n, w)| (*n as f64, *w)).collect();
            Outcome::plain(rec).with_series(series, 0.0)
        }
        other => return Err(LabError::Config(format!("unknown check id `{other}`"))),
    };
    Ok(out)
}

fn needs_decomposition(id: &str) -> bool {
    matches!(id, "decomposition_residual" | "v2_assembly" | "v1" | "v2" | "v3" | "v5" | "v4_pairing")
        || id.starts_with("cutoff_")
}

fn evaluate_remainder(id: &str, ctx: &Context, d: &VDecomposition) -> Result<Outcome> {
    let module = module_of(id).unwrap_or("");
    let est = &ctx.cfg.estimates_lab;
    let opts = est.bound_options();
    let p = &ctx.params;
    let e = p.exponents();
    let (l0, l1) = (e.lambda(0.0), e.lambda(1.0));
    let out = match id {
        "decomposition_residual" => Outcome::plain(CheckRecord::threshold(
            id,
            module,
            "max_t || |v|² - |v_a|² - V_1 - V_2 ||",
            "|v|² - |v_a|² = V_1 + V_2",
            d.max_residual(),
            est.residual_limit,
        ))
        .with_series(series_from(d.times(), &d.residual), 0.0),
        "v2_assembly" => Outcome::plain(CheckRecord::threshold(
            id,
            module,
            "max_t || V_2 - V_3 - V_4 - V_5 ||",
            "V_2 = V_3 + V_4 + V_5",
            d.max_assembly(),
            est.assembly_limit,
        ))
        .with_series(series_from(d.times(), &d.assembly), 0.0),
        "v1" => exponent_outcome(id, module, "||ω^{2ρ-3} V_1||", "<= C a² t", d.norm_series(1, 2.0 * p.rho - 3.0), 1.0, &opts)?,
        "v2" => exponent_outcome(
            id,
            module,
            "||ω^{2ρ-2} V_2||",
            "<= C a² a_1² t^{λ_0}(1 + a² t^{λ_1})",
            d.norm_series(2, 2.0 * p.rho - 2.0),
            l0,
            &opts,
        )?,
        "v3" => exponent_outcome(
            id,
            module,
            "||ω^{2ρ-2} V_3||",
            "<= C a⁴ a_1² t^{λ_0+λ_1}",
            d.norm_series(3, 2.0 * p.rho - 2.0),
            l0 + l1,
            &opts,
        )?,
        "v5" => exponent_outcome(
            id,
            module,
            "||ω^{2ρ-3} V_5||",
            "<= C a⁴ a_1² t^{2λ_0}",
            d.norm_series(5, 2.0 * p.rho - 3.0),
            2.0 * l0,
            &opts,
        )?,
        "v4_pairing" => exponent_outcome(
            id,
            module,
            "sup_ψ sup_{t′<=t} abs<ψ, V_4(t′)> / N(ψ)",
            "<= C a⁴ t^{λ_0+1}",
            pairing_sup_series(d, p.rho),
            l0 + 1.0,
            &opts,
        )?,
        "cutoff_v1" | "cutoff_v3" | "cutoff_v4" | "cutoff_v5" => {
            let sp = est.sigma_prime;
            let (mu1, mu2) = (e.mu(1, sp), e.mu(2, sp));
            let (j, predicted, bound) = match id {
                "cutoff_v1" => (1, mu1 - 1.0, "<= C a² t^{μ_1-1}"),
                "cutoff_v3" => (3, 2.0 * l0 + mu1 - 2.0, "<= C a⁴ a_1² t^{2λ_0+μ_1-2}"),
                "cutoff_v4" => (4, l0 + mu2 - 1.0, "<= C a⁴ a_1² t^{λ_0+μ_2-1}"),
                _ => (5, 2.0 * l0 + mu1 - 2.0, "<= C a⁴ a_1² t^{2λ_0+μ_1-2}"),
            };
            let quantity = format!("t^{{γ-2}} ||ω^{{γ-σ′-n/2}} χ(|k|√t) V_{j}||, σ′ = {sp}");
            exponent_outcome(id, module, &quantity, bound, d.cutoff_series(j, sp, p.gamma), predicted, &opts)?
        }
        other => return Err(LabError::Config(format!("`{other}` is not a remainder check"))),
    };
    Ok(out)
}

/// Perturbed pairs of linearized solves on `[0, f T]` for each configured fraction `f`.
fn difference_scaling(ctx: &Context) -> Result<Outcome> {
    let est = &ctx.cfg.estimates_lab;
    let p = &ctx.params;
    let w = InitialData::BandLimitedRandom {
        a0: 1.0,
        kmax: 2.0,
        width: 2.0,
    }
    .sample(&ctx.grid, p.rho, ctx.cfg.seed.wrapping_add(0x5eed))?;
    let eps = est.difference_epsilon * ctx.a0;
    let ratios: Vec<(f64, f64)> = est
        .difference_fractions
        .par_iter()
        .map(|&f| {
            let t_final = ctx.t_final * f;
            let own;
            let profile = if f == 1.0 {
                &ctx.profile
            } else {
                let mesh = ctx.cfg.asymptotics.mesh(t_final, p)?;
                own = AsymptoticProfile::build(&ctx.v0, &mesh, p, &ctx.cfg.asymptotics.profile_options())?;
                &own
            };
            let cfg = SolverConfig {
                t_final: Some(t_final),
                ..ctx.solver.clone()
            };
            let input1 = profile.va_trajectory();
            let perturbed = input1
                .times()
                .iter()
                .zip(input1.states())
                .map(|(&t, s)| {
                    let mut out = s.clone();
                    out.add_scaled(&w, eps * t.sqrt());
                    out
                })
                .collect();
            let input2 = Trajectory::new(input1.times().to_vec(), perturbed)?;
            let run1 = solve_linearized(&input1, &ctx.v0, 0, &cfg, profile)?;
            let run2 = solve_linearized(&input2, &ctx.v0, 0, &cfg, profile)?;
            let r = difference_monitor(
                &run1.trajectory,
                &run2.trajectory,
                &input1,
                &input2,
                ctx.solver.rho_prime,
                p,
            )?;
            Ok((t_final, r))
        })
        .collect::<Result<_>>()?;
    let max = ratios.iter().map(|r| r.1).fold(0.0, f64::max);
    let min = ratios.iter().map(|r| r.1).fold(f64::INFINITY, f64::min);
    let spread = if min > 0.0 { max / min } else { f64::INFINITY };
    let mut rec = CheckRecord::threshold(
        "difference_scaling",
        "cauchy_solver",
        "max/min over T of sup||v′_-; H^{ρ′}|| / (T^{2γ+λ_1-1} sup||v_-; H^ρ||)",
        "ratio bounded uniformly in T",
        spread,
        est.difference_spread,
    )
    .with_note(format!("ratio per T: {ratios:?}"));
    rec.pass &= max <= ctx.solver.calibration.difference;
    Ok(Outcome::plain(rec).with_series(ratios, 0.0).with_constant("difference", max))
}

/// Cross-run view of the constants a sweep needed.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StabilityRow {
    pub constant: String,
    pub values: Vec<(String, f64)>,
    pub calibrated: Option<f64>,
    pub spread: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SweepReport {
    pub key: String,
    pub runs: Vec<(String, PathBuf, bool)>,
    pub constants: Vec<StabilityRow>,
    pub all_pass: bool,
}

/// One run per value of `key`, each into `<output.dir>/<key>=<value>`, plus
/// `sweep.json` in `output.dir`.
pub fn run_sweep(cfg: &ExperimentConfig, key: &str, values: &[String]) -> Result<SweepReport> {
    if values.is_empty() {
        return Err(LabError::Config("sweep needs at least one value".into()));
    }
    let configs = values
        .iter()
        .map(|v| {
            let mut c = cfg.set_key(key, v)?;
            c.output.dir = cfg.output.dir.join(format!("{key}={v}"));
            c.validate()?;
            Ok((v.clone(), c))
        })
        .collect::<Result<Vec<_>>>()?;
    let results: Vec<(String, RunOutput)> = with_thread_pool(|| {
        configs
            .par_iter()
            .map(|(v, c)| run_inner(c).map(|o| (v.clone(), o)))
            .collect::<Result<Vec<_>>>()
    })??;
    let calib = &cfg.cauchy_solver.calibration;
    let mut names: Vec<String> = results
        .iter()
        .flat_map(|(_, o)| o.summary.constants.keys().cloned())
        .collect();
    names.sort();
    names.dedup();
    let constants = names
        .into_iter()
        .map(|name| {
            let values: Vec<(String, f64)> = results
                .iter()
                .filter_map(|(v, o)| o.summary.constants.get(&name).map(|c| (v.clone(), *c)))
                .collect();
            let calibrated = match name.as_str() {
                "gronwall" => Some(calib.gronwall),
                "holder" => Some(calib.holder),
                "difference" => Some(calib.difference),
                "growth" => Some(calib.growth),
                "contraction_ratio" => Some(cfg.estimates_lab.contraction_limit),
                _ => None,
            };
            let max = values.iter().map(|v| v.1).fold(0.0, f64::max);
            let min = values.iter().map(|v| v.1).fold(f64::INFINITY, f64::min);
            StabilityRow {
                pass: calibrated.map_or(true, |c| max <= c),
                spread: if min > 0.0 { max / min } else { f64::INFINITY },
                constant: name,
                values,
                calibrated,
            }
        })
        .collect::<Vec<_>>();
    let runs: Vec<(String, PathBuf, bool)> = results
        .iter()
        .map(|(v, o)| (v.clone(), o.dir.clone(), o.summary.all_pass))
        .collect();
    let report = SweepReport {
        key: key.into(),
        all_pass: runs.iter().all(|r| r.2) && constants.iter().all(|c| c.pass),
        runs,
        constants,
    };
    std::fs::create_dir_all(&cfg.output.dir)?;
    std::fs::write(cfg.output.dir.join("sweep.json"), serde_json::to_string_pretty(&report)?)?;
    Ok(report)
}
