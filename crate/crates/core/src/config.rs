//! Experiment configuration: TOML with one section per module.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::asymptotics::{ProfileOptions, TransportScheme};
use crate::data::InitialData;
use crate::error::{LabError, Result};
use crate::estimates::{BoundOptions, CUTOFF_SIGMA_PRIME, DEFAULT_WINDOW, HOLDER_WINDOW};
use crate::grid::GridSpec;
use crate::hartree::ModelParams;
use crate::inequalities::SpotOptions;
use crate::mesh::{GradedMesh, DEFAULT_NODES, MAX_GRADING};
use crate::solver::SolverConfig;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSection {
    pub dim: usize,
    pub points: usize,
    pub length: f64,
}

impl Default for GridSection {
    fn default() -> Self {
        GridSection {
            dim: 2,
            points: 128,
            length: 20.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AsymptoticsSection {
    pub nodes: usize,
    /// Mesh grading power; derived from `λ_1` when absent.
    pub grading: Option<f64>,
    pub level: usize,
    pub scheme: TransportScheme,
    pub double_form: bool,
    pub divergence_factor: f64,
}

impl Default for AsymptoticsSection {
    fn default() -> Self {
        let p = ProfileOptions::default();
        AsymptoticsSection {
            nodes: DEFAULT_NODES,
            grading: None,
            level: p.level,
            scheme: p.scheme,
            double_form: true,
            divergence_factor: p.divergence_factor,
        }
    }
}

impl AsymptoticsSection {
    pub fn profile_options(&self) -> ProfileOptions {
        ProfileOptions {
            level: self.level,
            scheme: self.scheme,
            double_form: self.double_form,
            divergence_factor: self.divergence_factor,
        }
    }

    pub fn mesh(&self, t_final: f64, params: &ModelParams) -> Result<GradedMesh> {
        let power = self
            .grading
            .unwrap_or_else(|| GradedMesh::default_power(params.exponents().lambda(1.0)));
        GradedMesh::new(t_final, self.nodes, power)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TransformsSection {
    /// Nodes where the phase adds more than this fraction of `||u_c||²` outside
    /// the dealiased band are treated as unresolved.
    pub alias_limit: f64,
    pub unitarity_time: f64,
}

impl Default for TransformsSection {
    fn default() -> Self {
        TransformsSection {
            alias_limit: 1e-6,
            unitarity_time: 0.7,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EstimatesSection {
    /// Registered check ids to evaluate; empty means all.
    pub checks: Vec<String>,
    pub window: (f64, f64),
    pub holder_window: (f64, f64),
    pub band_limit: f64,
    /// Band limit of the Hölder check; only the fitted exponent is sharp there.
    pub holder_band_limit: f64,
    pub slope_tol: f64,
    pub fit_samples: usize,
    pub sigma_prime: f64,
    pub spot: SpotOptions,
    pub spot_seeds: Vec<u64>,
    /// Final times of the perturbed-pair runs, as fractions of `T`.
    pub difference_fractions: Vec<f64>,
    /// Relative size of the perturbation of the input trajectory.
    pub difference_epsilon: f64,
    /// Allowed max/min of the difference ratio across the fractions.
    pub difference_spread: f64,
    pub drift_limit: f64,
    pub residual_limit: f64,
    pub assembly_limit: f64,
    pub contraction_limit: f64,
    /// Relative gap allowed between the two integral forms of `s_c`.
    pub sc_two_form_limit: f64,
}

impl Default for EstimatesSection {
    fn default() -> Self {
        let b = BoundOptions::default();
        EstimatesSection {
            checks: Vec::new(),
            window: DEFAULT_WINDOW,
            holder_window: HOLDER_WINDOW,
            band_limit: b.band_limit,
            holder_band_limit: 1e4,
            slope_tol: b.slope_tol,
            fit_samples: b.samples,
            sigma_prime: CUTOFF_SIGMA_PRIME,
            spot: SpotOptions::default(),
            spot_seeds: vec![1, 2, 3],
            difference_fractions: vec![1.0, 0.5, 0.25],
            difference_epsilon: 0.05,
            difference_spread: 3.0,
            drift_limit: 1e-6,
            residual_limit: 1e-4,
            assembly_limit: 1e-6,
            contraction_limit: 0.5,
            sc_two_form_limit: 1e-2,
        }
    }
}

impl EstimatesSection {
    pub fn bound_options(&self) -> BoundOptions {
        BoundOptions {
            window: self.window,
            band_limit: self.band_limit,
            slope_tol: self.slope_tol,
            samples: self.fit_samples,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub dir: PathBuf,
    /// Every `stride`-th node (and the last) goes into the snapshots.
    pub snapshot_stride: usize,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection {
            dir: PathBuf::from("runs/default"),
            snapshot_stride: 16,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub output: OutputSection,
    pub grid_spectral: GridSection,
    pub hartree_core: ModelParams,
    pub asymptotics: AsymptoticsSection,
    pub cauchy_solver: SolverConfig,
    pub transforms: TransformsSection,
    pub initial_data: InitialData,
    pub estimates_lab: EstimatesSection,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            seed: 0,
            output: OutputSection::default(),
            grid_spectral: GridSection::default(),
            hartree_core: ModelParams::default(),
            asymptotics: AsymptoticsSection::default(),
            cauchy_solver: SolverConfig::default(),
            transforms: TransformsSection::default(),
            initial_data: InitialData::default(),
            estimates_lab: EstimatesSection::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| LabError::Config(e.to_string()))?;
        Ok(cfg)
    }

    /// Parse and validate.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| LabError::Config(format!("{}: {e}", path.display())))?;
        let cfg = Self::from_toml_str(&text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| LabError::Config(e.to_string()))
    }

    pub fn grid_spec(&self) -> Result<GridSpec> {
        let g = &self.grid_spectral;
        GridSpec::new(g.dim, g.points, g.length)
    }

    /// Every violated precondition, empty for a valid config.
    pub fn violations(&self) -> Vec<String> {
        let mut out = self.hartree_core.violations();
        if let Err(e) = self.grid_spec() {
            out.push(e.to_string());
        }
        if self.hartree_core.n != self.grid_spectral.dim {
            out.push(format!(
                "hartree_core.n = {} differs from grid_spectral.dim = {}",
                self.hartree_core.n, self.grid_spectral.dim
            ));
        }
        let a = &self.asymptotics;
        if a.nodes < 8 {
            out.push(format!("asymptotics.nodes must be at least 8, got {}", a.nodes));
        }
        if let Some(p) = a.grading {
            if !(p >= 1.0 && p <= MAX_GRADING) {
                out.push(format!("asymptotics.grading must lie in [1, {MAX_GRADING}], got {p}"));
            }
        }
        if a.level > 1 {
            out.push(format!("asymptotics.level {} unsupported (0 or 1)", a.level));
        }
        if let Err(e) = self.cauchy_solver.validate(&self.hartree_core) {
            out.push(e.to_string());
        }
        if let Err(e) = self.initial_data.validate(self.grid_spectral.dim) {
            out.push(e.to_string());
        }
        let e = &self.estimates_lab;
        for (name, w) in [("window", e.window), ("holder_window", e.holder_window)] {
            if !(w.0 > 0.0 && w.0 < w.1) {
                out.push(format!("estimates_lab.{name} must satisfy 0 < lo < hi, got {w:?}"));
            }
        }
        if !(e.sigma_prime > 0.0 && e.sigma_prime < 1.0 + self.hartree_core.gamma) {
            out.push(format!(
                "estimates_lab.sigma_prime = {} violates 0 < σ′ < 1 + γ",
                e.sigma_prime
            ));
        }
        for id in &e.checks {
            if !crate::runner::module_of(id).is_some() {
                out.push(format!("unknown check id `{id}`"));
            }
        }
        if e.difference_fractions.iter().any(|f| !(*f > 0.0 && *f <= 1.0)) {
            out.push("estimates_lab.difference_fractions must lie in (0, 1]".into());
        }
        if self.output.snapshot_stride == 0 {
            out.push("output.snapshot_stride must be positive".into());
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(LabError::Config(v.join("; ")))
        }
    }

    /// Set a dotted key (`initial_data.a0`, `grid_spectral.points`, ...) from text.
    pub fn set_key(&self, key: &str, value: &str) -> Result<Self> {
        let mut root = toml::Value::try_from(self).map_err(|e| LabError::Config(e.to_string()))?;
        let parts: Vec<&str> = key.split('.').collect();
        let mut slot = &mut root;
        for part in &parts {
            slot = slot
                .as_table_mut()
                .and_then(|t| t.get_mut(*part))
                .ok_or_else(|| LabError::Config(format!("unknown key `{key}`")))?;
        }
        *slot = parse_scalar(value, slot);
        let out: ExperimentConfig = root
            .try_into()
            .map_err(|e: toml::de::Error| LabError::Config(format!("{key} = {value}: {e}")))?;
        Ok(out)
    }

    pub fn apply_overrides(&mut self, grid: Option<usize>, t_final: Option<f64>, seed: Option<u64>) {
        if let Some(p) = grid {
            self.grid_spectral.points = p;
        }
        if let Some(t) = t_final {
            self.cauchy_solver.t_final = Some(t);
        }
        if let Some(s) = seed {
            self.seed = s;
        }
    }
}

fn parse_scalar(text: &str, like: &toml::Value) -> toml::Value {
    match like {
        toml::Value::Integer(_) => text.parse().map(toml::Value::Integer).unwrap_or_else(|_| toml::Value::String(text.into())),
        toml::Value::Float(_) => text.parse().map(toml::Value::Float).unwrap_or_else(|_| toml::Value::String(text.into())),
        toml::Value::Boolean(_) => text.parse().map(toml::Value::Boolean).unwrap_or_else(|_| toml::Value::String(text.into())),
        _ => {
            if let Ok(i) = text.parse::<i64>() {
                toml::Value::Integer(i)
            } else if let Ok(f) = text.parse::<f64>() {
                toml::Value::Float(f)
            } else {
                toml::Value::String(text.into())
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_is_populated() {
        let c = ExperimentConfig::from_toml_str("seed = 3\n").unwrap();
        assert_eq!(c.seed, 3);
        assert_eq!(c.grid_spectral.points, 128);
        assert!(c.validate().is_ok());
    }

    #[test]
    fn roundtrip() {
        let c = ExperimentConfig::default();
        let text = c.to_toml_string().unwrap();
        let back = ExperimentConfig::from_toml_str(&text).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.to_toml_string().unwrap(), text);
    }

    #[test]
    fn violations_are_named() {
        let c = ExperimentConfig::from_toml_str("[hartree_core]\ngamma = 0.3\n").unwrap();
        let err = c.validate().unwrap_err().to_string();
        assert!(err.contains("1/3 < γ < 1/2"), "{err}");
        let e = ExperimentConfig::from_toml_str("[grid_spectral]\npoints = \"x\"\n").unwrap_err();
        assert!(e.to_string().contains("line"), "{e}");
    }

    #[test]
    fn dotted_keys() {
        let c = ExperimentConfig::default();
        let d = c.set_key("initial_data.a0", "0.25").unwrap();
        assert_eq!(d.initial_data.a0(), Some(0.25));
        let d = c.set_key("grid_spectral.points", "64").unwrap();
        assert_eq!(d.grid_spectral.points, 64);
        assert!(c.set_key("nope.x", "1").is_err());
    }
}
