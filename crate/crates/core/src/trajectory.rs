use std::sync::Arc;

use crate::error::{LabError, Result};
use crate::grid::{Grid, NormSpec, SpectralField};

/// Time-indexed states on one grid.
#[derive(Clone, Debug)]
pub struct Trajectory {
    grid: Arc<Grid>,
    times: Vec<f64>,
    states: Vec<SpectralField>,
}

impl Trajectory {
    pub fn new(times: Vec<f64>, states: Vec<SpectralField>) -> Result<Self> {
        if times.len() != states.len() || times.is_empty() {
            return Err(LabError::Shape(format!(
                "{} times for {} states",
                times.len(),
                states.len()
            )));
        }
        if times.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(LabError::Shape("trajectory times must increase".into()));
        }
        let grid = Arc::clone(states[0].grid());
        for s in &states[1..] {
            states[0].same_grid(s)?;
        }
        Ok(Trajectory {
            grid,
            times,
            states,
        })
    }

    /// The constant-in-time trajectory `u(t) = u0`.
    pub fn constant(times: &[f64], u0: &SpectralField) -> Self {
        Trajectory {
            grid: Arc::clone(u0.grid()),
            times: times.to_vec(),
            states: vec![u0.clone(); times.len()],
        }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn states(&self) -> &[SpectralField] {
        &self.states
    }

    pub fn state(&self, k: usize) -> &SpectralField {
        &self.states[k]
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn last(&self) -> &SpectralField {
        self.states.last().expect("non-empty trajectory")
    }

    pub fn norms(&self, spec: &NormSpec) -> Vec<f64> {
        self.states.iter().map(|s| s.spectrum().norm(spec)).collect()
    }

    pub fn l2_norms(&self) -> Vec<f64> {
        self.states.iter().map(|s| s.l2_norm()).collect()
    }

    pub fn sup_norm(&self, spec: &NormSpec) -> f64 {
        self.norms(spec).into_iter().fold(0.0, f64::max)
    }

    pub fn check_compatible(&self, other: &Trajectory) -> Result<()> {
        if self.times.len() != other.times.len()
            || self
                .times
                .iter()
                .zip(&other.times)
                .any(|(a, b)| (a - b).abs() > 1e-14 * a.abs().max(1e-300))
        {
            return Err(LabError::Shape("trajectories live on different meshes".into()));
        }
        self.states[0].same_grid(&other.states[0])
    }

    /// `sup_t ||self(t) - other(t)||` in the given norm.
    pub fn sup_distance(&self, other: &Trajectory, spec: &NormSpec) -> Result<f64> {
        self.check_compatible(other)?;
        Ok(self
            .states
            .iter()
            .zip(&other.states)
            .map(|(a, b)| a.sub(b).spectrum().norm(spec))
            .fold(0.0, f64::max))
    }

    /// Pointwise difference trajectory.
    pub fn difference(&self, other: &Trajectory) -> Result<Trajectory> {
        self.check_compatible(other)?;
        Ok(Trajectory {
            grid: Arc::clone(&self.grid),
            times: self.times.clone(),
            states: self
                .states
                .iter()
                .zip(&other.states)
                .map(|(a, b)| a.sub(b))
                .collect(),
        })
    }

    pub fn into_states(self) -> Vec<SpectralField> {
        self.states
    }
}
