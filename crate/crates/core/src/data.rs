//! Initial data families for `v_0`.

use std::path::PathBuf;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::grid::{Grid, NormSpec, SpectralField, Spectrum, C64};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialData {
    /// `exp(-|x-c|²/(2w²) + i p·x + i β|x-c|²)`, rescaled to `||v_0; H^ρ|| = a0`.
    Gaussian {
        a0: f64,
        width: f64,
        #[serde(default)]
        center: Vec<f64>,
        #[serde(default)]
        momentum: Vec<f64>,
        #[serde(default)]
        chirp: f64,
    },
    /// Random Fourier coefficients on `|k| <= kmax` with a Gaussian envelope in `x`.
    BandLimitedRandom { a0: f64, kmax: f64, width: f64 },
    /// First node of a snapshot file.
    File { path: PathBuf },
}

impl Default for InitialData {
    fn default() -> Self {
        InitialData::Gaussian {
            a0: 0.5,
            width: 1.0,
            center: Vec::new(),
            momentum: vec![0.5, 0.0],
            chirp: 0.1,
        }
    }
}

impl InitialData {
    pub fn a0(&self) -> Option<f64> {
        match self {
            InitialData::Gaussian { a0, .. } | InitialData::BandLimitedRandom { a0, .. } => Some(*a0),
            InitialData::File { .. } => None,
        }
    }

    pub fn with_a0(&self, value: f64) -> Self {
        let mut out = self.clone();
        match &mut out {
            InitialData::Gaussian { a0, .. } | InitialData::BandLimitedRandom { a0, .. } => *a0 = value,
            InitialData::File { .. } => {}
        }
        out
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        match self {
            InitialData::Gaussian {
                a0,
                width,
                center,
                momentum,
                chirp,
            } => {
                if !(*a0 > 0.0 && a0.is_finite()) {
                    return Err(LabError::Config(format!("a0 must be positive, got {a0}")));
                }
                if !(*width > 0.0) {
                    return Err(LabError::Config(format!("width must be positive, got {width}")));
                }
                for (name, v) in [("center", center), ("momentum", momentum)] {
                    if !v.is_empty() && v.len() != dim {
                        return Err(LabError::Config(format!(
                            "{name} has {} entries for dimension {dim}",
                            v.len()
                        )));
                    }
                }
                if !chirp.is_finite() {
                    return Err(LabError::Config("chirp must be finite".into()));
                }
            }
            InitialData::BandLimitedRandom { a0, kmax, width } => {
                if !(*a0 > 0.0) || !(*kmax > 0.0) || !(*width > 0.0) {
                    return Err(LabError::Config(
                        "band_limited_random needs positive a0, kmax, width".into(),
                    ));
                }
            }
            InitialData::File { path } => {
                if !path.exists() {
                    return Err(LabError::Config(format!("initial data file {} not found", path.display())));
                }
            }
        }
        Ok(())
    }

    pub fn sample(&self, grid: &Arc<Grid>, rho: f64, seed: u64) -> Result<SpectralField> {
        self.validate(grid.dim())?;
        let raw = match self {
            InitialData::Gaussian {
                width,
                center,
                momentum,
                chirp,
                ..
            } => {
                let dim = grid.dim();
                let c: Vec<f64> = if center.is_empty() { vec![0.0; dim] } else { center.clone() };
                let p: Vec<f64> = if momentum.is_empty() { vec![0.0; dim] } else { momentum.clone() };
                let w2 = width * width;
                SpectralField::from_fn(grid, |x| {
                    let r2: f64 = x.iter().zip(&c).map(|(a, b)| (a - b) * (a - b)).sum();
                    let px: f64 = x.iter().zip(&p).map(|(a, b)| a * b).sum();
                    C64::from_polar((-r2 / (2.0 * w2)).exp(), px + chirp * r2)
                })
            }
            InitialData::BandLimitedRandom { kmax, width, .. } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let coeffs: Vec<C64> = grid
                    .k_abs()
                    .iter()
                    .map(|&k| {
                        let re: f64 = rng.gen_range(-1.0..1.0);
                        let im: f64 = rng.gen_range(-1.0..1.0);
                        if k <= *kmax {
                            C64::new(re, im)
                        } else {
                            C64::new(0.0, 0.0)
                        }
                    })
                    .collect();
                let field = Spectrum::from_coeffs(grid, coeffs)?.into_field();
                let w2 = width * width;
                let env = SpectralField::from_fn(grid, |x| {
                    let r2: f64 = x.iter().map(|a| a * a).sum();
                    C64::new((-r2 / (2.0 * w2)).exp(), 0.0)
                });
                field.zip_map(&env, |a, b| a * b)
            }
            InitialData::File { path } => {
                let snap = crate::snapshot::Snapshot::read(path)?;
                return snap.field(grid, 0);
            }
        };
        let norm = raw.spectrum().norm(&NormSpec::sobolev(rho));
        let a0 = self.a0().expect("analytic family");
        Ok(raw.scale(a0 / norm))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpec;

    #[test]
    fn gaussian_is_normalized() {
        let g = Grid::new(GridSpec::new(2, 64, 20.0).unwrap()).unwrap();
        let v = InitialData::default().sample(&g, 0.95, 0).unwrap();
        let a = v.spectrum().norm(&NormSpec::sobolev(0.95));
        assert!((a - 0.5).abs() < 1e-12);
    }

    #[test]
    fn random_family_is_seeded() {
        let g = Grid::new(GridSpec::new(2, 32, 20.0).unwrap()).unwrap();
        let d = InitialData::BandLimitedRandom {
            a0: 1.0,
            kmax: 2.0,
            width: 2.0,
        };
        let a = d.sample(&g, 0.95, 7).unwrap();
        let b = d.sample(&g, 0.95, 7).unwrap();
        let c = d.sample(&g, 0.95, 8).unwrap();
        assert_eq!(a.values(), b.values());
        assert!(a.max_abs_diff(&c) > 1e-3);
    }
}
