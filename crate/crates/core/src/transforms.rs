//! Free propagator, pseudoconformal inversion and phase dressing.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::error::{LabError, Result};
use crate::grid::{Grid, GridSpec, NormSpec, SpectralField, C64};
use crate::trajectory::Trajectory;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

/// `U(t) = exp(i(t/2)Δ)`, the multiplier `exp(-i t |k|²/2)`.
pub fn free_propagate(u: &SpectralField, t: f64) -> SpectralField {
    u.spectrum()
        .multiply(|_, k| C64::from_polar(1.0, -0.5 * t * k * k))
        .into_field()
}

/// Free evolution of `exp(-|x|²/(2w²) + i p·x)` in closed form.
pub fn free_gaussian(grid: &Arc<Grid>, t: f64, width: f64, momentum: &[f64]) -> SpectralField {
    let n = grid.dim() as f64;
    let w2 = C64::new(width * width, 0.0);
    let z = w2 + C64::new(0.0, t);
    let pref = (w2 / z).powf(0.5 * n);
    let p2: f64 = momentum.iter().map(|p| p * p).sum();
    SpectralField::from_fn(grid, |x| {
        let mut r2 = 0.0;
        let mut px = 0.0;
        for (a, xa) in x.iter().enumerate() {
            let p = momentum.get(a).copied().unwrap_or(0.0);
            let y = xa - p * t;
            r2 += y * y;
            px += p * xa;
        }
        pref * (-r2 / (2.0 * z)).exp() * C64::from_polar(1.0, px - 0.5 * p2 * t)
    })
}

/// The grid whose spacing equals the wavenumber spacing of `spec`.
pub fn dual_spec(spec: &GridSpec) -> Result<GridSpec> {
    GridSpec::new(spec.dim, spec.points, 2.0 * PI * spec.points as f64 / spec.length)
}

fn axis_sign(idx: usize, n: usize, dim: usize) -> f64 {
    let mut rest = idx;
    let mut parity = 0;
    for _ in 0..dim {
        parity += rest % n;
        rest /= n;
    }
    if parity % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Continuum-normalized Fourier transform sampled on the dual grid, with both grids
/// centered at the origin.
pub fn fourier_transform(w: &SpectralField) -> Result<SpectralField> {
    let grid = w.grid();
    let spec = grid.spec();
    if spec.points % 2 != 0 {
        return Err(LabError::Shape("centered transform needs an even point count".into()));
    }
    let dual = Grid::new(dual_spec(spec)?)?;
    let n = spec.points;
    let dim = spec.dim;
    let mut buf: Vec<C64> = w
        .values()
        .iter()
        .enumerate()
        .map(|(i, v)| v * axis_sign(i, n, dim))
        .collect();
    grid.forward(&mut buf);
    let global = if (n / 2 * dim) % 2 == 0 { 1.0 } else { -1.0 };
    let scale = (spec.dx() / spec.dk()).powf(0.5 * dim as f64) * global;
    for (i, v) in buf.iter_mut().enumerate() {
        *v *= axis_sign(i, n, dim) * scale;
    }
    SpectralField::from_values(&dual, buf)
}

/// `w ↦ conj(F w)`, returned on the dual grid. Applying it twice is the identity.
pub fn pseudoconformal_invert(w: &SpectralField) -> Result<SpectralField> {
    Ok(fourier_transform(w)?.conj())
}

/// `||<x>^σ w||`, the `FH^σ` norm.
pub fn fh_norm(w: &SpectralField, sigma: f64) -> f64 {
    let grid = w.grid();
    let sum: f64 = w
        .values()
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let x2: f64 = grid.position_vec(i).iter().map(|x| x * x).sum();
            (1.0 + x2).powf(sigma) * v.norm_sqr()
        })
        .sum();
    (sum * grid.cell()).sqrt()
}

/// Smallest `t` for which the chirp `exp(i x²/2t)` turns by less than `π` per cell.
pub fn factorization_min_time(grid: &Grid) -> f64 {
    0.5 * grid.spec().length * grid.dx() / PI
}

/// Apply the dense matrix `a` (row-major `n × n`) along every axis.
fn apply_along_axes(data: &mut [C64], a: &[C64], n: usize, dim: usize) {
    let mut line = vec![ZERO; n];
    let mut out = vec![ZERO; n];
    for axis in 0..dim {
        let stride = n.pow((dim - 1 - axis) as u32);
        let block = n * stride;
        for chunk in data.chunks_exact_mut(block) {
            for s in 0..stride {
                for i in 0..n {
                    line[i] = chunk[i * stride + s];
                }
                for (p, o) in out.iter_mut().enumerate() {
                    let row = &a[p * n..(p + 1) * n];
                    *o = row.iter().zip(&line).map(|(x, y)| x * y).sum();
                }
                for i in 0..n {
                    chunk[i * stride + s] = out[i];
                }
            }
        }
    }
}

/// `U(t) = M(t) D(t) F M(t)` evaluated literally on the grid, with the Fourier
/// integral summed directly at the dilated points `x/t`.
pub fn factorized_propagate(u: &SpectralField, t: f64) -> Result<SpectralField> {
    let grid = u.grid();
    let t_min = factorization_min_time(grid);
    if !(t >= t_min) {
        return Err(LabError::Domain(format!(
            "factorized propagator needs t >= {t_min:.3e}, got {t}"
        )));
    }
    let n = grid.points();
    let dim = grid.dim();
    let dx = grid.dx();
    let xs: Vec<f64> = (0..n).map(|i| -0.5 * grid.spec().length + i as f64 * dx).collect();
    let chirp = |idx: usize| -> C64 {
        let x2: f64 = grid.position_vec(idx).iter().map(|x| x * x).sum();
        C64::from_polar(1.0, x2 / (2.0 * t))
    };
    let mut buf: Vec<C64> = u.values().iter().enumerate().map(|(i, v)| v * chirp(i)).collect();
    // F at ξ_p = x_p / t: (2π)^{-1/2} dx Σ_j exp(-i ξ_p x_j) per axis
    let norm = dx / (2.0 * PI).sqrt();
    let mut a = vec![ZERO; n * n];
    for p in 0..n {
        for j in 0..n {
            a[p * n + j] = C64::from_polar(norm, -xs[p] / t * xs[j]);
        }
    }
    apply_along_axes(&mut buf, &a, n, dim);
    let dil = C64::new(0.0, t).powf(-0.5 * dim as f64);
    for (i, v) in buf.iter_mut().enumerate() {
        *v *= dil * chirp(i);
    }
    SpectralField::from_values(grid, buf)
}

/// `u_c = exp(-iφ) v` at one time.
#[derive(Clone, Debug)]
pub struct DressedState {
    pub t: f64,
    pub v: SpectralField,
    pub phi: Vec<f64>,
    pub u_c: SpectralField,
}

impl DressedState {
    pub fn new(t: f64, v: SpectralField, phi: Vec<f64>) -> Result<Self> {
        if phi.len() != v.grid().total() {
            return Err(LabError::Shape("phase does not match grid".into()));
        }
        let u_c = SpectralField::from_values(
            v.grid(),
            v.values()
                .iter()
                .zip(&phi)
                .map(|(a, p)| a * C64::from_polar(1.0, -p))
                .collect(),
        )?;
        Ok(DressedState { t, v, phi, u_c })
    }

    /// Fraction of `||u_c||²` outside the dealiased band; large values mean the
    /// phase is not resolved on the grid.
    pub fn alias_fraction(&self) -> f64 {
        alias_fraction(&self.u_c)
    }

    /// Out-of-band fraction the phase adds on top of that of `v`.
    pub fn added_alias(&self) -> f64 {
        alias_fraction(&self.u_c) - alias_fraction(&self.v)
    }

    pub fn norm(&self, spec: &NormSpec) -> f64 {
        self.u_c.spectrum().norm(spec)
    }
}

/// Fraction of `||u||²` carried by modes outside the dealiased band.
pub fn alias_fraction(u: &SpectralField) -> f64 {
    let spec = u.spectrum();
    let mask = u.grid().dealias_mask();
    let total: f64 = spec.coeffs().iter().map(|c| c.norm_sqr()).sum();
    let out: f64 = spec
        .coeffs()
        .iter()
        .zip(mask)
        .filter(|(_, &keep)| !keep)
        .map(|(c, _)| c.norm_sqr())
        .sum();
    out / total.max(1e-300)
}

/// Dress every node of `v` with its phase.
pub fn assemble_uc(v: &Trajectory, phases: &[Vec<f64>]) -> Result<Vec<DressedState>> {
    if phases.len() != v.len() {
        return Err(LabError::Shape(format!(
            "{} phases for {} states",
            phases.len(),
            v.len()
        )));
    }
    v.times()
        .iter()
        .zip(v.states())
        .zip(phases)
        .map(|((&t, s), p)| DressedState::new(t, s.clone(), p.clone()))
        .collect()
}

pub const RECONSTRUCT_RANGE: (f64, f64) = (0.5, 2.0);

/// `u(t) = M(t) D(t) exp(iφ(1/t)) conj(v(1/t))`, for `t` in `[1/2, 2]`.
///
/// The dilation is realized exactly by relabeling: the result lives on the grid of
/// length `t L`, sampled at `x = t y` for the stored nodes `y`.
pub fn reconstruct_u(dressed: &[DressedState], t: f64) -> Result<SpectralField> {
    let (lo, hi) = RECONSTRUCT_RANGE;
    if !(t >= lo && t <= hi) {
        return Err(LabError::Range { t, lo, hi });
    }
    let tau = 1.0 / t;
    let state = dressed
        .iter()
        .find(|d| (d.t - tau).abs() <= 1e-12 * tau)
        .ok_or_else(|| {
            let lo = dressed.first().map_or(f64::NAN, |d| d.t);
            let hi = dressed.last().map_or(f64::NAN, |d| d.t);
            LabError::Range { t: tau, lo, hi }
        })?;
    let grid = state.v.grid();
    let spec = grid.spec();
    let scaled = Grid::new(GridSpec::new(spec.dim, spec.points, spec.length * t)?)?;
    let dil = C64::new(0.0, t).powf(-0.5 * spec.dim as f64);
    let values = state
        .v
        .values()
        .iter()
        .zip(&state.phi)
        .enumerate()
        .map(|(i, (v, p))| {
            let y2: f64 = grid.position_vec(i).iter().map(|y| y * y).sum();
            let chirp = C64::from_polar(1.0, t * y2 / 2.0);
            chirp * dil * C64::from_polar(1.0, *p) * v.conj()
        })
        .collect();
    SpectralField::from_values(&scaled, values)
}

/// `||ω^ρ u_c|| / ((1 + ||ω^{n/2} φ||)^{1+[ρ]} ||ω^ρ v||)` at one state.
pub fn dressing_ratio(state: &DressedState, rho: f64) -> f64 {
    let grid = state.v.grid();
    let phi = SpectralField::from_real(grid, &state.phi).expect("grid-sized");
    let n_half = grid.dim() as f64 / 2.0;
    let phi_norm = phi.spectrum().norm(&NormSpec::homogeneous(n_half));
    let power = 1.0 + rho.floor();
    let num = state.u_c.spectrum().norm(&NormSpec::homogeneous(rho));
    let den = (1.0 + phi_norm).powf(power) * state.v.spectrum().norm(&NormSpec::homogeneous(rho));
    num / den.max(1e-300)
}

/// The `u_c` growth envelope `a_0 (1 + a_0²(1 + a_0² t^γ) t^{γ-1})^{1+[ρ]}` without its constant.
pub fn growth_envelope(t: f64, a0: f64, gamma: f64, rho: f64) -> f64 {
    let a2 = a0 * a0;
    a0 * (1.0 + a2 * (1.0 + a2 * t.powf(gamma)) * t.powf(gamma - 1.0)).powf(1.0 + rho.floor())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gaussian(grid: &Arc<Grid>) -> SpectralField {
        SpectralField::from_fn(grid, |x| {
            let r2: f64 = x.iter().map(|a| a * a).sum();
            C64::from_polar((-r2 / 2.0).exp(), 0.4 * x[0] + 0.1 * r2)
        })
    }

    #[test]
    fn inversion_is_involutive() {
        let g = Grid::new(GridSpec::new(2, 32, 14.0).unwrap()).unwrap();
        let w = gaussian(&g);
        let back = pseudoconformal_invert(&pseudoconformal_invert(&w).unwrap()).unwrap();
        assert_eq!(back.grid().spec(), g.spec());
        assert!(back.max_abs_diff(&w) < 1e-12);
    }

    #[test]
    fn self_dual_gaussian_is_fixed() {
        let n = 64;
        let l = (2.0 * PI * n as f64).sqrt();
        let g = Grid::new(GridSpec::new(2, n, l).unwrap()).unwrap();
        let w = SpectralField::from_fn(&g, |x| C64::new((-(x[0] * x[0] + x[1] * x[1]) / 2.0).exp(), 0.0));
        let out = pseudoconformal_invert(&w).unwrap();
        let err = out.values().iter().zip(w.values()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        assert!(err < 1e-12, "{err}");
    }

    #[test]
    fn free_flow_composes() {
        let g = Grid::new(GridSpec::new(2, 32, 20.0).unwrap()).unwrap();
        let w = gaussian(&g);
        assert!(free_propagate(&free_propagate(&w, 0.7), -0.7).max_abs_diff(&w) < 1e-12);
        assert!(free_propagate(&w, 0.0).max_abs_diff(&w) < 1e-14);
    }
}
