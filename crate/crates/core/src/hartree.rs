//! The Hartree nonlinearity `g(u) = kappa |x|^{-gamma} * |u|^2` as a Fourier
//! multiplier, its low/high frequency split and the decay-exponent algebra.

use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma as gamma_fn;

use crate::error::{LabError, Result};
use crate::grid::{chi, Grid, SpectralField, Spectrum, C64};
use crate::quad::composite_gauss;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelParams {
    pub gamma: f64,
    pub kappa: f64,
    pub rho: f64,
    pub n: usize,
    /// Value used for `[a]_+` at `a = 0`.
    pub plus_epsilon: f64,
}

impl Default for ModelParams {
    fn default() -> Self {
        ModelParams {
            gamma: 0.45,
            kappa: 1.0,
            rho: 0.95,
            n: 2,
            plus_epsilon: 0.05,
        }
    }
}

impl ModelParams {
    pub fn new(gamma: f64, kappa: f64, rho: f64, n: usize) -> Result<Self> {
        let p = ModelParams {
            gamma,
            kappa,
            rho,
            n,
            ..Default::default()
        };
        p.validate()?;
        Ok(p)
    }

    /// All violated hypotheses, empty when the parameter set is admissible.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        let (g, r, n) = (self.gamma, self.rho, self.n as f64);
        if self.n < 2 {
            out.push(format!("n must be at least 2, got {}", self.n));
        }
        if !g.is_finite() || g <= 1.0 / 3.0 || g >= 0.5 {
            out.push(format!("gamma = {g} violates 1/3 < γ < 1/2"));
        }
        if !self.kappa.is_finite() {
            out.push("kappa must be finite".into());
        }
        if !(self.plus_epsilon > 0.0) {
            out.push(format!("plus_epsilon must be positive, got {}", self.plus_epsilon));
        }
        let lo = 2.0 - 2.5 * g;
        if lo >= n / 2.0 {
            out.push(format!(
                "window 2 − 5γ/2 < ρ < n/2 is empty for gamma = {g}, n = {}: {lo:.4} ≥ {:.4}",
                self.n,
                n / 2.0
            ));
        } else {
            if !(r > lo) {
                out.push(format!("rho must exceed 2 − 5·gamma/2 = {lo:.4}, got {r}"));
            }
            if !(r < n / 2.0) {
                out.push(format!("rho must be below n/2 = {:.4}, got {r}", n / 2.0));
            }
        }
        if out.is_empty() {
            let e = self.integrability_exponent();
            if !(e > 0.0) {
                out.push(format!("2γ + λ_1 − 1 = {e:.4} must be positive"));
            }
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(LabError::Params(v.join("; ")))
        }
    }

    pub fn exponents(&self) -> ExponentTable {
        ExponentTable {
            gamma: self.gamma,
            rho: self.rho,
            n: self.n,
            plus_epsilon: self.plus_epsilon,
        }
    }

    /// `2γ + λ_1 − 1`, the time exponent of the Gronwall and contraction bounds.
    pub fn integrability_exponent(&self) -> f64 {
        2.0 * self.gamma + self.exponents().lambda(1.0) - 1.0
    }

    /// Multiplier constant `C` with `|x|^{-γ} * f = C ω^{γ-n} f`.
    pub fn riesz_constant(&self) -> f64 {
        riesz_constant(self.gamma, self.n)
    }
}

/// `2^{n-γ} π^{n/2} Γ((n-γ)/2) / Γ(γ/2)`: the Fourier symbol of convolution with
/// `|x|^{-γ}` is this constant times `|k|^{γ-n}`.
pub fn riesz_constant(gamma: f64, n: usize) -> f64 {
    let nf = n as f64;
    2f64.powf(nf - gamma) * PI.powf(nf / 2.0) * gamma_fn((nf - gamma) / 2.0) / gamma_fn(gamma / 2.0)
}

/// `λ_α`, `μ_j` and `λ_★` for a fixed `(γ, ρ)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExponentTable {
    pub gamma: f64,
    pub rho: f64,
    pub n: usize,
    pub plus_epsilon: f64,
}

impl ExponentTable {
    pub fn plus(&self, a: f64) -> f64 {
        if a.abs() < 1e-12 {
            self.plus_epsilon
        } else {
            a.max(0.0)
        }
    }

    pub fn lambda(&self, alpha: f64) -> f64 {
        self.gamma - 0.5 * self.plus(alpha + 1.0 + self.gamma - 2.0 * self.rho)
    }

    /// `μ_j`, built with the ordinary positive part `( )_+`.
    pub fn mu(&self, j: i32, sigma_prime: f64) -> f64 {
        self.gamma - 0.5 * (j as f64 + 1.0 + self.gamma - sigma_prime - 2.0 * self.rho).max(0.0)
    }

    pub fn lambda_star(&self, sigma: f64) -> f64 {
        self.gamma - 0.5 * (3.0 + self.gamma - 2.0 * sigma - 2.0 * self.rho).max(0.0)
    }
}

pub fn exponent_lambda(alpha: f64, params: &ModelParams) -> f64 {
    params.exponents().lambda(alpha)
}

pub fn exponent_mu(j: i32, sigma_prime: f64, params: &ModelParams) -> f64 {
    params.exponents().mu(j, sigma_prime)
}

/// Per-grid cache of the Hartree multiplier `κ C |k|^{γ-n}` (zero at `k = 0`).
#[derive(Clone, Debug)]
pub struct HartreeOperator {
    grid: Arc<Grid>,
    multiplier: Vec<f64>,
    kappa: f64,
}

impl HartreeOperator {
    pub fn new(grid: &Arc<Grid>, params: &ModelParams) -> Result<Self> {
        let order = params.gamma - params.n as f64;
        if order >= 0.0 {
            return Err(LabError::MultiplierOrder(format!(
                "γ − n = {order} must be negative"
            )));
        }
        if grid.dim() != params.n {
            return Err(LabError::Shape(format!(
                "grid dimension {} differs from n = {}",
                grid.dim(),
                params.n
            )));
        }
        let c = params.kappa * params.riesz_constant();
        let multiplier = grid
            .k_abs()
            .iter()
            .map(|&k| if k > 0.0 { c * k.powf(order) } else { 0.0 })
            .collect();
        Ok(HartreeOperator {
            grid: Arc::clone(grid),
            multiplier,
            kappa: params.kappa,
        })
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    /// `κ C |k|^{γ-n}` per flat Fourier index.
    pub fn multiplier(&self) -> &[f64] {
        &self.multiplier
    }

    pub fn is_trivial(&self) -> bool {
        self.kappa == 0.0
    }

    /// Fourier coefficients of `g` for the real density `|u|^2`.
    pub fn potential_spectrum_from_density(&self, density: &[f64]) -> Spectrum {
        let mut buf: Vec<C64> = density.iter().map(|&d| C64::new(d, 0.0)).collect();
        self.grid.forward(&mut buf);
        for (c, m) in buf.iter_mut().zip(&self.multiplier) {
            *c *= *m;
        }
        Spectrum::from_coeffs(&self.grid, buf).expect("grid-sized buffer")
    }

    pub fn potential_spectrum(&self, u: &SpectralField) -> Spectrum {
        let density: Vec<f64> = u.values().iter().map(|v| v.norm_sqr()).collect();
        self.potential_spectrum_from_density(&density)
    }

    /// Real samples of `g(u)`.
    pub fn potential_values(&self, u: &SpectralField) -> Vec<f64> {
        let mut s = self.potential_spectrum(u).coeffs().to_vec();
        self.grid.inverse(&mut s);
        s.into_iter().map(|c| c.re).collect()
    }

    /// Real samples of `g_L(u) = χ(|k| t^{1/2}) g(u)`.
    pub fn low_values(&self, u: &SpectralField, t: f64) -> Vec<f64> {
        let st = t.sqrt();
        let mut s = self.potential_spectrum(u).coeffs().to_vec();
        for (c, k) in s.iter_mut().zip(self.grid.k_abs()) {
            *c *= chi(k * st);
        }
        self.grid.inverse(&mut s);
        s.into_iter().map(|c| c.re).collect()
    }
}

pub fn hartree_potential(u: &SpectralField, params: &ModelParams) -> Result<SpectralField> {
    u.check_finite()?;
    let op = HartreeOperator::new(u.grid(), params)?;
    let g = op.potential_spectrum(u).into_field();
    let residue = g.imag_residue();
    if residue > 1e-10 {
        return Err(LabError::InvalidField(format!(
            "Hartree potential has imaginary residue {residue:.3e}"
        )));
    }
    Ok(g.realify())
}

pub fn split_potential(
    u: &SpectralField,
    t: f64,
    params: &ModelParams,
) -> Result<(SpectralField, SpectralField)> {
    if !(t > 0.0) {
        return Err(LabError::Domain(format!("split time must be positive, got {t}")));
    }
    let g = hartree_potential(u, params)?;
    let low = crate::grid::cutoff_low(&g, t)?.realify();
    let high = g.sub(&low);
    Ok((low, high))
}

/// `∫_{R^n} |y|^{-γ} e^{-|y|^2} dy` in closed form.
pub fn gaussian_riesz_closed_form(gamma: f64, n: usize) -> f64 {
    let nf = n as f64;
    PI.powf(nf / 2.0) * gamma_fn((nf - gamma) / 2.0) / gamma_fn(nf / 2.0)
}

/// The same integral by 1D radial quadrature. With `y = r^2` it becomes
/// `|S^{n-1}|/2 ∫_0^∞ y^{a-1} e^{-y} dy`, `a = (n-γ)/2`; the piece on `[0, 1]` is
/// summed from the exponential series term by term, the tail by Gauss–Legendre.
pub fn gaussian_riesz_radial_quadrature(gamma: f64, n: usize) -> f64 {
    let nf = n as f64;
    let sphere = 2.0 * PI.powf(nf / 2.0) / gamma_fn(nf / 2.0);
    let a = (nf - gamma) / 2.0;
    let mut head = 0.0;
    let mut fact = 1.0;
    for j in 0..40 {
        if j > 0 {
            fact *= j as f64;
        }
        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
        head += sign / (fact * (a + j as f64));
    }
    let (x, w) = composite_gauss(1.0, 80.0, 200, 10);
    let tail: f64 = x
        .iter()
        .zip(&w)
        .map(|(&y, &wt)| wt * y.powf(a - 1.0) * (-y).exp())
        .sum();
    0.5 * sphere * (head + tail)
}

/// Free-space value of `κ |x|^{-γ} * |u|^2` at `x0`, for `n = 2`.
///
/// The density is read off the grid samples; its continuous Fourier transform is
/// evaluated by direct sums at polar nodes, so no periodization enters.
pub fn free_space_point_potential(
    u: &SpectralField,
    x0: &[f64],
    params: &ModelParams,
    radial_panels: usize,
    angles: usize,
) -> Result<f64> {
    let grid = u.grid();
    if grid.dim() != 2 || params.n != 2 || x0.len() != 2 {
        return Err(LabError::Domain(
            "free-space evaluator is implemented for n = 2".into(),
        ));
    }
    u.check_finite()?;
    let n = grid.points();
    let dx = grid.dx();
    let xs: Vec<f64> = (0..n).map(|i| grid.position(i, 1)).collect();
    let density: Vec<f64> = u.values().iter().map(|v| v.norm_sqr()).collect();
    let gamma = params.gamma;
    let k_max = grid.spec().nyquist();
    let (us, ws) = composite_gauss(0.0, k_max.powf(gamma), radial_panels, 8);
    let mut total = 0.0;
    let mut row = vec![C64::new(0.0, 0.0); n];
    let mut e0 = vec![C64::new(0.0, 0.0); n];
    let mut e1 = vec![C64::new(0.0, 0.0); n];
    for (&uu, &wu) in us.iter().zip(&ws) {
        let k = uu.powf(1.0 / gamma);
        let mut ring = 0.0;
        for a in 0..angles {
            let th = 2.0 * PI * a as f64 / angles as f64;
            let (k0, k1) = (k * th.cos(), k * th.sin());
            for i in 0..n {
                e0[i] = C64::from_polar(1.0, -k0 * xs[i]);
                e1[i] = C64::from_polar(1.0, -k1 * xs[i]);
            }
            for (i, r) in row.iter_mut().enumerate() {
                let d = &density[i * n..(i + 1) * n];
                *r = d.iter().zip(&e1).map(|(&di, &e)| e * di).sum();
            }
            let rho_hat: C64 = row.iter().zip(&e0).map(|(r, e)| r * e).sum::<C64>() * dx * dx;
            let phase = C64::from_polar(1.0, k0 * x0[0] + k1 * x0[1]);
            ring += (rho_hat * phase).re;
        }
        ring *= 2.0 * PI / angles as f64;
        // k^{γ-1} dk = du / γ
        total += wu * ring / gamma;
    }
    Ok(params.kappa * params.riesz_constant() * total / (2.0 * PI).powi(2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{GridSpec, SpectralField};

    fn gauss_field(n: usize) -> SpectralField {
        let g = Grid::new(GridSpec::new(2, n, 20.0).unwrap()).unwrap();
        SpectralField::from_fn(&g, |x| C64::new((-(x[0] * x[0] + x[1] * x[1]) / 2.0).exp(), 0.0))
    }

    #[test]
    fn default_exponents() {
        let p = ModelParams::default();
        let e = p.exponents();
        assert!((e.lambda(0.0) - 0.45).abs() < 1e-15);
        assert!((e.lambda(1.0) - 0.175).abs() < 1e-15);
        assert!((e.lambda(2.0) + 0.325).abs() < 1e-15);
        assert!((p.integrability_exponent() - 0.075).abs() < 1e-14);
        // bracket exactly zero
        assert!((e.lambda(0.45) - (0.45 - 0.025)).abs() < 1e-15);
    }

    #[test]
    fn validation_messages() {
        let err = ModelParams::new(0.3, 1.0, 0.95, 2).unwrap_err().to_string();
        assert!(err.contains("1/3 < γ < 1/2"), "{err}");
        let err = ModelParams::new(0.38, 1.0, 0.95, 2).unwrap_err().to_string();
        assert!(err.contains("empty"), "{err}");
        let err = ModelParams::new(0.45, 1.0, 0.8, 2).unwrap_err().to_string();
        assert!(err.contains("0.875"), "{err}");
        assert!(ModelParams::new(0.45, -1.0, 0.95, 2).is_ok());
        assert!(ModelParams::new(0.45, 1.0, 1.2, 3).is_ok());
    }

    #[test]
    fn riesz_constant_against_radial_oracle() {
        for &(g, n) in &[(0.45, 2usize), (0.4, 3)] {
            let closed = gaussian_riesz_closed_form(g, n);
            let quad = gaussian_riesz_radial_quadrature(g, n);
            assert!((closed - quad).abs() < 1e-10 * closed, "{closed} vs {quad}");
        }
        // n = 2: π Γ(1 − γ/2)
        let g = 0.45;
        assert!((gaussian_riesz_closed_form(g, 2) - PI * gamma_fn(1.0 - g / 2.0)).abs() < 1e-12);
    }

    #[test]
    fn trivial_cases() {
        let u = gauss_field(32);
        let p0 = ModelParams {
            kappa: 0.0,
            ..Default::default()
        };
        assert!(hartree_potential(&u, &p0).unwrap().sup_norm() == 0.0);
        let z = SpectralField::zeros(u.grid());
        assert!(hartree_potential(&z, &ModelParams::default()).unwrap().sup_norm() == 0.0);
    }

    #[test]
    fn split_low_is_everything_for_small_t() {
        let u = gauss_field(32);
        let p = ModelParams::default();
        let kmax = u.grid().k_abs().iter().cloned().fold(0.0, f64::max);
        let (lo, hi) = split_potential(&u, 0.99 / (kmax * kmax), &p).unwrap();
        assert!(hi.sup_norm() < 1e-14);
        let g = hartree_potential(&u, &p).unwrap();
        assert!(lo.max_abs_diff(&g) < 1e-14);
        assert!(split_potential(&u, 0.0, &p).is_err());
    }

    #[test]
    fn free_space_matches_oracle_at_origin() {
        let u = gauss_field(64);
        let p = ModelParams::default();
        let v = free_space_point_potential(&u, &[0.0, 0.0], &p, 64, 96).unwrap();
        let exact = gaussian_riesz_closed_form(p.gamma, 2);
        assert!((v - exact).abs() < 1e-4 * exact, "{v} vs {exact}");
    }
}
