//! Periodic-grid discretization with a unitary DFT.
//!
//! Fields live on the torus `[-L/2, L/2)^n` sampled at `N` points per axis.
//! The forward and inverse transforms are both scaled by `1/sqrt(N^n)`, so the
//! discrete Parseval identity holds without extra factors and the continuum
//! `L^2` norm of a sampled field is `sqrt(dx^n) * |coeffs|_2`.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

pub type C64 = Complex64;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub dim: usize,
    pub points: usize,
    pub length: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            dim: 2,
            points: 128,
            length: 20.0,
        }
    }
}

impl GridSpec {
    pub fn new(dim: usize, points: usize, length: f64) -> Result<Self> {
        let spec = GridSpec {
            dim,
            points,
            length,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim < 2 {
            return Err(LabError::Params(format!(
                "spatial dimension must be at least 2, got {}",
                self.dim
            )));
        }
        if self.points < 8 || !self.points.is_power_of_two() {
            return Err(LabError::Params(format!(
                "points per dimension must be a power of two >= 8, got {}",
                self.points
            )));
        }
        if !(self.length > 0.0 && self.length.is_finite()) {
            return Err(LabError::Params(format!(
                "box length must be positive, got {}",
                self.length
            )));
        }
        Ok(())
    }

    pub fn total(&self) -> usize {
        self.points.pow(self.dim as u32)
    }

    pub fn dx(&self) -> f64 {
        self.length / self.points as f64
    }

    /// Fundamental wavenumber `2 pi / L`.
    pub fn dk(&self) -> f64 {
        std::f64::consts::TAU / self.length
    }

    pub fn nyquist(&self) -> f64 {
        std::f64::consts::PI / self.dx()
    }
}

/// Precomputed wavenumber tables and FFT plans for one [`GridSpec`].
pub struct Grid {
    spec: GridSpec,
    total: usize,
    axis_m: Vec<i64>,
    k_abs: Vec<f64>,
    k_axes: Vec<Vec<f64>>,
    dealias: Vec<bool>,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid").field("spec", &self.spec).finish()
    }
}

impl Grid {
    pub fn new(spec: GridSpec) -> Result<Arc<Grid>> {
        spec.validate()?;
        let n = spec.points;
        let total = spec.total();
        let dk = spec.dk();
        let axis_m: Vec<i64> = (0..n)
            .map(|i| if i < n / 2 { i as i64 } else { i as i64 - n as i64 })
            .collect();
        let axis_k: Vec<f64> = axis_m.iter().map(|&m| m as f64 * dk).collect();
        let mut k_abs = vec![0.0; total];
        let mut dealias = vec![true; total];
        let third = (n / 3) as i64;
        for (idx, (ka, keep)) in k_abs.iter_mut().zip(dealias.iter_mut()).enumerate() {
            let mut rest = idx;
            let mut k2 = 0.0;
            for _ in 0..spec.dim {
                let i = rest % n;
                rest /= n;
                k2 += axis_k[i] * axis_k[i];
                if axis_m[i].abs() > third {
                    *keep = false;
                }
            }
            *ka = k2.sqrt();
        }
        let k_axes = (0..spec.dim)
            .map(|axis| {
                let stride = n.pow((spec.dim - 1 - axis) as u32);
                (0..total).map(|idx| axis_k[(idx / stride) % n]).collect()
            })
            .collect();
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(n);
        let inv = planner.plan_fft_inverse(n);
        Ok(Arc::new(Grid {
            spec,
            total,
            axis_m,
            k_abs,
            k_axes,
            dealias,
            fwd,
            inv,
        }))
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn dim(&self) -> usize {
        self.spec.dim
    }

    pub fn points(&self) -> usize {
        self.spec.points
    }

    pub fn total(&self) -> usize {
        self.total
    }

    pub fn dx(&self) -> f64 {
        self.spec.dx()
    }

    /// Volume element `dx^n`.
    pub fn cell(&self) -> f64 {
        self.dx().powi(self.spec.dim as i32)
    }

    /// `|k|` at each flat Fourier index.
    pub fn k_abs(&self) -> &[f64] {
        &self.k_abs
    }

    /// Axis-`axis` wavevector component at every flat Fourier index.
    pub fn k_axis(&self, axis: usize) -> &[f64] {
        &self.k_axes[axis]
    }

    pub fn dealias_mask(&self) -> &[bool] {
        &self.dealias
    }

    /// Axis-`axis` component of the wavevector at flat index `idx`.
    pub fn k_component(&self, idx: usize, axis: usize) -> f64 {
        self.k_axes[axis][idx]
    }

    /// Integer lattice coordinate along `axis` at flat Fourier index `idx`.
    pub fn mode_index(&self, idx: usize, axis: usize) -> i64 {
        let n = self.spec.points;
        let stride = n.pow((self.spec.dim - 1 - axis) as u32);
        self.axis_m[(idx / stride) % n]
    }

    /// Physical coordinate along `axis` at flat index `idx`.
    pub fn position(&self, idx: usize, axis: usize) -> f64 {
        let n = self.spec.points;
        let stride = n.pow((self.spec.dim - 1 - axis) as u32);
        let i = (idx / stride) % n;
        -0.5 * self.spec.length + i as f64 * self.dx()
    }

    pub fn position_vec(&self, idx: usize) -> Vec<f64> {
        (0..self.spec.dim).map(|a| self.position(idx, a)).collect()
    }

    fn transform(&self, data: &mut [C64], inverse: bool) {
        let n = self.spec.points;
        let dim = self.spec.dim;
        let fft = if inverse { &self.inv } else { &self.fwd };
        let mut scratch = vec![ZERO; fft.get_inplace_scratch_len()];
        let mut lines = Vec::new();
        for axis in 0..dim {
            let stride = n.pow((dim - 1 - axis) as u32);
            if stride == 1 {
                fft.process_with_scratch(data, &mut scratch);
                continue;
            }
            let block = n * stride;
            lines.resize(block, ZERO);
            for chunk in data.chunks_exact_mut(block) {
                for i in 0..n {
                    let row = &chunk[i * stride..(i + 1) * stride];
                    for (s, &val) in row.iter().enumerate() {
                        lines[s * n + i] = val;
                    }
                }
                fft.process_with_scratch(&mut lines, &mut scratch);
                for i in 0..n {
                    let row = &mut chunk[i * stride..(i + 1) * stride];
                    for (s, val) in row.iter_mut().enumerate() {
                        *val = lines[s * n + i];
                    }
                }
            }
        }
        let scale = 1.0 / (self.total as f64).sqrt();
        for v in data.iter_mut() {
            *v *= scale;
        }
    }

    pub fn forward(&self, data: &mut [C64]) {
        debug_assert_eq!(data.len(), self.total);
        self.transform(data, false);
    }

    pub fn inverse(&self, data: &mut [C64]) {
        debug_assert_eq!(data.len(), self.total);
        self.transform(data, true);
    }
}

/// The χ profile: 1 on `[0, 1]`, 0 on `[2, inf)`, smooth in between.
pub fn chi(l: f64) -> f64 {
    fn h(s: f64) -> f64 {
        if s > 0.0 {
            (-1.0 / s).exp()
        } else {
            0.0
        }
    }
    if l <= 1.0 {
        return 1.0;
    }
    if l >= 2.0 {
        return 0.0;
    }
    let a = h(2.0 - l);
    let b = h(l - 1.0);
    a / (a + b)
}

/// Fourier coefficients of a field (unitary DFT convention).
#[derive(Clone, Debug)]
pub struct Spectrum {
    grid: Arc<Grid>,
    coeffs: Vec<C64>,
}

impl Spectrum {
    pub fn from_coeffs(grid: &Arc<Grid>, coeffs: Vec<C64>) -> Result<Self> {
        if coeffs.len() != grid.total() {
            return Err(LabError::Shape(format!(
                "expected {} coefficients, got {}",
                grid.total(),
                coeffs.len()
            )));
        }
        Ok(Spectrum {
            grid: Arc::clone(grid),
            coeffs,
        })
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn coeffs(&self) -> &[C64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [C64] {
        &mut self.coeffs
    }

    pub fn into_field(self) -> SpectralField {
        let mut values = self.coeffs;
        self.grid.inverse(&mut values);
        SpectralField {
            grid: self.grid,
            values,
        }
    }

    /// Multiply every mode by `f(idx, |k|)`.
    pub fn multiply<F: Fn(usize, f64) -> C64>(&self, f: F) -> Spectrum {
        let k = self.grid.k_abs();
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(i, &c)| c * f(i, k[i]))
            .collect();
        Spectrum {
            grid: Arc::clone(&self.grid),
            coeffs,
        }
    }

    /// `sum_k w(|k|) |c_k|^2 dx^n`, the weighted squared norm.
    pub fn weighted_norm_sq<F: Fn(f64) -> f64>(&self, w: F) -> f64 {
        let k = self.grid.k_abs();
        let s: f64 = self
            .coeffs
            .iter()
            .zip(k)
            .map(|(c, &kk)| w(kk) * c.norm_sqr())
            .sum();
        s * self.grid.cell()
    }

    /// `||omega^sigma u||` with the zero mode excluded for `sigma != 0`.
    pub fn omega_norm(&self, sigma: f64) -> f64 {
        if sigma == 0.0 {
            return self.weighted_norm_sq(|_| 1.0).sqrt();
        }
        self.weighted_norm_sq(|k| if k > 0.0 { k.powf(2.0 * sigma) } else { 0.0 })
            .sqrt()
    }

    /// `||<omega>^sigma u||`.
    pub fn bracket_norm(&self, sigma: f64) -> f64 {
        self.weighted_norm_sq(|k| (1.0 + k * k).powf(sigma)).sqrt()
    }

    pub fn norm(&self, spec: &NormSpec) -> f64 {
        match (spec.homogeneous, spec.pm_zero) {
            (true, true) => {
                let hi = self.omega_norm(spec.sigma + spec.pm_epsilon);
                let lo = self.omega_norm(spec.sigma - spec.pm_epsilon);
                (hi * lo).sqrt()
            }
            (true, false) => self.omega_norm(spec.sigma),
            (false, true) => {
                let hi = self.bracket_norm(spec.sigma + spec.pm_epsilon);
                let lo = self.bracket_norm(spec.sigma - spec.pm_epsilon);
                (hi * lo).sqrt()
            }
            (false, false) => self.bracket_norm(spec.sigma),
        }
    }
}

/// A complex scalar field sampled on the physical grid.
#[derive(Clone, Debug)]
pub struct SpectralField {
    grid: Arc<Grid>,
    values: Vec<C64>,
}

impl SpectralField {
    pub fn zeros(grid: &Arc<Grid>) -> Self {
        SpectralField {
            grid: Arc::clone(grid),
            values: vec![ZERO; grid.total()],
        }
    }

    pub fn from_values(grid: &Arc<Grid>, values: Vec<C64>) -> Result<Self> {
        if values.len() != grid.total() {
            return Err(LabError::Shape(format!(
                "expected {} samples, got {}",
                grid.total(),
                values.len()
            )));
        }
        Ok(SpectralField {
            grid: Arc::clone(grid),
            values,
        })
    }

    pub fn from_real(grid: &Arc<Grid>, values: &[f64]) -> Result<Self> {
        Self::from_values(grid, values.iter().map(|&v| C64::new(v, 0.0)).collect())
    }

    pub fn from_fn<F: Fn(&[f64]) -> C64>(grid: &Arc<Grid>, f: F) -> Self {
        let mut x = vec![0.0; grid.dim()];
        let values = (0..grid.total())
            .map(|idx| {
                for (a, xa) in x.iter_mut().enumerate() {
                    *xa = grid.position(idx, a);
                }
                f(&x)
            })
            .collect();
        SpectralField {
            grid: Arc::clone(grid),
            values,
        }
    }

    /// Single Fourier mode `exp(i k.x)` with `k = (2 pi / L) m`.
    pub fn plane_wave(grid: &Arc<Grid>, m: &[i64]) -> Self {
        let dk = grid.spec().dk();
        Self::from_fn(grid, |x| {
            let phase: f64 = x.iter().zip(m).map(|(xa, &ma)| xa * ma as f64 * dk).sum();
            C64::from_polar(1.0, phase)
        })
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [C64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<C64> {
        self.values
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.re.is_finite() && v.im.is_finite())
    }

    pub fn check_finite(&self) -> Result<()> {
        if self.is_finite() {
            Ok(())
        } else {
            Err(LabError::InvalidField("non-finite sample".into()))
        }
    }

    pub fn same_grid(&self, other: &SpectralField) -> Result<()> {
        if Arc::ptr_eq(&self.grid, &other.grid) || self.grid.spec() == other.grid.spec() {
            Ok(())
        } else {
            Err(LabError::Shape(format!(
                "{:?} vs {:?}",
                self.grid.spec(),
                other.grid.spec()
            )))
        }
    }

    pub fn spectrum(&self) -> Spectrum {
        let mut coeffs = self.values.clone();
        self.grid.forward(&mut coeffs);
        Spectrum {
            grid: Arc::clone(&self.grid),
            coeffs,
        }
    }

    pub fn map<F: Fn(C64) -> C64>(&self, f: F) -> Self {
        SpectralField {
            grid: Arc::clone(&self.grid),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_map<F: Fn(C64, C64) -> C64>(&self, other: &SpectralField, f: F) -> Self {
        debug_assert_eq!(self.values.len(), other.values.len());
        SpectralField {
            grid: Arc::clone(&self.grid),
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    pub fn add(&self, other: &SpectralField) -> Self {
        self.zip_map(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &SpectralField) -> Self {
        self.zip_map(other, |a, b| a - b)
    }

    pub fn scale(&self, s: f64) -> Self {
        self.map(|v| v * s)
    }

    pub fn add_scaled(&mut self, other: &SpectralField, s: f64) {
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += b * s;
        }
    }

    /// Pointwise `|u|^2` as a (real-valued) field.
    pub fn modulus_sq(&self) -> Self {
        self.map(|v| C64::new(v.norm_sqr(), 0.0))
    }

    pub fn conj(&self) -> Self {
        self.map(|v| v.conj())
    }

    pub fn real_part(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.re).collect()
    }

    /// Largest imaginary part relative to the largest magnitude.
    pub fn imag_residue(&self) -> f64 {
        let max_abs = self.values.iter().map(|v| v.norm()).fold(0.0, f64::max);
        let max_im = self.values.iter().map(|v| v.im.abs()).fold(0.0, f64::max);
        if max_abs == 0.0 {
            0.0
        } else {
            max_im / max_abs
        }
    }

    /// Drop imaginary parts.
    pub fn realify(&self) -> Self {
        self.map(|v| C64::new(v.re, 0.0))
    }

    pub fn l2_norm(&self) -> f64 {
        let s: f64 = self.values.iter().map(|v| v.norm_sqr()).sum();
        (s * self.grid.cell()).sqrt()
    }

    /// `||u||_p` by direct grid quadrature; `p = inf` gives the sup norm.
    pub fn lp_norm(&self, p: f64) -> f64 {
        if p.is_infinite() {
            return self.sup_norm();
        }
        let s: f64 = self.values.iter().map(|v| v.norm().powf(p)).sum();
        (s * self.grid.cell()).powf(1.0 / p)
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// `int u dx` over the torus.
    pub fn integral(&self) -> C64 {
        self.values.iter().sum::<C64>() * self.grid.cell()
    }

    /// `<self, other> = int conj(self) other dx`.
    pub fn inner(&self, other: &SpectralField) -> C64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a.conj() * b)
            .sum::<C64>()
            * self.grid.cell()
    }

    pub fn max_abs_diff(&self, other: &SpectralField) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

/// n-tuple of scalar fields on one grid.
#[derive(Clone, Debug)]
pub struct VectorField {
    components: Vec<SpectralField>,
}

impl VectorField {
    pub fn new(components: Vec<SpectralField>) -> Result<Self> {
        let first = components
            .first()
            .ok_or_else(|| LabError::Shape("vector field needs components".into()))?;
        if components.len() != first.grid().dim() {
            return Err(LabError::Shape(format!(
                "{} components on a {}-dimensional grid",
                components.len(),
                first.grid().dim()
            )));
        }
        for c in &components[1..] {
            first.same_grid(c)?;
        }
        Ok(VectorField { components })
    }

    pub fn zeros(grid: &Arc<Grid>) -> Self {
        VectorField {
            components: (0..grid.dim()).map(|_| SpectralField::zeros(grid)).collect(),
        }
    }

    pub fn components(&self) -> &[SpectralField] {
        &self.components
    }

    pub fn grid(&self) -> &Arc<Grid> {
        self.components[0].grid()
    }

    pub fn add(&self, other: &VectorField) -> VectorField {
        VectorField {
            components: self
                .components
                .iter()
                .zip(&other.components)
                .map(|(a, b)| a.add(b))
                .collect(),
        }
    }

    pub fn sub(&self, other: &VectorField) -> VectorField {
        VectorField {
            components: self
                .components
                .iter()
                .zip(&other.components)
                .map(|(a, b)| a.sub(b))
                .collect(),
        }
    }

    pub fn scale(&self, s: f64) -> VectorField {
        VectorField {
            components: self.components.iter().map(|c| c.scale(s)).collect(),
        }
    }

    /// Pointwise `|s|^2`.
    pub fn modulus_sq(&self) -> SpectralField {
        let mut out = SpectralField::zeros(self.grid());
        for c in &self.components {
            for (o, v) in out.values.iter_mut().zip(c.values()) {
                o.re += v.norm_sqr();
            }
        }
        out
    }

    /// Pointwise `s . w`.
    pub fn dot(&self, other: &VectorField) -> SpectralField {
        let mut out = SpectralField::zeros(self.grid());
        for (a, b) in self.components.iter().zip(&other.components) {
            for ((o, x), y) in out.values.iter_mut().zip(a.values()).zip(b.values()) {
                *o += x * y;
            }
        }
        out
    }

    /// Homogeneous norm `||omega^sigma s||` summed in quadrature over components.
    pub fn omega_norm(&self, sigma: f64) -> f64 {
        self.components
            .iter()
            .map(|c| c.spectrum().omega_norm(sigma).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    pub fn norm(&self, spec: &NormSpec) -> f64 {
        let specs: Vec<Spectrum> = self.components.iter().map(|c| c.spectrum()).collect();
        vector_norm(&specs, spec)
    }

    pub fn sup_norm(&self) -> f64 {
        self.modulus_sq()
            .values()
            .iter()
            .map(|v| v.re.sqrt())
            .fold(0.0, f64::max)
    }

    pub fn l2_norm(&self) -> f64 {
        self.components
            .iter()
            .map(|c| c.l2_norm().powi(2))
            .sum::<f64>()
            .sqrt()
    }

    /// Largest `|k x s_hat(k)| / (|k| |s_hat(k)|)` over modes with non-negligible
    /// amplitude; zero for a gradient field.
    pub fn curl_residual(&self) -> f64 {
        let grid = self.grid();
        let specs: Vec<Spectrum> = self.components.iter().map(|c| c.spectrum()).collect();
        let k = grid.k_abs();
        let mut amp_max = 0.0f64;
        for idx in 0..grid.total() {
            let a: f64 = specs.iter().map(|s| s.coeffs()[idx].norm_sqr()).sum();
            amp_max = amp_max.max(a.sqrt() * k[idx]);
        }
        let mut worst = 0.0f64;
        let dim = grid.dim();
        for idx in 0..grid.total() {
            if k[idx] == 0.0 {
                continue;
            }
            let a: f64 = specs.iter().map(|s| s.coeffs()[idx].norm_sqr()).sum();
            if a.sqrt() * k[idx] < 1e-12 * amp_max {
                continue;
            }
            let mut cross = 0.0;
            for i in 0..dim {
                for j in (i + 1)..dim {
                    let c = specs[j].coeffs()[idx] * grid.k_component(idx, i)
                        - specs[i].coeffs()[idx] * grid.k_component(idx, j);
                    cross += c.norm_sqr();
                }
            }
            worst = worst.max(cross.sqrt() / (k[idx] * a.sqrt()));
        }
        worst
    }
}

pub(crate) fn vector_norm(specs: &[Spectrum], spec: &NormSpec) -> f64 {
    specs.iter().map(|s| s.norm(spec).powi(2)).sum::<f64>().sqrt()
}

/// Norm selector: order `sigma`, homogeneous (`omega^sigma`) or inhomogeneous
/// (`<omega>^sigma`), optionally the `±0` geometric mean with `pm_epsilon`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormSpec {
    pub sigma: f64,
    pub homogeneous: bool,
    pub pm_zero: bool,
    pub pm_epsilon: f64,
}

pub const DEFAULT_PM_EPSILON: f64 = 0.05;

impl NormSpec {
    pub fn homogeneous(sigma: f64) -> Self {
        NormSpec {
            sigma,
            homogeneous: true,
            pm_zero: false,
            pm_epsilon: DEFAULT_PM_EPSILON,
        }
    }

    pub fn sobolev(sigma: f64) -> Self {
        NormSpec {
            sigma,
            homogeneous: false,
            pm_zero: false,
            pm_epsilon: DEFAULT_PM_EPSILON,
        }
    }

    /// `||omega^{sigma ± 0} u||`.
    pub fn pm(sigma: f64, eps: f64) -> Self {
        NormSpec {
            sigma,
            homogeneous: true,
            pm_zero: true,
            pm_epsilon: eps,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.sigma.is_finite() {
            return Err(LabError::Params("norm order must be finite".into()));
        }
        if !(self.pm_epsilon > 0.0 && self.pm_epsilon.is_finite()) {
            return Err(LabError::Params(format!(
                "pm_epsilon must be positive, got {}",
                self.pm_epsilon
            )));
        }
        Ok(())
    }
}

/// `omega^sigma u`: mode `k` multiplied by `|k|^sigma`, zero mode sent to 0
/// whenever `sigma != 0`.
pub fn apply_omega_power(u: &SpectralField, sigma: f64) -> Result<SpectralField> {
    u.check_finite()?;
    if !sigma.is_finite() {
        return Err(LabError::MultiplierOrder(format!("sigma = {sigma}")));
    }
    if sigma == 0.0 {
        return Ok(u.clone());
    }
    Ok(u
        .spectrum()
        .multiply(|_, k| {
            if k > 0.0 {
                C64::new(k.powf(sigma), 0.0)
            } else {
                ZERO
            }
        })
        .into_field())
}

pub fn sobolev_norm(u: &SpectralField, spec: &NormSpec) -> Result<f64> {
    spec.validate()?;
    u.check_finite()?;
    Ok(u.spectrum().norm(spec))
}

/// Multiplier of the low-frequency cutoff `chi(|k| t^{1/2})`.
pub fn low_multiplier(k: f64, t: f64) -> f64 {
    chi(k * t.sqrt())
}

pub fn cutoff_low(u: &SpectralField, t: f64) -> Result<SpectralField> {
    if !(t > 0.0) {
        return Err(LabError::Domain(format!("cutoff time must be positive, got {t}")));
    }
    Ok(cutoff_low_spectrum(&u.spectrum(), t).into_field())
}

pub fn cutoff_high(u: &SpectralField, t: f64) -> Result<SpectralField> {
    let low = cutoff_low(u, t)?;
    Ok(u.sub(&low))
}

pub fn cutoff_low_spectrum(s: &Spectrum, t: f64) -> Spectrum {
    let st = t.sqrt();
    s.multiply(|_, k| C64::new(chi(k * st), 0.0))
}

pub fn gradient_spectrum(s: &Spectrum) -> Vec<Spectrum> {
    let grid = Arc::clone(s.grid());
    (0..grid.dim())
        .map(|axis| s.multiply(|idx, _| C64::new(0.0, grid.k_component(idx, axis))))
        .collect()
}

pub fn gradient(u: &SpectralField) -> VectorField {
    VectorField {
        components: gradient_spectrum(&u.spectrum())
            .into_iter()
            .map(Spectrum::into_field)
            .collect(),
    }
}

pub fn divergence(s: &VectorField) -> Result<SpectralField> {
    let grid = s.grid();
    let mut acc = vec![ZERO; grid.total()];
    for (axis, c) in s.components().iter().enumerate() {
        c.same_grid(&s.components()[0])?;
        let sp = c.spectrum();
        for (idx, (a, v)) in acc.iter_mut().zip(sp.coeffs()).enumerate() {
            *a += v * C64::new(0.0, grid.k_component(idx, axis));
        }
    }
    Ok(Spectrum::from_coeffs(grid, acc)?.into_field())
}

/// Zero all modes outside the 2/3-rule band.
pub fn dealias_in_place(s: &mut Spectrum) {
    let mask = s.grid().dealias_mask().to_vec();
    for (c, keep) in s.coeffs_mut().iter_mut().zip(mask) {
        if !keep {
            *c = ZERO;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(n: usize) -> Arc<Grid> {
        Grid::new(GridSpec::new(2, n, 20.0).unwrap()).unwrap()
    }

    fn random_band_limited(g: &Arc<Grid>, seed: u64, kmax: f64) -> SpectralField {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let coeffs: Vec<C64> = g
            .k_abs()
            .iter()
            .map(|&k| {
                if k <= kmax {
                    C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
                } else {
                    ZERO
                }
            })
            .collect();
        Spectrum::from_coeffs(g, coeffs).unwrap().into_field()
    }

    #[test]
    fn spec_validation() {
        assert!(GridSpec::new(1, 64, 20.0).is_err());
        assert!(GridSpec::new(2, 4, 20.0).is_err());
        assert!(GridSpec::new(2, 48, 20.0).is_err());
        assert!(GridSpec::new(2, 64, 0.0).is_err());
        assert!(GridSpec::new(3, 32, 10.0).is_ok());
    }

    #[test]
    fn plane_wave_is_eigenfunction() {
        let g = grid(32);
        let u = SpectralField::plane_wave(&g, &[1, 0]);
        let w = apply_omega_power(&u, 2.0).unwrap();
        let k2 = g.spec().dk().powi(2);
        for (a, b) in w.values().iter().zip(u.values()) {
            assert!((a - b * k2).norm() < 1e-12);
        }
    }

    #[test]
    fn constant_is_annihilated() {
        let g = grid(16);
        let u = SpectralField::from_fn(&g, |_| C64::new(3.0, -1.0));
        let w = apply_omega_power(&u, 1.0).unwrap();
        assert!(w.sup_norm() < 1e-13);
        let w = apply_omega_power(&u, -0.7).unwrap();
        assert!(w.sup_norm() < 1e-13);
    }

    #[test]
    fn omega_norm_matches_mode_sum() {
        let g = grid(32);
        let u = random_band_limited(&g, 7, 3.0);
        let lhs = apply_omega_power(&u, 1.0).unwrap().l2_norm().powi(2);
        // direct sum over modes, computed with a naive DFT
        let n = g.points();
        let dx = g.dx();
        let mut total = 0.0;
        for m0 in -(n as i64) / 2..(n as i64) / 2 {
            for m1 in -(n as i64) / 2..(n as i64) / 2 {
                let k0 = m0 as f64 * g.spec().dk();
                let k1 = m1 as f64 * g.spec().dk();
                let mut c = ZERO;
                for idx in 0..g.total() {
                    let x0 = g.position(idx, 0);
                    let x1 = g.position(idx, 1);
                    c += u.values()[idx] * C64::from_polar(1.0, -(k0 * x0 + k1 * x1));
                }
                // continuum coefficient: c * dx^2 / L^2 ; Parseval: L^2 sum |c_cont|^2
                let c_cont = c * dx * dx / (20.0 * 20.0);
                total += (k0 * k0 + k1 * k1) * c_cont.norm_sqr() * 400.0;
            }
        }
        assert!((lhs - total).abs() / total < 1e-12, "{lhs} vs {total}");
    }

    #[test]
    fn parseval() {
        let g = grid(64);
        let u = SpectralField::from_fn(&g, |x| {
            C64::new((-(x[0] * x[0] + x[1] * x[1]) / 2.0).exp(), x[0].sin() * 0.1)
        });
        let s = u.spectrum();
        let lhs = u.l2_norm();
        let rhs = s.omega_norm(0.0);
        assert!((lhs - rhs).abs() / lhs < 1e-12);
    }

    #[test]
    fn chi_profile() {
        assert_eq!(chi(0.3), 1.0);
        assert_eq!(chi(1.0), 1.0);
        assert_eq!(chi(2.0), 0.0);
        assert_eq!(chi(7.0), 0.0);
        assert!((chi(1.5) - 0.5).abs() < 1e-15);
        let mut prev = 1.0;
        for i in 0..=100 {
            let c = chi(1.0 + i as f64 / 100.0);
            assert!((0.0..=1.0).contains(&c));
            assert!(c <= prev + 1e-15);
            prev = c;
        }
    }

    #[test]
    fn cutoff_partition_and_limits() {
        let g = grid(32);
        let u = random_band_limited(&g, 3, 100.0);
        let lo = cutoff_low(&u, 0.3).unwrap();
        let hi = cutoff_high(&u, 0.3).unwrap();
        assert!(lo.add(&hi).max_abs_diff(&u) < 1e-13);
        assert!(cutoff_low(&u, 0.0).is_err());
        assert!(cutoff_low(&u, -1.0).is_err());

        // t = 1: |k| <= 1 unchanged, |k| >= 2 removed
        let s = cutoff_low_spectrum(&u.spectrum(), 1.0);
        let orig = u.spectrum();
        for (i, &k) in g.k_abs().iter().enumerate() {
            if k <= 1.0 {
                assert!((s.coeffs()[i] - orig.coeffs()[i]).norm() < 1e-15);
            }
            if k >= 2.0 {
                assert_eq!(s.coeffs()[i], ZERO);
            }
        }

        // band-limited with max |k| = K: t <= 1/K^2 leaves it intact
        let kmax = 2.0;
        let v = random_band_limited(&g, 4, kmax);
        let w = cutoff_low(&v, 1.0 / (kmax * kmax)).unwrap();
        assert!(w.max_abs_diff(&v) < 1e-13);
    }

    #[test]
    fn gradient_of_plane_wave_and_laplacian() {
        let g = grid(32);
        let m = [2i64, -1];
        let u = SpectralField::plane_wave(&g, &m);
        let grad = gradient(&u);
        let dk = g.spec().dk();
        for axis in 0..2 {
            let k = m[axis] as f64 * dk;
            for (a, b) in grad.components()[axis].values().iter().zip(u.values()) {
                assert!((a - C64::new(0.0, k) * b).norm() < 1e-12);
            }
        }
        let w = random_band_limited(&g, 11, 4.0);
        let lap = divergence(&gradient(&w)).unwrap();
        let minus = apply_omega_power(&w, 2.0).unwrap().scale(-1.0);
        // divergence of gradient is -omega^2 up to the zero mode, which
        // apply_omega_power removes and the Laplacian annihilates
        assert!(lap.max_abs_diff(&minus) < 1e-11);
    }

    #[test]
    fn divergence_integrates_to_zero_and_gradient_is_curl_free() {
        let g = grid(32);
        let u = random_band_limited(&g, 5, 5.0).realify();
        let s = gradient(&u);
        assert!(s.curl_residual() < 1e-10);
        let d = divergence(&s).unwrap();
        assert!(d.integral().norm() < 1e-12);
    }

    #[test]
    fn non_finite_rejected() {
        let g = grid(8);
        let mut u = SpectralField::zeros(&g);
        u.values_mut()[3] = C64::new(f64::NAN, 0.0);
        assert!(apply_omega_power(&u, 1.0).is_err());
        assert!(sobolev_norm(&u, &NormSpec::sobolev(1.0)).is_err());
    }

    #[test]
    fn pm_norm_is_geometric_mean() {
        let g = grid(32);
        let u = random_band_limited(&g, 9, 4.0);
        let s = u.spectrum();
        let pm = s.norm(&NormSpec::pm(1.0, 0.1));
        let expect = (s.omega_norm(1.1) * s.omega_norm(0.9)).sqrt();
        assert!((pm - expect).abs() < 1e-14 * expect);
        let bad = NormSpec {
            pm_epsilon: 0.0,
            ..NormSpec::pm(1.0, 0.1)
        };
        assert!(sobolev_norm(&u, &bad).is_err());
    }

    #[test]
    fn three_dimensional_transform_roundtrip() {
        let g = Grid::new(GridSpec::new(3, 16, 10.0).unwrap()).unwrap();
        let u = SpectralField::from_fn(&g, |x| C64::new(x[0] * 0.1, (x[1] - x[2]).cos()));
        let back = u.spectrum().into_field();
        assert!(back.max_abs_diff(&u) < 1e-12);
        let pw = SpectralField::plane_wave(&g, &[0, 1, -2]);
        let lap = divergence(&gradient(&pw)).unwrap();
        let k2 = 5.0 * g.spec().dk().powi(2);
        assert!(lap.max_abs_diff(&pw.scale(-k2)) < 1e-11);
    }
}
