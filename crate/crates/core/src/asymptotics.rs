//! The asymptotic pair `(φ, v_a)` and the phase gradients `s_0`, `s_b`, `s_c`.
//!
//! `φ_0` is evaluated mode by mode in closed form,
//! `φ̂_0(k, t) = -ĝ_k ∫_t^1 t'^{γ-2} χ(|k| t'^{1/2}) dt'`, so `s_0` is available at
//! any time. `v_a` is transported from the first mesh node, and the
//! corrections `φ_b`, `φ_c` are product-trapezoid integrals over the mesh
//! (graded part plus a geometric tail up to `t = 1`).

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::grid::{chi, Grid, NormSpec, SpectralField, Spectrum, VectorField, C64};
use crate::hartree::{HartreeOperator, ModelParams};
use crate::mesh::GradedMesh;
use crate::quad::{composite_gauss, product_trapezoid_weights};
use crate::trajectory::Trajectory;
use crate::transport::TransportOp;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

/// `∫_t^1 t'^{γ-2} χ(k t'^{1/2}) dt'` for every distinct `|k|` on a grid.
#[derive(Clone, Debug)]
pub struct PhaseKernel {
    gamma: f64,
    key_of_mode: Vec<usize>,
    k_values: Vec<f64>,
    h_at_one: f64,
    gl: (Vec<f64>, Vec<f64>),
}

impl PhaseKernel {
    pub fn new(grid: &Grid, gamma: f64) -> Self {
        let dk = grid.spec().dk();
        let keys: Vec<usize> = grid
            .k_abs()
            .iter()
            .map(|k| ((k / dk).powi(2)).round() as usize)
            .collect();
        let max_key = keys.iter().copied().max().unwrap_or(0);
        let mut slot = vec![usize::MAX; max_key + 1];
        let mut k_values = Vec::new();
        for &key in &keys {
            if slot[key] == usize::MAX {
                slot[key] = k_values.len();
                k_values.push((key as f64).sqrt() * dk);
            }
        }
        let key_of_mode = keys.iter().map(|&key| slot[key]).collect();
        let gl = composite_gauss(0.0, 1.0, 6, 16);
        let mut kernel = PhaseKernel {
            gamma,
            key_of_mode,
            k_values,
            h_at_one: 0.0,
            gl,
        };
        kernel.h_at_one = kernel.h_band(1.0);
        kernel
    }

    /// `∫_a^2 ℓ^{2γ-3} χ(ℓ) dℓ` for `a ∈ [1, 2]`.
    fn h_band(&self, a: f64) -> f64 {
        let e = 2.0 * self.gamma - 3.0;
        let len = 2.0 - a;
        if len <= 0.0 {
            return 0.0;
        }
        self.gl
            .0
            .iter()
            .zip(&self.gl.1)
            .map(|(&x, &w)| {
                let l = a + len * x;
                w * len * l.powf(e) * chi(l)
            })
            .sum()
    }

    /// `H(a) = ∫_a^∞ ℓ^{2γ-3} χ(ℓ) dℓ`.
    pub fn h(&self, a: f64) -> f64 {
        if a >= 2.0 {
            0.0
        } else if a >= 1.0 {
            self.h_band(a)
        } else {
            let p = 2.0 - 2.0 * self.gamma;
            (a.powf(-p) - 1.0) / p + self.h_at_one
        }
    }

    /// `I(k, t) = 2 k^{2-2γ} (H(k t^{1/2}) - H(k))`.
    pub fn integral(&self, k: f64, t: f64) -> f64 {
        if k == 0.0 {
            return 0.0;
        }
        2.0 * k.powf(2.0 - 2.0 * self.gamma) * (self.h(k * t.sqrt()) - self.h(k))
    }

    /// `I(|k|, t)` at every flat Fourier index.
    pub fn weights(&self, t: f64) -> Vec<f64> {
        let per_key: Vec<f64> = self.k_values.iter().map(|&k| self.integral(k, t)).collect();
        self.key_of_mode.iter().map(|&i| per_key[i]).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TransportScheme {
    ExplicitMidpoint,
    ImplicitMidpoint,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProfileOptions {
    pub level: usize,
    pub scheme: TransportScheme,
    /// Also evaluate `s_c` through the cumulative-flux (double integral) route.
    pub double_form: bool,
    pub divergence_factor: f64,
}

impl Default for ProfileOptions {
    fn default() -> Self {
        ProfileOptions {
            level: 1,
            scheme: TransportScheme::ExplicitMidpoint,
            double_form: false,
            divergence_factor: 1e6,
        }
    }
}

/// Profile data entering the linearized operator at one time.
pub struct StepCoefficients {
    pub t: f64,
    /// `s = s_0 + s_b + s_c`, physical samples per axis.
    pub s: Vec<Vec<f64>>,
    pub s0: Vec<Vec<f64>>,
    /// `½(|s|² - |s_0|²)`.
    pub kinetic: Vec<f64>,
    /// `|v_a|²`, linear in `log t` between stored nodes.
    pub va_density: Vec<f64>,
}

pub struct AsymptoticProfile {
    params: ModelParams,
    grid: Arc<Grid>,
    mesh: GradedMesh,
    level: usize,
    v0: SpectralField,
    a0: f64,
    hartree: HartreeOperator,
    kernel: PhaseKernel,
    g0_hat: Vec<C64>,
    va: Vec<SpectralField>,
    phi_b: Vec<Vec<f64>>,
    phi_c: Vec<Vec<f64>>,
    phi_c_double: Option<Vec<Vec<f64>>>,
    mass: Vec<f64>,
    va_norms: Vec<f64>,
}

pub(crate) fn real_ifft(grid: &Grid, mut hat: Vec<C64>) -> Vec<f64> {
    grid.inverse(&mut hat);
    hat.into_iter().map(|c| c.re).collect()
}

pub(crate) fn real_fft(grid: &Grid, values: &[f64]) -> Vec<C64> {
    let mut buf: Vec<C64> = values.iter().map(|&v| C64::new(v, 0.0)).collect();
    grid.forward(&mut buf);
    buf
}

/// Physical gradient components of a field given by its Fourier coefficients.
pub(crate) fn gradient_from_hat(grid: &Grid, hat: &[C64]) -> Vec<Vec<f64>> {
    (0..grid.dim())
        .map(|axis| {
            let k = grid.k_axis(axis);
            let buf: Vec<C64> = hat
                .iter()
                .zip(k)
                .map(|(c, &kk)| C64::new(-c.im * kk, c.re * kk))
                .collect();
            real_ifft(grid, buf)
        })
        .collect()
}

fn to_vector_field(grid: &Arc<Grid>, comps: Vec<Vec<f64>>) -> VectorField {
    VectorField::new(
        comps
            .iter()
            .map(|c| SpectralField::from_real(grid, c).expect("grid-sized"))
            .collect(),
    )
    .expect("one component per axis")
}

pub(crate) fn modulus_sq(comps: &[Vec<f64>]) -> Vec<f64> {
    let mut out = vec![0.0; comps[0].len()];
    for c in comps {
        for (o, v) in out.iter_mut().zip(c) {
            *o += v * v;
        }
    }
    out
}

/// Linear interpolation weight in `log t` between `lo` and `hi`.
pub fn log_weight(t: f64, lo: f64, hi: f64) -> f64 {
    ((t.ln() - lo.ln()) / (hi.ln() - lo.ln())).clamp(0.0, 1.0)
}

impl AsymptoticProfile {
    pub fn build(
        v0: &SpectralField,
        mesh: &GradedMesh,
        params: &ModelParams,
        options: &ProfileOptions,
    ) -> Result<Self> {
        if options.level > 1 {
            return Err(LabError::UnsupportedLevel(options.level));
        }
        v0.check_finite()?;
        let grid = Arc::clone(v0.grid());
        let hartree = HartreeOperator::new(&grid, params)?;
        let kernel = PhaseKernel::new(&grid, params.gamma);
        let g0_hat = hartree.potential_spectrum(v0).coeffs().to_vec();
        let a0 = v0.spectrum().norm(&NormSpec::sobolev(params.rho));
        let mut profile = AsymptoticProfile {
            params: *params,
            grid,
            mesh: mesh.clone(),
            level: options.level,
            v0: v0.clone(),
            a0,
            hartree,
            kernel,
            g0_hat,
            va: Vec::new(),
            phi_b: Vec::new(),
            phi_c: Vec::new(),
            phi_c_double: None,
            mass: Vec::new(),
            va_norms: Vec::new(),
        };
        if options.level == 0 || params.kappa == 0.0 {
            let m = v0.l2_norm().powi(2);
            profile.mass = vec![m; mesh.count()];
            profile.va_norms = vec![a0; mesh.count()];
            if options.level == 1 {
                let zeros = vec![0.0; profile.grid.total()];
                profile.va = vec![v0.clone(); mesh.count()];
                profile.phi_b = vec![zeros.clone(); mesh.count()];
                profile.phi_c = vec![zeros.clone(); mesh.count()];
                if options.double_form {
                    profile.phi_c_double = Some(vec![zeros; mesh.count()]);
                }
            }
            return Ok(profile);
        }
        profile.build_level_one(options)?;
        Ok(profile)
    }

    fn build_level_one(&mut self, options: &ProfileOptions) -> Result<()> {
        let grid = Arc::clone(&self.grid);
        let gamma = self.params.gamma;
        let graded = self.mesh.nodes().to_vec();
        let mut all = graded.clone();
        all.extend(self.mesh.tail());
        let kcount = graded.len();
        let total = grid.total();
        let rho_spec = NormSpec::sobolev(self.params.rho);
        let limit = options.divergence_factor * self.a0.max(1e-300);

        let density0: Vec<f64> = self.v0.values().iter().map(|v| v.norm_sqr()).collect();
        let beta_b = 2.0 * gamma - 2.0;
        let beta_c = gamma - 2.0;
        let beta_w = gamma - 1.0;

        let mut acc_b = vec![0.0; total];
        let mut acc_c = vec![0.0; total];
        let mut acc_q = vec![0.0; total];
        let mut w_acc: Vec<Vec<f64>> = vec![vec![0.0; total]; grid.dim()];
        let mut prev: Option<(Vec<f64>, Vec<f64>, Vec<f64>, Vec<Vec<f64>>)> = None;

        let mut snap_b = Vec::with_capacity(kcount);
        let mut snap_c = Vec::with_capacity(kcount);
        let mut snap_q = Vec::with_capacity(kcount);

        let mut v: Vec<C64> = self.v0.values().to_vec();
        for (idx, &t) in all.iter().enumerate() {
            let s0 = self.s0_components(t);
            let density: Vec<f64> = v.iter().map(|c| c.norm_sqr()).collect();

            if idx < kcount {
                let field = SpectralField::from_values(&grid, v.clone())?;
                let norm = field.spectrum().norm(&rho_spec);
                if !norm.is_finite() || norm > limit {
                    return Err(LabError::Divergence { t, norm, limit });
                }
                self.mass.push(density.iter().sum::<f64>() * grid.cell());
                self.va_norms.push(norm);
                self.va.push(field);
            }

            // de-singularized samples: |s_0|^2 t^{2-2γ}, (g_L(v_a) - g_L(v_0)), flux t^{1-γ}
            let sb_sample: Vec<f64> = modulus_sq(&s0)
                .into_iter()
                .map(|m| m * t.powf(-beta_b))
                .collect();
            let diff: Vec<f64> = density.iter().zip(&density0).map(|(a, b)| a - b).collect();
            let sc_sample = self.low_potential_of_density(&diff, t);
            let flux: Vec<Vec<f64>> = if options.double_form {
                s0.iter()
                    .map(|c| {
                        c.iter()
                            .zip(&density)
                            .map(|(s, d)| s * d * t.powf(-beta_w))
                            .collect()
                    })
                    .collect()
            } else {
                Vec::new()
            };

            if let Some((pb, pc, pq, pflux)) = prev.take() {
                let t_prev = all[idx - 1];
                let (wl, wr) = product_trapezoid_weights(t_prev, t, beta_b);
                for ((a, l), r) in acc_b.iter_mut().zip(&pb).zip(&sb_sample) {
                    *a += wl * l + wr * r;
                }
                let (wl, wr) = product_trapezoid_weights(t_prev, t, beta_c);
                for ((a, l), r) in acc_c.iter_mut().zip(&pc).zip(&sc_sample) {
                    *a += wl * l + wr * r;
                }
                if options.double_form {
                    let (wl, wr) = product_trapezoid_weights(t_prev, t, beta_w);
                    for ((wa, l), r) in w_acc.iter_mut().zip(&pflux).zip(&flux) {
                        for ((a, l), r) in wa.iter_mut().zip(l).zip(r) {
                            *a += wl * l + wr * r;
                        }
                    }
                    let q = self.flux_potential(&w_acc, t);
                    let (wl, wr) = product_trapezoid_weights(t_prev, t, beta_c);
                    for ((a, l), r) in acc_q.iter_mut().zip(&pq).zip(&q) {
                        *a += wl * l + wr * r;
                    }
                    prev = Some((sb_sample, sc_sample, q, flux));
                } else {
                    prev = Some((sb_sample, sc_sample, Vec::new(), flux));
                }
            } else {
                let q = if options.double_form {
                    vec![0.0; total]
                } else {
                    Vec::new()
                };
                prev = Some((sb_sample, sc_sample, q, flux));
            }

            if idx < kcount {
                snap_b.push(acc_b.clone());
                snap_c.push(acc_c.clone());
                if options.double_form {
                    snap_q.push(acc_q.clone());
                }
            }

            if idx + 1 < all.len() {
                let t_next = all[idx + 1];
                let dt = t_next - t;
                let s_mid = self.s0_components(0.5 * (t + t_next));
                let op = TransportOp::new(&grid, &s_mid)?;
                v = match options.scheme {
                    TransportScheme::ExplicitMidpoint => op.explicit_midpoint(&v, dt),
                    TransportScheme::ImplicitMidpoint => {
                        op.implicit_midpoint(&v, dt, 1e-14, 200)
                            .map_err(|_| LabError::Stability {
                                t,
                                drift: f64::NAN,
                                retries: 200,
                            })?
                            .0
                    }
                };
            }
        }

        let finish = |snaps: Vec<Vec<f64>>, end: &[f64], factor: f64| -> Vec<Vec<f64>> {
            snaps
                .into_iter()
                .map(|s| s.iter().zip(end).map(|(a, e)| -factor * (e - a)).collect())
                .collect()
        };
        self.phi_b = finish(snap_b, &acc_b, 0.5);
        self.phi_c = finish(snap_c, &acc_c, 1.0);
        if options.double_form {
            self.phi_c_double = Some(finish(snap_q, &acc_q, 1.0));
        }
        Ok(())
    }

    /// Real samples of `χ_L(t) g`-multiplier applied to a real density.
    fn low_potential_of_density(&self, density: &[f64], t: f64) -> Vec<f64> {
        let spec = self.hartree.potential_spectrum_from_density(density);
        let st = t.sqrt();
        let hat: Vec<C64> = spec
            .coeffs()
            .iter()
            .zip(self.grid.k_abs())
            .map(|(c, &k)| c * chi(k * st))
            .collect();
        real_ifft(&self.grid, hat)
    }

    /// `κ C χ_L(t) ω^{γ-n} ∇·W` for a real vector field `W`.
    fn flux_potential(&self, w: &[Vec<f64>], t: f64) -> Vec<f64> {
        let grid = &self.grid;
        let mut div = vec![ZERO; grid.total()];
        for (axis, comp) in w.iter().enumerate() {
            let hat = real_fft(grid, comp);
            for ((d, c), &kk) in div.iter_mut().zip(&hat).zip(grid.k_axis(axis)) {
                *d += C64::new(-c.im * kk, c.re * kk);
            }
        }
        let mut dens = div;
        grid.inverse(&mut dens);
        let real: Vec<f64> = dens.into_iter().map(|c| c.re).collect();
        self.low_potential_of_density(&real, t)
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn mesh(&self) -> &GradedMesh {
        &self.mesh
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn v0(&self) -> &SpectralField {
        &self.v0
    }

    /// `a_0 = ||v_0; H^ρ||`.
    pub fn a0(&self) -> f64 {
        self.a0
    }

    pub fn hartree(&self) -> &HartreeOperator {
        &self.hartree
    }

    pub fn kernel(&self) -> &PhaseKernel {
        &self.kernel
    }

    fn has_corrections(&self) -> bool {
        self.level == 1 && !self.phi_b.is_empty()
    }

    /// Fourier coefficients of `φ_0(t)`.
    pub fn phi0_hat(&self, t: f64) -> Vec<C64> {
        let w = self.kernel.weights(t);
        self.g0_hat.iter().zip(&w).map(|(g, i)| -g * *i).collect()
    }

    pub fn phi0(&self, t: f64) -> Vec<f64> {
        real_ifft(&self.grid, self.phi0_hat(t))
    }

    pub fn s0_components(&self, t: f64) -> Vec<Vec<f64>> {
        gradient_from_hat(&self.grid, &self.phi0_hat(t))
    }

    pub fn s0(&self, t: f64) -> Result<VectorField> {
        if !(t > 0.0) {
            return Err(LabError::Domain(format!("s_0 needs t > 0, got {t}")));
        }
        Ok(to_vector_field(&self.grid, self.s0_components(t)))
    }

    /// `v_a` on the graded nodes.
    pub fn va_trajectory(&self) -> Trajectory {
        if self.va.is_empty() {
            Trajectory::constant(self.mesh.nodes(), &self.v0)
        } else {
            Trajectory::new(self.mesh.nodes().to_vec(), self.va.clone()).expect("mesh-aligned")
        }
    }

    pub fn va_at_node(&self, k: usize) -> &SpectralField {
        if self.va.is_empty() {
            &self.v0
        } else {
            &self.va[k]
        }
    }

    pub fn phi_b_node(&self, k: usize) -> Vec<f64> {
        if self.has_corrections() {
            self.phi_b[k].clone()
        } else {
            vec![0.0; self.grid.total()]
        }
    }

    pub fn phi_c_node(&self, k: usize) -> Vec<f64> {
        if self.has_corrections() {
            self.phi_c[k].clone()
        } else {
            vec![0.0; self.grid.total()]
        }
    }

    pub fn phi_c_double_node(&self, k: usize) -> Option<Vec<f64>> {
        self.phi_c_double.as_ref().map(|p| p[k].clone())
    }

    fn grad_real(&self, values: &[f64]) -> VectorField {
        to_vector_field(&self.grid, gradient_from_hat(&self.grid, &real_fft(&self.grid, values)))
    }

    pub fn sb_node(&self, k: usize) -> VectorField {
        self.grad_real(&self.phi_b_node(k))
    }

    pub fn sc_node(&self, k: usize) -> VectorField {
        self.grad_real(&self.phi_c_node(k))
    }

    pub fn sc_double_node(&self, k: usize) -> Option<VectorField> {
        self.phi_c_double_node(k).map(|p| self.grad_real(&p))
    }

    /// `φ = φ_0 + φ_b + φ_c` at graded node `k`.
    pub fn phase_node(&self, k: usize) -> Vec<f64> {
        let t = self.mesh.nodes()[k];
        let mut phi = self.phi0(t);
        if self.has_corrections() {
            for ((p, b), c) in phi.iter_mut().zip(&self.phi_b[k]).zip(&self.phi_c[k]) {
                *p += b + c;
            }
        }
        phi
    }

    /// `s = s_0 + s_b + s_c` at graded node `k`.
    pub fn s_node(&self, k: usize) -> VectorField {
        let t = self.mesh.nodes()[k];
        let s0 = to_vector_field(&self.grid, self.s0_components(t));
        if self.has_corrections() {
            s0.add(&self.sb_node(k)).add(&self.sc_node(k))
        } else {
            s0
        }
    }

    /// `∫|v_a|²` at each graded node.
    pub fn mass_series(&self) -> &[f64] {
        &self.mass
    }

    pub fn mass_drift(&self) -> f64 {
        let m0 = self.mass[0];
        self.mass
            .iter()
            .map(|m| ((m - m0) / m0).abs())
            .fold(0.0, f64::max)
    }

    /// `||v_a(t); H^ρ||` at each graded node.
    pub fn va_norms(&self) -> &[f64] {
        &self.va_norms
    }

    /// `a_a = sup_t ||v_a; H^ρ||`.
    pub fn aa(&self) -> f64 {
        self.va_norms.iter().cloned().fold(0.0, f64::max)
    }

    /// Bracketing node and log-t weight for `t` inside the graded mesh.
    fn locate(&self, t: f64) -> Result<(usize, f64)> {
        let k = self.mesh.bracket(t)?;
        let nodes = self.mesh.nodes();
        Ok((k, log_weight(t, nodes[k], nodes[k + 1])))
    }

    /// `v_a(t)`, linear in `log t` between stored nodes.
    pub fn va_at(&self, t: f64) -> Result<Vec<C64>> {
        if self.va.is_empty() {
            return Ok(self.v0.values().to_vec());
        }
        let (k, w) = self.locate(t)?;
        Ok(self.va[k]
            .values()
            .iter()
            .zip(self.va[k + 1].values())
            .map(|(a, b)| a * (1.0 - w) + b * w)
            .collect())
    }

    /// Coefficients of the linearized operator at time `t`.
    pub fn step_coefficients(&self, t: f64) -> Result<StepCoefficients> {
        let s0 = self.s0_components(t);
        if !self.has_corrections() {
            let va_density = self.v0.values().iter().map(|v| v.norm_sqr()).collect();
            return Ok(StepCoefficients {
                t,
                s: s0.clone(),
                s0,
                kinetic: vec![0.0; self.grid.total()],
                va_density,
            });
        }
        let (k, w) = self.locate(t)?;
        let corr: Vec<f64> = self.phi_b[k]
            .iter()
            .zip(&self.phi_c[k])
            .zip(self.phi_b[k + 1].iter().zip(&self.phi_c[k + 1]))
            .map(|((b0, c0), (b1, c1))| (b0 + c0) * (1.0 - w) + (b1 + c1) * w)
            .collect();
        let ds = gradient_from_hat(&self.grid, &real_fft(&self.grid, &corr));
        let s: Vec<Vec<f64>> = s0
            .iter()
            .zip(&ds)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x + y).collect())
            .collect();
        let va_density = self.va[k]
            .values()
            .iter()
            .zip(self.va[k + 1].values())
            .map(|(a, b)| a.norm_sqr() * (1.0 - w) + b.norm_sqr() * w)
            .collect();
        let kinetic = modulus_sq(&s)
            .iter()
            .zip(&modulus_sq(&s0))
            .map(|(a, b)| 0.5 * (a - b))
            .collect();
        Ok(StepCoefficients {
            t,
            s,
            s0,
            kinetic,
            va_density,
        })
    }

    /// `t^{γ-2} g_S(v)` and `t^{γ-2}(g_L(v) - g_L(v_a))` for the density `|v|²`.
    pub fn potential_split(&self, density: &[f64], va_density: &[f64], t: f64) -> (Vec<f64>, Vec<f64>) {
        let factor = t.powf(self.params.gamma - 2.0);
        let st = t.sqrt();
        let mult = self.hartree.multiplier();
        let mut high = real_fft(&self.grid, density);
        let diff: Vec<f64> = density.iter().zip(va_density).map(|(a, b)| a - b).collect();
        let mut low = real_fft(&self.grid, &diff);
        for (i, &k) in self.grid.k_abs().iter().enumerate() {
            let c = chi(k * st);
            high[i] *= (1.0 - c) * mult[i] * factor;
            low[i] *= c * mult[i] * factor;
        }
        (real_ifft(&self.grid, high), real_ifft(&self.grid, low))
    }

    /// `t^{γ-2} g(v)` real samples.
    pub fn potential_term(&self, density: &[f64], t: f64) -> Vec<f64> {
        let spec = self.hartree.potential_spectrum_from_density(density);
        let factor = t.powf(self.params.gamma - 2.0);
        real_ifft(&self.grid, spec.coeffs().to_vec())
            .into_iter()
            .map(|g| g * factor)
            .collect()
    }

    /// Real samples of `g_L(u)(t)`.
    pub fn low_potential(&self, u: &[C64], t: f64) -> Vec<f64> {
        let density: Vec<f64> = u.iter().map(|v| v.norm_sqr()).collect();
        self.low_potential_of_density(&density, t)
    }

    /// `||ω^σ φ||` style norms of a real field.
    pub fn real_norm(&self, values: &[f64], spec: &NormSpec) -> f64 {
        Spectrum::from_coeffs(&self.grid, real_fft(&self.grid, values))
            .expect("grid-sized")
            .norm(spec)
    }
}

/// Build the level-`m` profile; `m = 0` is the constant-amplitude choice.
pub fn iterate_approximation(
    m: usize,
    v0: &SpectralField,
    mesh: &GradedMesh,
    params: &ModelParams,
) -> Result<AsymptoticProfile> {
    let options = ProfileOptions {
        level: m,
        ..Default::default()
    };
    AsymptoticProfile::build(v0, mesh, params, &options)
}

pub fn compute_s0(profile: &AsymptoticProfile, t: f64) -> Result<VectorField> {
    profile.s0(t)
}

pub fn solve_transport_va(profile: &AsymptoticProfile) -> Trajectory {
    profile.va_trajectory()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpec;

    #[test]
    fn kernel_matches_direct_quadrature() {
        let g = Grid::new(GridSpec::new(2, 16, 20.0).unwrap()).unwrap();
        let kern = PhaseKernel::new(&g, 0.45);
        for &(k, t) in &[(0.5f64, 0.01f64), (1.3, 0.2), (3.0, 0.3), (1.0, 1.0), (10.0, 1e-4), (2.0, 0.7)] {
            // direct: ∫_t^1 s^{γ-2} χ(k s^{1/2}) ds in log variables
            let (x, w) = composite_gauss(t.ln(), 0.0, 4000, 4);
            let direct: f64 = x
                .iter()
                .zip(&w)
                .map(|(&l, &wt)| {
                    let s = l.exp();
                    wt * s.powf(0.45 - 1.0) * chi(k * s.sqrt())
                })
                .sum();
            let fast = kern.integral(k, t);
            assert!((fast - direct).abs() < 1e-9 * direct.abs().max(1.0), "k={k} t={t}: {fast} vs {direct}");
        }
        assert_eq!(kern.integral(1.0, 1.0), 0.0);
    }
}
