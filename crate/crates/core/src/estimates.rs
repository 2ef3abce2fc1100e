//! Remainder decomposition, decay-exponent fits and bound reports.

use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::asymptotics::{real_fft, real_ifft, AsymptoticProfile};
use crate::error::{LabError, Result};
use crate::grid::{chi, Grid, NormSpec, SpectralField, Spectrum, C64};
use crate::hartree::{ExponentTable, ModelParams};
use crate::quad::product_trapezoid_weights;
use crate::trajectory::Trajectory;

pub const MIN_FIT_POINTS: usize = 8;
pub const DEFAULT_WINDOW: (f64, f64) = (1e-3, 1e-1);
pub const HOLDER_WINDOW: (f64, f64) = (1e-6, 1e-2);
/// `σ′` used for the low-frequency remainder bounds.
pub const CUTOFF_SIGMA_PRIME: f64 = 0.9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Fit {
    pub slope: f64,
    pub intercept: f64,
    /// Half width of the 95% confidence interval of the slope.
    pub ci: f64,
    pub points: usize,
}

/// Least squares line through `(log t, log value)` for the points with `t` in `window`.
pub fn fit_decay_exponent(series: &[(f64, f64)], window: (f64, f64)) -> Result<Fit> {
    let pts: Vec<(f64, f64)> = in_window(series, window).collect();
    if pts.len() < MIN_FIT_POINTS {
        return Err(LabError::Fit(format!(
            "{} points in window [{:.1e}, {:.1e}], need {MIN_FIT_POINTS}",
            pts.len(),
            window.0,
            window.1
        )));
    }
    if let Some((t, v)) = pts.iter().find(|(t, v)| !(*v > 0.0 && v.is_finite() && *t > 0.0)) {
        return Err(LabError::Fit(format!("nonpositive value {v:e} at t = {t:e}")));
    }
    let m = pts.len() as f64;
    let xs: Vec<f64> = pts.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = pts.iter().map(|p| p.1.ln()).collect();
    let xm = xs.iter().sum::<f64>() / m;
    let ym = ys.iter().sum::<f64>() / m;
    let sxx: f64 = xs.iter().map(|x| (x - xm).powi(2)).sum();
    if !(sxx > 0.0) {
        return Err(LabError::Fit("all times coincide".into()));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - xm) * (y - ym)).sum();
    let slope = sxy / sxx;
    let intercept = ym - slope * xm;
    let ssr: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    let dof = m - 2.0;
    let se = (ssr / dof / sxx).sqrt();
    let q = StudentsT::new(0.0, 1.0, dof)
        .map_err(|e| LabError::Fit(e.to_string()))?
        .inverse_cdf(0.975);
    Ok(Fit {
        slope,
        intercept,
        ci: q * se,
        points: pts.len(),
    })
}

fn in_window(series: &[(f64, f64)], window: (f64, f64)) -> impl Iterator<Item = (f64, f64)> + '_ {
    series
        .iter()
        .copied()
        .filter(move |(t, _)| *t >= window.0 && *t <= window.1)
}

/// Points of `series` nearest (in `log t`) to `count` log-uniform targets in `window`.
pub fn log_uniform_sample(series: &[(f64, f64)], window: (f64, f64), count: usize) -> Vec<(f64, f64)> {
    let pts: Vec<(f64, f64)> = in_window(series, window).collect();
    if pts.is_empty() || count < 2 {
        return pts;
    }
    let (lo, hi) = (window.0.ln(), window.1.ln());
    let mut picked: Vec<usize> = (0..count)
        .map(|j| {
            let target = lo + (hi - lo) * j as f64 / (count - 1) as f64;
            let mut best = 0;
            for (i, p) in pts.iter().enumerate() {
                if (p.0.ln() - target).abs() < (pts[best].0.ln() - target).abs() {
                    best = i;
                }
            }
            best
        })
        .collect();
    picked.dedup();
    picked.into_iter().map(|i| pts[i]).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BoundOptions {
    pub window: (f64, f64),
    pub band_limit: f64,
    pub slope_tol: f64,
    /// Log-uniform resampling count for the fit; 0 fits every node in the window.
    pub samples: usize,
}

impl Default for BoundOptions {
    fn default() -> Self {
        BoundOptions {
            window: DEFAULT_WINDOW,
            band_limit: 10.0,
            slope_tol: 0.05,
            samples: 25,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExponentReport {
    pub quantity: String,
    pub norm: String,
    pub bound: String,
    pub predicted: f64,
    pub fit: Fit,
    /// max/min of `t^{-predicted} value` over the window.
    pub band: f64,
    pub band_limit: f64,
    pub slope_tol: f64,
    pub window: (f64, f64),
    pub pass: bool,
    #[serde(skip)]
    pub series: Vec<(f64, f64)>,
}

pub fn verify_bound(
    quantity: &str,
    norm: &str,
    bound: &str,
    series: &[(f64, f64)],
    predicted: f64,
    opts: &BoundOptions,
) -> Result<ExponentReport> {
    let window: Vec<(f64, f64)> = in_window(series, opts.window).collect();
    if window.is_empty() {
        return Err(LabError::Fit(format!(
            "{quantity}: no samples in [{:.1e}, {:.1e}]",
            opts.window.0, opts.window.1
        )));
    }
    let fit_pts = if opts.samples > 0 {
        log_uniform_sample(series, opts.window, opts.samples)
    } else {
        window.clone()
    };
    let fit = fit_decay_exponent(&fit_pts, opts.window)?;
    let normalized: Vec<f64> = window.iter().map(|(t, v)| v * t.powf(-predicted)).collect();
    let max = normalized.iter().cloned().fold(f64::MIN, f64::max);
    let min = normalized.iter().cloned().fold(f64::MAX, f64::min);
    let band = if min > 0.0 { max / min } else { f64::INFINITY };
    let pass = band <= opts.band_limit && fit.slope >= predicted - opts.slope_tol;
    Ok(ExponentReport {
        quantity: quantity.into(),
        norm: norm.into(),
        bound: bound.into(),
        predicted,
        fit,
        band,
        band_limit: opts.band_limit,
        slope_tol: opts.slope_tol,
        window: opts.window,
        pass,
        series: series.to_vec(),
    })
}

/// CSV with columns `t, raw_norm, normalized, predicted_exponent`.
pub fn write_series_csv(path: &Path, series: &[(f64, f64)], predicted: f64) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["t", "raw_norm", "normalized", "predicted_exponent"])?;
    for (t, v) in series {
        w.write_record(&[
            format!("{t:.17e}"),
            format!("{v:.17e}"),
            format!("{:.17e}", v * t.powf(-predicted)),
            format!("{predicted}"),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn series_from(times: &[f64], values: &[f64]) -> Vec<(f64, f64)> {
    times.iter().copied().zip(values.iter().copied()).collect()
}

/// `V_1 … V_5` on the graded nodes, either for one solution (`|v|² − |v_a|²`) or for
/// the half difference of two solutions with the same `v_0`.
pub struct VDecomposition {
    grid: Arc<Grid>,
    times: Vec<f64>,
    fields: [Vec<Vec<f64>>; 5],
    /// `|| D − V_1 − V_2 ||` per node, `D` the density defect.
    pub residual: Vec<f64>,
    /// `|| V_2 − V_3 − V_4 − V_5 ||` per node.
    pub assembly: Vec<f64>,
    /// `|| D ||` per node.
    pub defect_norm: Vec<f64>,
    pub difference: bool,
}

fn l2(grid: &Grid, f: &[f64]) -> f64 {
    (f.iter().map(|x| x * x).sum::<f64>() * grid.cell()).sqrt()
}

fn divergence_real(grid: &Grid, comps: &[Vec<f64>]) -> Vec<f64> {
    let mut acc = vec![C64::new(0.0, 0.0); grid.total()];
    for (axis, c) in comps.iter().enumerate() {
        let hat = real_fft(grid, c);
        for (idx, (a, h)) in acc.iter_mut().zip(&hat).enumerate() {
            *a += h * C64::new(0.0, grid.k_component(idx, axis));
        }
    }
    real_ifft(grid, acc)
}

/// `Im(conj(v) Δv)` with the Laplacian taken spectrally.
fn current_divergence(v: &SpectralField) -> Vec<f64> {
    let lap = v.spectrum().multiply(|_, k| C64::new(-k * k, 0.0)).into_field();
    v.values()
        .iter()
        .zip(lap.values())
        .map(|(a, l)| (a.conj() * l).im)
        .collect()
}

fn density(v: &SpectralField) -> Vec<f64> {
    v.values().iter().map(|c| c.norm_sqr()).collect()
}

struct Sources {
    defect: Vec<f64>,
    w: Vec<f64>,
    flux: Vec<Vec<f64>>,
    flux_excess: Vec<Vec<f64>>,
    s0: Vec<Vec<f64>>,
}

fn check_mesh(traj: &Trajectory, profile: &AsymptoticProfile) -> Result<()> {
    let nodes = profile.mesh().nodes();
    if traj.len() != nodes.len()
        || traj
            .times()
            .iter()
            .zip(nodes)
            .any(|(a, b)| (a - b).abs() > 1e-12 * b.abs())
    {
        return Err(LabError::Shape(format!(
            "trajectory with {} nodes is not on the profile mesh of {} nodes",
            traj.len(),
            nodes.len()
        )));
    }
    if traj.grid().spec() != profile.grid().spec() {
        return Err(LabError::Shape("trajectory and profile grids differ".into()));
    }
    Ok(())
}

impl VDecomposition {
    /// `|v|² − |v_a|² = V_1 + V_2` with `V_2 = V_3 + V_4 + V_5`.
    pub fn compute(v: &Trajectory, profile: &AsymptoticProfile) -> Result<Self> {
        check_mesh(v, profile)?;
        Self::accumulate(profile, false, |k| {
            let t = v.times()[k];
            let c = profile.step_coefficients(t)?;
            let dv = density(v.state(k));
            let defect = dv.iter().zip(&c.va_density).map(|(a, b)| a - b).collect();
            let flux = c
                .s
                .iter()
                .zip(&c.s0)
                .map(|(s, s0)| {
                    (0..dv.len())
                        .map(|i| s[i] * dv[i] - s0[i] * c.va_density[i])
                        .collect()
                })
                .collect();
            let flux_excess = c
                .s
                .iter()
                .zip(&c.s0)
                .map(|(s, s0)| (0..dv.len()).map(|i| (s[i] - s0[i]) * dv[i]).collect())
                .collect();
            Ok(Sources {
                defect,
                w: current_divergence(v.state(k)),
                flux,
                flux_excess,
                s0: c.s0,
            })
        })
    }

    /// Difference form for two solutions `v_1`, `v_2` with the same `v_0`:
    /// `½(|v_2|² − |v_1|²) = V_{1−} + V_{2−}`.
    pub fn compute_difference(v1: &Trajectory, v2: &Trajectory, profile: &AsymptoticProfile) -> Result<Self> {
        check_mesh(v1, profile)?;
        check_mesh(v2, profile)?;
        Self::accumulate(profile, true, |k| {
            let t = v1.times()[k];
            let c = profile.step_coefficients(t)?;
            let d1 = density(v1.state(k));
            let d2 = density(v2.state(k));
            let defect: Vec<f64> = d2.iter().zip(&d1).map(|(a, b)| 0.5 * (a - b)).collect();
            let w1 = current_divergence(v1.state(k));
            let w2 = current_divergence(v2.state(k));
            let w = w2.iter().zip(&w1).map(|(a, b)| 0.5 * (a - b)).collect();
            let flux = c
                .s
                .iter()
                .map(|s| s.iter().zip(&defect).map(|(a, d)| a * d).collect())
                .collect();
            let flux_excess = c
                .s
                .iter()
                .zip(&c.s0)
                .map(|(s, s0)| (0..defect.len()).map(|i| (s[i] - s0[i]) * defect[i]).collect())
                .collect();
            Ok(Sources {
                defect,
                w,
                flux,
                flux_excess,
                s0: c.s0,
            })
        })
    }

    fn accumulate<F>(profile: &AsymptoticProfile, difference: bool, sources: F) -> Result<Self>
    where
        F: Fn(usize) -> Result<Sources>,
    {
        let grid = Arc::clone(profile.grid());
        let times = profile.mesh().nodes().to_vec();
        let beta = profile.params().gamma - 1.0;
        let dim = grid.dim();
        let total = grid.total();
        let scale = |t: f64, f: &[f64]| -> Vec<f64> {
            let s = t.powf(-beta);
            f.iter().map(|x| x * s).collect()
        };
        let times_field = |s0: &[Vec<f64>], f: &[f64]| -> Vec<Vec<f64>> {
            s0.iter().map(|c| c.iter().zip(f).map(|(a, b)| a * b).collect()).collect()
        };

        let mut int_w = vec![0.0; total];
        let mut int_flux = vec![vec![0.0; total]; dim];
        let mut int_excess = vec![vec![0.0; total]; dim];
        let mut int_4 = vec![vec![0.0; total]; dim];
        let mut int_5 = vec![vec![0.0; total]; dim];
        let mut fields: [Vec<Vec<f64>>; 5] = Default::default();
        let mut residual = Vec::with_capacity(times.len());
        let mut assembly = Vec::with_capacity(times.len());
        let mut defect_norm = Vec::with_capacity(times.len());

        // previous-node integrand samples, already multiplied by t^{-β} where needed
        let mut prev: Option<(Vec<f64>, Vec<Vec<f64>>, Vec<Vec<f64>>, Vec<Vec<f64>>, Vec<Vec<f64>>)> = None;
        for (k, &t) in times.iter().enumerate() {
            let src = sources(k)?;
            let w_k = src.w;
            let flux_k: Vec<Vec<f64>> = src.flux.iter().map(|c| scale(t, c)).collect();
            let excess_k: Vec<Vec<f64>> = src.flux_excess.iter().map(|c| scale(t, c)).collect();
            if let Some((pw, pf, pe, _, _)) = &prev {
                let tl = times[k - 1];
                let (a0, b0) = product_trapezoid_weights(tl, t, 0.0);
                let (a1, b1) = product_trapezoid_weights(tl, t, beta);
                for i in 0..total {
                    int_w[i] += a0 * pw[i] + b0 * w_k[i];
                }
                for d in 0..dim {
                    for i in 0..total {
                        int_flux[d][i] += a1 * pf[d][i] + b1 * flux_k[d][i];
                        int_excess[d][i] += a1 * pe[d][i] + b1 * excess_k[d][i];
                    }
                }
            }
            let v1: Vec<f64> = int_w.iter().map(|x| -x).collect();
            let v2 = divergence_real(&grid, &int_flux);
            let s0v1: Vec<Vec<f64>> = times_field(&src.s0, &v1).iter().map(|c| scale(t, c)).collect();
            let s0v2: Vec<Vec<f64>> = times_field(&src.s0, &v2).iter().map(|c| scale(t, c)).collect();
            if let Some((_, _, _, p4, p5)) = &prev {
                let (a1, b1) = product_trapezoid_weights(times[k - 1], t, beta);
                for d in 0..dim {
                    for i in 0..total {
                        int_4[d][i] += a1 * p4[d][i] + b1 * s0v1[d][i];
                        int_5[d][i] += a1 * p5[d][i] + b1 * s0v2[d][i];
                    }
                }
            }
            let v3 = divergence_real(&grid, &int_excess);
            let v4 = divergence_real(&grid, &int_4);
            let v5 = divergence_real(&grid, &int_5);

            let res: Vec<f64> = (0..total).map(|i| src.defect[i] - v1[i] - v2[i]).collect();
            let asm: Vec<f64> = (0..total).map(|i| v2[i] - v3[i] - v4[i] - v5[i]).collect();
            residual.push(l2(&grid, &res));
            assembly.push(l2(&grid, &asm));
            defect_norm.push(l2(&grid, &src.defect));
            for (slot, f) in fields.iter_mut().zip([v1, v2, v3, v4, v5]) {
                slot.push(f);
            }
            prev = Some((w_k, flux_k, excess_k, s0v1, s0v2));
        }
        Ok(VDecomposition {
            grid,
            times,
            fields,
            residual,
            assembly,
            defect_norm,
            difference,
        })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    /// Real samples of `V_j` (`j` in `1..=5`) at node `k`.
    pub fn samples(&self, j: usize, k: usize) -> &[f64] {
        assert!((1..=5).contains(&j), "V index {j} out of range");
        &self.fields[j - 1][k]
    }

    pub fn field(&self, j: usize, k: usize) -> SpectralField {
        SpectralField::from_real(&self.grid, self.samples(j, k)).expect("grid-sized")
    }

    pub fn trajectory(&self, j: usize) -> Trajectory {
        let states = (0..self.len()).map(|k| self.field(j, k)).collect();
        Trajectory::new(self.times.clone(), states).expect("nonempty")
    }

    pub fn max_residual(&self) -> f64 {
        self.residual.iter().cloned().fold(0.0, f64::max)
    }

    /// Largest `||V_2 − V_3 − V_4 − V_5|| / ||V_2||` over nodes with `V_2 ≠ 0`.
    pub fn max_assembly_relative(&self) -> f64 {
        self.assembly
            .iter()
            .enumerate()
            .map(|(k, a)| {
                let v2 = l2(&self.grid, self.samples(2, k));
                if v2 > 0.0 {
                    a / v2
                } else {
                    *a
                }
            })
            .fold(0.0, f64::max)
    }

    pub fn max_assembly(&self) -> f64 {
        self.assembly.iter().cloned().fold(0.0, f64::max)
    }

    /// `(t, ||ω^σ V_j(t)||)` for every node.
    pub fn norm_series(&self, j: usize, sigma: f64) -> Vec<(f64, f64)> {
        let spec = NormSpec::homogeneous(sigma);
        (0..self.len())
            .map(|k| (self.times[k], real_spectrum(&self.grid, self.samples(j, k)).norm(&spec)))
            .collect()
    }

    /// `(t, t^{γ-2} ||ω^{γ-σ′-n/2} χ_L V_j(t)||)` for every node.
    pub fn cutoff_series(&self, j: usize, sigma_prime: f64, gamma: f64) -> Vec<(f64, f64)> {
        let order = gamma - sigma_prime - self.grid.dim() as f64 / 2.0;
        (0..self.len())
            .map(|k| {
                let t = self.times[k];
                let st = t.sqrt();
                let sp = real_spectrum(&self.grid, self.samples(j, k));
                let n2 = sp.weighted_norm_sq(|kk| {
                    if kk > 0.0 {
                        kk.powf(2.0 * order) * chi(kk * st).powi(2)
                    } else {
                        0.0
                    }
                });
                (t, t.powf(gamma - 2.0) * n2.sqrt())
            })
            .collect()
    }

    /// `(t, sup_{t' ≤ t} |<ψ, V_j(t')>|)` for a real test function `ψ`. The running
    /// maximum obeys the same increasing power bound and ignores sign changes.
    pub fn pairing_series(&self, j: usize, psi: &[f64]) -> Vec<(f64, f64)> {
        let cell = self.grid.cell();
        let mut running = 0.0f64;
        (0..self.len())
            .map(|k| {
                let p: f64 = self.samples(j, k).iter().zip(psi).map(|(a, b)| a * b).sum();
                running = running.max((p * cell).abs());
                (self.times[k], running)
            })
            .collect()
    }
}

fn real_spectrum(grid: &Arc<Grid>, values: &[f64]) -> Spectrum {
    Spectrum::from_coeffs(grid, real_fft(grid, values)).expect("grid-sized")
}

/// Band-limited bumps `exp(-|x-c|²/(2ℓ²))` at `ℓ ∈ {0.5, 1, 2}`, filtered to the
/// dealiased band.
pub fn pairing_family(grid: &Arc<Grid>) -> Vec<(f64, Vec<f64>)> {
    let dim = grid.dim();
    let center: Vec<f64> = (0..dim).map(|d| if d == 0 { 0.7 } else { -0.4 }).collect();
    [0.5, 1.0, 2.0]
        .iter()
        .map(|&ell| {
            let bump = SpectralField::from_fn(grid, |x| {
                let r2: f64 = x.iter().zip(&center).map(|(a, c)| (a - c) * (a - c)).sum();
                C64::new((-r2 / (2.0 * ell * ell)).exp(), 0.0)
            });
            let mut sp = bump.spectrum();
            crate::grid::dealias_in_place(&mut sp);
            (ell, sp.into_field().real_part())
        })
        .collect()
}

/// `sup_ψ |<ψ, V_4(t)>| / N(ψ)` over [`pairing_family`], with
/// `N(ψ) = ||ω^{3-2σ+n/2} ψ|| + χ(σ ≤ 1) ||ω^{1+n/2±0} ψ||`, as a running maximum in `t`.
pub fn pairing_sup_series(decomp: &VDecomposition, sigma: f64) -> Vec<(f64, f64)> {
    let grid = decomp.grid();
    let n_half = grid.dim() as f64 / 2.0;
    let family: Vec<(Vec<f64>, f64)> = pairing_family(grid)
        .into_iter()
        .map(|(_, psi)| {
            let sp = real_spectrum(grid, &psi);
            let mut norm = sp.norm(&NormSpec::homogeneous(3.0 - 2.0 * sigma + n_half));
            if sigma <= 1.0 {
                norm += sp.norm(&NormSpec::pm(1.0 + n_half, crate::grid::DEFAULT_PM_EPSILON));
            }
            (psi, norm)
        })
        .collect();
    let per: Vec<Vec<(f64, f64)>> = family.iter().map(|(psi, _)| decomp.pairing_series(4, psi)).collect();
    (0..decomp.len())
        .map(|k| {
            let v = per
                .iter()
                .zip(&family)
                .map(|(s, (_, n))| s[k].1 / n)
                .fold(0.0, f64::max);
            (decomp.times()[k], v)
        })
        .collect()
}

/// Modulus of continuity at the first node: `(t − t_1, ||v(t) − v(t_1)||)`.
pub fn holder_series(v: &Trajectory) -> Vec<(f64, f64)> {
    let t1 = v.times()[0];
    let v1 = v.state(0);
    (1..v.len())
        .map(|k| (v.times()[k] - t1, v.state(k).sub(v1).l2_norm()))
        .collect()
}

/// Predicted Hölder exponent `ρ′γ ∧ (3γ − 1)`.
pub fn holder_exponent(rho_prime: f64, gamma: f64) -> f64 {
    (rho_prime * gamma).min(3.0 * gamma - 1.0)
}

pub fn holder_continuity_check(v: &Trajectory, rho_prime: f64, params: &ModelParams, opts: &BoundOptions) -> Result<ExponentReport> {
    verify_bound(
        "holder",
        "||v(t) - v(t_1)||",
        "<= C |t - t_1|^(rho' gamma ∧ (3 gamma - 1))",
        &holder_series(v),
        holder_exponent(rho_prime, params.gamma),
        opts,
    )
}

/// Worst margin of `λ_0 + λ_2 ≥ 2λ_0 + λ_1 − 1` and of the `λ_★` domination
/// inequality over a lattice of admissible `(γ, ρ, σ)`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OrderingReport {
    pub samples: usize,
    pub worst_ordering: f64,
    pub worst_domination: f64,
    pub pass: bool,
}

pub fn exponent_ordering_check(n: usize, steps: usize) -> OrderingReport {
    let half_n = n as f64 / 2.0;
    let mut worst_ordering = f64::INFINITY;
    let mut worst_domination = f64::INFINITY;
    let mut samples = 0;
    for i in 1..steps {
        let gamma = 1.0 / 3.0 + (0.5 - 1.0 / 3.0) * i as f64 / steps as f64;
        let lo = 2.0 - 2.5 * gamma;
        if lo >= half_n {
            continue;
        }
        for j in 1..steps {
            let rho = lo + (half_n - lo) * j as f64 / steps as f64;
            let table = ExponentTable {
                gamma,
                rho,
                n,
                plus_epsilon: 0.05,
            };
            let lhs = table.lambda(0.0) + table.lambda(2.0);
            let rhs = 2.0 * table.lambda(0.0) + table.lambda(1.0) - 1.0;
            worst_ordering = worst_ordering.min(lhs - rhs);
            for m in 1..steps {
                let sigma = 0.5 + 0.5 * m as f64 / steps as f64;
                if sigma > rho {
                    continue;
                }
                let d = -(3.0 + gamma - 2.0 * sigma - 2.0 * rho).max(0.0)
                    + 2.0
                    - 2.0 * sigma
                    + (1.0 + gamma - 2.0 * rho).max(0.0);
                worst_domination = worst_domination.min(d);
            }
            samples += 1;
        }
    }
    OrderingReport {
        samples,
        worst_ordering,
        worst_domination,
        pass: samples > 0 && worst_ordering >= -1e-12 && worst_domination >= -1e-12,
    }
}

/// One row of the check registry.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CheckRecord {
    pub id: String,
    pub module: String,
    pub quantity: String,
    pub bound: String,
    pub predicted: Option<f64>,
    pub slope: Option<f64>,
    pub slope_ci: Option<f64>,
    pub band: Option<f64>,
    pub value: Option<f64>,
    pub limit: Option<f64>,
    pub pass: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub csv: Option<String>,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub note: String,
}

impl CheckRecord {
    pub fn from_report(id: &str, module: &str, r: &ExponentReport) -> Self {
        CheckRecord {
            id: id.into(),
            module: module.into(),
            quantity: r.norm.clone(),
            bound: r.bound.clone(),
            predicted: Some(r.predicted),
            slope: Some(r.fit.slope),
            slope_ci: Some(r.fit.ci),
            band: Some(r.band),
            value: None,
            limit: None,
            pass: r.pass,
            csv: None,
            note: String::new(),
        }
    }

    /// Pass iff `value <= limit`.
    pub fn threshold(id: &str, module: &str, quantity: &str, bound: &str, value: f64, limit: f64) -> Self {
        CheckRecord {
            id: id.into(),
            module: module.into(),
            quantity: quantity.into(),
            bound: bound.into(),
            predicted: None,
            slope: None,
            slope_ci: None,
            band: None,
            value: Some(value),
            limit: Some(limit),
            pass: value.is_finite() && value <= limit,
            csv: None,
            note: String::new(),
        }
    }

    pub fn failed(id: &str, module: &str, err: &LabError) -> Self {
        CheckRecord {
            id: id.into(),
            module: module.into(),
            quantity: String::new(),
            bound: String::new(),
            predicted: None,
            slope: None,
            slope_ci: None,
            band: None,
            value: None,
            limit: None,
            pass: false,
            csv: None,
            note: err.to_string(),
        }
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = note.into();
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_power_law() {
        let s: Vec<(f64, f64)> = (0..40).map(|i| 1e-4 * 1.3f64.powi(i)).map(|t| (t, 3.0 * t.powf(-0.55))).collect();
        let f = fit_decay_exponent(&s, (1e-3, 1e-1)).unwrap();
        assert!((f.slope + 0.55).abs() < 1e-10);
        assert!(f.ci < 1e-8);
    }

    #[test]
    fn fit_rejects_bad_input() {
        let s: Vec<(f64, f64)> = (1..20).map(|i| (i as f64 * 1e-3, if i == 5 { 0.0 } else { 1.0 })).collect();
        assert!(fit_decay_exponent(&s, (1e-3, 1e-1)).is_err());
        assert!(fit_decay_exponent(&s[..5], (1e-3, 1e-1)).is_err());
    }

    #[test]
    fn ordering_holds() {
        let r = exponent_ordering_check(2, 24);
        assert!(r.pass && r.samples > 100, "{r:?}");
    }
}
