//! Randomized spot checks of the interpolation, Leibniz, product and commutator
//! inequalities on band-limited fields.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::grid::{apply_omega_power, gradient, Grid, GridSpec, SpectralField, Spectrum, C64};

const TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InequalityCase {
    /// `||ω^σ u||_p ≤ C ||u||_q^{1-θ} ||ω^ρ u||_r^θ`.
    Interpolation { p: f64, q: f64, r: f64, sigma: f64, rho: f64, theta: f64 },
    /// `||ω^σ(uv)||_r ≤ C (||ω^σ u||_{r1} ||v||_{r2} + ||ω^σ v||_{r3} ||u||_{r4})`.
    Leibniz { sigma: f64, r: f64, r1: f64, r2: f64, r3: f64, r4: f64 },
    /// `||ω^{σ-n/2}(uv)|| ≤ C ||ω^{σ1} u|| ||ω^{σ2} v||`, `σ = σ1 + σ2`.
    Product { sigma1: f64, sigma2: f64 },
    /// `|<ω^{α1} u, [ω^λ, m] ω^{α2} v>|` against the `L²`-based norms of `m, u, v`.
    Commutator {
        lambda: f64,
        alpha1: f64,
        alpha2: f64,
        sigma0: f64,
        sigma1: f64,
        sigma2: f64,
        nu: f64,
    },
}

pub const CASE_IDS: [&str; 4] = ["interpolation", "leibniz", "product", "commutator"];

impl InequalityCase {
    pub fn id(&self) -> &'static str {
        match self {
            InequalityCase::Interpolation { .. } => "interpolation",
            InequalityCase::Leibniz { .. } => "leibniz",
            InequalityCase::Product { .. } => "product",
            InequalityCase::Commutator { .. } => "commutator",
        }
    }

    /// Instances used by the registry; the commutator case is the one that controls
    /// `∂_t ||ω^{ρ′} v′||²` (`λ = 2ρ′`, `α = (0, 1)`, `ν = 1`).
    pub fn standard(id: &str, n: usize, rho_prime: f64) -> Result<Self> {
        let nh = n as f64 / 2.0;
        Ok(match id {
            "interpolation" => InequalityCase::Interpolation {
                p: 4.0,
                q: 2.0,
                r: 2.0,
                sigma: 0.25,
                rho: 1.0,
                theta: n as f64 / 4.0 + 0.25,
            },
            "leibniz" => InequalityCase::Leibniz {
                sigma: 1.0,
                r: 2.0,
                r1: 4.0,
                r2: 4.0,
                r3: 4.0,
                r4: 4.0,
            },
            "product" => InequalityCase::Product {
                sigma1: 0.5,
                sigma2: 0.5,
            },
            "commutator" => InequalityCase::Commutator {
                lambda: 2.0 * rho_prime,
                alpha1: 0.0,
                alpha2: 1.0,
                sigma0: 1.0 + nh,
                sigma1: rho_prime,
                sigma2: rho_prime,
                nu: 1.0,
            },
            other => return Err(LabError::Config(format!("unknown inequality `{other}`"))),
        })
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        let nf = n as f64;
        let nh = nf / 2.0;
        let fail = |msg: String| Err(LabError::Hypothesis(format!("{}: {msg}", self.id())));
        match *self {
            InequalityCase::Interpolation { p, q, r, sigma, rho, theta } => {
                if !(q > 1.0 && q.is_finite() && r > 1.0 && r.is_finite()) {
                    return fail(format!("needs 1 < q, r < ∞, got q = {q}, r = {r}"));
                }
                if !(p > 1.0) {
                    return fail(format!("needs 1 < p ≤ ∞, got p = {p}"));
                }
                let endpoint = (sigma - rho).abs() < TOL && (theta - 1.0).abs() < TOL;
                if !(sigma >= 0.0 && (sigma < rho || endpoint)) {
                    return fail(format!("needs 0 ≤ σ < ρ, got σ = {sigma}, ρ = {rho}"));
                }
                if p.is_infinite() && !(rho - sigma > nf / r) {
                    return fail(format!("p = ∞ needs ρ − σ > n/r, got {} ≤ {}", rho - sigma, nf / r));
                }
                if !(theta >= sigma / rho - TOL && theta <= 1.0 + TOL) {
                    return fail(format!("needs σ/ρ ≤ θ ≤ 1, got θ = {theta}"));
                }
                let lhs = nf / p - sigma;
                let rhs = (1.0 - theta) * nf / q + theta * (nf / r - rho);
                if (lhs - rhs).abs() > TOL {
                    return fail(format!("scaling n/p − σ = (1−θ)n/q + θ(n/r − ρ) fails: {lhs} vs {rhs}"));
                }
            }
            InequalityCase::Leibniz { sigma, r, r1, r2, r3, r4 } => {
                for (name, x) in [("r", r), ("r1", r1), ("r3", r3)] {
                    if !(x > 1.0 && x.is_finite()) {
                        return fail(format!("needs 1 < {name} < ∞, got {x}"));
                    }
                }
                for (name, x) in [("r2", r2), ("r4", r4)] {
                    if !(x > 1.0) {
                        return fail(format!("needs {name} > 1, got {x}"));
                    }
                }
                if (1.0 / r - 1.0 / r1 - 1.0 / r2).abs() > TOL || (1.0 / r - 1.0 / r3 - 1.0 / r4).abs() > TOL {
                    return fail("needs 1/r = 1/r1 + 1/r2 = 1/r3 + 1/r4".into());
                }
                if !(sigma >= 0.0) {
                    return fail(format!("needs σ ≥ 0, got {sigma}"));
                }
            }
            InequalityCase::Product { sigma1, sigma2 } => {
                if !(sigma1 + sigma2 > 0.0) {
                    return fail(format!("needs σ1 + σ2 > 0, got {}", sigma1 + sigma2));
                }
                if !(sigma1.max(sigma2) < nh) {
                    return fail(format!("needs σ1 ∨ σ2 < n/2, got {}", sigma1.max(sigma2)));
                }
            }
            InequalityCase::Commutator {
                lambda,
                alpha1,
                alpha2,
                sigma0,
                sigma1,
                sigma2,
                nu,
            } => {
                if !(lambda > 0.0) {
                    return fail(format!("needs λ > 0, got {lambda}"));
                }
                if !(alpha1 >= 0.0 && alpha2 >= 0.0) {
                    return fail("needs α1, α2 ≥ 0".into());
                }
                if !(0.0..=1.0).contains(&nu) {
                    return fail(format!("needs 0 ≤ ν ≤ 1, got {nu}"));
                }
                let total = lambda + alpha1 + alpha2;
                if (sigma0 + sigma1 + sigma2 - (total + nh)).abs() > TOL {
                    return fail(format!(
                        "needs Σ σ_i + δ(r_i) = λ + α1 + α2 + n/2, got {} vs {}",
                        sigma0 + sigma1 + sigma2,
                        total + nh
                    ));
                }
                if !(sigma0 + sigma1.min(sigma2) >= total - TOL) {
                    return fail(format!("needs σ0 + σ1 ∧ σ2 ≥ λ + α1 + α2 = {total}"));
                }
                if !(sigma1 + sigma2 >= total - nu - TOL) {
                    return fail(format!("needs σ1 + σ2 ≥ λ + α1 + α2 − ν = {}", total - nu));
                }
                for (name, d) in [("q0", sigma0 - nu), ("q1", sigma1), ("q2", sigma2)] {
                    if !(d >= -nh - TOL && d <= nh + TOL) {
                        return fail(format!("δ({name}) = {d} outside [−n/2, n/2]"));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn describe(&self) -> String {
        match *self {
            InequalityCase::Interpolation { p, q, r, sigma, rho, theta } => {
                format!("p={p} q={q} r={r} sigma={sigma} rho={rho} theta={theta}")
            }
            InequalityCase::Leibniz { sigma, r, r1, r2, r3, r4 } => {
                format!("sigma={sigma} r={r} r1={r1} r2={r2} r3={r3} r4={r4}")
            }
            InequalityCase::Product { sigma1, sigma2 } => format!("sigma1={sigma1} sigma2={sigma2}"),
            InequalityCase::Commutator {
                lambda,
                alpha1,
                alpha2,
                sigma0,
                sigma1,
                sigma2,
                nu,
            } => format!(
                "lambda={lambda} alpha1={alpha1} alpha2={alpha2} sigma0={sigma0} sigma1={sigma1} sigma2={sigma2} nu={nu}"
            ),
        }
    }

    /// LHS / RHS for one triple of fields (`m` is only used by the commutator case).
    pub fn ratio(&self, u: &SpectralField, v: &SpectralField, m: &SpectralField) -> Result<f64> {
        let n = u.grid().dim() as f64;
        let om = |f: &SpectralField, s: f64| apply_omega_power(f, s);
        let (lhs, rhs) = match *self {
            InequalityCase::Interpolation { p, q, r, sigma, rho, theta } => {
                let lhs = om(u, sigma)?.lp_norm(p);
                let rhs = u.lp_norm(q).powf(1.0 - theta) * om(u, rho)?.lp_norm(r).powf(theta);
                (lhs, rhs)
            }
            InequalityCase::Leibniz { sigma, r, r1, r2, r3, r4 } => {
                let uv = u.zip_map(v, |a, b| a * b);
                let lhs = om(&uv, sigma)?.lp_norm(r);
                let rhs = om(u, sigma)?.lp_norm(r1) * v.lp_norm(r2) + om(v, sigma)?.lp_norm(r3) * u.lp_norm(r4);
                (lhs, rhs)
            }
            InequalityCase::Product { sigma1, sigma2 } => {
                let uv = u.zip_map(v, |a, b| a * b);
                let lhs = om(&uv, sigma1 + sigma2 - n / 2.0)?.l2_norm();
                let rhs = om(u, sigma1)?.l2_norm() * om(v, sigma2)?.l2_norm();
                (lhs, rhs)
            }
            InequalityCase::Commutator {
                lambda,
                alpha1,
                alpha2,
                sigma0,
                sigma1,
                sigma2,
                nu,
            } => {
                let pu = om(u, alpha1)?;
                let pv = om(v, alpha2)?;
                let a = om(&m.zip_map(&pv, |x, y| x * y), lambda)?;
                let b = m.zip_map(&om(&pv, lambda)?, |x, y| x * y);
                let lhs = pu.inner(&a.sub(&b)).norm();
                let q = |d: f64| if (d - n / 2.0).abs() < TOL { f64::INFINITY } else { n / (n / 2.0 - d) };
                let grad = gradient(&om(m, nu - 1.0)?);
                let grad_mod = grad.modulus_sq().map(|c| C64::new(c.re.sqrt(), 0.0));
                let m_norm = om(m, sigma0)?.l2_norm() + grad_mod.lp_norm(q(sigma0 - nu));
                let u_norm = om(u, sigma1)?.l2_norm() + u.lp_norm(q(sigma1));
                let v_norm = om(v, sigma2)?.l2_norm() + v.lp_norm(q(sigma2));
                (lhs, m_norm * u_norm * v_norm)
            }
        };
        if !(rhs > 0.0) {
            return Err(LabError::Domain(format!("{}: vanishing right-hand side", self.id())));
        }
        Ok(lhs / rhs)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpotOptions {
    pub trials: usize,
    pub points: Vec<usize>,
    pub length: f64,
    /// Largest wavenumber of the random fields.
    pub kmax: f64,
    /// Allowed max/min of the worst ratio across grids and seeds.
    pub stability_limit: f64,
}

impl Default for SpotOptions {
    fn default() -> Self {
        SpotOptions {
            trials: 100,
            points: vec![32, 64, 128, 256],
            length: 20.0,
            kmax: 2.0,
            stability_limit: 2.0,
        }
    }
}

/// Lattice modes with `|k| ≤ kmax` and random complex amplitudes; the same physical
/// field on every grid of the given box length.
#[derive(Clone, Debug)]
pub struct BandLimited {
    modes: Vec<(Vec<i64>, C64)>,
}

impl BandLimited {
    pub fn random<R: Rng>(rng: &mut R, dim: usize, length: f64, kmax: f64, real: bool) -> Self {
        let dk = 2.0 * std::f64::consts::PI / length;
        let cut = rng.gen_range(0.3..=1.0) * kmax;
        let decay = rng.gen_range(0.0..3.0);
        let mmax = (kmax / dk).floor() as i64;
        let mut modes = Vec::new();
        let mut m = vec![-mmax; dim];
        loop {
            let k = dk * m.iter().map(|x| (x * x) as f64).sum::<f64>().sqrt();
            let re: f64 = rng.gen_range(-1.0..1.0);
            let im: f64 = rng.gen_range(-1.0..1.0);
            if k <= cut {
                let amp = (1.0 + k * k).powf(-decay / 2.0);
                modes.push((m.clone(), C64::new(re, im) * amp));
            }
            let mut axis = dim;
            loop {
                if axis == 0 {
                    let mut out = BandLimited { modes };
                    if real {
                        out = out.symmetrized();
                    }
                    return out;
                }
                axis -= 1;
                if m[axis] < mmax {
                    m[axis] += 1;
                    break;
                }
                m[axis] = -mmax;
            }
        }
    }

    fn symmetrized(self) -> Self {
        let mut modes = Vec::with_capacity(2 * self.modes.len());
        for (m, c) in &self.modes {
            modes.push((m.clone(), c * 0.5));
            modes.push((m.iter().map(|x| -x).collect(), c.conj() * 0.5));
        }
        BandLimited { modes }
    }

    pub fn sample(&self, grid: &Arc<Grid>) -> Result<SpectralField> {
        let n = grid.points() as i64;
        let scale = (grid.total() as f64).sqrt();
        let mut coeffs = vec![C64::new(0.0, 0.0); grid.total()];
        for (m, c) in &self.modes {
            if m.iter().any(|x| 2 * x.abs() >= n) {
                return Err(LabError::Domain(format!("mode {m:?} not representable on {n} points")));
            }
            let idx = m
                .iter()
                .fold(0usize, |acc, x| acc * n as usize + x.rem_euclid(n) as usize);
            coeffs[idx] += c * scale;
        }
        Ok(Spectrum::from_coeffs(grid, coeffs)?.into_field())
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SpotReport {
    pub case: String,
    pub parameters: String,
    pub trials: usize,
    pub seeds: Vec<u64>,
    /// Worst ratio per grid size for the first seed.
    pub per_grid: Vec<(usize, f64)>,
    /// Worst ratio per seed on the finest grid.
    pub per_seed: Vec<(u64, f64)>,
    pub worst: f64,
    /// max/min of all worst ratios above.
    pub stability: f64,
    pub pass: bool,
}

/// Worst observed LHS/RHS over `trials` random triples, per grid and per seed.
pub fn inequality_spot_check(case: &InequalityCase, dim: usize, seeds: &[u64], opts: &SpotOptions) -> Result<SpotReport> {
    case.validate(dim)?;
    if seeds.is_empty() || opts.points.is_empty() || opts.trials == 0 {
        return Err(LabError::Config("spot check needs seeds, grids and trials".into()));
    }
    let grids = opts
        .points
        .iter()
        .map(|&p| Grid::new(GridSpec::new(dim, p, opts.length)?))
        .collect::<Result<Vec<_>>>()?;
    let worst_for = |seed: u64, grids: &[Arc<Grid>]| -> Result<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut worst = vec![0.0f64; grids.len()];
        for _ in 0..opts.trials {
            let u = BandLimited::random(&mut rng, dim, opts.length, opts.kmax, false);
            let v = BandLimited::random(&mut rng, dim, opts.length, opts.kmax, false);
            let m = BandLimited::random(&mut rng, dim, opts.length, opts.kmax, true);
            for (w, g) in worst.iter_mut().zip(grids) {
                let r = case.ratio(&u.sample(g)?, &v.sample(g)?, &m.sample(g)?)?;
                *w = w.max(r);
            }
        }
        Ok(worst)
    };
    let first = worst_for(seeds[0], &grids)?;
    let finest = grids.last().expect("nonempty");
    let mut per_seed = vec![(seeds[0], *first.last().expect("nonempty"))];
    for &s in &seeds[1..] {
        per_seed.push((s, worst_for(s, std::slice::from_ref(finest))?[0]));
    }
    let all: Vec<f64> = first.iter().cloned().chain(per_seed.iter().map(|p| p.1)).collect();
    let max = all.iter().cloned().fold(0.0, f64::max);
    let min = all.iter().cloned().fold(f64::INFINITY, f64::min);
    let stability = if min > 0.0 { max / min } else { f64::INFINITY };
    Ok(SpotReport {
        case: case.id().into(),
        parameters: case.describe(),
        trials: opts.trials,
        seeds: seeds.to_vec(),
        per_grid: opts.points.iter().copied().zip(first).collect(),
        per_seed,
        worst: max,
        stability,
        pass: max.is_finite() && stability <= opts.stability_limit,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standard_cases_are_admissible() {
        for id in CASE_IDS {
            InequalityCase::standard(id, 2, 0.95).unwrap().validate(2).unwrap();
        }
    }

    #[test]
    fn band_limited_is_grid_independent() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let f = BandLimited::random(&mut rng, 2, 20.0, 2.0, true);
        let a = f.sample(&Grid::new(GridSpec::new(2, 32, 20.0).unwrap()).unwrap()).unwrap();
        let b = f.sample(&Grid::new(GridSpec::new(2, 64, 20.0).unwrap()).unwrap()).unwrap();
        assert!((a.l2_norm() - b.l2_norm()).abs() < 1e-12 * a.l2_norm());
        assert!(a.imag_residue() < 1e-12);
    }
}
