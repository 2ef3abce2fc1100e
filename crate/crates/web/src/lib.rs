//! Browser demo: exponent table, Hartree potential heat map, `s_0` decay curve.

use std::sync::Arc;

use hartree_lab::asymptotics::{AsymptoticProfile, ProfileOptions};
use hartree_lab::data::InitialData;
use hartree_lab::estimates::{fit_decay_exponent, holder_exponent, CUTOFF_SIGMA_PRIME};
use hartree_lab::grid::{cutoff_low, Grid, GridSpec, NormSpec, DEFAULT_PM_EPSILON};
use hartree_lab::hartree::{hartree_potential, ModelParams};
use hartree_lab::mesh::GradedMesh;
use serde::Serialize;
use wasm_bindgen::prelude::*;
use wasm_bindgen::Clamped;

const LENGTH: f64 = 20.0;

#[derive(Serialize)]
pub struct ExponentRow {
    pub name: &'static str,
    pub value: f64,
}

#[derive(Serialize)]
pub struct ExponentTableView {
    pub violations: Vec<String>,
    pub rows: Vec<ExponentRow>,
}

fn params(gamma: f64, rho: f64, n: usize) -> ModelParams {
    ModelParams {
        gamma,
        rho,
        n,
        ..Default::default()
    }
}

pub fn exponent_rows(gamma: f64, rho: f64, n: usize) -> ExponentTableView {
    let p = params(gamma, rho, n);
    let violations = p.violations();
    if !violations.is_empty() {
        return ExponentTableView { violations, rows: Vec::new() };
    }
    let e = p.exponents();
    let (l0, l1, l2) = (e.lambda(0.0), e.lambda(1.0), e.lambda(2.0));
    let sp = CUTOFF_SIGMA_PRIME;
    let rows = vec![
        ExponentRow { name: "λ_0", value: l0 },
        ExponentRow { name: "λ_1", value: l1 },
        ExponentRow { name: "λ_2", value: l2 },
        ExponentRow { name: "2γ+λ_1-1", value: p.integrability_exponent() },
        ExponentRow { name: "μ_1 (σ′=0.9)", value: e.mu(1, sp) },
        ExponentRow { name: "μ_2 (σ′=0.9)", value: e.mu(2, sp) },
        ExponentRow { name: "λ_★(ρ)", value: e.lambda_star(rho) },
        ExponentRow { name: "s_0, α=0: λ_0-1", value: l0 - 1.0 },
        ExponentRow { name: "s_0, α=1: λ_1-1", value: l1 - 1.0 },
        ExponentRow { name: "s_b, s_c: λ_0+λ_1-1", value: l0 + l1 - 1.0 },
        ExponentRow { name: "V_3: λ_0+λ_1", value: l0 + l1 },
        ExponentRow { name: "V_5: 2λ_0", value: 2.0 * l0 },
        ExponentRow { name: "φ: γ-1", value: gamma - 1.0 },
        ExponentRow { name: "Hölder: ργ ∧ (3γ-1)", value: holder_exponent(rho, gamma) },
        ExponentRow { name: "λ_0+λ_2 - (2λ_0+λ_1-1)", value: l0 + l2 - (2.0 * l0 + l1 - 1.0) },
    ];
    ExponentTableView { violations, rows }
}

/// Exponent table as JSON: `{violations: [...], rows: [{name, value}]}`.
#[wasm_bindgen]
pub fn exponent_table(gamma: f64, rho: f64, n: usize) -> String {
    serde_json::to_string(&exponent_rows(gamma, rho, n)).unwrap_or_default()
}

fn gaussian(points: usize, a0: f64, rho: f64) -> Result<hartree_lab::grid::SpectralField, String> {
    let grid: Arc<Grid> = Grid::new(GridSpec::new(2, points, LENGTH).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
    InitialData::default()
        .with_a0(a0)
        .sample(&grid, rho, 0)
        .map_err(|e| e.to_string())
}

/// Hartree potential of the default Gaussian, and its low-frequency part
/// `χ(|k|√t) g` when `t > 0`, as row-major samples.
pub fn potential_samples(points: usize, gamma: f64, a0: f64, t: f64) -> Result<Vec<f64>, String> {
    let p = params(gamma, 0.95, 2);
    let u = gaussian(points, a0, p.rho)?;
    let g = hartree_potential(&u, &p).map_err(|e| e.to_string())?;
    let g = if t > 0.0 { cutoff_low(&g, t).map_err(|e| e.to_string())? } else { g };
    Ok(g.real_part())
}

/// `(t, ||ω^{1±0} s_0(t)||)` at `count` log-spaced times in `[1e-3, 1e-1]`.
pub fn s0_series(points: usize, gamma: f64, rho: f64, a0: f64, count: usize) -> Result<Vec<(f64, f64)>, String> {
    let p = params(gamma, rho, 2);
    let u = gaussian(points, a0, rho)?;
    let mesh = GradedMesh::new(1.0, 16, 1.0).map_err(|e| e.to_string())?;
    let opts = ProfileOptions {
        level: 0,
        ..Default::default()
    };
    let profile = AsymptoticProfile::build(&u, &mesh, &p, &opts).map_err(|e| e.to_string())?;
    let count = count.max(8);
    (0..count)
        .map(|i| {
            let t = 10f64.powf(-3.0 + 2.0 * i as f64 / (count - 1) as f64);
            let s0 = profile.s0(t).map_err(|e| e.to_string())?;
            Ok((t, s0.norm(&NormSpec::pm(1.0, DEFAULT_PM_EPSILON))))
        })
        .collect()
}

#[derive(Serialize)]
pub struct DecayView {
    pub t: Vec<f64>,
    pub norm: Vec<f64>,
    pub slope: f64,
    pub ci: f64,
    pub intercept: f64,
    pub predicted: f64,
}

pub fn decay_view(points: usize, gamma: f64, rho: f64, a0: f64, count: usize) -> Result<DecayView, String> {
    let series = s0_series(points, gamma, rho, a0, count)?;
    let fit = fit_decay_exponent(&series, (1e-3, 1e-1)).map_err(|e| e.to_string())?;
    Ok(DecayView {
        t: series.iter().map(|s| s.0).collect(),
        norm: series.iter().map(|s| s.1).collect(),
        slope: fit.slope,
        ci: fit.ci,
        intercept: fit.intercept,
        predicted: params(gamma, rho, 2).exponents().lambda(0.0) - 1.0,
    })
}

/// `s_0` decay curve with its fitted log-log slope, as JSON.
#[wasm_bindgen]
pub fn s0_decay(points: usize, gamma: f64, rho: f64, a0: f64, count: usize) -> Result<String, JsValue> {
    let view = decay_view(points, gamma, rho, a0, count).map_err(|e| JsValue::from_str(&e))?;
    serde_json::to_string(&view).map_err(|e| JsValue::from_str(&e.to_string()))
}

/// Diverging blue-white-red colour for `x` in `[-1, 1]`.
fn colour(x: f64) -> [u8; 4] {
    let x = x.clamp(-1.0, 1.0);
    let (r, g, b) = if x >= 0.0 {
        (1.0, 1.0 - x, 1.0 - x)
    } else {
        (1.0 + x, 1.0 + x, 1.0)
    };
    [(r * 255.0) as u8, (g * 255.0) as u8, (b * 255.0) as u8, 255]
}

/// RGBA pixels of a square field, scaled by its largest magnitude.
pub fn heat_map(values: &[f64], points: usize) -> Vec<u8> {
    let scale = values.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
    let mut out = Vec::with_capacity(4 * values.len());
    for row in 0..points {
        for col in 0..points {
            // first axis left to right, second axis bottom to top
            out.extend_from_slice(&colour(values[col * points + (points - 1 - row)] / scale));
        }
    }
    out
}

/// Draw the potential (or its low-frequency part when `t > 0`) into a canvas.
/// Returns the peak value.
#[wasm_bindgen]
pub fn draw_potential(canvas_id: &str, points: usize, gamma: f64, a0: f64, t: f64) -> Result<f64, JsValue> {
    let values = potential_samples(points, gamma, a0, t).map_err(|e| JsValue::from_str(&e))?;
    let peak = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut pixels = heat_map(&values, points);
    let document = web_sys::window()
        .and_then(|w| w.document())
        .ok_or_else(|| JsValue::from_str("no document"))?;
    let canvas: web_sys::HtmlCanvasElement = document
        .get_element_by_id(canvas_id)
        .ok_or_else(|| JsValue::from_str("no canvas"))?
        .dyn_into()?;
    canvas.set_width(points as u32);
    canvas.set_height(points as u32);
    let ctx: web_sys::CanvasRenderingContext2d = canvas
        .get_context("2d")?
        .ok_or_else(|| JsValue::from_str("no 2d context"))?
        .dyn_into()?;
    let image = web_sys::ImageData::new_with_u8_clamped_array_and_sh(Clamped(&mut pixels), points as u32, points as u32)?;
    ctx.put_image_data(&image, 0.0, 0.0)?;
    Ok(peak)
}
