use hartree_lab_web::{decay_view, exponent_rows, heat_map, potential_samples};

#[test]
fn default_exponent_table() {
    let view = exponent_rows(0.45, 0.95, 2);
    assert!(view.violations.is_empty());
    let get = |name: &str| view.rows.iter().find(|r| r.name == name).unwrap().value;
    assert!((get("λ_0") - 0.45).abs() < 1e-12);
    assert!((get("λ_1") - 0.175).abs() < 1e-12);
    assert!((get("λ_2") + 0.325).abs() < 1e-12);
    assert!((get("2γ+λ_1-1") - 0.075).abs() < 1e-12);
}

#[test]
fn inadmissible_parameters_yield_violations() {
    let view = exponent_rows(0.3, 0.95, 2);
    assert!(!view.violations.is_empty());
    assert!(view.rows.is_empty());
}

#[test]
fn potential_is_radial_peak_at_origin_and_cutoff_shrinks_it() {
    let n = 32;
    let full = potential_samples(n, 0.45, 0.5, 0.0).unwrap();
    assert_eq!(full.len(), n * n);
    let centre = full[(n / 2) * n + n / 2];
    assert!(full.iter().all(|v| *v <= centre + 1e-12));
    let low = potential_samples(n, 0.45, 0.5, 1.0).unwrap();
    let l2 = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>();
    assert!(l2(&low) < l2(&full));
}

#[test]
fn heat_map_has_rgba_per_sample() {
    let px = heat_map(&[1.0, -1.0, 0.0, 0.5], 2);
    assert_eq!(px.len(), 16);
    assert!(px.chunks(4).all(|c| c[3] == 255));
}

#[test]
fn decay_curve_fits_a_negative_slope() {
    let v = decay_view(32, 0.45, 0.95, 0.5, 12).unwrap();
    assert_eq!(v.t.len(), 12);
    assert!(v.slope < 0.0 && v.slope.is_finite());
    assert!((v.predicted + 0.55).abs() < 1e-12);
}
