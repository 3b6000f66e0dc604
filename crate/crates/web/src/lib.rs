//! Browser bindings for the `latreal` demo page.
//!
//! Each exported function wraps a plain Rust function of the same shape so
//! the numerics can be tested natively.

use latreal::basic1d::alpha0_exclusion_factor;
use latreal::bounds::{alpha_grid, figure4_table, lower_1d, lower_r_a, lower_r_c, upper_r_f};
use latreal::lattice::BoxRegion;
use latreal::product::realize;
use wasm_bindgen::prelude::*;

const MAX_SIDE: usize = 512;

/// `[R_F, r_A, r_C, lower_1d]`; `r_C` is NaN for `d = 1`.
pub fn bounds_values(alpha: f64, d: usize) -> Result<Vec<f64>, String> {
    if !(alpha.is_finite() && alpha >= 0.0) {
        return Err(format!("alpha must be >= 0, got {alpha}"));
    }
    if d == 0 {
        return Err("d must be >= 1".into());
    }
    let r_c = if d >= 2 {
        lower_r_c(alpha, d).map_err(|e| e.to_string())?
    } else {
        f64::NAN
    };
    Ok(vec![
        upper_r_f(alpha, d),
        lower_r_a(alpha, d),
        r_c,
        lower_1d(alpha),
    ])
}

/// Flattened `[alpha, ratio_C, ratio_A]` triples for one dimension.
pub fn ratio_curve_values(d: usize, step: f64) -> Result<Vec<f64>, String> {
    let alphas = alpha_grid(step).map_err(|e| e.to_string())?;
    let rows = figure4_table(&[d], &alphas).map_err(|e| e.to_string())?;
    Ok(rows
        .iter()
        .flat_map(|r| [r.alpha, r.ratio_c, r.ratio_a])
        .collect())
}

/// Occupation numbers of a `side × side` sample of the two-dimensional
/// product of the α = 0 exclusion factor with driver probability `p`,
/// thinned along each axis with retention `t > 0`. Row-major.
pub fn sample_field_values(p: f64, t: f64, side: usize, seed: u64) -> Result<Vec<u8>, String> {
    if side == 0 || side > MAX_SIDE {
        return Err(format!("side must lie in 1..={MAX_SIDE}"));
    }
    let factor = alpha0_exclusion_factor(p)
        .and_then(|f| f.thin(t))
        .map_err(|e| e.to_string())?;
    let proc = realize(&factor, 2).map_err(|e| e.to_string())?;
    let region = BoxRegion::cube(side, 2).map_err(|e| e.to_string())?;
    let field = proc.sample_box(&region, seed).map_err(|e| e.to_string())?;
    Ok(field.into_values())
}

#[wasm_bindgen]
pub fn bounds(alpha: f64, d: u32) -> Result<Vec<f64>, JsError> {
    bounds_values(alpha, d as usize).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn ratio_curve(d: u32, step: f64) -> Result<Vec<f64>, JsError> {
    ratio_curve_values(d as usize, step).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn sample_field(p: f64, t: f64, side: u32, seed: u32) -> Result<Vec<u8>, JsError> {
    sample_field_values(p, t, side as usize, seed as u64).map_err(|e| JsError::new(&e))
}
