//! Browser bindings for the demo page in `www/`. Every export returns a JSON
//! string so the page needs no generated TypeScript types.

use cca_core::eigensolve::{Method, SolverOptions};
use cca_core::lattice::{chain, PolarizationRotation};
use cca_core::perturbation::{extract_coefficients, pair_effective, EffectiveCoefficients, SpinNormalization};
use cca_core::site::{analytic_eigensystem, energy_barrier, site_spectrum, SiteParams};
use cca_core::sweep::{run_sweep, GroundOptions, SweepConfig, SweepParameter, SweepResult, SweepSpec};
use serde::Serialize;
use wasm_bindgen::prelude::*;

/// Largest chain the page may sweep; keeps each point well under a second.
pub const MAX_SWEEP_SITES: usize = 3;
pub const MAX_SWEEP_POINTS: usize = 61;

#[derive(Serialize)]
struct SpectrumOut {
    s: u32,
    numeric: Vec<f64>,
    analytic: Option<Vec<f64>>,
    barrier: Option<f64>,
}

#[derive(Serialize)]
struct PairOut {
    coefficients: EffectiveCoefficients,
    warnings: Vec<String>,
}

fn to_json<T: Serialize>(v: &T) -> Result<String, String> {
    serde_json::to_string(v).map_err(|e| e.to_string())
}

pub fn spectrum_json(s: u32, omega0: f64, g: f64, delta_a: f64, delta_b: f64) -> Result<String, String> {
    let p = SiteParams::new(omega0, g, delta_a, delta_b).map_err(|e| e.to_string())?;
    let analytic = if p.is_resonant() && s > 0 {
        let mut e: Vec<f64> = analytic_eigensystem(s, &p)
            .map_err(|e| e.to_string())?
            .iter()
            .map(|st| st.energy)
            .collect();
        e.sort_by(f64::total_cmp);
        Some(e)
    } else {
        None
    };
    to_json(&SpectrumOut {
        s,
        numeric: site_spectrum(s, &p),
        analytic,
        barrier: (s > 0 && p.is_resonant()).then(|| energy_barrier(s, g)),
    })
}

/// `theta = 0` means no rotation; otherwise `(nx, ny, nz)` is normalized here.
#[allow(clippy::too_many_arguments)]
pub fn pair_json(s: u32, g: f64, j_a: f64, j_b: f64, theta: f64, nx: f64, ny: f64, nz: f64) -> Result<String, String> {
    let p = SiteParams::resonant(0.0, g).map_err(|e| e.to_string())?;
    let rotation = if theta == 0.0 {
        None
    } else {
        let n = (nx * nx + ny * ny + nz * nz).sqrt();
        if n == 0.0 {
            return Err("rotation axis must be nonzero".into());
        }
        Some(PolarizationRotation::new(theta, [nx / n, ny / n, nz / n]).map_err(|e| e.to_string())?)
    };
    let r = pair_effective(s, &p, j_a, j_b, rotation.as_ref()).map_err(|e| e.to_string())?;
    let coefficients = extract_coefficients(&r, SpinNormalization::conventional(s)).map_err(|e| e.to_string())?;
    to_json(&PairOut {
        coefficients,
        warnings: r.warnings,
    })
}

pub fn sweep_result(sites: usize, g: f64, j_a: f64, jb_max: f64, points: usize) -> Result<SweepResult, String> {
    if !(2..=MAX_SWEEP_SITES).contains(&sites) {
        return Err(format!("sites must be between 2 and {MAX_SWEEP_SITES}"));
    }
    if !(1..=MAX_SWEEP_POINTS).contains(&points) {
        return Err(format!("points must be between 1 and {MAX_SWEEP_POINTS}"));
    }
    let cfg = SweepConfig {
        lattice: chain(sites, false, j_a, j_a).map_err(|e| e.to_string())?,
        site: SiteParams::resonant(0.0, g).map_err(|e| e.to_string())?,
        s: 1,
        sweep: SweepSpec {
            parameter: SweepParameter::JB,
            start: 0.0,
            stop: jb_max,
            points,
        },
        ground: GroundOptions {
            method: Method::Dense,
            solver: SolverOptions::default(),
            ..GroundOptions::default()
        },
    };
    run_sweep(&cfg).map_err(|e| e.to_string())
}

/// Spectrum of the `s`-excitation block of one cavity, with the closed forms
/// when resonant.
#[wasm_bindgen(js_name = siteSpectrum)]
pub fn site_spectrum_js(s: u32, omega0: f64, g: f64, delta_a: f64, delta_b: f64) -> Result<String, JsError> {
    spectrum_json(s, omega0, g, delta_a, delta_b).map_err(|e| JsError::new(&e))
}

/// Effective pair coefficients for one edge.
#[wasm_bindgen(js_name = pairCoefficients)]
#[allow(clippy::too_many_arguments)]
pub fn pair_coefficients_js(s: u32, g: f64, j_a: f64, j_b: f64, theta: f64, nx: f64, ny: f64, nz: f64) -> Result<String, JsError> {
    pair_json(s, g, j_a, j_b, theta, nx, ny, nz).map_err(|e| JsError::new(&e))
}

/// Open chain at unit filling, `J_b` swept from 0 to `jb_max`.
#[wasm_bindgen(js_name = chainSweep)]
pub fn chain_sweep_js(sites: usize, g: f64, j_a: f64, jb_max: f64, points: usize) -> Result<String, JsError> {
    sweep_result(sites, g, j_a, jb_max, points)
        .and_then(|r| to_json(&r))
        .map_err(|e| JsError::new(&e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::Value;

    #[test]
    fn spectrum_has_closed_forms_on_resonance() {
        let v: Value = serde_json::from_str(&spectrum_json(2, 0.0, 1.0, 0.0, 0.0).unwrap()).unwrap();
        assert_eq!(v["numeric"].as_array().unwrap().len(), 7);
        assert_eq!(v["analytic"].as_array().unwrap().len(), 7);
        assert!((v["barrier"].as_f64().unwrap() - energy_barrier(2, 1.0)).abs() < 1e-15);
        let d: Value = serde_json::from_str(&spectrum_json(2, 0.0, 1.0, 0.1, 0.0).unwrap()).unwrap();
        assert!(d["analytic"].is_null());
    }

    #[test]
    fn pair_coefficients_at_unit_filling() {
        let v: Value = serde_json::from_str(&pair_json(1, 1e-3, 1e-5, 1e-5, 0.0, 0.0, 0.0, 1.0).unwrap()).unwrap();
        let lx = v["coefficients"]["lambda_x"].as_f64().unwrap();
        assert!((lx - 5.625e-8).abs() < 1e-10 * 5.625e-8);
        assert!(pair_json(1, 1e-3, 1e-5, 1e-5, 0.5, 0.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn two_site_sweep_crosses_at_equal_hopping() {
        let r = sweep_result(2, 1e-3, 1e-5, 2e-5, 11).unwrap();
        assert_eq!(r.rows.len(), 11);
        assert!(r.crossing.unwrap().contains(1e-5));
        assert!(sweep_result(4, 1e-3, 1e-5, 2e-5, 11).is_err());
    }
}
