//! WebAssembly bindings for the browser demo in `www/`.
//!
//! The `*_impl` functions hold the logic and run natively; the exported
//! wrappers only convert errors into JavaScript exceptions.

use contact_split::accel::AccelKind;
use contact_split::driver::{run_fixed_point, run_with_factorization, SolverConfig, Status};
use contact_split::metrics::{hertz_analytic, hertz_line_analytic};
use contact_split::problems::{gen_hertz, HertzParams};
use wasm_bindgen::prelude::*;

fn accel(name: &str) -> Result<AccelKind, String> {
    AccelKind::parse(name).ok_or_else(|| format!("unknown acceleration '{name}'"))
}

fn hertz_params(refinement: usize, u_d: f64) -> Result<HertzParams, String> {
    let mut p = HertzParams::new(2, refinement);
    p.u_d = u_d;
    p.check().map_err(|e| e.to_string())?;
    Ok(p)
}

/// One solve of the 2D Hertz problem with the computed and analytic pressure.
#[wasm_bindgen]
#[derive(Debug, Clone)]
pub struct HertzRun {
    status: String,
    iterations: usize,
    residuals: Vec<f64>,
    x: Vec<f64>,
    pressure: Vec<f64>,
    analytic: Vec<f64>,
    resultant: f64,
    p_max: f64,
    p_max_analytic: f64,
    contact_radius: f64,
    contact_radius_analytic: f64,
}

#[wasm_bindgen]
impl HertzRun {
    #[wasm_bindgen(getter)]
    pub fn status(&self) -> String {
        self.status.clone()
    }
    #[wasm_bindgen(getter)]
    pub fn iterations(&self) -> usize {
        self.iterations
    }
    /// Convergence criterion per iteration.
    #[wasm_bindgen(getter)]
    pub fn residuals(&self) -> Vec<f64> {
        self.residuals.clone()
    }
    /// Pair positions along the interface (m).
    #[wasm_bindgen(getter)]
    pub fn x(&self) -> Vec<f64> {
        self.x.clone()
    }
    /// Nodal contact pressure (Pa).
    #[wasm_bindgen(getter)]
    pub fn pressure(&self) -> Vec<f64> {
        self.pressure.clone()
    }
    /// Analytic pressure at the same positions for the measured load.
    #[wasm_bindgen(getter)]
    pub fn analytic(&self) -> Vec<f64> {
        self.analytic.clone()
    }
    #[wasm_bindgen(getter)]
    pub fn resultant(&self) -> f64 {
        self.resultant
    }
    #[wasm_bindgen(getter)]
    pub fn p_max(&self) -> f64 {
        self.p_max
    }
    #[wasm_bindgen(getter)]
    pub fn p_max_analytic(&self) -> f64 {
        self.p_max_analytic
    }
    #[wasm_bindgen(getter)]
    pub fn contact_radius(&self) -> f64 {
        self.contact_radius
    }
    #[wasm_bindgen(getter)]
    pub fn contact_radius_analytic(&self) -> f64 {
        self.contact_radius_analytic
    }
}

pub fn solve_hertz_impl(refinement: usize, u_d: f64, rho: f64, accel_name: &str) -> Result<HertzRun, String> {
    let h = gen_hertz(&hertz_params(refinement, u_d)?).map_err(|e| e.to_string())?;
    let cfg = SolverConfig::uzawa(rho).with_accel(accel(accel_name)?).with_max_iter(5000);
    cfg.check().map_err(|e| e.to_string())?;
    let rep = run_fixed_point(&h.problem, &cfg).map_err(|e| e.to_string())?;
    let g = &h.geometry;
    let x: Vec<f64> = g.planar.iter().map(|p| p[0]).collect();
    let resultant = g.resultant(&rep.lambda);
    let (analytic, p_max_analytic, contact_radius_analytic) = if resultant > 0.0 {
        let an = g.analytic(&rep.lambda);
        (x.iter().map(|&r| an.pressure(r.abs())).collect(), an.p_max, an.a)
    } else {
        (vec![0.0; x.len()], 0.0, 0.0)
    };
    Ok(HertzRun {
        status: rep.status.name().to_string(),
        iterations: rep.iterations,
        residuals: rep.trace.r.clone(),
        pressure: g.pressures(&rep.lambda),
        p_max: g.max_pressure(&rep.lambda),
        contact_radius: if resultant > 0.0 { g.contact_radius(&rep.lambda) } else { 0.0 },
        x,
        analytic,
        resultant,
        p_max_analytic,
        contact_radius_analytic,
    })
}

/// Solve the 2D desk Hertz problem with Uzawa parameter `rho` and the named acceleration.
#[wasm_bindgen]
pub fn solve_hertz(refinement: usize, u_d: f64, rho: f64, accel: &str) -> Result<HertzRun, JsError> {
    solve_hertz_impl(refinement, u_d, rho, accel).map_err(|e| JsError::new(&e))
}

/// Iteration counts over a range of Uzawa parameters; `-1` marks a run that did not converge.
pub fn sweep_rho_impl(refinement: usize, accel_name: &str, rhos: &[f64], max_iter: usize) -> Result<Vec<f64>, String> {
    let kind = accel(accel_name)?;
    let h = gen_hertz(&hertz_params(refinement, HertzParams::new(2, refinement).u_d)?).map_err(|e| e.to_string())?;
    let fact = h.problem.factorize().map_err(|e| e.to_string())?;
    rhos.iter()
        .map(|&rho| {
            let cfg = SolverConfig::uzawa(rho).with_accel(kind).with_max_iter(max_iter.max(1));
            cfg.check().map_err(|e| e.to_string())?;
            let rep = run_with_factorization(&h.problem, &cfg, &fact).map_err(|e| e.to_string())?;
            Ok(if rep.status == Status::Converged { rep.iterations as f64 } else { -1.0 })
        })
        .collect()
}

#[wasm_bindgen]
pub fn sweep_rho(refinement: usize, accel: &str, rhos: Vec<f64>, max_iter: usize) -> Result<Vec<f64>, JsError> {
    sweep_rho_impl(refinement, accel, &rhos, max_iter).map_err(|e| JsError::new(&e))
}

/// Analytic pressure sampled on `[0, 1.2 a]`: `[a, p_max, r_0, p_0, r_1, p_1, ...]`.
///
/// `line` selects the cylinder (per unit length, force in N/m) instead of the sphere.
#[allow(clippy::too_many_arguments)]
#[wasm_bindgen]
pub fn hertz_profile(force: f64, radius: f64, e1: f64, nu1: f64, e2: f64, nu2: f64, line: bool, samples: usize) -> Vec<f64> {
    if !(force > 0.0 && radius > 0.0 && e1 > 0.0 && e2 > 0.0) {
        return vec![0.0, 0.0];
    }
    let h = if line {
        hertz_line_analytic(force, radius, e1, nu1, e2, nu2)
    } else {
        hertz_analytic(force, radius, e1, nu1, e2, nu2)
    };
    let n = samples.max(2);
    let mut out = vec![h.a, h.p_max];
    for i in 0..n {
        let r = 1.2 * h.a * i as f64 / (n - 1) as f64;
        out.push(r);
        out.push(h.pressure(r));
    }
    out
}
