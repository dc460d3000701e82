//! Accuracy and convergence measures.

use std::f64::consts::PI;
use std::fmt::Write as _;

use crate::error::{check_len, Error, Result};
use crate::linalg::{norm2, sub};

/// Largest `|B U - D|` over the pairs with `lambda_prev > 0`; 0 when none is active.
pub fn effective_gap(gap: &[f64], lambda_prev: &[f64]) -> f64 {
    gap.iter()
        .zip(lambda_prev)
        .filter(|(_, l)| **l > 0.0)
        .fold(0.0_f64, |m, (g, _)| m.max(g.abs()))
}

/// `max_j |lambda_j (B U - D)_j|`
pub fn complementarity_measure(lambda: &[f64], gap: &[f64]) -> f64 {
    lambda
        .iter()
        .zip(gap)
        .fold(0.0_f64, |m, (l, g)| m.max((l * g).abs()))
}

pub fn active_count(lambda: &[f64]) -> usize {
    lambda.iter().filter(|l| **l > 0.0).count()
}

/// `||q_ref - q|| / ||q_ref||`
pub fn relative_error(q_ref: &[f64], q: &[f64]) -> Result<f64> {
    check_len("compared vector", q_ref.len(), q.len())?;
    let nref = norm2(q_ref);
    if nref == 0.0 {
        return Err(Error::ZeroReference);
    }
    Ok(norm2(&sub(q_ref, q)) / nref)
}

/// Like [`relative_error`] but equal to the absolute error when the reference vanishes.
pub fn relative_error_or_abs(q_ref: &[f64], q: &[f64]) -> f64 {
    match relative_error(q_ref, q) {
        Ok(e) => e,
        Err(_) => norm2(&sub(q_ref, q)),
    }
}

/// Local order indicators `p^i = ln(r^{i+1}/r^i) / ln(r^i/r^{i-1})`, one per interior index.
pub fn order_indicators(r: &[f64]) -> Vec<f64> {
    r.windows(3)
        .map(|w| (w[2] / w[1]).ln() / (w[1] / w[0]).ln())
        .collect()
}

/// Median of the local order indicators over the last half of the trace.
///
/// Only strictly decreasing triples enter; steps with `|ln(r^i/r^{i-1})| < 1e-3`
/// and non-finite indicators are dropped.
pub fn convergence_order(r: &[f64]) -> Result<f64> {
    if r.len() < 3 {
        return Err(Error::InsufficientTrace);
    }
    let start = (r.len() / 2).saturating_sub(1);
    let mut p: Vec<f64> = r[start..]
        .windows(3)
        .filter(|w| w.iter().all(|v| *v > 0.0 && v.is_finite()) && w[2] < w[1] && w[1] < w[0])
        .filter(|w| (w[1] / w[0]).ln().abs() >= 1e-3)
        .map(|w| (w[2] / w[1]).ln() / (w[1] / w[0]).ln())
        .filter(|v| v.is_finite())
        .collect();
    if p.is_empty() {
        return Err(Error::InsufficientTrace);
    }
    p.sort_by(f64::total_cmp);
    let m = p.len();
    Ok(if m % 2 == 1 {
        p[m / 2]
    } else {
        0.5 * (p[m / 2 - 1] + p[m / 2])
    })
}

/// `1/E* = (1 - nu1^2)/E1 + (1 - nu2^2)/E2`
pub fn effective_modulus(e1: f64, nu1: f64, e2: f64, nu2: f64) -> f64 {
    1.0 / ((1.0 - nu1 * nu1) / e1 + (1.0 - nu2 * nu2) / e2)
}

/// Analytic contact of an elastic sphere on a plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HertzSolution {
    /// Contact radius.
    pub a: f64,
    pub p_max: f64,
    pub e_star: f64,
    /// `true` for the plane-strain cylinder, where `p_max` is per unit length loading.
    pub line: bool,
}

impl HertzSolution {
    pub fn pressure(&self, r: f64) -> f64 {
        let s = r / self.a;
        if s.abs() >= 1.0 {
            0.0
        } else {
            self.p_max * (1.0 - s * s).sqrt()
        }
    }
}

/// Sphere of radius `r` pressed with force `f`:
/// `a = (3 F R / 4 E*)^(1/3)`, `P_max = 3 F / (2 pi a^2)`.
pub fn hertz_analytic(f: f64, r: f64, e1: f64, nu1: f64, e2: f64, nu2: f64) -> HertzSolution {
    let e_star = effective_modulus(e1, nu1, e2, nu2);
    let a = (3.0 * f * r / (4.0 * e_star)).cbrt();
    HertzSolution {
        a,
        p_max: 3.0 * f / (2.0 * PI * a * a),
        e_star,
        line: false,
    }
}

/// Cylinder of radius `r` in plane strain with force per unit length `f`:
/// `a = sqrt(4 F R / (pi E*))`, `P_max = 2 F / (pi a)`.
pub fn hertz_line_analytic(f: f64, r: f64, e1: f64, nu1: f64, e2: f64, nu2: f64) -> HertzSolution {
    let e_star = effective_modulus(e1, nu1, e2, nu2);
    let a = (4.0 * f * r / (PI * e_star)).sqrt();
    HertzSolution {
        a,
        p_max: 2.0 * f / (PI * a),
        e_star,
        line: true,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AccuracyReport {
    pub effective_gap_max: f64,
    pub complementarity_max: f64,
    pub e_force: f64,
    pub e_disp: f64,
    /// `NaN` when the trace was too short to estimate.
    pub convergence_order_p: f64,
}

impl AccuracyReport {
    pub const CSV_HEADER: &'static str = "effective_gap_max,complementarity_max,e_force,e_disp,convergence_order_p";

    pub fn to_key_value(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "effective_gap_max = {:e}", self.effective_gap_max);
        let _ = writeln!(s, "complementarity_max = {:e}", self.complementarity_max);
        let _ = writeln!(s, "e_force = {:e}", self.e_force);
        let _ = writeln!(s, "e_disp = {:e}", self.e_disp);
        let _ = writeln!(s, "convergence_order_p = {:e}", self.convergence_order_p);
        s
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{:e},{:e},{:e},{:e},{:e}",
            self.effective_gap_max, self.complementarity_max, self.e_force, self.e_disp, self.convergence_order_p
        )
    }
}
