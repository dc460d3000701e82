//! The accelerated fixed-point loop.
//!
//! ```text
//! factorize K once
//! repeat i = 1, 2, ...
//!     U^i        = K^-1 (F_ext - B^T lambda^{i-1})
//!     lambda_hat = G(lambda^{i-1}, B U^i - D)
//!     lambda^i   = Pi(A(lambda_hat))          (optionally A(Pi(lambda_hat)))
//! until ||lambda^i - lambda^{i-1}|| / ||lambda^i|| <= eps
//! ```

use std::fmt::Write as _;
use std::io;

use crate::accel::{AccelKind, AccelState, Placement, SecantAudit};
use crate::error::{check_len, Result};
use crate::linalg::{norm2, Factorization};
use crate::metrics;
use crate::problem::ContactProblem;
use crate::updates::{project_nonneg_in_place, UpdateKind};

/// Wall clock that reads zero on wasm32, where `Instant` is unavailable.
struct Stopwatch(#[cfg(not(target_arch = "wasm32"))] std::time::Instant);

impl Stopwatch {
    fn start() -> Self {
        Self(
            #[cfg(not(target_arch = "wasm32"))]
            std::time::Instant::now(),
        )
    }

    fn secs(&self) -> f64 {
        #[cfg(not(target_arch = "wasm32"))]
        return self.0.elapsed().as_secs_f64();
        #[cfg(target_arch = "wasm32")]
        0.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub update: UpdateKind,
    pub accel: AccelKind,
    pub placement: Placement,
    /// Convergence tolerance on `r`; zero disables the test and the run ends at `max_iter`.
    pub tol: f64,
    pub max_iter: usize,
    pub minit_accel: usize,
    /// Starting multiplier; zero when `None`.
    pub lambda0: Option<Vec<f64>>,
    /// Divergence is declared when `r` stays above this multiple of its smallest
    /// value so far for `divergence_window` consecutive iterations.
    pub divergence_factor: f64,
    pub divergence_window: usize,
    /// Diagonal compliance `c` added as a `-c I` block to the saddle system,
    /// so the update sees `B U - D - c lambda`. Zero for the plain problem.
    pub compliance: f64,
    /// Switch off both projections (diagnostics only).
    pub project: bool,
    /// Keep every `lambda^i` in the report.
    pub record_iterates: bool,
}

impl SolverConfig {
    pub fn new(update: UpdateKind, accel: AccelKind) -> Self {
        Self {
            update,
            accel,
            placement: accel.default_placement(),
            tol: 1e-12,
            max_iter: 500_000,
            minit_accel: 2,
            lambda0: None,
            divergence_factor: 1e8,
            divergence_window: 10,
            compliance: 0.0,
            project: true,
            record_iterates: false,
        }
    }

    pub fn uzawa(rho: f64) -> Self {
        Self::new(UpdateKind::Uzawa { rho }, AccelKind::None)
    }

    pub fn penalty(k_n: f64) -> Self {
        Self::new(UpdateKind::PenaltySplit { k_n }, AccelKind::None)
    }

    pub fn with_accel(mut self, accel: AccelKind) -> Self {
        self.accel = accel;
        self.placement = accel.default_placement();
        self
    }

    pub fn with_placement(mut self, placement: Placement) -> Self {
        self.placement = placement;
        self
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn with_max_iter(mut self, max_iter: usize) -> Self {
        self.max_iter = max_iter;
        self
    }

    pub fn check(&self) -> Result<()> {
        self.update.check()?;
        let bad = |m: &str| Err(crate::Error::InvalidInput(m.to_string()));
        if !(self.tol >= 0.0) {
            return bad("tolerance must be non-negative");
        }
        if self.max_iter == 0 {
            return bad("max_iter must be at least 1");
        }
        if !(self.divergence_factor > 1.0) {
            return bad("divergence factor must exceed 1");
        }
        if !(self.compliance >= 0.0 && self.compliance.is_finite()) {
            return bad("compliance must be non-negative");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Status {
    Converged,
    MaxIter,
    Diverged,
    LinearSolveFailure,
}

impl Status {
    pub fn name(self) -> &'static str {
        match self {
            Status::Converged => "converged",
            Status::MaxIter => "max-iter",
            Status::Diverged => "diverged",
            Status::LinearSolveFailure => "linear-solve-failure",
        }
    }
}

/// Per-iteration records; every vector has one entry per iteration.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Trace {
    pub r: Vec<f64>,
    pub effective_gap: Vec<f64>,
    pub complementarity: Vec<f64>,
    pub active_count: Vec<usize>,
    pub beta: Vec<f64>,
    pub tau: Vec<f64>,
    pub restarted: Vec<bool>,
    /// Seconds since the start of the run, factorization included.
    pub elapsed_s: Vec<f64>,
}

impl Trace {
    pub fn len(&self) -> usize {
        self.r.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r.is_empty()
    }

    pub fn omega(&self) -> Vec<f64> {
        self.beta.iter().map(|b| 1.0 - b).collect()
    }

    pub const CSV_HEADER: &'static str = "iter,r,effective_gap,complementarity,active_count,beta,elapsed_s";

    pub fn write_csv<W: io::Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "{}", Self::CSV_HEADER)?;
        for i in 0..self.len() {
            writeln!(
                w,
                "{},{:e},{:e},{:e},{},{:e},{:e}",
                i + 1,
                self.r[i],
                self.effective_gap[i],
                self.complementarity[i],
                self.active_count[i],
                self.beta[i],
                self.elapsed_s[i]
            )?;
        }
        Ok(())
    }

    pub fn to_csv(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("ascii output")
    }
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub status: Status,
    pub u: Vec<f64>,
    pub lambda: Vec<f64>,
    /// Gap `B U - D` of the last iteration.
    pub gap: Vec<f64>,
    pub iterations: usize,
    pub trace: Trace,
    /// Filled with `record_iterates`; entry 0 is `lambda^0`.
    pub iterates: Vec<Vec<f64>>,
    /// Crossed-Secant residual-decrease records, one per accelerated iteration.
    pub secant_audit: Vec<SecantAudit>,
    pub factorization_s: f64,
    /// First iteration, factorization included.
    pub first_iteration_s: f64,
    /// Mean over iterations 2 and later; `NaN` after a single iteration.
    pub mean_iteration_s: f64,
    pub message: Option<String>,
}

impl SolveReport {
    fn failed(n: usize, n_lambda: usize, status: Status, message: String) -> Self {
        Self {
            status,
            u: vec![0.0; n],
            lambda: vec![0.0; n_lambda],
            gap: vec![0.0; n_lambda],
            iterations: 0,
            trace: Trace::default(),
            iterates: Vec::new(),
            secant_audit: Vec::new(),
            factorization_s: 0.0,
            first_iteration_s: 0.0,
            mean_iteration_s: f64::NAN,
            message: Some(message),
        }
    }

    pub fn final_residual(&self) -> f64 {
        self.trace.r.last().copied().unwrap_or(f64::NAN)
    }

    /// Flat `key = value` summary.
    pub fn summary(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "status = {}", self.status.name());
        let _ = writeln!(s, "iterations = {}", self.iterations);
        let _ = writeln!(s, "final_r = {:e}", self.final_residual());
        let _ = writeln!(s, "active_count = {}", metrics::active_count(&self.lambda));
        let _ = writeln!(s, "lambda_sum = {:e}", self.lambda.iter().sum::<f64>());
        let _ = writeln!(s, "lambda_max = {:e}", self.lambda.iter().fold(0.0_f64, |m, v| m.max(*v)));
        let _ = writeln!(s, "factorization_s = {:e}", self.factorization_s);
        let _ = writeln!(s, "first_iteration_s = {:e}", self.first_iteration_s);
        let _ = writeln!(s, "mean_iteration_s = {:e}", self.mean_iteration_s);
        if let Some(m) = &self.message {
            let _ = writeln!(s, "message = {m}");
        }
        s
    }
}

/// `r = ||lambda - lambda_prev|| / ||lambda||`, falling back to `||lambda_prev||`
/// when `lambda = 0`, and `0` when both vanish.
pub fn relative_residual(lambda: &[f64], lambda_prev: &[f64]) -> f64 {
    let diff: f64 = lambda
        .iter()
        .zip(lambda_prev)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt();
    let mut den = norm2(lambda);
    if den == 0.0 {
        den = norm2(lambda_prev);
    }
    if den == 0.0 {
        0.0
    } else {
        diff / den
    }
}

pub fn check_convergence(lambda: &[f64], lambda_prev: &[f64], tol: f64) -> bool {
    relative_residual(lambda, lambda_prev) <= tol
}

/// Factorize `K` and run the loop.
pub fn run_fixed_point(p: &ContactProblem, cfg: &SolverConfig) -> Result<SolveReport> {
    cfg.check()?;
    let start = Stopwatch::start();
    let fact = match p.factorize() {
        Ok(f) => f,
        Err(e) => {
            return Ok(SolveReport::failed(
                p.n(),
                p.n_lambda(),
                Status::LinearSolveFailure,
                e.to_string(),
            ))
        }
    };
    let factorization_s = start.secs();
    let mut report = run_with_factorization(p, cfg, &fact)?;
    report.factorization_s = factorization_s;
    report.first_iteration_s += factorization_s;
    for t in &mut report.trace.elapsed_s {
        *t += factorization_s;
    }
    Ok(report)
}

/// Run the loop with a factorization shared by the caller.
pub fn run_with_factorization(p: &ContactProblem, cfg: &SolverConfig, fact: &Factorization) -> Result<SolveReport> {
    cfg.check()?;
    let (n, m) = (p.n(), p.n_lambda());
    check_len("factorization size", n, fact.n())?;
    let lambda0 = match &cfg.lambda0 {
        Some(l) => {
            check_len("lambda0", m, l.len())?;
            l.clone()
        }
        None => vec![0.0; m],
    };
    let start = Stopwatch::start();
    let mut state = AccelState::new(cfg.accel, &lambda0, cfg.minit_accel);
    let mut lambda_prev = lambda0.clone();
    let mut lambda_prev2 = lambda0.clone();
    let mut trace = Trace::default();
    let mut iterates = Vec::new();
    if cfg.record_iterates {
        iterates.push(lambda0.clone());
    }
    let mut audit = Vec::new();
    let mut u = Vec::new();
    let mut gap = vec![0.0; m];
    let mut rhs = vec![0.0; n];
    let mut r_min = f64::INFINITY;
    let mut above = 0;
    let mut status = Status::MaxIter;
    let mut first_iteration_s = 0.0;
    let mut message = None;
    let pre_project = cfg.project && cfg.accel != AccelKind::None && cfg.placement == Placement::ProjectBeforeAndAfter;

    for i in 1..=cfg.max_iter {
        let t0 = start.secs();
        let bt = p.b.mul_vec_transpose(&lambda_prev)?;
        for ((r, f), b) in rhs.iter_mut().zip(&p.f_ext).zip(&bt) {
            *r = f - b;
        }
        u = match fact.solve(&rhs) {
            Ok(u) => u,
            Err(e) => {
                status = Status::LinearSolveFailure;
                message = Some(e.to_string());
                u = vec![0.0; n];
                break;
            }
        };
        gap = p.gap(&u)?;
        let mut lambda_hat = if cfg.compliance > 0.0 {
            let g: Vec<f64> = gap
                .iter()
                .zip(&lambda_prev)
                .map(|(g, l)| g - cfg.compliance * l)
                .collect();
            cfg.update.apply(&lambda_prev, &g)
        } else {
            cfg.update.apply(&lambda_prev, &gap)
        };
        if pre_project {
            project_nonneg_in_place(&mut lambda_hat);
        }
        let delta_before = if cfg.accel == AccelKind::CrossedSecant {
            state.delta_prev.clone()
        } else {
            Vec::new()
        };
        let (mut lambda, info) = state.step(&lambda_hat, &gap);
        if cfg.project {
            project_nonneg_in_place(&mut lambda);
        }
        state.commit(&lambda);

        let r = relative_residual(&lambda, &lambda_prev);
        if cfg.accel == AccelKind::CrossedSecant && i >= 2 {
            let step = distance(&lambda, &lambda_prev);
            let prev_step = distance(&lambda_prev, &lambda_prev2);
            // after the step the state holds delta^i
            audit.push(SecantAudit::new(i, &state.delta_prev, &delta_before, step, prev_step));
        }
        trace.r.push(r);
        trace.effective_gap.push(metrics::effective_gap(&gap, &lambda_prev));
        trace.complementarity.push(metrics::complementarity_measure(&lambda, &gap));
        trace.active_count.push(metrics::active_count(&lambda));
        trace.beta.push(info.beta);
        trace.tau.push(info.tau);
        trace.restarted.push(info.restarted);
        let now = start.secs();
        trace.elapsed_s.push(now);
        if i == 1 {
            first_iteration_s = now - t0;
        }
        if cfg.record_iterates {
            iterates.push(lambda.clone());
        }

        let finite = r.is_finite() && lambda.iter().all(|v| v.is_finite());
        lambda_prev2 = std::mem::replace(&mut lambda_prev, lambda);
        if r_min > 0.0 && r > cfg.divergence_factor * r_min {
            above += 1;
        } else {
            above = 0;
        }
        if !finite || above >= cfg.divergence_window.max(1) {
            status = Status::Diverged;
            break;
        }
        r_min = r_min.min(r);
        if cfg.tol > 0.0 && r <= cfg.tol {
            status = Status::Converged;
            break;
        }
    }
    let iterations = trace.len();
    let total = start.secs();
    let mean_iteration_s = if iterations > 1 {
        (total - first_iteration_s) / (iterations - 1) as f64
    } else {
        f64::NAN
    };
    Ok(SolveReport {
        status,
        u,
        lambda: lambda_prev,
        gap,
        iterations,
        trace,
        iterates,
        secant_audit: audit,
        factorization_s: 0.0,
        first_iteration_s,
        mean_iteration_s,
        message,
    })
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{factorization_count, SparseRect, SparseSym};

    /// Two unit springs in series with a tip load `f` and an obstacle at `d`.
    fn chain(f: f64, d: f64) -> ContactProblem {
        let k = SparseSym::from_triplets(2, [(0, 0, 2.0), (0, 1, -1.0), (1, 0, -1.0), (1, 1, 1.0)])
            .unwrap();
        let b = SparseRect::from_dense(&[vec![0.0, 1.0]]).unwrap();
        ContactProblem::new(k, b, vec![d], vec![0.0, f]).unwrap()
    }

    #[test]
    fn residual_rules() {
        assert_eq!(relative_residual(&[2.0, 1.0], &[2.0, 1.0]), 0.0);
        assert!(check_convergence(&[0.0], &[0.0], 1e-12));
        assert_eq!(relative_residual(&[0.0, 0.0], &[3.0, 4.0]), 1.0);
        assert!(!check_convergence(&[0.0], &[1.0], 1e-12));
        assert!((relative_residual(&[1.0], &[0.5]) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn separated_bodies_converge_immediately() {
        let p = chain(-1.0, 0.1);
        let rep = run_fixed_point(&p, &SolverConfig::uzawa(0.4)).unwrap();
        assert_eq!(rep.status, Status::Converged);
        assert_eq!(rep.iterations, 1);
        assert_eq!(rep.lambda, vec![0.0]);
        assert!((rep.u[0] + 1.0).abs() < 1e-14 && (rep.u[1] + 2.0).abs() < 1e-14);
    }

    #[test]
    fn spring_obstacle_closed_form() {
        // compliance at the tip is 2, so lambda* = f - d / 2
        let p = chain(3.0, 1.0);
        for accel in AccelKind::ALL {
            let rep = run_fixed_point(&p, &SolverConfig::uzawa(0.4).with_accel(accel)).unwrap();
            assert_eq!(rep.status, Status::Converged, "{accel:?}");
            assert!((rep.lambda[0] - 2.5).abs() <= 1e-10, "{accel:?}");
            let kkt = p.residual_kkt(&rep.u, &rep.lambda).unwrap();
            assert!(kkt.equilibrium <= 1e-10 && kkt.penetration_scaled() <= 1e-10);
        }
    }

    #[test]
    fn single_factorization_per_run() {
        let p = chain(3.0, 1.0);
        let before = factorization_count();
        let rep = run_fixed_point(&p, &SolverConfig::uzawa(0.4)).unwrap();
        assert!(rep.iterations > 2);
        // other tests may factorize concurrently, so only bound from below
        assert!(factorization_count() > before);
        let f = p.factorize().unwrap();
        let rep = run_with_factorization(&p, &SolverConfig::uzawa(0.4), &f).unwrap();
        assert_eq!(rep.status, Status::Converged);
    }

    #[test]
    fn zero_tolerance_runs_to_the_cap() {
        let p = chain(3.0, 1.0);
        let rep = run_fixed_point(&p, &SolverConfig::uzawa(0.4).with_tol(0.0).with_max_iter(50)).unwrap();
        assert_eq!(rep.status, Status::MaxIter);
        assert_eq!(rep.iterations, 50);
        assert_eq!(rep.trace.r.len(), 50);
    }

    #[test]
    fn out_of_range_uzawa_does_not_converge() {
        // the dual operator has slope 2 at the tip; rho > 1 is unstable
        let p = chain(3.0, 1.0);
        let rep = run_fixed_point(&p, &SolverConfig::uzawa(5.0).with_max_iter(5000)).unwrap();
        assert!(matches!(rep.status, Status::Diverged | Status::MaxIter));
        let rep = run_fixed_point(
            &p,
            &SolverConfig::uzawa(5.0).with_accel(AccelKind::CrossedSecant).with_max_iter(5000),
        )
        .unwrap();
        assert_eq!(rep.status, Status::Converged);
    }

    #[test]
    fn multipliers_stay_nonnegative() {
        let p = chain(3.0, 1.0);
        let mut cfg = SolverConfig::uzawa(0.9).with_accel(AccelKind::FistaAR);
        cfg.record_iterates = true;
        let rep = run_fixed_point(&p, &cfg).unwrap();
        assert!(rep.iterates.iter().flatten().all(|v| *v >= 0.0));
        assert_eq!(rep.iterates.len(), rep.iterations + 1);
    }

    #[test]
    fn singular_stiffness_is_reported() {
        let k = SparseSym::from_triplets(2, [(0, 0, 1.0), (0, 1, -1.0), (1, 0, -1.0), (1, 1, 1.0)])
            .unwrap();
        let b = SparseRect::from_dense(&[vec![1.0, 0.0]]).unwrap();
        let p = ContactProblem::new(k, b, vec![0.0], vec![0.0, 0.0]).unwrap();
        let rep = run_fixed_point(&p, &SolverConfig::uzawa(1.0)).unwrap();
        assert_eq!(rep.status, Status::LinearSolveFailure);
    }

    #[test]
    fn trace_csv_shape() {
        let p = chain(3.0, 1.0);
        let rep = run_fixed_point(&p, &SolverConfig::uzawa(0.4)).unwrap();
        let csv = rep.trace.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], Trace::CSV_HEADER);
        assert_eq!(lines.len(), rep.iterations + 1);
        assert!(lines[1..].iter().all(|l| l.split(',').count() == 7));
    }

    #[test]
    fn bad_lambda0_length() {
        let mut cfg = SolverConfig::uzawa(0.4);
        cfg.lambda0 = Some(vec![1.0, 2.0]);
        assert!(run_fixed_point(&chain(1.0, 1.0), &cfg).is_err());
    }
}
