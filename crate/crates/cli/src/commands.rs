use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::Path;

use contact_split::accel::{AccelKind, Placement};
use contact_split::driver::{run_with_factorization, SolveReport, Status};
use contact_split::linalg::{mtx, EigenOptions, Factorization};
use contact_split::metrics::{self, AccuracyReport};
use contact_split::oracle::{brute_force_kkt, solve_saddle_point_active_set, KktSolution};
use contact_split::problem::ContactProblem;
use contact_split::problems::HertzGeometry;
use contact_split::updates::uzawa_upper_bound;
use rayon::prelude::*;

use crate::config::{Config, Method, OracleKind, ParameterUnit};
use crate::{exit, write_file, CliError};

/// Brute force enumerates `2^N_lambda` sets; refuse beyond this.
pub const BRUTE_FORCE_LIMIT: usize = 20;

pub fn status_code(s: Status) -> i32 {
    match s {
        Status::Converged => exit::CONVERGED,
        Status::Diverged => exit::DIVERGED,
        Status::MaxIter => exit::MAX_ITER,
        Status::LinearSolveFailure => exit::SOLVE,
    }
}

/// A loaded problem with its factorization, shared by every run of a command.
pub struct Prepared {
    pub problem: ContactProblem,
    pub fact: Factorization,
    pub seed: u64,
    pub factorization_s: f64,
    bound: std::sync::OnceLock<Result<f64, String>>,
}

impl Prepared {
    pub fn new(cfg: &Config) -> Result<Self, CliError> {
        let problem = cfg.problem.build(cfg.seed).map_err(CliError::Input)?;
        let report = problem.validate();
        if !report.is_ok() {
            let msgs: Vec<String> = report.issues.iter().map(|i| i.to_string()).collect();
            return Err(CliError::Input(format!("invalid problem: {}", msgs.join("; "))));
        }
        for w in &report.warnings {
            eprintln!("warning: {w}");
        }
        let t0 = std::time::Instant::now();
        let fact = problem.factorize().map_err(|e| CliError::Solve(format!("factorization failed: {e}")))?;
        Ok(Self {
            problem,
            fact,
            seed: cfg.seed,
            factorization_s: t0.elapsed().as_secs_f64(),
            bound: std::sync::OnceLock::new(),
        })
    }

    /// Sufficient Uzawa bound with a seeded power-iteration start.
    pub fn uzawa_bound(&self) -> Result<f64, CliError> {
        self.bound
            .get_or_init(|| {
                let opts = EigenOptions {
                    seed: self.seed,
                    ..EigenOptions::default()
                };
                uzawa_upper_bound(&self.problem.k, &self.fact, &self.problem.b, false, &opts).map_err(|e| e.to_string())
            })
            .clone()
            .map_err(CliError::Solve)
    }

    pub fn absolute(&self, unit: ParameterUnit, value: f64) -> Result<f64, CliError> {
        match unit {
            ParameterUnit::Absolute => Ok(value),
            ParameterUnit::Bound => Ok(value * self.uzawa_bound()?),
        }
    }

    pub fn reference(&self, kind: OracleKind, max_outer: usize) -> Result<Vec<(&'static str, KktSolution)>, CliError> {
        let p = &self.problem;
        let brute = || {
            if p.n_lambda() > BRUTE_FORCE_LIMIT {
                return Err(CliError::Input(format!(
                    "brute-force oracle limited to {BRUTE_FORCE_LIMIT} constraints, problem has {}",
                    p.n_lambda()
                )));
            }
            brute_force_kkt(p).map_err(|e| CliError::Solve(format!("brute-force oracle: {e}")))
        };
        let active = || solve_saddle_point_active_set(p, max_outer).map_err(|e| CliError::Solve(format!("active-set oracle: {e}")));
        Ok(match kind {
            OracleKind::None => vec![],
            OracleKind::ActiveSet => vec![("active-set", active()?)],
            OracleKind::BruteForce => vec![("brute-force", brute()?)],
            OracleKind::Both => vec![("active-set", active()?), ("brute-force", brute()?)],
        })
    }
}

pub fn accuracy(rep: &SolveReport, reference: Option<&KktSolution>) -> AccuracyReport {
    let (e_force, e_disp) = match reference {
        Some(r) => (
            metrics::relative_error_or_abs(&r.lambda, &rep.lambda),
            metrics::relative_error_or_abs(&r.u, &rep.u),
        ),
        None => (f64::NAN, f64::NAN),
    };
    AccuracyReport {
        effective_gap_max: rep.trace.effective_gap.last().copied().unwrap_or(f64::NAN),
        complementarity_max: rep.trace.complementarity.last().copied().unwrap_or(f64::NAN),
        e_force,
        e_disp,
        convergence_order_p: metrics::convergence_order(&rep.trace.r).unwrap_or(f64::NAN),
    }
}

fn trace_csv(rep: &SolveReport, seed: u64) -> String {
    format!("# seed={seed}\n{}", rep.trace.to_csv())
}

fn run_header(cfg: &Config, prep: &Prepared, parameter: f64, placement: Placement) -> String {
    let p = &prep.problem;
    let mut s = String::new();
    let _ = writeln!(s, "seed = {}", cfg.seed);
    let _ = writeln!(s, "N = {}", p.n());
    let _ = writeln!(s, "N_lambda = {}", p.n_lambda());
    let _ = writeln!(s, "update = {}", cfg.solver.method.name());
    let _ = writeln!(s, "parameter = {parameter:e}");
    let _ = writeln!(s, "accel = {}", cfg.solver.accel.name());
    let _ = writeln!(s, "placement = {}", placement.name());
    let _ = writeln!(s, "tol = {:e}", cfg.solver.tol);
    let _ = writeln!(s, "max_iter = {}", cfg.solver.max_iter);
    s
}

fn hertz_text(p: &ContactProblem, lambda: &[f64]) -> Option<String> {
    if p.meta.get("generator").map(String::as_str) != Some("hertz") {
        return None;
    }
    let g = HertzGeometry::from_meta(&p.meta).ok()?;
    let f = g.resultant(lambda);
    if !(f > 0.0) {
        return Some("resultant = 0e0\n".into());
    }
    let an = g.analytic(lambda);
    let p_max = g.max_pressure(lambda);
    let a = g.contact_radius(lambda);
    let mut s = String::new();
    let _ = writeln!(s, "resultant = {f:e}");
    let _ = writeln!(s, "p_max = {p_max:e}");
    let _ = writeln!(s, "p_max_analytic = {:e}", an.p_max);
    let _ = writeln!(s, "p_max_error = {:e}", (p_max - an.p_max).abs() / an.p_max);
    let _ = writeln!(s, "contact_radius = {a:e}");
    let _ = writeln!(s, "contact_radius_analytic = {:e}", an.a);
    let _ = writeln!(s, "contact_radius_error = {:e}", (a - an.a).abs() / an.a);
    Some(s)
}

/// Run one solve and write `summary.txt`, `trace.csv`, `lambda.vec`, `u.vec`
/// and, when an oracle is configured, `accuracy.txt`.
pub fn solve(cfg: &Config, out: &Path) -> Result<i32, CliError> {
    let prep = Prepared::new(cfg)?;
    let s = &cfg.solver;
    let parameter = prep.absolute(s.unit, s.parameter)?;
    let sc = s.config(s.method, parameter, s.accel, s.placement);
    let mut rep = run_with_factorization(&prep.problem, &sc, &prep.fact).map_err(|e| CliError::Solve(e.to_string()))?;
    rep.factorization_s = prep.factorization_s;

    let mut summary = run_header(cfg, &prep, parameter, sc.placement);
    summary.push_str(&rep.summary());
    if let (Some(star), 1) = (prep.problem.meta.get("lambda_star"), prep.problem.n_lambda()) {
        if let Ok(star) = star.parse::<f64>() {
            let _ = writeln!(summary, "lambda_star = {star:e}");
            let _ = writeln!(summary, "lambda_star_error = {:e}", (rep.lambda[0] - star).abs());
        }
    }
    write_file(&out.join("summary.txt"), &summary)?;
    if cfg.write_trace {
        write_file(&out.join("trace.csv"), trace_csv(&rep, cfg.seed))?;
    }
    write_file(&out.join("lambda.vec"), mtx::format_vec(&rep.lambda))?;
    write_file(&out.join("u.vec"), mtx::format_vec(&rep.u))?;
    let refs = prep.reference(cfg.oracle, cfg.max_outer)?;
    if let Some((name, r)) = refs.first() {
        let acc = accuracy(&rep, Some(r));
        write_file(&out.join("accuracy.txt"), format!("seed = {}\noracle = {name}\n{}", cfg.seed, acc.to_key_value()))?;
    }
    if let Some(h) = hertz_text(&prep.problem, &rep.lambda) {
        write_file(&out.join("hertz.txt"), h)?;
    }
    print!("{summary}");
    Ok(status_code(rep.status))
}

/// Compare the configured solver against the oracles; exit 1 when a threshold is exceeded.
pub fn validate(cfg: &Config, out: &Path) -> Result<i32, CliError> {
    let prep = Prepared::new(cfg)?;
    let kind = match cfg.oracle {
        OracleKind::None => {
            if prep.problem.n_lambda() <= BRUTE_FORCE_LIMIT {
                OracleKind::Both
            } else {
                OracleKind::ActiveSet
            }
        }
        k => k,
    };
    let s = &cfg.solver;
    let parameter = prep.absolute(s.unit, s.parameter)?;
    let sc = s.config(s.method, parameter, s.accel, s.placement);
    let rep = run_with_factorization(&prep.problem, &sc, &prep.fact).map_err(|e| CliError::Solve(e.to_string()))?;
    let refs = prep.reference(kind, cfg.max_outer)?;

    let mut text = run_header(cfg, &prep, parameter, sc.placement);
    let _ = writeln!(text, "status = {}", rep.status.name());
    let _ = writeln!(text, "iterations = {}", rep.iterations);
    let _ = writeln!(text, "e_force_max = {:e}", cfg.e_force_max);
    let _ = writeln!(text, "e_disp_max = {:e}", cfg.e_disp_max);
    let mut pass = true;
    for (name, r) in &refs {
        let acc = accuracy(&rep, Some(r));
        let ok = acc.e_force <= cfg.e_force_max && acc.e_disp <= cfg.e_disp_max;
        pass &= ok;
        let _ = writeln!(text, "{name}.e_force = {:e}", acc.e_force);
        let _ = writeln!(text, "{name}.e_disp = {:e}", acc.e_disp);
        let _ = writeln!(text, "{name}.pass = {ok}");
    }
    let _ = writeln!(text, "pass = {pass}");
    write_file(&out.join("validate.txt"), &text)?;
    print!("{text}");
    Ok(if pass { exit::CONVERGED } else { exit::THRESHOLD })
}

pub fn gen(cfg: &Config, out: &Path) -> Result<i32, CliError> {
    let p = cfg.problem.build(cfg.seed).map_err(CliError::Input)?;
    p.write_bundle(out).map_err(|e| CliError::Solve(format!("{}: {e}", out.display())))?;
    println!("wrote {} (N = {}, N_lambda = {})", out.display(), p.n(), p.n_lambda());
    Ok(exit::CONVERGED)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridPoint {
    pub method: Method,
    pub parameter: f64,
    pub accel: AccelKind,
    pub placement: Placement,
}

/// Grid in nesting order method, parameter, accel, placement, duplicates dropped.
pub fn sweep_grid(cfg: &Config) -> Result<(Vec<GridPoint>, usize), CliError> {
    let sw = cfg
        .sweep
        .as_ref()
        .ok_or_else(|| CliError::Input(format!("{}: no [sweep] section", cfg.path.display())))?;
    let mut seen = HashSet::new();
    let mut grid = Vec::new();
    let mut dups = 0;
    for &method in &sw.methods {
        for &parameter in &sw.parameters {
            for &accel in &sw.accels {
                for &placement in &sw.placements {
                    let placement = placement.unwrap_or(accel.default_placement());
                    if seen.insert((method, parameter.to_bits(), accel, placement)) {
                        grid.push(GridPoint {
                            method,
                            parameter,
                            accel,
                            placement,
                        });
                    } else {
                        dups += 1;
                    }
                }
            }
        }
    }
    if grid.is_empty() {
        return Err(CliError::Config(crate::ConfigError {
            path: cfg.path.clone(),
            line: sw.line,
            msg: "sweep grid is empty".into(),
        }));
    }
    Ok((grid, dups))
}

pub const SWEEP_HEADER: &str =
    "row,method,accel,placement,parameter,status,iterations,e_force,e_disp,effective_gap,complementarity,final_r,elapsed_s";

struct Row {
    line: String,
    trace: Option<(String, String)>,
}

/// Run every grid point and write `sweep.csv` in grid order.
pub fn sweep(cfg: &Config, out: &Path, jobs: Option<usize>) -> Result<i32, CliError> {
    let (grid, dups) = sweep_grid(cfg)?;
    if dups > 0 {
        eprintln!("warning: {dups} duplicate grid point(s) dropped");
    }
    let jobs = jobs.unwrap_or(cfg.sweep.as_ref().map_or(1, |s| s.jobs)).max(1);
    let prep = Prepared::new(cfg)?;
    let unit = cfg.solver.unit;
    if unit == ParameterUnit::Bound {
        prep.uzawa_bound()?;
    }
    let refs = prep.reference(cfg.oracle, cfg.max_outer)?;
    let reference = refs.first().map(|(_, r)| r);

    let run = |(i, g): (usize, &GridPoint)| -> Result<Row, CliError> {
        let parameter = prep.absolute(unit, g.parameter)?;
        let sc = cfg.solver.config(g.method, parameter, g.accel, Some(g.placement));
        let (status, rep) = match run_with_factorization(&prep.problem, &sc, &prep.fact) {
            Ok(rep) => (rep.status.name(), Some(rep)),
            Err(_) => ("error", None),
        };
        let mut line = format!("{},{},{},{},{parameter:e},{status}", i + 1, g.method.name(), g.accel.name(), g.placement.name());
        let mut trace = None;
        match rep {
            Some(rep) => {
                let acc = accuracy(&rep, reference);
                let _ = write!(
                    line,
                    ",{},{:e},{:e},{:e},{:e},{:e},{:e}",
                    rep.iterations,
                    acc.e_force,
                    acc.e_disp,
                    acc.effective_gap_max,
                    acc.complementarity_max,
                    rep.final_residual(),
                    rep.trace.elapsed_s.last().copied().unwrap_or(0.0)
                );
                if cfg.write_sweep_traces {
                    let name = format!(
                        "row{:03}_{}_{}_{}_{parameter:e}.csv",
                        i + 1,
                        g.method.name(),
                        g.accel.name(),
                        g.placement.name()
                    );
                    trace = Some((name, trace_csv(&rep, cfg.seed)));
                }
            }
            None => line.push_str(",0,NaN,NaN,NaN,NaN,NaN,0e0"),
        }
        Ok(Row { line, trace })
    };

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| CliError::Solve(e.to_string()))?;
    let rows: Vec<Result<Row, CliError>> = pool.install(|| grid.par_iter().enumerate().map(run).collect());

    let mut text = String::new();
    let _ = writeln!(text, "# seed={}", cfg.seed);
    if jobs > 1 {
        let _ = writeln!(text, "# elapsed_s non-deterministic (jobs={jobs})");
    }
    let _ = writeln!(text, "{SWEEP_HEADER}");
    let mut converged = 0;
    for r in rows {
        let r = r?;
        if r.line.split(',').nth(5) == Some("converged") {
            converged += 1;
        }
        let _ = writeln!(text, "{}", r.line);
        if let Some((name, csv)) = r.trace {
            write_file(&out.join("traces").join(name), csv)?;
        }
    }
    write_file(&out.join("sweep.csv"), &text)?;
    println!("{} rows ({converged} converged) -> {}", grid.len(), out.join("sweep.csv").display());
    Ok(exit::CONVERGED)
}
