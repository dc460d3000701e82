//! Typed view of a run configuration. See `docs/config.md` for the format.

use std::path::{Path, PathBuf};

use contact_split::accel::{AccelKind, Placement};
use contact_split::driver::SolverConfig;
use contact_split::fem::Material;
use contact_split::linalg::{SparseRect, SparseSym};
use contact_split::problem::ContactProblem;
use contact_split::problems::{gen_hertz, gen_multibody, gen_spring_chain, HertzParams, MultibodyParams};
use contact_split::updates::UpdateKind;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::ini::{ConfigError, Ini};

pub const DEFAULT_SEED: u64 = 42;

const SCHEMA: &[(&str, &[&str])] = &[
    ("run", &["seed"]),
    (
        "problem",
        &[
            "bundle", "generator", "n", "n_lambda", "k", "f", "d", "dim", "refinement", "radius", "u_d", "g_min",
            "scale", "n_bodies", "e_lower", "nu_lower", "e_upper", "nu_upper",
        ],
    ),
    (
        "solver",
        &[
            "update", "parameter", "parameter_unit", "accel", "placement", "tol", "max_iter", "minit_accel",
            "compliance", "divergence_factor", "divergence_window",
        ],
    ),
    ("oracle", &["kind", "max_outer"]),
    ("validate", &["e_force_max", "e_disp_max"]),
    ("sweep", &["update", "parameter", "accel", "placement", "jobs"]),
    ("output", &["dir", "trace", "traces"]),
];

#[derive(Debug, Clone, PartialEq)]
pub enum ProblemSource {
    Bundle(PathBuf),
    SpringChain { n: usize, k: f64, f: f64, d: f64 },
    Hertz(HertzParams),
    Multibody(MultibodyParams),
    /// Dense random instance drawn from the run seed.
    Random { n: usize, n_lambda: usize },
}

impl ProblemSource {
    pub fn build(&self, seed: u64) -> Result<ContactProblem, String> {
        let r = match self {
            ProblemSource::Bundle(dir) => ContactProblem::read_bundle(dir).map_err(|e| format!("{}: {e}", dir.display()))?,
            ProblemSource::SpringChain { n, k, f, d } => gen_spring_chain(*n, *k, *f, *d).map_err(|e| e.to_string())?,
            ProblemSource::Hertz(p) => gen_hertz(p).map_err(|e| e.to_string())?.problem,
            ProblemSource::Multibody(p) => gen_multibody(p).map_err(|e| e.to_string())?.problem,
            ProblemSource::Random { n, n_lambda } => random_problem(*n, *n_lambda, seed).map_err(|e| e.to_string())?,
        };
        Ok(r)
    }
}

/// `K = A A^T + n I`, dense `B`, gaps straddling zero so a few pairs close.
pub fn random_problem(n: usize, n_lambda: usize, seed: u64) -> contact_split::Result<ContactProblem> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a: Vec<Vec<f64>> = (0..n).map(|_| (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
    let mut trip = Vec::new();
    for i in 0..n {
        for j in 0..=i {
            let mut v: f64 = (0..n).map(|k| a[i][k] * a[j][k]).sum();
            if i == j {
                v += n as f64;
            }
            trip.push((i, j, v));
        }
    }
    let k = SparseSym::from_lower_triplets(n, trip)?;
    let b: Vec<Vec<f64>> = (0..n_lambda).map(|_| (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
    let b = SparseRect::from_dense(&b)?;
    let d = (0..n_lambda).map(|_| rng.random_range(-0.5..0.5)).collect();
    let f = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let mut p = ContactProblem::new(k, b, d, f)?.with_description(format!("random dense instance, seed {seed}"));
    p.meta.insert("generator".into(), "random".into());
    p.meta.insert("seed".into(), seed.to_string());
    Ok(p)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParameterUnit {
    Absolute,
    /// Multiple of the sufficient Uzawa bound `2 mu_min(K) / ||B||`.
    Bound,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OracleKind {
    None,
    ActiveSet,
    BruteForce,
    Both,
}

impl OracleKind {
    fn parse(s: &str) -> Option<Self> {
        Some(match s.to_ascii_lowercase().as_str() {
            "none" => OracleKind::None,
            "active-set" | "active_set" => OracleKind::ActiveSet,
            "brute-force" | "brute_force" => OracleKind::BruteForce,
            "both" => OracleKind::Both,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Uzawa,
    Penalty,
}

impl Method {
    fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "uzawa" => Some(Method::Uzawa),
            "penalty" => Some(Method::Penalty),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Method::Uzawa => "uzawa",
            Method::Penalty => "penalty",
        }
    }

    pub fn update(self, value: f64) -> UpdateKind {
        match self {
            Method::Uzawa => UpdateKind::Uzawa { rho: value },
            Method::Penalty => UpdateKind::PenaltySplit { k_n: value },
        }
    }
}

/// Settings shared by every run of a config; the grid varies the rest.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverSpec {
    pub method: Method,
    pub parameter: f64,
    pub unit: ParameterUnit,
    pub accel: AccelKind,
    /// `None` keeps the scheme's default placement.
    pub placement: Option<Placement>,
    pub tol: f64,
    pub max_iter: usize,
    pub minit_accel: usize,
    pub compliance: f64,
    pub divergence_factor: f64,
    pub divergence_window: usize,
}

impl SolverSpec {
    /// Config for one run; `parameter` is already converted to an absolute value.
    pub fn config(&self, method: Method, parameter: f64, accel: AccelKind, placement: Option<Placement>) -> SolverConfig {
        let mut c = SolverConfig::new(method.update(parameter), accel);
        if let Some(pl) = placement {
            c.placement = pl;
        }
        c.tol = self.tol;
        c.max_iter = self.max_iter;
        c.minit_accel = self.minit_accel;
        c.compliance = self.compliance;
        c.divergence_factor = self.divergence_factor;
        c.divergence_window = self.divergence_window;
        c
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub methods: Vec<Method>,
    pub parameters: Vec<f64>,
    pub accels: Vec<AccelKind>,
    pub placements: Vec<Option<Placement>>,
    pub jobs: usize,
    /// Line of the `[sweep]` header, for diagnostics.
    pub line: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub path: PathBuf,
    pub seed: u64,
    pub problem: ProblemSource,
    pub solver: SolverSpec,
    pub oracle: OracleKind,
    pub max_outer: usize,
    pub e_force_max: f64,
    pub e_disp_max: f64,
    pub sweep: Option<SweepSpec>,
    pub out_dir: PathBuf,
    pub write_trace: bool,
    pub write_sweep_traces: bool,
}

fn resolve(base: &Path, p: &str) -> PathBuf {
    let p = Path::new(p);
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

fn parse_list<T>(ini: &Ini, section: &str, key: &str, f: impl Fn(&str) -> Option<T>) -> Result<Option<Vec<T>>, ConfigError> {
    let Some((items, line)) = ini.list(section, key) else {
        return Ok(None);
    };
    let mut out = Vec::with_capacity(items.len());
    for it in items {
        out.push(f(&it).ok_or_else(|| ini.error(line, format!("{section}.{key}: cannot parse '{it}'")))?);
    }
    Ok(Some(out))
}

fn parse_placement(s: &str) -> Option<Option<Placement>> {
    if s.eq_ignore_ascii_case("default") {
        Some(None)
    } else {
        Placement::parse(s).map(Some)
    }
}

fn positive(ini: &Ini, section: &str, key: &str, v: f64) -> Result<f64, ConfigError> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        let line = ini.get(section, key).map_or(0, |v| v.line);
        Err(ini.error(line, format!("{section}.{key} must be positive and finite, got {v}")))
    }
}

impl Config {
    pub fn load(path: &Path, seed_override: Option<u64>) -> Result<Self, ConfigError> {
        let ini = Ini::read(path)?;
        Self::from_ini(&ini, seed_override)
    }

    pub fn from_ini(ini: &Ini, seed_override: Option<u64>) -> Result<Self, ConfigError> {
        ini.check_schema(SCHEMA)?;
        let base = ini.path.parent().map(Path::to_path_buf).unwrap_or_default();
        let seed = match seed_override {
            Some(s) => s,
            None => ini.parsed_or("run", "seed", DEFAULT_SEED)?,
        };
        let problem = Self::problem(ini, &base)?;

        let method = match ini.get("solver", "update") {
            None => Method::Uzawa,
            Some(v) => Method::parse(&v.text).ok_or_else(|| ini.error(v.line, format!("unknown update '{}' (uzawa, penalty)", v.text)))?,
        };
        let unit = match ini.get("solver", "parameter_unit") {
            None => ParameterUnit::Absolute,
            Some(v) => match v.text.to_ascii_lowercase().as_str() {
                "absolute" => ParameterUnit::Absolute,
                "bound" => ParameterUnit::Bound,
                _ => return Err(ini.error(v.line, format!("unknown parameter_unit '{}' (absolute, bound)", v.text))),
            },
        };
        let accel = match ini.get("solver", "accel") {
            None => AccelKind::None,
            Some(v) => AccelKind::parse(&v.text).ok_or_else(|| ini.error(v.line, format!("unknown accel '{}'", v.text)))?,
        };
        let placement = match ini.get("solver", "placement") {
            None => None,
            Some(v) => parse_placement(&v.text).ok_or_else(|| ini.error(v.line, format!("unknown placement '{}'", v.text)))?,
        };
        let tol: f64 = ini.parsed_or("solver", "tol", 1e-12)?;
        if !(tol >= 0.0) {
            let line = ini.get("solver", "tol").map_or(0, |v| v.line);
            return Err(ini.error(line, "solver.tol must be non-negative"));
        }
        let max_iter: usize = ini.parsed_or("solver", "max_iter", 5000)?;
        if max_iter == 0 {
            let line = ini.get("solver", "max_iter").map_or(0, |v| v.line);
            return Err(ini.error(line, "solver.max_iter must be at least 1"));
        }
        let compliance: f64 = ini.parsed_or("solver", "compliance", 0.0)?;
        let divergence_factor: f64 = ini.parsed_or("solver", "divergence_factor", 1e8)?;
        let solver = SolverSpec {
            method,
            parameter: positive(ini, "solver", "parameter", ini.parsed_or("solver", "parameter", 1.0)?)?,
            unit,
            accel,
            placement,
            tol,
            max_iter,
            minit_accel: ini.parsed_or("solver", "minit_accel", 2)?,
            compliance,
            divergence_factor: positive(ini, "solver", "divergence_factor", divergence_factor)?,
            divergence_window: ini.parsed_or("solver", "divergence_window", 10)?,
        };
        let probe = solver.config(method, 1.0, accel, placement);
        probe.check().map_err(|e| ini.error(ini.section("solver").map_or(0, |s| s.line), e.to_string()))?;

        let oracle = match ini.get("oracle", "kind") {
            None => OracleKind::ActiveSet,
            Some(v) => OracleKind::parse(&v.text).ok_or_else(|| ini.error(v.line, format!("unknown oracle '{}' (none, active-set, brute-force, both)", v.text)))?,
        };

        let sweep = match ini.section("sweep") {
            None => None,
            Some(sec) => {
                let methods = parse_list(ini, "sweep", "update", Method::parse)?.unwrap_or_else(|| vec![method]);
                let parameters = parse_list(ini, "sweep", "parameter", |s| s.parse::<f64>().ok().filter(|v| *v > 0.0 && v.is_finite()))?
                    .unwrap_or_else(|| vec![solver.parameter]);
                let accels = parse_list(ini, "sweep", "accel", AccelKind::parse)?.unwrap_or_else(|| vec![accel]);
                let placements = parse_list(ini, "sweep", "placement", parse_placement)?.unwrap_or_else(|| vec![placement]);
                let jobs: usize = ini.parsed_or("sweep", "jobs", 1)?;
                if jobs == 0 {
                    let line = ini.get("sweep", "jobs").map_or(sec.line, |v| v.line);
                    return Err(ini.error(line, "sweep.jobs must be at least 1"));
                }
                Some(SweepSpec {
                    methods,
                    parameters,
                    accels,
                    placements,
                    jobs,
                    line: sec.line,
                })
            }
        };

        let out_dir = match ini.get("output", "dir") {
            Some(v) => resolve(&base, &v.text),
            None => base.join("out"),
        };
        Ok(Self {
            path: ini.path.clone(),
            seed,
            problem,
            solver,
            oracle,
            max_outer: ini.parsed_or("oracle", "max_outer", 1000)?,
            e_force_max: ini.parsed_or("validate", "e_force_max", 1e-8)?,
            e_disp_max: ini.parsed_or("validate", "e_disp_max", 1e-8)?,
            sweep,
            out_dir,
            write_trace: ini.parsed_or("output", "trace", true)?,
            write_sweep_traces: ini.parsed_or("output", "traces", false)?,
        })
    }

    fn problem(ini: &Ini, base: &Path) -> Result<ProblemSource, ConfigError> {
        let sec_line = ini.section("problem").map_or(0, |s| s.line);
        let bundle = ini.get("problem", "bundle");
        let generator = ini.get("problem", "generator");
        let (gen, line) = match (bundle, generator) {
            (Some(b), None) => return Ok(ProblemSource::Bundle(resolve(base, &b.text))),
            (Some(_), Some(g)) => return Err(ini.error(g.line, "problem.bundle and problem.generator are exclusive")),
            (None, None) => return Err(ini.error(sec_line, "[problem] needs either bundle or generator")),
            (None, Some(g)) => (g.text.to_ascii_lowercase(), g.line),
        };
        let f = |key: &str, default: f64| ini.parsed_or("problem", key, default);
        let u = |key: &str, default: usize| ini.parsed_or("problem", key, default);
        let src = match gen.as_str() {
            "spring-chain" | "spring_chain" => ProblemSource::SpringChain {
                n: u("n", 1)?,
                k: positive(ini, "problem", "k", f("k", 1.0)?)?,
                f: f("f", 1.0)?,
                d: f("d", 0.0)?,
            },
            "hertz" => {
                let mut p = HertzParams::new(u("dim", 2)?, u("refinement", 16)?);
                p.radius = positive(ini, "problem", "radius", f("radius", p.radius)?)?;
                p.u_d = f("u_d", p.u_d)?;
                p.g_min = f("g_min", p.g_min)?;
                p.scale = u("scale", p.scale)?;
                p.lower = Material {
                    e: f("e_lower", p.lower.e)?,
                    nu: f("nu_lower", p.lower.nu)?,
                };
                p.upper = Material {
                    e: f("e_upper", p.upper.e)?,
                    nu: f("nu_upper", p.upper.nu)?,
                };
                p.check().map_err(|e| ini.error(line, e.to_string()))?;
                ProblemSource::Hertz(p)
            }
            "multibody" => {
                let mut p = MultibodyParams::new(u("dim", 2)?, u("n_bodies", 3)?);
                p.refinement = u("refinement", p.refinement)?;
                p.radius = positive(ini, "problem", "radius", f("radius", p.radius)?)?;
                p.u_d = f("u_d", p.u_d)?;
                p.g_min = f("g_min", p.g_min)?;
                p.scale = u("scale", p.scale)?;
                ProblemSource::Multibody(p)
            }
            "random" => {
                let n = u("n", 8)?;
                let n_lambda = u("n_lambda", 4)?;
                if n == 0 || n_lambda == 0 || n_lambda > n {
                    return Err(ini.error(line, "random problems need 1 <= n_lambda <= n"));
                }
                ProblemSource::Random { n, n_lambda }
            }
            other => {
                return Err(ini.error(line, format!("unknown generator '{other}' (spring-chain, hertz, multibody, random)")))
            }
        };
        Ok(src)
    }
}
