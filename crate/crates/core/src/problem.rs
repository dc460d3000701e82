//! The discrete contact problem
//!
//! ```text
//! K U + B^T lambda = F_ext
//! B U <= D,  lambda >= 0,  lambda . (B U - D) = 0
//! ```
//!
//! `K` is the stiffness of all bodies (free DOFs only), `B` the pairing
//! matrix with one row per contact pair and `D` the initial gaps. A positive
//! `(B U - D)_j` is a penetration.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{check_len, Error, Result};
use crate::linalg::{self, mtx, norm2, norm_inf, Factorization, Ordering, SparseRect, SparseSym};

#[derive(Debug, Clone, PartialEq)]
pub struct ContactProblem {
    pub k: SparseSym,
    pub b: SparseRect,
    pub d: Vec<f64>,
    pub f_ext: Vec<f64>,
    pub labels: Option<Vec<String>>,
    pub description: String,
    /// Position of every unknown, used for nested-dissection ordering.
    pub dof_coords: Option<Vec<[f64; 3]>>,
    /// Free-form key/value metadata carried through bundles.
    pub meta: BTreeMap<String, String>,
}

impl ContactProblem {
    pub fn new(k: SparseSym, b: SparseRect, d: Vec<f64>, f_ext: Vec<f64>) -> Result<Self> {
        let n = k.n();
        check_len("B columns", n, b.ncols())?;
        check_len("D length", b.nrows(), d.len())?;
        check_len("F_ext length", n, f_ext.len())?;
        Ok(Self {
            k,
            b,
            d,
            f_ext,
            labels: None,
            description: String::new(),
            dof_coords: None,
            meta: BTreeMap::new(),
        })
    }

    pub fn with_description(mut self, description: impl Into<String>) -> Self {
        self.description = description.into();
        self
    }

    pub fn n(&self) -> usize {
        self.k.n()
    }

    pub fn n_lambda(&self) -> usize {
        self.b.nrows()
    }

    pub fn ordering(&self) -> Ordering {
        match &self.dof_coords {
            Some(c) if c.len() == self.n() => Ordering::NestedDissection(c.clone()),
            _ => Ordering::ReverseCuthillMcKee,
        }
    }

    pub fn factorize(&self) -> Result<Factorization> {
        linalg::factorize_with(&self.k, &self.ordering())
    }

    /// `B U - D`
    pub fn gap(&self, u: &[f64]) -> Result<Vec<f64>> {
        let mut g = self.b.mul_vec(u)?;
        for (gj, dj) in g.iter_mut().zip(&self.d) {
            *gj -= dj;
        }
        Ok(g)
    }

    /// Contact forces acting on the structure, `F_C = -B^T lambda`.
    pub fn contact_forces(&self, lambda: &[f64]) -> Result<Vec<f64>> {
        Ok(self
            .b
            .mul_vec_transpose(lambda)?
            .into_iter()
            .map(|v| -v)
            .collect())
    }

    /// Lists every violated invariant; an empty report means well-posed.
    pub fn validate(&self) -> ValidationReport {
        let mut report = ValidationReport::default();
        let n = self.n();
        if self.b.ncols() != n {
            report.issues.push(Issue::Dimension(format!("B has {} columns, K is {n}x{n}", self.b.ncols())));
        }
        if self.d.len() != self.b.nrows() {
            report.issues.push(Issue::Dimension(format!(
                "D has {} entries, B has {} rows",
                self.d.len(),
                self.b.nrows()
            )));
        }
        if self.f_ext.len() != n {
            report.issues.push(Issue::Dimension(format!("F_ext has {} entries, K is {n}x{n}", self.f_ext.len())));
        }
        for j in 0..self.b.nrows() {
            if self.b.row_nnz(j) == 0 {
                report.issues.push(Issue::ZeroRow(j));
            }
        }
        let finite = |v: &[f64]| v.iter().all(|x| x.is_finite());
        if !finite(self.k.values()) {
            report.issues.push(Issue::NonFinite("K"));
        }
        if !finite(&self.d) {
            report.issues.push(Issue::NonFinite("D"));
        }
        if !finite(&self.f_ext) {
            report.issues.push(Issue::NonFinite("F_ext"));
        }
        let overlaps = self.d.iter().filter(|&&x| x < 0.0).count();
        if overlaps > 0 {
            report
                .warnings
                .push(format!("{overlaps} pair(s) start with an initial overlap (negative D)"));
        }
        if report.issues.is_empty() {
            if let Err(e) = self.factorize() {
                report.issues.push(Issue::Factorization(e.to_string()));
            }
        }
        report
    }

    pub fn residual_kkt(&self, u: &[f64], lambda: &[f64]) -> Result<KktResidual> {
        check_len("U", self.n(), u.len())?;
        check_len("lambda", self.n_lambda(), lambda.len())?;
        let mut r = self.k.mul_vec(u)?;
        let bt = self.b.mul_vec_transpose(lambda)?;
        for ((ri, bi), fi) in r.iter_mut().zip(&bt).zip(&self.f_ext) {
            *ri += bi - fi;
        }
        let fnorm = norm2(&self.f_ext);
        let equilibrium = norm2(&r) / if fnorm > 0.0 { fnorm } else { 1.0 };
        let bu = self.b.mul_vec(u)?;
        let gap: Vec<f64> = bu.iter().zip(&self.d).map(|(a, b)| a - b).collect();
        let penetration_max = gap.iter().fold(0.0_f64, |m, &g| m.max(g));
        let negativity_max = lambda.iter().fold(0.0_f64, |m, &l| m.max(-l));
        let complementarity_max = lambda
            .iter()
            .zip(&gap)
            .fold(0.0_f64, |m, (l, g)| m.max((l * g).abs()));
        Ok(KktResidual {
            equilibrium,
            penetration_max,
            negativity_max,
            complementarity_max,
            gap_scale: norm_inf(&self.d).max(norm_inf(&bu)),
        })
    }

    /// Write the bundle directory (`K.mtx`, `B.mtx`, `D.vec`, `F.vec`, `meta.txt`).
    pub fn write_bundle(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        mtx::write_sym(&dir.join("K.mtx"), &self.k)?;
        mtx::write_rect(&dir.join("B.mtx"), &self.b)?;
        mtx::write_vec(&dir.join("D.vec"), &self.d)?;
        mtx::write_vec(&dir.join("F.vec"), &self.f_ext)?;
        let mut meta = String::new();
        let _ = writeln!(meta, "N = {}", self.n());
        let _ = writeln!(meta, "N_lambda = {}", self.n_lambda());
        let _ = writeln!(meta, "description = {}", self.description.replace('\n', " "));
        for (k, v) in &self.meta {
            let _ = writeln!(meta, "{k} = {v}");
        }
        fs::write(dir.join("meta.txt"), meta)?;
        if let Some(labels) = &self.labels {
            fs::write(dir.join("labels.txt"), labels.join("\n") + "\n")?;
        }
        if let Some(coords) = &self.dof_coords {
            let mut s = String::new();
            for c in coords {
                let _ = writeln!(s, "{:e} {:e} {:e}", c[0], c[1], c[2]);
            }
            fs::write(dir.join("coords.txt"), s)?;
        }
        Ok(())
    }

    pub fn read_bundle(dir: &Path) -> Result<Self> {
        let k = mtx::read_sym(&dir.join("K.mtx"))?;
        let b = mtx::read_rect(&dir.join("B.mtx"))?;
        let d = mtx::read_vec(&dir.join("D.vec"))?;
        let f = mtx::read_vec(&dir.join("F.vec"))?;
        let mut p = Self::new(k, b, d, f)?;
        let meta_path = dir.join("meta.txt");
        let text = fs::read_to_string(&meta_path)?;
        for (i, line) in text.lines().enumerate() {
            let t = line.trim();
            if t.is_empty() || t.starts_with('#') {
                continue;
            }
            let (key, value) = t.split_once('=').ok_or_else(|| Error::Parse {
                path: meta_path.clone(),
                line: i + 1,
                msg: "expected 'key = value'".into(),
            })?;
            let (key, value) = (key.trim(), value.trim());
            let count = |expected: usize| -> Result<()> {
                match value.parse::<usize>() {
                    Ok(v) if v == expected => Ok(()),
                    _ => Err(Error::Parse {
                        path: meta_path.clone(),
                        line: i + 1,
                        msg: format!("{key} = {value} disagrees with the matrices ({expected})"),
                    }),
                }
            };
            match key {
                "N" => count(p.n())?,
                "N_lambda" => count(p.n_lambda())?,
                "description" => p.description = value.to_string(),
                _ => {
                    p.meta.insert(key.to_string(), value.to_string());
                }
            }
        }
        let labels = dir.join("labels.txt");
        if labels.exists() {
            p.labels = Some(fs::read_to_string(labels)?.lines().map(str::to_string).collect());
        }
        let coords = dir.join("coords.txt");
        if coords.exists() {
            let text = fs::read_to_string(&coords)?;
            let mut out = Vec::new();
            for (i, line) in text.lines().enumerate() {
                let v: std::result::Result<Vec<f64>, _> = line.split_whitespace().map(str::parse).collect();
                match v {
                    Ok(v) if v.len() == 3 => out.push([v[0], v[1], v[2]]),
                    _ => {
                        return Err(Error::Parse {
                            path: coords.clone(),
                            line: i + 1,
                            msg: "expected three coordinates".into(),
                        })
                    }
                }
            }
            p.dof_coords = Some(out);
        }
        Ok(p)
    }
}

/// One violated invariant of a [`ContactProblem`].
#[derive(Debug, Clone, PartialEq)]
pub enum Issue {
    Dimension(String),
    /// Contact row referencing no degree of freedom.
    ZeroRow(usize),
    NonFinite(&'static str),
    /// `K` could not be factorized (typically an unconstrained body).
    Factorization(String),
}

impl std::fmt::Display for Issue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Issue::Dimension(s) => write!(f, "dimension: {s}"),
            Issue::ZeroRow(j) => write!(f, "row {j} of B is empty"),
            Issue::NonFinite(what) => write!(f, "{what} has non-finite entries"),
            Issue::Factorization(s) => write!(f, "K is not factorizable: {s}"),
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct ValidationReport {
    pub issues: Vec<Issue>,
    pub warnings: Vec<String>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.issues.is_empty()
    }
}

/// Violation of each of the contact optimality conditions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KktResidual {
    /// `||K U + B^T lambda - F_ext|| / ||F_ext||`
    pub equilibrium: f64,
    pub penetration_max: f64,
    pub negativity_max: f64,
    pub complementarity_max: f64,
    /// `max(||D||_inf, ||B U||_inf)`, the length scale for penetration.
    pub gap_scale: f64,
}

impl KktResidual {
    pub fn penetration_scaled(&self) -> f64 {
        if self.gap_scale > 0.0 {
            self.penetration_max / self.gap_scale
        } else {
            self.penetration_max
        }
    }
}
