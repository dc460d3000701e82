//! Test-problem generators: spring chains, Hertz-type indentation and rows of blocks.

use std::collections::BTreeMap;
use std::ops::Range;

use crate::error::{Error, Result};
use crate::fem::pairing::{contact_matrix, rows_node_to_node, ContactRow};
use crate::fem::{assemble, Dof, DofMap, graded, parabolic_gap_profile, uniform, Body, Material, StructuredMesh};
use crate::linalg::{SparseRect, SparseSym};
use crate::metrics::{hertz_analytic, hertz_line_analytic, HertzSolution};
use crate::problem::ContactProblem;

/// `n` equal springs of stiffness `k` fixed at node 0, load `f` at the tip,
/// tip displacement limited by `d`.
///
/// The tip compliance of the chain is `n / k`, so the closed form is
/// `lambda* = max(0, f - k d / n)` and `u_tip* = min(f n / k, d)`.
pub fn gen_spring_chain(n: usize, k: f64, f: f64, d: f64) -> Result<ContactProblem> {
    if n == 0 || !(k > 0.0) {
        return Err(Error::InvalidInput("spring chain needs n >= 1 and k > 0".into()));
    }
    let mut trip = Vec::new();
    for i in 0..n {
        let diag = if i + 1 == n { k } else { 2.0 * k };
        trip.push((i, i, diag));
        if i > 0 {
            trip.push((i, i - 1, -k));
        }
    }
    let kmat = SparseSym::from_lower_triplets(n, trip)?;
    let b = SparseRect::from_rows(n, &[vec![(n - 1, 1.0)]])?;
    let mut fv = vec![0.0; n];
    fv[n - 1] = f;
    let lambda_star = (f - k * d / n as f64).max(0.0);
    let u_tip = (f * n as f64 / k).min(d);
    let mut p = ContactProblem::new(kmat, b, vec![d], fv)?
        .with_description(format!("spring chain n={n} k={k} f={f} d={d}"));
    p.labels = Some(vec!["tip".into()]);
    let meta = &mut p.meta;
    meta.insert("generator".into(), "spring_chain".into());
    meta.insert("lambda_star".into(), format!("{lambda_star}"));
    meta.insert("u_tip_star".into(), format!("{u_tip}"));
    meta.insert(
        "derivation".into(),
        "tip compliance n/k; free tip u = f n/k; if u > d the tip sits on the obstacle and lambda = f - k d/n".into(),
    );
    Ok(p)
}

/// Parameters of the indentation problem; defaults follow the reference setup.
#[derive(Debug, Clone, PartialEq)]
pub struct HertzParams {
    pub dim: usize,
    /// Elements across the paired zone along each in-plane axis.
    pub refinement: usize,
    /// Indenter radius.
    pub radius: f64,
    /// Flat lower block.
    pub lower: Material,
    /// Upper block carrying the parabolic profile.
    pub upper: Material,
    /// Downward displacement imposed on the top of the upper block.
    pub u_d: f64,
    pub g_min: f64,
    /// In-plane half width of both blocks.
    pub half_width: f64,
    pub lower_thickness: f64,
    pub upper_thickness: f64,
    /// Element growth ratio outside the paired zone.
    pub grading: f64,
    /// Multiplies `refinement`.
    pub scale: usize,
}

impl HertzParams {
    pub fn new(dim: usize, refinement: usize) -> Self {
        Self {
            dim,
            refinement,
            radius: 2e-2,
            lower: Material { e: 2.1e11, nu: 0.3 },
            upper: Material { e: 2.1e9, nu: 0.3 },
            u_d: 3e-4,
            g_min: 0.0,
            half_width: 2.5e-2,
            lower_thickness: 1e-2,
            upper_thickness: 2e-2,
            grading: if dim == 2 { 1.25 } else { 1.4 },
            scale: 1,
        }
    }

    pub fn check(&self) -> Result<()> {
        if self.dim != 2 && self.dim != 3 {
            return Err(Error::InvalidInput(format!("dimension must be 2 or 3, got {}", self.dim)));
        }
        if self.refinement < 4 || self.scale == 0 {
            return Err(Error::InvalidInput("refinement must be at least 4".into()));
        }
        if !(self.radius > 0.0) || !(self.grading >= 1.0) || !(self.u_d >= 0.0) {
            return Err(Error::InvalidInput("radius > 0, grading >= 1 and u_D >= 0 required".into()));
        }
        Ok(())
    }

    /// Side of the paired zone: 1.2 times the widest geometrically possible contact.
    pub fn paired_length(&self) -> f64 {
        let reach = (self.u_d - self.g_min).max(1e-3 * self.radius);
        (1.2 * (2.0 * self.radius * reach).sqrt()).min(0.5 * self.half_width)
    }
}

/// Per-pair geometry of a symmetric indentation model.
#[derive(Debug, Clone, PartialEq)]
pub struct HertzGeometry {
    pub dim: usize,
    pub radius: f64,
    /// 2 for the half model in 2D, 4 for the quarter model in 3D.
    pub symmetry: f64,
    /// In-plane position of each pair.
    pub planar: Vec<[f64; 2]>,
    /// Tributary length (2D) or area (3D) of each pair.
    pub areas: Vec<f64>,
    pub lower: Material,
    pub upper: Material,
}

fn parse_list(meta: &BTreeMap<String, String>, key: &str) -> Result<Vec<f64>> {
    let s = meta
        .get(key)
        .ok_or_else(|| Error::InvalidInput(format!("missing meta key '{key}'")))?;
    s.split_whitespace()
        .map(|t| t.parse::<f64>().map_err(|e| Error::InvalidInput(format!("{key}: {e}"))))
        .collect()
}

fn parse_scalar(meta: &BTreeMap<String, String>, key: &str) -> Result<f64> {
    let v = parse_list(meta, key)?;
    match v.as_slice() {
        [x] => Ok(*x),
        _ => Err(Error::InvalidInput(format!("meta key '{key}' must hold one number"))),
    }
}

fn join(v: impl IntoIterator<Item = f64>) -> String {
    v.into_iter().map(|x| format!("{x}")).collect::<Vec<_>>().join(" ")
}

impl HertzGeometry {
    /// Total normal force of the full (unmirrored) model.
    pub fn resultant(&self, lambda: &[f64]) -> f64 {
        self.symmetry * lambda.iter().sum::<f64>()
    }

    pub fn pressures(&self, lambda: &[f64]) -> Vec<f64> {
        lambda.iter().zip(&self.areas).map(|(l, a)| l / a).collect()
    }

    pub fn max_pressure(&self, lambda: &[f64]) -> f64 {
        self.pressures(lambda).into_iter().fold(0.0, f64::max)
    }

    /// Midpoint between the outermost active pair on the x axis and its outer neighbour.
    pub fn contact_radius(&self, lambda: &[f64]) -> f64 {
        let lmax = lambda.iter().cloned().fold(0.0, f64::max);
        if lmax <= 0.0 {
            return 0.0;
        }
        let mut axis: Vec<(f64, f64)> = self
            .planar
            .iter()
            .zip(lambda)
            .filter(|(p, _)| p[1] == 0.0)
            .map(|(p, &l)| (p[0], l))
            .collect();
        axis.sort_by(|a, b| a.0.total_cmp(&b.0));
        let tol = 1e-8 * lmax;
        match axis.iter().rposition(|&(_, l)| l > tol) {
            Some(i) if i + 1 < axis.len() => 0.5 * (axis[i].0 + axis[i + 1].0),
            Some(i) => axis[i].0,
            None => 0.0,
        }
    }

    /// Analytic solution for the measured resultant.
    pub fn analytic(&self, lambda: &[f64]) -> HertzSolution {
        let f = self.resultant(lambda);
        let (l, u) = (self.lower, self.upper);
        if self.dim == 2 {
            hertz_line_analytic(f, self.radius, l.e, l.nu, u.e, u.nu)
        } else {
            hertz_analytic(f, self.radius, l.e, l.nu, u.e, u.nu)
        }
    }

    pub fn to_meta(&self, meta: &mut BTreeMap<String, String>) {
        meta.insert("dim".into(), self.dim.to_string());
        meta.insert("radius".into(), format!("{}", self.radius));
        meta.insert("symmetry".into(), format!("{}", self.symmetry));
        meta.insert("E_lower".into(), format!("{}", self.lower.e));
        meta.insert("nu_lower".into(), format!("{}", self.lower.nu));
        meta.insert("E_upper".into(), format!("{}", self.upper.e));
        meta.insert("nu_upper".into(), format!("{}", self.upper.nu));
        meta.insert("pair_x".into(), join(self.planar.iter().map(|p| p[0])));
        meta.insert("pair_y".into(), join(self.planar.iter().map(|p| p[1])));
        meta.insert("pair_area".into(), join(self.areas.iter().copied()));
    }

    pub fn from_meta(meta: &BTreeMap<String, String>) -> Result<Self> {
        let xs = parse_list(meta, "pair_x")?;
        let ys = parse_list(meta, "pair_y")?;
        let areas = parse_list(meta, "pair_area")?;
        if xs.len() != ys.len() || xs.len() != areas.len() {
            return Err(Error::InvalidInput("pair geometry lists differ in length".into()));
        }
        let dim = parse_scalar(meta, "dim")?;
        Ok(Self {
            dim: if dim == 3.0 { 3 } else { 2 },
            radius: parse_scalar(meta, "radius")?,
            symmetry: parse_scalar(meta, "symmetry")?,
            planar: xs.into_iter().zip(ys).map(|(x, y)| [x, y]).collect(),
            areas,
            lower: Material::new(parse_scalar(meta, "E_lower")?, parse_scalar(meta, "nu_lower")?)?,
            upper: Material::new(parse_scalar(meta, "E_upper")?, parse_scalar(meta, "nu_upper")?)?,
        })
    }
}

#[derive(Debug, Clone)]
pub struct HertzProblem {
    pub problem: ContactProblem,
    /// Free DOFs of the lower and upper block.
    pub body_dofs: Vec<Range<usize>>,
    pub geometry: HertzGeometry,
    pub params: HertzParams,
}

fn free_ranges(dofs: &DofMap) -> Vec<Range<usize>> {
    let mut out = Vec::new();
    for (b, &start) in dofs.body_offsets.iter().enumerate() {
        let end = dofs.body_offsets.get(b + 1).copied().unwrap_or(dofs.dofs.len());
        let free: Vec<usize> = dofs.dofs[start..end]
            .iter()
            .filter_map(|d| match d {
                Dof::Free(i) => Some(*i),
                Dof::Fixed(_) => None,
            })
            .collect();
        out.push(match (free.first(), free.last()) {
            (Some(&a), Some(&z)) => a..z + 1,
            _ => 0..0,
        });
    }
    out
}

/// Half-lengths of the intervals around each entry of a sorted axis, mirrored at 0.
fn tributary(axis: &[f64], i: usize) -> f64 {
    let left = if i == 0 { axis[0] } else { axis[i - 1] };
    let right = axis.get(i + 1).copied().unwrap_or(axis[i]);
    0.5 * (right - left)
}

/// Two stacked blocks pressed together, with a parabolic initial gap on the interface.
///
/// 2D is a plane-strain half model, 3D a quarter model; symmetry planes carry rollers.
/// The lower block is fixed at its base and the top of the upper block moves down by `u_d`.
/// Pairs are node-to-node on the refined zone around the contact centre.
pub fn gen_hertz(params: &HertzParams) -> Result<HertzProblem> {
    params.check()?;
    let dim = params.dim;
    let nref = params.refinement * params.scale;
    let lc = params.paired_length();
    let h = lc / nref as f64;
    let planar = graded(0.0, lc, nref, params.half_width, params.grading);
    let lower_z: Vec<f64> = graded(0.0, h, 1, params.lower_thickness, params.grading)
        .into_iter()
        .rev()
        .map(|z| -z)
        .collect();
    let upper_z = graded(0.0, h, 1, params.upper_thickness, params.grading);
    let (lower_mesh, upper_mesh) = if dim == 2 {
        (
            StructuredMesh::grid_2d(&planar, &lower_z)?,
            StructuredMesh::grid_2d(&planar, &upper_z)?,
        )
    } else {
        (
            StructuredMesh::grid_3d(&planar, &planar, &lower_z)?,
            StructuredMesh::grid_3d(&planar, &planar, &upper_z)?,
        )
    };
    let vert = dim - 1;
    let (bottom, top) = if dim == 2 { ("ymin", "ymax") } else { ("zmin", "zmax") };
    let mut lower = Body::new(lower_mesh, params.lower);
    let mut upper = Body::new(upper_mesh, params.upper);
    for c in 0..dim {
        lower.fix_set(bottom, c, 0.0)?;
    }
    upper.fix_set(top, vert, -params.u_d)?;
    for body in [&mut lower, &mut upper] {
        body.fix_set("xmin", 0, 0.0)?;
        if dim == 3 {
            body.fix_set("ymin", 1, 0.0)?;
        }
    }
    let in_zone = |x: &[f64; 3]| x[0] <= lc * (1.0 + 1e-12) && (dim == 2 || x[1] <= lc * (1.0 + 1e-12));
    let slaves: Vec<usize> = upper
        .mesh
        .node_set(bottom)?
        .iter()
        .copied()
        .filter(|&n| in_zone(&upper.mesh.coords[n]))
        .collect();
    let masters: Vec<usize> = lower
        .mesh
        .node_set(top)?
        .iter()
        .copied()
        .filter(|&n| in_zone(&lower.mesh.coords[n]))
        .collect();
    let mut normal = [0.0; 3];
    normal[vert] = -1.0;
    let mut rows = rows_node_to_node(&upper.mesh, 1, &slaves, &lower.mesh, 0, &masters, normal)?;
    let pts: Vec<[f64; 2]> = slaves
        .iter()
        .map(|&n| {
            let c = upper.mesh.coords[n];
            [c[0], if dim == 3 { c[1] } else { 0.0 }]
        })
        .collect();
    let gaps = parabolic_gap_profile(params.radius, &pts, params.g_min);
    for (r, g) in rows.iter_mut().zip(gaps) {
        r.gap = g;
    }
    let index = |v: f64| planar.iter().position(|&p| (p - v).abs() <= 1e-12 * lc).expect("node on axis");
    let areas: Vec<f64> = pts
        .iter()
        .map(|p| {
            let tx = tributary(&planar, index(p[0]));
            if dim == 2 {
                tx
            } else {
                tx * tributary(&planar, index(p[1]))
            }
        })
        .collect();
    let a = assemble(&[lower, upper])?;
    let body_dofs = free_ranges(&a.dofs);
    let (b, d) = contact_matrix(&rows, &a.dofs)?;
    let mut problem = ContactProblem::new(a.k, b, d, a.f_ext)?.with_description(format!(
        "{dim}D indentation, {} pairs, R={}, u_D={}",
        rows.len(),
        params.radius,
        params.u_d
    ));
    problem.dof_coords = Some(a.dof_coords);
    let geometry = HertzGeometry {
        dim,
        radius: params.radius,
        symmetry: if dim == 2 { 2.0 } else { 4.0 },
        planar: pts,
        areas,
        lower: params.lower,
        upper: params.upper,
    };
    problem.meta.insert("generator".into(), "hertz".into());
    problem.meta.insert("refinement".into(), nref.to_string());
    problem.meta.insert("u_D".into(), format!("{}", params.u_d));
    problem.meta.insert("g_min".into(), format!("{}", params.g_min));
    geometry.to_meta(&mut problem.meta);
    Ok(HertzProblem {
        problem,
        body_dofs,
        geometry,
        params: params.clone(),
    })
}

/// Row of identical blocks pressed onto a common base.
#[derive(Debug, Clone, PartialEq)]
pub struct MultibodyParams {
    pub dim: usize,
    pub n_bodies: usize,
    /// Elements across the width of one block.
    pub refinement: usize,
    pub block_width: f64,
    pub block_height: f64,
    pub base_thickness: f64,
    /// Radius of the parabolic profile under each block.
    pub radius: f64,
    pub body: Material,
    pub base: Material,
    /// Initial gap at the centre of each block.
    pub g_min: f64,
    /// Downward displacement of the clamped block tops.
    pub u_d: f64,
    pub scale: usize,
}

impl MultibodyParams {
    pub fn new(dim: usize, n_bodies: usize) -> Self {
        Self {
            dim,
            n_bodies,
            refinement: 8,
            block_width: 2.5e-2,
            block_height: 2e-2,
            base_thickness: 1e-2,
            radius: 2e-2,
            body: Material { e: 2.1e9, nu: 0.3 },
            base: Material { e: 2.1e11, nu: 0.3 },
            g_min: 1e-3,
            u_d: 4e-3,
            scale: 1,
        }
    }
}

#[derive(Debug, Clone)]
pub struct MultibodyProblem {
    pub problem: ContactProblem,
    /// Free DOFs of the base and of each block.
    pub body_dofs: Vec<Range<usize>>,
    /// Rows of `B` pairing each block with the base, in block order.
    pub base_rows: Vec<Range<usize>>,
    /// Rows pairing block `i` with block `i + 1`.
    pub neighbor_rows: Vec<Range<usize>>,
}

/// Blocks `1..=n` stand side by side on body 0; neighbours touch with zero gap.
pub fn gen_multibody(params: &MultibodyParams) -> Result<MultibodyProblem> {
    let dim = params.dim;
    if dim != 2 && dim != 3 {
        return Err(Error::InvalidInput(format!("dimension must be 2 or 3, got {dim}")));
    }
    if params.n_bodies == 0 || params.refinement < 2 || params.scale == 0 {
        return Err(Error::InvalidInput("need at least one body and refinement >= 2".into()));
    }
    let n = params.n_bodies;
    let r = params.refinement * params.scale;
    let w = params.block_width;
    let layers = ((params.block_height / w) * r as f64).round().max(1.0) as usize;
    let base_layers = ((params.base_thickness / w) * r as f64).round().max(1.0) as usize;
    let cross = uniform(-0.5 * w, 0.5 * w, r);
    let mesh = |xs: &[f64], zs: &[f64]| {
        if dim == 2 {
            StructuredMesh::grid_2d(xs, zs)
        } else {
            StructuredMesh::grid_3d(xs, &cross, zs)
        }
    };
    let (bottom, top) = if dim == 2 { ("ymin", "ymax") } else { ("zmin", "zmax") };
    let vert = dim - 1;
    let mut base = Body::new(
        mesh(&uniform(0.0, n as f64 * w, n * r), &uniform(-params.base_thickness, 0.0, base_layers))?,
        params.base,
    );
    for c in 0..dim {
        base.fix_set(bottom, c, 0.0)?;
    }
    let mut bodies = vec![base];
    for i in 0..n {
        let x0 = i as f64 * w;
        let mut b = Body::new(
            mesh(&uniform(x0, x0 + w, r), &uniform(0.0, params.block_height, layers))?,
            params.body,
        );
        for c in 0..dim {
            b.fix_set(top, c, if c == vert { -params.u_d } else { 0.0 })?;
        }
        bodies.push(b);
    }
    let mut rows: Vec<ContactRow> = Vec::new();
    let mut base_rows = Vec::new();
    let mut down = [0.0; 3];
    down[vert] = -1.0;
    let base_top = bodies[0].mesh.node_set(top)?.to_vec();
    for i in 1..=n {
        let m = &bodies[i].mesh;
        let slaves = m.node_set(bottom)?.to_vec();
        let (x0, x1) = ((i - 1) as f64 * w, i as f64 * w);
        let tol = 1e-9;
        let masters: Vec<usize> = base_top
            .iter()
            .copied()
            .filter(|&k| {
                let x = bodies[0].mesh.coords[k][0];
                x >= x0 - tol && x <= x1 + tol
            })
            .collect();
        let mut block_rows = rows_node_to_node(m, i, &slaves, &bodies[0].mesh, 0, &masters, down)?;
        let xc = 0.5 * (x0 + x1);
        let pts: Vec<[f64; 2]> = slaves
            .iter()
            .map(|&s| {
                let c = m.coords[s];
                [c[0] - xc, if dim == 3 { c[1] } else { 0.0 }]
            })
            .collect();
        for (row, g) in block_rows.iter_mut().zip(parabolic_gap_profile(params.radius, &pts, params.g_min)) {
            row.gap = g;
        }
        base_rows.push(rows.len()..rows.len() + block_rows.len());
        rows.extend(block_rows);
    }
    let mut neighbor_rows = Vec::new();
    for i in 1..n {
        let (a, b) = (&bodies[i].mesh, &bodies[i + 1].mesh);
        // the clamped top edge carries no free DOF
        let below = |m: &StructuredMesh, set: &str| -> Result<Vec<usize>> {
            Ok(m.node_set(set)?
                .iter()
                .copied()
                .filter(|&k| m.coords[k][vert] < params.block_height * (1.0 - 1e-12))
                .collect())
        };
        let mut pair = rows_node_to_node(a, i, &below(a, "xmax")?, b, i + 1, &below(b, "xmin")?, [1.0, 0.0, 0.0])?;
        for row in &mut pair {
            row.gap = 0.0;
        }
        neighbor_rows.push(rows.len()..rows.len() + pair.len());
        rows.extend(pair);
    }
    let a = assemble(&bodies)?;
    let body_dofs = free_ranges(&a.dofs);
    let (bm, d) = contact_matrix(&rows, &a.dofs)?;
    let mut problem = ContactProblem::new(a.k, bm, d, a.f_ext)?
        .with_description(format!("{dim}D row of {n} blocks on a base, {} pairs", rows.len()));
    problem.dof_coords = Some(a.dof_coords);
    let meta = &mut problem.meta;
    meta.insert("generator".into(), "multibody".into());
    meta.insert("n_bodies".into(), n.to_string());
    meta.insert("u_D".into(), format!("{}", params.u_d));
    meta.insert("g_min".into(), format!("{}", params.g_min));
    meta.insert(
        "base_rows".into(),
        base_rows.iter().map(|r| format!("{}..{}", r.start, r.end)).collect::<Vec<_>>().join(" "),
    );
    Ok(MultibodyProblem {
        problem,
        body_dofs,
        base_rows,
        neighbor_rows,
    })
}
