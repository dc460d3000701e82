use super::assembly::{Dof, DofMap};
use super::mesh::StructuredMesh;
use crate::error::{Error, Result};
use crate::linalg::SparseRect;

/// Tolerance for matching interface node positions, in metres.
pub const MATCH_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairingMode {
    NodeToNode,
    NodeToSurface,
}

/// One contact constraint `sum_k w_k n . u(node_k) <= gap`.
///
/// The slave term carries `+1`; master terms carry minus their interpolation weights.
#[derive(Debug, Clone, PartialEq)]
pub struct ContactRow {
    /// `(body, node, weight)`
    pub terms: Vec<(usize, usize, f64)>,
    /// Unit normal pointing from the slave towards the master.
    pub normal: [f64; 3],
    pub gap: f64,
}

/// What to pair and how.
#[derive(Debug, Clone, PartialEq)]
pub struct PairingSpec {
    pub mode: PairingMode,
    pub slave_body: usize,
    pub slave_nodes: Vec<usize>,
    pub master_body: usize,
    /// Matching nodes for node-to-node pairing.
    pub master_nodes: Vec<usize>,
    /// Faces (2 nodes in 2D, 4 in 3D) for node-to-surface pairing.
    pub master_faces: Vec<Vec<usize>>,
    pub normal: [f64; 3],
}

impl PairingSpec {
    pub fn rows(&self, meshes: &[&StructuredMesh]) -> Result<Vec<ContactRow>> {
        let (s, m) = (meshes[self.slave_body], meshes[self.master_body]);
        match self.mode {
            PairingMode::NodeToNode => rows_node_to_node(
                s,
                self.slave_body,
                &self.slave_nodes,
                m,
                self.master_body,
                &self.master_nodes,
                self.normal,
            ),
            PairingMode::NodeToSurface => rows_node_to_surface(
                s,
                self.slave_body,
                &self.slave_nodes,
                m,
                self.master_body,
                &self.master_faces,
                self.normal,
            ),
        }
    }
}

fn unit(n: [f64; 3]) -> Result<[f64; 3]> {
    let l = (n[0] * n[0] + n[1] * n[1] + n[2] * n[2]).sqrt();
    if !(l > 0.0) {
        return Err(Error::InvalidInput("contact normal must be non-zero".into()));
    }
    Ok([n[0] / l, n[1] / l, n[2] / l])
}

fn dot3(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn tangent_basis(n: &[f64; 3]) -> ([f64; 3], [f64; 3]) {
    let pick = if n[0].abs() < 0.9 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
    let d = dot3(&pick, n);
    let t1 = unit([pick[0] - d * n[0], pick[1] - d * n[1], pick[2] - d * n[2]]).expect("non-parallel pick");
    let t2 = [
        n[1] * t1[2] - n[2] * t1[1],
        n[2] * t1[0] - n[0] * t1[2],
        n[0] * t1[1] - n[1] * t1[0],
    ];
    (t1, t2)
}

pub fn rows_node_to_node(
    mesh_a: &StructuredMesh,
    body_a: usize,
    nodes_a: &[usize],
    mesh_b: &StructuredMesh,
    body_b: usize,
    nodes_b: &[usize],
    normal: [f64; 3],
) -> Result<Vec<ContactRow>> {
    let n = unit(normal)?;
    if nodes_a.len() != nodes_b.len() {
        return Err(Error::MismatchedInterfaces(format!(
            "{} slave nodes against {} master nodes",
            nodes_a.len(),
            nodes_b.len()
        )));
    }
    if body_a == body_b {
        return Err(Error::MismatchedInterfaces("node-to-node pairs must join two bodies".into()));
    }
    let (t1, t2) = tangent_basis(&n);
    let mut used = vec![false; nodes_b.len()];
    let mut rows = Vec::with_capacity(nodes_a.len());
    for &a in nodes_a {
        let xa = mesh_a.coords[a];
        let found = nodes_b.iter().enumerate().find(|(k, &b)| {
            let xb = mesh_b.coords[b];
            let d = [xb[0] - xa[0], xb[1] - xa[1], xb[2] - xa[2]];
            !used[*k] && dot3(&d, &t1).abs() <= MATCH_TOL && dot3(&d, &t2).abs() <= MATCH_TOL
        });
        let Some((k, &b)) = found else {
            return Err(Error::MismatchedInterfaces(format!(
                "no partner for node {a} at ({:e}, {:e}, {:e})",
                xa[0], xa[1], xa[2]
            )));
        };
        used[k] = true;
        let xb = mesh_b.coords[b];
        let d = [xb[0] - xa[0], xb[1] - xa[1], xb[2] - xa[2]];
        rows.push(ContactRow {
            terms: vec![(body_a, a, 1.0), (body_b, b, -1.0)],
            normal: n,
            gap: dot3(&d, &n),
        });
    }
    Ok(rows)
}

/// Parametric coordinates and shape weights of `p` on a face, in tangential coordinates.
fn face_weights(p: [f64; 2], x: &[[f64; 2]]) -> Option<Vec<f64>> {
    const EDGE: f64 = 1e-9;
    if x.len() == 2 {
        let (a, b) = (x[0][0], x[1][0]);
        if a == b {
            return None;
        }
        let s = (p[0] - a) / (b - a);
        if !(-EDGE..=1.0 + EDGE).contains(&s) {
            return None;
        }
        let s = s.clamp(0.0, 1.0);
        return Some(vec![1.0 - s, s]);
    }
    // bilinear quad, Newton on (xi, eta) in [-1, 1]^2
    let shape = |xi: f64, eta: f64| {
        [
            0.25 * (1.0 - xi) * (1.0 - eta),
            0.25 * (1.0 + xi) * (1.0 - eta),
            0.25 * (1.0 + xi) * (1.0 + eta),
            0.25 * (1.0 - xi) * (1.0 + eta),
        ]
    };
    let (mut xi, mut eta) = (0.0, 0.0);
    for _ in 0..30 {
        let nsh = shape(xi, eta);
        let mut f = [-p[0], -p[1]];
        for a in 0..4 {
            f[0] += nsh[a] * x[a][0];
            f[1] += nsh[a] * x[a][1];
        }
        let dxi = [-(1.0 - eta), 1.0 - eta, 1.0 + eta, -(1.0 + eta)];
        let deta = [-(1.0 - xi), -(1.0 + xi), 1.0 + xi, 1.0 - xi];
        let mut j = [[0.0; 2]; 2];
        for a in 0..4 {
            for c in 0..2 {
                j[c][0] += 0.25 * dxi[a] * x[a][c];
                j[c][1] += 0.25 * deta[a] * x[a][c];
            }
        }
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        if det == 0.0 {
            return None;
        }
        let sx = (j[1][1] * f[0] - j[0][1] * f[1]) / det;
        let se = (-j[1][0] * f[0] + j[0][0] * f[1]) / det;
        xi -= sx;
        eta -= se;
        if sx.abs() + se.abs() < 1e-14 {
            break;
        }
    }
    let lim = 1.0 + 2.0 * EDGE;
    if xi.abs() > lim || eta.abs() > lim {
        return None;
    }
    Some(shape(xi.clamp(-1.0, 1.0), eta.clamp(-1.0, 1.0)).to_vec())
}

pub fn rows_node_to_surface(
    slave_mesh: &StructuredMesh,
    slave_body: usize,
    slaves: &[usize],
    master_mesh: &StructuredMesh,
    master_body: usize,
    faces: &[Vec<usize>],
    normal: [f64; 3],
) -> Result<Vec<ContactRow>> {
    let n = unit(normal)?;
    let (t1, t2) = tangent_basis(&n);
    let plane = |x: &[f64; 3]| [dot3(x, &t1), dot3(x, &t2)];
    let mut rows = Vec::with_capacity(slaves.len());
    for &s in slaves {
        let xs = slave_mesh.coords[s];
        let ps = plane(&xs);
        let mut hit = None;
        for face in faces {
            let xf: Vec<[f64; 2]> = face.iter().map(|&m| plane(&master_mesh.coords[m])).collect();
            if let Some(w) = face_weights(ps, &xf) {
                hit = Some((face, w));
                break;
            }
        }
        let Some((face, w)) = hit else {
            return Err(Error::NoProjection { node: s });
        };
        let mut proj = [0.0; 3];
        let mut terms = vec![(slave_body, s, 1.0)];
        for (&m, &wm) in face.iter().zip(&w) {
            let xm = master_mesh.coords[m];
            for a in 0..3 {
                proj[a] += wm * xm[a];
            }
            if wm != 0.0 {
                terms.push((master_body, m, -wm));
            }
        }
        let d = [proj[0] - xs[0], proj[1] - xs[1], proj[2] - xs[2]];
        rows.push(ContactRow {
            terms,
            normal: n,
            gap: dot3(&d, &n),
        });
    }
    Ok(rows)
}

/// Pairing matrix over the free DOFs; prescribed displacements move into `D`.
pub fn contact_matrix(rows: &[ContactRow], dofs: &DofMap) -> Result<(SparseRect, Vec<f64>)> {
    let mut b_rows = Vec::with_capacity(rows.len());
    let mut d = Vec::with_capacity(rows.len());
    for row in rows {
        let mut entries = Vec::new();
        let mut gap = row.gap;
        for &(body, node, w) in &row.terms {
            for c in 0..dofs.dim {
                let coef = w * row.normal[c];
                if coef == 0.0 {
                    continue;
                }
                match dofs.dof(body, node, c) {
                    Dof::Free(i) => entries.push((i, coef)),
                    Dof::Fixed(v) => gap -= coef * v,
                }
            }
        }
        b_rows.push(entries);
        d.push(gap);
    }
    Ok((SparseRect::from_rows(dofs.n_free, &b_rows)?, d))
}

fn all_free(meshes: &[&StructuredMesh]) -> DofMap {
    let dim = meshes[0].dim;
    let mut offsets = Vec::new();
    let mut total = 0;
    for m in meshes {
        offsets.push(total);
        total += m.n_nodes() * dim;
    }
    DofMap {
        dim,
        body_offsets: offsets,
        dofs: (0..total).map(Dof::Free).collect(),
        n_free: total,
    }
}

/// Node-to-node pairing of two meshes; columns are the DOFs of `mesh_a` followed by those of `mesh_b`.
pub fn build_pairing_node_to_node(
    mesh_a: &StructuredMesh,
    mesh_b: &StructuredMesh,
    slaves: &[usize],
    masters: &[usize],
    normal: [f64; 3],
) -> Result<(SparseRect, Vec<f64>)> {
    let rows = rows_node_to_node(mesh_a, 0, slaves, mesh_b, 1, masters, normal)?;
    contact_matrix(&rows, &all_free(&[mesh_a, mesh_b]))
}

/// Node-to-surface pairing; columns are the DOFs of the slave mesh followed by the master mesh.
pub fn build_pairing_node_to_surface(
    slave_mesh: &StructuredMesh,
    slaves: &[usize],
    master_mesh: &StructuredMesh,
    faces: &[Vec<usize>],
    normal: [f64; 3],
) -> Result<(SparseRect, Vec<f64>)> {
    let rows = rows_node_to_surface(slave_mesh, 0, slaves, master_mesh, 1, faces, normal)?;
    contact_matrix(&rows, &all_free(&[slave_mesh, master_mesh]))
}

/// Initial gaps `r^2 / (2 R) + g_min` of a parabolic indenter; `planar`
/// holds in-plane offsets from the contact centre.
pub fn parabolic_gap_profile(radius: f64, planar: &[[f64; 2]], g_min: f64) -> Vec<f64> {
    planar
        .iter()
        .map(|p| (p[0] * p[0] + p[1] * p[1]) / (2.0 * radius) + g_min)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::assembly::{assemble, Body, Material};
    use crate::fem::mesh::uniform;
    use crate::oracle::brute_force_kkt;
    use crate::problem::ContactProblem;

    fn square(x0: f64, x1: f64, y0: f64, y1: f64, nx: usize, ny: usize) -> StructuredMesh {
        StructuredMesh::grid_2d(&uniform(x0, x1, nx), &uniform(y0, y1, ny)).unwrap()
    }

    #[test]
    fn single_pair_row() {
        let a = square(-1.0, 0.0, 0.0, 1.0, 1, 1);
        let b = square(0.001, 1.0, 0.0, 1.0, 1, 1);
        let (bm, d) = build_pairing_node_to_node(&a, &b, &[1], &[0], [1.0, 0.0, 0.0]).unwrap();
        assert_eq!(bm.nrows(), 1);
        assert_eq!(bm.triplets(), vec![(0, 2, 1.0), (0, 8, -1.0)]);
        assert!((d[0] - 0.001).abs() < 1e-15);
        let b0 = square(0.0, 1.0, 0.0, 1.0, 1, 1);
        let (_, d) = build_pairing_node_to_node(&a, &b0, &[1], &[0], [1.0, 0.0, 0.0]).unwrap();
        assert_eq!(d, vec![0.0]);
    }

    #[test]
    fn matching_faces_repeat_the_single_pair() {
        let lower = square(0.0, 2.0, -1.0, 0.0, 2, 1);
        let upper = square(0.0, 2.0, 0.0, 1.0, 2, 1);
        let s = upper.node_set("ymin").unwrap().to_vec();
        let m = lower.node_set("ymax").unwrap().to_vec();
        let (b, d) = build_pairing_node_to_node(&upper, &lower, &s, &m, [0.0, -1.0, 0.0]).unwrap();
        assert_eq!(b.nrows(), 3);
        assert_eq!(d, vec![0.0; 3]);
        let nu = upper.n_nodes() * 2;
        for (j, (&sn, &mn)) in s.iter().zip(&m).enumerate() {
            let row: Vec<(usize, f64)> = b.row(j).collect();
            assert_eq!(row, vec![(2 * sn + 1, -1.0), (nu + 2 * mn + 1, 1.0)]);
            assert!((crate::linalg::norm2(&row.iter().map(|e| e.1).collect::<Vec<_>>()) - 2f64.sqrt()).abs() < 1e-15);
        }
    }

    #[test]
    fn mismatched_interface() {
        let a = square(0.0, 1.0, 0.0, 1.0, 2, 1);
        let b = square(0.0, 1.0, 1.0, 2.0, 3, 1);
        let s = a.node_set("ymax").unwrap().to_vec();
        let m = b.node_set("ymin").unwrap().to_vec();
        assert!(matches!(
            build_pairing_node_to_node(&a, &b, &s, &m, [0.0, 1.0, 0.0]),
            Err(Error::MismatchedInterfaces(_))
        ));
        let m3: Vec<usize> = m[..3].to_vec();
        assert!(build_pairing_node_to_node(&a, &b, &s, &m3, [0.0, 1.0, 0.0]).is_err());
    }

    #[test]
    fn face_center_and_corner() {
        let master = StructuredMesh::grid_3d(&uniform(0.0, 1.0, 1), &uniform(0.0, 1.0, 1), &uniform(-1.0, 0.0, 1)).unwrap();
        let mut slave = StructuredMesh::grid_3d(&uniform(0.5, 1.5, 1), &uniform(0.5, 1.5, 1), &uniform(0.1, 1.1, 1)).unwrap();
        let faces = master.faces("zmax").unwrap();
        let (b, d) = build_pairing_node_to_surface(&slave, &[0], &master, &faces, [0.0, 0.0, -1.0]).unwrap();
        let w: Vec<f64> = b.row(0).skip(1).map(|(_, v)| v).collect();
        assert_eq!(w, vec![0.25; 4]);
        assert!((d[0] - 0.1).abs() < 1e-15);
        slave.translate([0.5, 0.5, 0.0]);
        let (b, _) = build_pairing_node_to_surface(&slave, &[0], &master, &faces, [0.0, 0.0, -1.0]).unwrap();
        assert_eq!(b.row_nnz(0), 2);
        let off = slave.n_nodes() * 3;
        let corner = master.node(1, 1, 1);
        assert_eq!(b.row(0).collect::<Vec<_>>(), vec![(2, -1.0), (off + 3 * corner + 2, 1.0)]);
    }

    #[test]
    fn slave_outside_the_patch() {
        let master = square(0.0, 1.0, -1.0, 0.0, 2, 1);
        let slave = square(2.0, 3.0, 0.0, 1.0, 1, 1);
        let faces = master.faces("ymax").unwrap();
        assert!(matches!(
            build_pairing_node_to_surface(&slave, &[0], &master, &faces, [0.0, -1.0, 0.0]),
            Err(Error::NoProjection { node: 0 })
        ));
    }

    #[test]
    fn rows_balance_forces() {
        let master = square(0.0, 1.0, -1.0, 0.0, 3, 1);
        let slave = square(0.0, 1.0, 0.05, 1.0, 4, 1);
        let faces = master.faces("ymax").unwrap();
        let s = slave.node_set("ymin").unwrap().to_vec();
        let (b, _) = build_pairing_node_to_surface(&slave, &s, &master, &faces, [0.0, -1.0, 0.0]).unwrap();
        for j in 0..b.nrows() {
            let sum: f64 = b.row(j).map(|(_, v)| v).sum();
            assert!(sum.abs() < 1e-13);
        }
    }

    #[test]
    fn parabolic_profile() {
        let d = parabolic_gap_profile(2e-2, &[[0.0, 0.0], [2e-3, 0.0], [0.0, -2e-3], [1.2e-3, 1.6e-3]], 0.0);
        assert_eq!(d[0], 0.0);
        assert!((d[1] - 1e-4).abs() < 1e-18);
        assert_eq!(d[1], d[2]);
        assert!((d[3] - d[1]).abs() < 1e-15);
    }

    #[test]
    fn uniform_pressure_through_non_matching_interface() {
        // lower block on rollers, upper block pushed down; meshes do not match
        let mat = Material::new(1e3, 0.3).unwrap();
        let mut lower = Body::new(square(0.0, 1.0, -0.5, 0.0, 3, 2), mat);
        lower.fix_set("ymin", 1, 0.0).unwrap();
        lower.fix_set("xmin", 0, 0.0).unwrap();
        let mut upper = Body::new(square(0.0, 1.0, 0.0, 0.5, 5, 2), mat);
        upper.fix_set("ymax", 1, -1e-3).unwrap();
        upper.fix_set("xmin", 0, 0.0).unwrap();
        let slaves = upper.mesh.node_set("ymin").unwrap().to_vec();
        let faces = lower.mesh.faces("ymax").unwrap();
        let rows = rows_node_to_surface(&upper.mesh, 1, &slaves, &lower.mesh, 0, &faces, [0.0, -1.0, 0.0]).unwrap();
        let a = assemble(&[lower, upper]).unwrap();
        let (b, d) = contact_matrix(&rows, &a.dofs).unwrap();
        let p = ContactProblem::new(a.k, b.clone(), d, a.f_ext).unwrap();
        let sol = brute_force_kkt(&p).unwrap();
        let total: f64 = sol.lambda.iter().sum();
        // both layers in uniaxial plane-strain compression, 0.5 thick each
        let e_eff = 1e3 / (1.0 - 0.3 * 0.3);
        let applied = 1e-3 / (0.5 / e_eff + 0.5 / e_eff) * 1.0;
        assert!((total - applied).abs() <= 0.02 * applied, "{total} vs {applied}");
        assert!(sol.lambda.iter().all(|&l| l > 0.0));
        // resultant on the lower body equals the transmitted load
        let fc = p.contact_forces(&sol.lambda).unwrap();
        let lower_y: f64 = (0..a.dofs.body_offsets[1] / 2)
            .filter_map(|n| match a.dofs.dof(0, n, 1) {
                Dof::Free(i) => Some(fc[i]),
                Dof::Fixed(_) => None,
            })
            .sum();
        assert!((lower_y.abs() - applied).abs() <= 0.02 * applied);
    }
}
