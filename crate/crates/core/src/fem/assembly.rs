use nalgebra::{DMatrix, Matrix3, Matrix6};

use super::mesh::StructuredMesh;
use crate::error::{Error, Result};
use crate::linalg::SparseSym;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Material {
    /// Young's modulus in Pa.
    pub e: f64,
    pub nu: f64,
}

impl Material {
    pub fn new(e: f64, nu: f64) -> Result<Self> {
        if !(e > 0.0 && e.is_finite() && nu > -1.0 && nu < 0.5) {
            return Err(Error::InvalidInput(format!("invalid material E = {e}, nu = {nu}")));
        }
        Ok(Self { e, nu })
    }

    /// Plane-strain elasticity matrix in Voigt order `(xx, yy, xy)`.
    pub fn plane_strain(&self) -> Matrix3<f64> {
        let (e, nu) = (self.e, self.nu);
        let c = e / ((1.0 + nu) * (1.0 - 2.0 * nu));
        Matrix3::new(
            c * (1.0 - nu),
            c * nu,
            0.0,
            c * nu,
            c * (1.0 - nu),
            0.0,
            0.0,
            0.0,
            c * (1.0 - 2.0 * nu) / 2.0,
        )
    }

    /// 3D elasticity matrix in Voigt order `(xx, yy, zz, yz, xz, xy)`.
    pub fn solid(&self) -> Matrix6<f64> {
        let (e, nu) = (self.e, self.nu);
        let lam = e * nu / ((1.0 + nu) * (1.0 - 2.0 * nu));
        let mu = e / (2.0 * (1.0 + nu));
        let mut d = Matrix6::zeros();
        for i in 0..3 {
            for j in 0..3 {
                d[(i, j)] = lam;
            }
            d[(i, i)] = lam + 2.0 * mu;
            d[(i + 3, i + 3)] = mu;
        }
        d
    }
}

const GAUSS: [f64; 2] = [-0.577_350_269_189_625_8, 0.577_350_269_189_625_8];
const Q4: [[f64; 2]; 4] = [[-1.0, -1.0], [1.0, -1.0], [1.0, 1.0], [-1.0, 1.0]];
const H8: [[f64; 3]; 8] = [
    [-1.0, -1.0, -1.0],
    [1.0, -1.0, -1.0],
    [1.0, 1.0, -1.0],
    [-1.0, 1.0, -1.0],
    [-1.0, -1.0, 1.0],
    [1.0, -1.0, 1.0],
    [1.0, 1.0, 1.0],
    [-1.0, 1.0, 1.0],
];

/// 8x8 plane-strain stiffness of a bilinear quadrilateral (unit thickness), 2x2 Gauss.
pub fn quad4_stiffness(x: &[[f64; 3]; 4], mat: &Material) -> Result<DMatrix<f64>> {
    let d = mat.plane_strain();
    let mut k: DMatrix<f64> = DMatrix::zeros(8, 8);
    for &xi in &GAUSS {
        for &eta in &GAUSS {
            let mut dn = [[0.0; 2]; 4];
            for a in 0..4 {
                dn[a][0] = 0.25 * Q4[a][0] * (1.0 + Q4[a][1] * eta);
                dn[a][1] = 0.25 * Q4[a][1] * (1.0 + Q4[a][0] * xi);
            }
            let mut j = [[0.0; 2]; 2];
            for a in 0..4 {
                for r in 0..2 {
                    for c in 0..2 {
                        j[r][c] += dn[a][r] * x[a][c];
                    }
                }
            }
            let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
            if !(det > 0.0) {
                return Err(Error::InvalidInput("non-positive element Jacobian".into()));
            }
            let inv = [[j[1][1] / det, -j[0][1] / det], [-j[1][0] / det, j[0][0] / det]];
            let mut b = DMatrix::zeros(3, 8);
            for a in 0..4 {
                let gx = inv[0][0] * dn[a][0] + inv[0][1] * dn[a][1];
                let gy = inv[1][0] * dn[a][0] + inv[1][1] * dn[a][1];
                b[(0, 2 * a)] = gx;
                b[(1, 2 * a + 1)] = gy;
                b[(2, 2 * a)] = gy;
                b[(2, 2 * a + 1)] = gx;
            }
            let db = DMatrix::from_fn(3, 3, |r, c| d[(r, c)]) * &b;
            k += b.transpose() * db * det;
        }
    }
    Ok(k)
}

/// 24x24 stiffness of a trilinear hexahedron, 2x2x2 Gauss.
pub fn hex8_stiffness(x: &[[f64; 3]; 8], mat: &Material) -> Result<DMatrix<f64>> {
    let d = mat.solid();
    let d = DMatrix::from_fn(6, 6, |r, c| d[(r, c)]);
    let mut k: DMatrix<f64> = DMatrix::zeros(24, 24);
    for &g0 in &GAUSS {
        for &g1 in &GAUSS {
            for &g2 in &GAUSS {
                let g = [g0, g1, g2];
                let mut dn = [[0.0; 3]; 8];
                for a in 0..8 {
                    let f: Vec<f64> = (0..3).map(|c| 1.0 + H8[a][c] * g[c]).collect();
                    dn[a][0] = 0.125 * H8[a][0] * f[1] * f[2];
                    dn[a][1] = 0.125 * H8[a][1] * f[0] * f[2];
                    dn[a][2] = 0.125 * H8[a][2] * f[0] * f[1];
                }
                let mut j: Matrix3<f64> = Matrix3::zeros();
                for a in 0..8 {
                    for r in 0..3 {
                        for c in 0..3 {
                            j[(r, c)] += dn[a][r] * x[a][c];
                        }
                    }
                }
                let det = j.determinant();
                if !(det > 0.0) {
                    return Err(Error::InvalidInput("non-positive element Jacobian".into()));
                }
                let inv = j.try_inverse().ok_or_else(|| Error::InvalidInput("singular Jacobian".into()))?;
                let mut b = DMatrix::zeros(6, 24);
                for a in 0..8 {
                    let mut gr = [0.0; 3];
                    for r in 0..3 {
                        gr[r] = (0..3).map(|c| inv[(r, c)] * dn[a][c]).sum();
                    }
                    let (c0, c1, c2) = (3 * a, 3 * a + 1, 3 * a + 2);
                    b[(0, c0)] = gr[0];
                    b[(1, c1)] = gr[1];
                    b[(2, c2)] = gr[2];
                    b[(3, c1)] = gr[2];
                    b[(3, c2)] = gr[1];
                    b[(4, c0)] = gr[2];
                    b[(4, c2)] = gr[0];
                    b[(5, c0)] = gr[1];
                    b[(5, c1)] = gr[0];
                }
                k += b.transpose() * (&d * &b) * det;
            }
        }
    }
    Ok(k)
}

/// One elastic body: mesh, material, prescribed displacements and nodal loads.
#[derive(Debug, Clone)]
pub struct Body {
    pub mesh: StructuredMesh,
    pub material: Material,
    /// `(node, component, value)`
    pub fixed: Vec<(usize, usize, f64)>,
    /// `(node, component, force)`
    pub loads: Vec<(usize, usize, f64)>,
}

impl Body {
    pub fn new(mesh: StructuredMesh, material: Material) -> Self {
        Self {
            mesh,
            material,
            fixed: Vec::new(),
            loads: Vec::new(),
        }
    }

    /// Prescribe component `comp` of every node in the named set.
    pub fn fix_set(&mut self, set: &str, comp: usize, value: f64) -> Result<()> {
        let nodes = self.mesh.node_set(set)?.to_vec();
        for n in nodes {
            self.fixed.push((n, comp, value));
        }
        Ok(())
    }
}

/// Where each `(body, node, component)` lives in the reduced system.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Dof {
    Free(usize),
    Fixed(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct DofMap {
    pub dim: usize,
    /// Offset of each body in the full node-major DOF vector.
    pub body_offsets: Vec<usize>,
    pub dofs: Vec<Dof>,
    pub n_free: usize,
}

impl DofMap {
    pub fn full_index(&self, body: usize, node: usize, comp: usize) -> usize {
        self.body_offsets[body] + node * self.dim + comp
    }

    pub fn dof(&self, body: usize, node: usize, comp: usize) -> Dof {
        self.dofs[self.full_index(body, node, comp)]
    }

    /// Full displacement field of one body from the reduced solution.
    pub fn expand(&self, body: usize, u: &[f64]) -> Vec<f64> {
        let start = self.body_offsets[body];
        let end = self.body_offsets.get(body + 1).copied().unwrap_or(self.dofs.len());
        self.dofs[start..end]
            .iter()
            .map(|d| match *d {
                Dof::Free(i) => u[i],
                Dof::Fixed(v) => v,
            })
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct Assembly {
    pub k: SparseSym,
    pub f_ext: Vec<f64>,
    pub dofs: DofMap,
    /// Node position of every free DOF.
    pub dof_coords: Vec<[f64; 3]>,
}

/// Assemble the reduced stiffness of all bodies (block diagonal by body).
///
/// Prescribed displacements are eliminated; their coupling enters `F_ext`
/// as `-K_fp u_p`.
pub fn assemble(bodies: &[Body]) -> Result<Assembly> {
    let dim = bodies.first().map(|b| b.mesh.dim).unwrap_or(2);
    if bodies.iter().any(|b| b.mesh.dim != dim) {
        return Err(Error::InvalidInput("bodies must share the spatial dimension".into()));
    }
    let mut body_offsets = Vec::new();
    let mut total = 0;
    for b in bodies {
        body_offsets.push(total);
        total += b.mesh.n_nodes() * dim;
    }
    let mut fixed: Vec<Option<f64>> = vec![None; total];
    for (bi, b) in bodies.iter().enumerate() {
        for &(node, comp, v) in &b.fixed {
            if node >= b.mesh.n_nodes() || comp >= dim {
                return Err(Error::InvalidInput(format!("prescribed DOF ({node}, {comp}) out of range")));
            }
            fixed[body_offsets[bi] + node * dim + comp] = Some(v);
        }
    }
    let mut dofs = Vec::with_capacity(total);
    let mut dof_coords = Vec::new();
    let mut n_free = 0;
    for (bi, b) in bodies.iter().enumerate() {
        for node in 0..b.mesh.n_nodes() {
            for comp in 0..dim {
                match fixed[body_offsets[bi] + node * dim + comp] {
                    Some(v) => dofs.push(Dof::Fixed(v)),
                    None => {
                        dofs.push(Dof::Free(n_free));
                        dof_coords.push(b.mesh.coords[node]);
                        n_free += 1;
                    }
                }
            }
        }
    }
    let map = DofMap {
        dim,
        body_offsets,
        dofs,
        n_free,
    };
    let mut trip = Vec::new();
    let mut f = vec![0.0; n_free];
    let nen = if dim == 2 { 4 } else { 8 };
    for (bi, b) in bodies.iter().enumerate() {
        for el in &b.mesh.elements {
            let ke = if dim == 2 {
                let x: [[f64; 3]; 4] = std::array::from_fn(|a| b.mesh.coords[el[a]]);
                quad4_stiffness(&x, &b.material)?
            } else {
                let x: [[f64; 3]; 8] = std::array::from_fn(|a| b.mesh.coords[el[a]]);
                hex8_stiffness(&x, &b.material)?
            };
            let ids: Vec<Dof> = (0..nen * dim)
                .map(|l| map.dof(bi, el[l / dim], l % dim))
                .collect();
            for (r, dr) in ids.iter().enumerate() {
                let Dof::Free(gr) = *dr else { continue };
                for (c, dc) in ids.iter().enumerate() {
                    match *dc {
                        Dof::Free(gc) if gc <= gr => trip.push((gr, gc, ke[(r, c)])),
                        Dof::Free(_) => {}
                        Dof::Fixed(v) => f[gr] -= ke[(r, c)] * v,
                    }
                }
            }
        }
        for &(node, comp, force) in &b.loads {
            if let Dof::Free(g) = map.dof(bi, node, comp) {
                f[g] += force;
            }
        }
    }
    let k = SparseSym::from_lower_triplets(n_free, trip)?;
    Ok(Assembly {
        k,
        f_ext: f,
        dofs: map,
        dof_coords,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::mesh::uniform;
    use crate::linalg::factorize;

    #[test]
    fn unit_square_element_matches_closed_form() {
        let mat = Material::new(1.0, 0.0).unwrap();
        let x = [[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [1.0, 1.0, 0.0], [0.0, 1.0, 0.0]];
        let k = quad4_stiffness(&x, &mat).unwrap();
        // exact integral of B^T D B over the square with D = diag(1, 1, 1/2)
        let rows = [
            [0.5, 0.125, -0.25, -0.125, -0.25, -0.125, 0.0, 0.125],
            [0.125, 0.5, 0.125, 0.0, -0.125, -0.25, -0.125, -0.25],
        ];
        for (r, row) in rows.iter().enumerate() {
            for (c, e) in row.iter().enumerate() {
                assert!((k[(r, c)] - e).abs() < 1e-12, "({r}, {c}): {} vs {e}", k[(r, c)]);
            }
        }
        assert!((k.clone() - k.transpose()).amax() < 1e-15);
        // rigid translations carry no energy
        let t = nalgebra::DVector::from_iterator(8, (0..8).map(|i| if i % 2 == 0 { 1.0 } else { 0.0 }));
        assert!((&k * &t).amax() < 1e-14);
    }

    #[test]
    fn hex_rigid_modes() {
        let mat = Material::new(2.0, 0.25).unwrap();
        let x: [[f64; 3]; 8] = std::array::from_fn(|a| {
            let h = H8[a];
            [0.5 * (h[0] + 1.0) * 2.0, 0.5 * (h[1] + 1.0), 0.5 * (h[2] + 1.0) * 0.5]
        });
        let k = hex8_stiffness(&x, &mat).unwrap();
        for comp in 0..3 {
            let t = nalgebra::DVector::from_iterator(24, (0..24).map(|i| if i % 3 == comp { 1.0 } else { 0.0 }));
            assert!((&k * &t).amax() < 1e-13);
        }
        // rotation about z
        let r = nalgebra::DVector::from_iterator(
            24,
            (0..24).map(|i| {
                let p = x[i / 3];
                match i % 3 {
                    0 => -p[1],
                    1 => p[0],
                    _ => 0.0,
                }
            }),
        );
        assert!((&k * &r).amax() < 1e-13);
    }

    fn bar_patch(dim: usize) -> (Body, Vec<f64>) {
        // bar of 4 elements along x, pulled by a uniform traction at x = 4
        let mesh = if dim == 2 {
            StructuredMesh::grid_2d(&uniform(0.0, 4.0, 4), &uniform(0.0, 1.0, 1)).unwrap()
        } else {
            StructuredMesh::grid_3d(&uniform(0.0, 4.0, 4), &uniform(0.0, 1.0, 1), &uniform(0.0, 1.0, 1)).unwrap()
        };
        let mut body = Body::new(mesh, Material::new(10.0, 0.0).unwrap());
        body.fix_set("xmin", 0, 0.0).unwrap();
        body.fixed.push((0, 1, 0.0));
        if dim == 3 {
            body.fixed.push((0, 2, 0.0));
            body.fixed.push((body.mesh.node(0, 1, 0), 2, 0.0));
        }
        let right = body.mesh.node_set("xmax").unwrap().to_vec();
        let share = 1.0 / right.len() as f64;
        for n in right {
            body.loads.push((n, 0, share));
        }
        let xs: Vec<f64> = body.mesh.coords.iter().map(|c| c[0]).collect();
        (body, xs)
    }

    #[test]
    fn patch_test_uniform_tension() {
        for dim in [2, 3] {
            let (body, xs) = bar_patch(dim);
            let a = assemble(std::slice::from_ref(&body)).unwrap();
            let u = factorize(&a.k).unwrap().solve(&a.f_ext).unwrap();
            let full = a.dofs.expand(0, &u);
            // unit total force on unit cross-section, E = 10, nu = 0: u_x = x / 10
            for (n, x) in xs.iter().enumerate() {
                assert!((full[n * dim] - x / 10.0).abs() < 1e-10, "dim {dim} node {n}");
                for c in 1..dim {
                    assert!(full[n * dim + c].abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn rigid_dirichlet_translation_has_no_energy() {
        let mesh = StructuredMesh::grid_2d(&uniform(0.0, 1.0, 3), &uniform(0.0, 1.0, 2)).unwrap();
        let mut body = Body::new(mesh, Material::new(5.0, 0.3).unwrap());
        body.fix_set("xmin", 0, 0.2).unwrap();
        body.fix_set("xmin", 1, -0.1).unwrap();
        let body_mesh = body.mesh.clone();
        let a = assemble(&[body]).unwrap();
        let u = factorize(&a.k).unwrap().solve(&a.f_ext).unwrap();
        let full = a.dofs.expand(0, &u);
        for n in 0..full.len() / 2 {
            assert!((full[2 * n] - 0.2).abs() < 1e-12 && (full[2 * n + 1] + 0.1).abs() < 1e-12);
        }
        let mesh = &body_mesh;
        let mut energy = 0.0;
        for el in &mesh.elements {
            let x: [[f64; 3]; 4] = std::array::from_fn(|k| mesh.coords[el[k]]);
            let ke = quad4_stiffness(&x, &Material::new(5.0, 0.3).unwrap()).unwrap();
            let ue = nalgebra::DVector::from_iterator(8, (0..8).map(|l| full[2 * el[l / 2] + l % 2]));
            energy += 0.5 * ue.dot(&(&ke * &ue));
        }
        assert!(energy.abs() < 1e-12);
    }

    #[test]
    fn floating_body_is_singular() {
        let mesh = StructuredMesh::grid_2d(&uniform(0.0, 1.0, 1), &uniform(0.0, 1.0, 1)).unwrap();
        let a = assemble(&[Body::new(mesh, Material::new(1.0, 0.3).unwrap())]).unwrap();
        assert!(factorize(&a.k).is_err());
    }

    #[test]
    fn assembled_matrix_is_symmetric() {
        let mesh = StructuredMesh::grid_3d(&uniform(0.0, 1.0, 2), &uniform(0.0, 2.0, 3), &uniform(0.0, 1.0, 2)).unwrap();
        let mut body = Body::new(mesh, Material::new(3.0, 0.3).unwrap());
        body.fix_set("zmin", 0, 0.0).unwrap();
        body.fix_set("zmin", 1, 0.0).unwrap();
        body.fix_set("zmin", 2, 0.0).unwrap();
        let a = assemble(&[body]).unwrap();
        for i in 0..a.k.n() {
            for (j, v) in a.k.row(i) {
                let t = a.k.get(j, i).unwrap();
                assert!((t - v).abs() <= 1e-13 * v.abs());
            }
        }
        factorize(&a.k).unwrap();
    }

    #[test]
    fn invalid_material() {
        assert!(Material::new(-1.0, 0.3).is_err());
        assert!(Material::new(1.0, 0.5).is_err());
    }
}
