use std::collections::BTreeMap;

use crate::error::{Error, Result};

/// Tensor-product mesh of Q1 quadrilaterals (2D) or hexahedra (3D).
///
/// Node `(i, j, k)` has index `i + nx (j + ny k)`. Named node sets `xmin`,
/// `xmax`, `ymin`, `ymax` (and `zmin`, `zmax` in 3D) are created.
#[derive(Debug, Clone, PartialEq)]
pub struct StructuredMesh {
    pub dim: usize,
    pub coords: Vec<[f64; 3]>,
    /// 4 nodes counter-clockwise in 2D; bottom face then top face in 3D.
    pub elements: Vec<Vec<usize>>,
    pub node_sets: BTreeMap<String, Vec<usize>>,
    /// Nodes per axis (`nz = 1` in 2D).
    pub shape: [usize; 3],
}

fn check_axis(name: &str, v: &[f64]) -> Result<()> {
    if v.len() < 2 || v.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidInput(format!(
            "{name} coordinates must be strictly increasing with at least two values"
        )));
    }
    Ok(())
}

impl StructuredMesh {
    pub fn grid_2d(xs: &[f64], ys: &[f64]) -> Result<Self> {
        check_axis("x", xs)?;
        check_axis("y", ys)?;
        let (nx, ny) = (xs.len(), ys.len());
        let mut coords = Vec::with_capacity(nx * ny);
        for &y in ys {
            for &x in xs {
                coords.push([x, y, 0.0]);
            }
        }
        let id = |i: usize, j: usize| i + nx * j;
        let mut elements = Vec::new();
        for j in 0..ny - 1 {
            for i in 0..nx - 1 {
                elements.push(vec![id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1)]);
            }
        }
        let mut sets = BTreeMap::new();
        sets.insert("xmin".into(), (0..ny).map(|j| id(0, j)).collect());
        sets.insert("xmax".into(), (0..ny).map(|j| id(nx - 1, j)).collect());
        sets.insert("ymin".into(), (0..nx).map(|i| id(i, 0)).collect());
        sets.insert("ymax".into(), (0..nx).map(|i| id(i, ny - 1)).collect());
        Ok(Self {
            dim: 2,
            coords,
            elements,
            node_sets: sets,
            shape: [nx, ny, 1],
        })
    }

    pub fn grid_3d(xs: &[f64], ys: &[f64], zs: &[f64]) -> Result<Self> {
        check_axis("x", xs)?;
        check_axis("y", ys)?;
        check_axis("z", zs)?;
        let (nx, ny, nz) = (xs.len(), ys.len(), zs.len());
        let mut coords = Vec::with_capacity(nx * ny * nz);
        for &z in zs {
            for &y in ys {
                for &x in xs {
                    coords.push([x, y, z]);
                }
            }
        }
        let id = |i: usize, j: usize, k: usize| i + nx * (j + ny * k);
        let mut elements = Vec::new();
        for k in 0..nz - 1 {
            for j in 0..ny - 1 {
                for i in 0..nx - 1 {
                    elements.push(vec![
                        id(i, j, k),
                        id(i + 1, j, k),
                        id(i + 1, j + 1, k),
                        id(i, j + 1, k),
                        id(i, j, k + 1),
                        id(i + 1, j, k + 1),
                        id(i + 1, j + 1, k + 1),
                        id(i, j + 1, k + 1),
                    ]);
                }
            }
        }
        let mut sets = BTreeMap::new();
        let face = |f: &dyn Fn(usize, usize, usize) -> bool| -> Vec<usize> {
            let mut v = Vec::new();
            for k in 0..nz {
                for j in 0..ny {
                    for i in 0..nx {
                        if f(i, j, k) {
                            v.push(id(i, j, k));
                        }
                    }
                }
            }
            v
        };
        sets.insert("xmin".into(), face(&|i, _, _| i == 0));
        sets.insert("xmax".into(), face(&|i, _, _| i == nx - 1));
        sets.insert("ymin".into(), face(&|_, j, _| j == 0));
        sets.insert("ymax".into(), face(&|_, j, _| j == ny - 1));
        sets.insert("zmin".into(), face(&|_, _, k| k == 0));
        sets.insert("zmax".into(), face(&|_, _, k| k == nz - 1));
        Ok(Self {
            dim: 3,
            coords,
            elements,
            node_sets: sets,
            shape: [nx, ny, nz],
        })
    }

    pub fn n_nodes(&self) -> usize {
        self.coords.len()
    }

    pub fn node(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.shape[0] * (j + self.shape[1] * k)
    }

    pub fn node_set(&self, name: &str) -> Result<&[usize]> {
        self.node_sets
            .get(name)
            .map(Vec::as_slice)
            .ok_or_else(|| Error::InvalidInput(format!("unknown node set '{name}'")))
    }

    /// Boundary faces (2-node edges in 2D, 4-node quads in 3D) of the named side.
    pub fn faces(&self, side: &str) -> Result<Vec<Vec<usize>>> {
        let [nx, ny, nz] = self.shape;
        let mut out = Vec::new();
        if self.dim == 2 {
            match side {
                "ymin" | "ymax" => {
                    let j = if side == "ymin" { 0 } else { ny - 1 };
                    for i in 0..nx - 1 {
                        out.push(vec![self.node(i, j, 0), self.node(i + 1, j, 0)]);
                    }
                }
                "xmin" | "xmax" => {
                    let i = if side == "xmin" { 0 } else { nx - 1 };
                    for j in 0..ny - 1 {
                        out.push(vec![self.node(i, j, 0), self.node(i, j + 1, 0)]);
                    }
                }
                _ => return Err(Error::InvalidInput(format!("unknown side '{side}'"))),
            }
            return Ok(out);
        }
        let quad = |a: usize, b: usize, c: usize, d: usize| vec![a, b, c, d];
        match side {
            "zmin" | "zmax" => {
                let k = if side == "zmin" { 0 } else { nz - 1 };
                for j in 0..ny - 1 {
                    for i in 0..nx - 1 {
                        out.push(quad(
                            self.node(i, j, k),
                            self.node(i + 1, j, k),
                            self.node(i + 1, j + 1, k),
                            self.node(i, j + 1, k),
                        ));
                    }
                }
            }
            "ymin" | "ymax" => {
                let j = if side == "ymin" { 0 } else { ny - 1 };
                for k in 0..nz - 1 {
                    for i in 0..nx - 1 {
                        out.push(quad(
                            self.node(i, j, k),
                            self.node(i + 1, j, k),
                            self.node(i + 1, j, k + 1),
                            self.node(i, j, k + 1),
                        ));
                    }
                }
            }
            "xmin" | "xmax" => {
                let i = if side == "xmin" { 0 } else { nx - 1 };
                for k in 0..nz - 1 {
                    for j in 0..ny - 1 {
                        out.push(quad(
                            self.node(i, j, k),
                            self.node(i, j + 1, k),
                            self.node(i, j + 1, k + 1),
                            self.node(i, j, k + 1),
                        ));
                    }
                }
            }
            _ => return Err(Error::InvalidInput(format!("unknown side '{side}'"))),
        }
        Ok(out)
    }

    pub fn translate(&mut self, by: [f64; 3]) {
        for c in &mut self.coords {
            for a in 0..3 {
                c[a] += by[a];
            }
        }
    }

    /// Nodes whose coordinates satisfy `pred`.
    pub fn select(&self, pred: impl Fn(&[f64; 3]) -> bool) -> Vec<usize> {
        (0..self.n_nodes()).filter(|&n| pred(&self.coords[n])).collect()
    }
}

/// `n` equal intervals on `[a, b]`.
pub fn uniform(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..=n).map(|i| a + (b - a) * i as f64 / n as f64).collect()
}

/// `n_fine` equal intervals on `[start, start + fine_len]`, then intervals
/// growing by `ratio` until `end`. A remainder too short for another growth
/// step is merged into the last interval.
pub fn graded(start: f64, fine_len: f64, n_fine: usize, end: f64, ratio: f64) -> Vec<f64> {
    let mut v = uniform(start, start + fine_len, n_fine);
    let mut h = fine_len / n_fine as f64;
    let mut x = start + fine_len;
    while x < end - 1e-12 * (end - start).abs() {
        h *= ratio;
        if x + h * (1.0 + ratio) >= end {
            v.push(end);
            break;
        }
        x += h;
        v.push(x);
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_counts_and_sets() {
        let m = StructuredMesh::grid_2d(&uniform(0.0, 1.0, 4), &uniform(0.0, 1.0, 2)).unwrap();
        assert_eq!(m.n_nodes(), 15);
        assert_eq!(m.elements.len(), 8);
        assert_eq!(m.node_set("ymax").unwrap().len(), 5);
        assert_eq!(m.faces("ymin").unwrap().len(), 4);
        let m = StructuredMesh::grid_3d(&uniform(0.0, 1.0, 2), &uniform(0.0, 1.0, 3), &uniform(0.0, 1.0, 1)).unwrap();
        assert_eq!(m.n_nodes(), 3 * 4 * 2);
        assert_eq!(m.elements.len(), 6);
        assert_eq!(m.node_set("zmin").unwrap().len(), 12);
        assert_eq!(m.faces("zmax").unwrap().len(), 6);
        assert!(m.node_set("nope").is_err());
    }

    #[test]
    fn graded_axis_is_monotone_and_ends_exactly() {
        let v = graded(0.0, 1.0, 4, 10.0, 1.5);
        assert_eq!(&v[..5], &[0.0, 0.25, 0.5, 0.75, 1.0]);
        assert_eq!(*v.last().unwrap(), 10.0);
        assert!(v.windows(2).all(|w| w[1] > w[0]));
        let h: Vec<f64> = v.windows(2).map(|w| w[1] - w[0]).collect();
        assert!(h[4..].windows(2).all(|w| w[1] >= w[0] - 1e-12));
    }

    #[test]
    fn rejects_unsorted_axis() {
        assert!(StructuredMesh::grid_2d(&[0.0, 0.0], &[0.0, 1.0]).is_err());
    }
}
