use std::collections::VecDeque;

use super::SparseSym;

/// Symmetric fill-reducing permutation applied before factorization.
///
/// A permutation `perm` lists original indices in elimination order.
#[derive(Debug, Clone, Default)]
pub enum Ordering {
    Natural,
    #[default]
    ReverseCuthillMcKee,
    /// Coordinate-bisection nested dissection; one point per unknown.
    NestedDissection(Vec<[f64; 3]>),
    Given(Vec<usize>),
}

impl Ordering {
    pub(crate) fn permutation(&self, k: &SparseSym) -> Vec<usize> {
        match self {
            Ordering::Natural => (0..k.n()).collect(),
            Ordering::ReverseCuthillMcKee => reverse_cuthill_mckee(k),
            Ordering::NestedDissection(coords) if coords.len() == k.n() => {
                nested_dissection(k, coords)
            }
            Ordering::NestedDissection(_) => reverse_cuthill_mckee(k),
            Ordering::Given(p) => p.clone(),
        }
    }
}

fn neighbours(k: &SparseSym, i: usize) -> impl Iterator<Item = usize> + '_ {
    k.row(i).map(|(j, _)| j).filter(move |&j| j != i)
}

fn degree(k: &SparseSym, i: usize) -> usize {
    neighbours(k, i).count()
}

/// BFS from `root`; returns a minimum-degree vertex of the deepest level and the depth.
fn bfs_levels(k: &SparseSym, root: usize, seen: &mut [bool], stamp: &mut Vec<usize>) -> (usize, usize) {
    let mut level = vec![root];
    seen[root] = true;
    stamp.push(root);
    let mut depth = 0;
    let mut last_level = level.clone();
    while !level.is_empty() {
        let mut next = Vec::new();
        for &v in &level {
            for w in neighbours(k, v) {
                if !seen[w] {
                    seen[w] = true;
                    stamp.push(w);
                    next.push(w);
                }
            }
        }
        if !next.is_empty() {
            depth += 1;
            last_level = next.clone();
        }
        level = next;
    }
    let far = *last_level
        .iter()
        .min_by_key(|&&v| degree(k, v))
        .expect("non-empty level");
    (far, depth)
}

fn pseudo_peripheral(k: &SparseSym, start: usize, seen: &mut [bool]) -> usize {
    let mut stamp = Vec::new();
    let mut root = start;
    let (mut far, mut depth) = bfs_levels(k, root, seen, &mut stamp);
    for _ in 0..8 {
        for &v in &stamp {
            seen[v] = false;
        }
        stamp.clear();
        let (f2, d2) = bfs_levels(k, far, seen, &mut stamp);
        if d2 <= depth {
            break;
        }
        root = far;
        far = f2;
        depth = d2;
    }
    for &v in &stamp {
        seen[v] = false;
    }
    root
}

/// Reverse Cuthill-McKee ordering, one BFS per connected component.
pub fn reverse_cuthill_mckee(k: &SparseSym) -> Vec<usize> {
    let n = k.n();
    let mut order = Vec::with_capacity(n);
    let mut placed = vec![false; n];
    let mut scratch = vec![false; n];
    let mut by_degree: Vec<usize> = (0..n).collect();
    by_degree.sort_by_key(|&i| degree(k, i));
    for &s in &by_degree {
        if placed[s] {
            continue;
        }
        let root = pseudo_peripheral(k, s, &mut scratch);
        let mut queue = VecDeque::from([root]);
        placed[root] = true;
        while let Some(v) = queue.pop_front() {
            order.push(v);
            let mut nb: Vec<usize> = neighbours(k, v).filter(|&w| !placed[w]).collect();
            nb.sort_by_key(|&w| degree(k, w));
            for w in nb {
                placed[w] = true;
                queue.push_back(w);
            }
        }
    }
    order.reverse();
    order
}

const LEAF_SIZE: usize = 64;

/// Nested dissection by recursive coordinate bisection.
///
/// Each set is split at the median of its widest coordinate; the vertices
/// of the lower half adjacent to the upper half form the separator, which
/// is numbered after both halves.
pub fn nested_dissection(k: &SparseSym, coords: &[[f64; 3]]) -> Vec<usize> {
    let n = k.n();
    let mut side = vec![0u8; n];
    let mut order = Vec::with_capacity(n);
    dissect((0..n).collect(), k, coords, &mut side, &mut order);
    order
}

fn dissect(verts: Vec<usize>, k: &SparseSym, coords: &[[f64; 3]], side: &mut [u8], out: &mut Vec<usize>) {
    if verts.len() <= LEAF_SIZE {
        out.extend(verts);
        return;
    }
    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    for &v in &verts {
        for a in 0..3 {
            lo[a] = lo[a].min(coords[v][a]);
            hi[a] = hi[a].max(coords[v][a]);
        }
    }
    let mut axes = [0usize, 1, 2];
    axes.sort_by(|&a, &b| (hi[b] - lo[b]).total_cmp(&(hi[a] - lo[a])));
    let mut split = None;
    for &axis in &axes {
        if hi[axis] <= lo[axis] {
            continue;
        }
        let mut vals: Vec<f64> = verts.iter().map(|&v| coords[v][axis]).collect();
        vals.sort_by(f64::total_cmp);
        let mut m = vals[vals.len() / 2];
        if m <= lo[axis] {
            // all mass at the bottom; split above the first distinct value
            m = vals.iter().copied().find(|&x| x > lo[axis]).unwrap_or(hi[axis]);
        }
        split = Some((axis, m));
        break;
    }
    let Some((axis, m)) = split else {
        out.extend(verts);
        return;
    };
    let (left, right): (Vec<usize>, Vec<usize>) = verts.iter().partition(|&&v| coords[v][axis] < m);
    for &v in &right {
        side[v] = 2;
    }
    for &v in &left {
        side[v] = 1;
    }
    let (sep, left): (Vec<usize>, Vec<usize>) = left
        .into_iter()
        .partition(|&v| neighbours(k, v).any(|w| side[w] == 2));
    for &v in &verts {
        side[v] = 0;
    }
    dissect(left, k, coords, side, out);
    dissect(right, k, coords, side, out);
    out.extend(sep);
}
