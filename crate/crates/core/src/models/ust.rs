use rand::Rng;
use rustc_hash::FxHashSet;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::lattice::{LatticeDomain, LatticeKind, LatticePath};

/// Rooted spanning tree; `parent[root] == root`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpanningTree {
    pub parent: Vec<usize>,
    pub root: usize,
}

impl SpanningTree {
    /// Edges as sorted pairs, sorted.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut e: Vec<_> = (0..self.parent.len())
            .filter(|&v| v != self.root)
            .map(|v| (v.min(self.parent[v]), v.max(self.parent[v])))
            .collect();
        e.sort_unstable();
        e
    }

    pub fn contains_edge(&self, a: usize, b: usize) -> bool {
        (a != self.root && self.parent[a] == b) || (b != self.root && self.parent[b] == a)
    }

    /// Checks the parent pointers reach the root without cycles.
    pub fn validate(&self) -> Result<()> {
        let n = self.parent.len();
        if self.root >= n || self.parent[self.root] != self.root {
            return domain("bad root");
        }
        for v in 0..n {
            let mut u = v;
            for _ in 0..=n {
                if u == self.root {
                    break;
                }
                u = self.parent[u];
            }
            if u != self.root {
                return domain(format!("vertex {v} does not reach the root"));
            }
        }
        Ok(())
    }
}

const WILSON_STEP_CAP: u64 = 1_000_000_000;

fn check_order(n: usize, order: &[usize]) -> Result<()> {
    let mut seen = vec![false; n];
    for &v in order {
        if v >= n || seen[v] {
            return domain("vertex order must be a permutation");
        }
        seen[v] = true;
    }
    if order.len() != n {
        return domain("vertex order must cover every vertex");
    }
    Ok(())
}

fn grow<R: Rng + ?Sized>(
    d: &LatticeDomain,
    order: &[usize],
    in_tree: &mut [bool],
    parent: &mut [usize],
    rng: &mut R,
) -> Result<()> {
    let mut next = vec![usize::MAX; d.len()];
    let mut steps = 0u64;
    for &v in order {
        let mut u = v;
        while !in_tree[u] {
            let nb = &d.adjacency[u];
            if nb.is_empty() {
                return domain("graph is not connected");
            }
            next[u] = nb[rng.random_range(0..nb.len())];
            u = next[u];
            steps += 1;
            if steps > WILSON_STEP_CAP {
                return Err(Error::StepCap(WILSON_STEP_CAP));
            }
        }
        // Following the last exits retraces the loop erasure.
        let mut u = v;
        while !in_tree[u] {
            in_tree[u] = true;
            parent[u] = next[u];
            u = next[u];
        }
    }
    Ok(())
}

/// Wilson's algorithm rooted at `order[0]`: each later vertex runs a walk
/// to the current tree and its loop erasure is attached.
pub fn wilson_ust<R: Rng + ?Sized>(
    d: &LatticeDomain,
    order: &[usize],
    rng: &mut R,
) -> Result<SpanningTree> {
    check_order(d.len(), order)?;
    if order.is_empty() {
        return domain("empty graph");
    }
    let root = order[0];
    let mut in_tree = vec![false; d.len()];
    in_tree[root] = true;
    let mut parent: Vec<usize> = (0..d.len()).collect();
    grow(d, order, &mut in_tree, &mut parent, rng)?;
    Ok(SpanningTree { parent, root })
}

/// Uniform spanning tree containing the path `wired`, which is contracted to
/// a single root vertex while the walks run.
pub fn wilson_ust_wired<R: Rng + ?Sized>(
    d: &LatticeDomain,
    wired: &[usize],
    order: &[usize],
    rng: &mut R,
) -> Result<SpanningTree> {
    check_order(d.len(), order)?;
    if wired.is_empty() {
        return domain("wired arc is empty");
    }
    let mut in_tree = vec![false; d.len()];
    let mut parent: Vec<usize> = (0..d.len()).collect();
    for (i, &v) in wired.iter().enumerate() {
        if v >= d.len() || in_tree[v] {
            return domain("malformed wired arc");
        }
        if i > 0 {
            if !d.adjacency[v].contains(&wired[i - 1]) {
                return domain("wired arc vertices must be consecutive neighbors");
            }
            parent[v] = wired[i - 1];
        }
        in_tree[v] = true;
    }
    grow(d, order, &mut in_tree, &mut parent, rng)?;
    Ok(SpanningTree {
        parent,
        root: wired[0],
    })
}

/// The unique path from `a` to `b` in the tree.
pub fn tree_path(t: &SpanningTree, a: usize, b: usize) -> Result<LatticePath> {
    let n = t.parent.len();
    if a >= n || b >= n {
        return domain("vertex out of range");
    }
    let mut up_a = vec![a];
    while *up_a.last().unwrap() != t.root {
        let v = *up_a.last().unwrap();
        up_a.push(t.parent[v]);
        if up_a.len() > n {
            return domain("parent pointers contain a cycle");
        }
    }
    let pos: rustc_hash::FxHashMap<usize, usize> =
        up_a.iter().enumerate().map(|(i, &v)| (v, i)).collect();
    let mut up_b = vec![b];
    while !pos.contains_key(up_b.last().unwrap()) {
        let v = *up_b.last().unwrap();
        up_b.push(t.parent[v]);
        if up_b.len() > n {
            return domain("parent pointers contain a cycle");
        }
    }
    let meet = pos[up_b.last().unwrap()];
    let mut path: Vec<usize> = up_a[..=meet].to_vec();
    up_b.pop();
    path.extend(up_b.into_iter().rev());
    Ok(path)
}

/// Contour around a tree on `(1/4 + Z/2)^2`, in quarter lattice units:
/// corner `(x +- 1/4, y +- 1/4)` is stored as `(4x +- 1, 4y +- 1)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PeanoCurve {
    pub points: Vec<[i64; 2]>,
}

impl PeanoCurve {
    pub fn plane_points(&self) -> Vec<[f64; 2]> {
        self.points
            .iter()
            .map(|p| [p[0] as f64 / 4.0, p[1] as f64 / 4.0])
            .collect()
    }
}

// Corners in counter-clockwise order, the lattice direction crossed when
// turning past each one, and their offsets.
const CORNER_OFFSET: [[i64; 2]; 4] = [[1, -1], [1, 1], [-1, 1], [-1, -1]];
const CORNER_DIR: [[i64; 2]; 4] = [[1, 0], [0, 1], [-1, 0], [0, -1]];

/// Space-filling contour of a tree on a rectangle whose bottom-row `wired`
/// arc belongs to the tree. The closed contour keeps the tree on its left;
/// cutting out the corners below the wired arc leaves a path from its right
/// end back to its left end.
pub fn ust_peano(d: &LatticeDomain, t: &SpanningTree, wired: &[usize]) -> Result<PeanoCurve> {
    if d.kind != LatticeKind::Square || d.is_empty() {
        return domain("Peano contours need a square-lattice domain");
    }
    if t.parent.len() != d.len() {
        return domain("tree and domain sizes differ");
    }
    let (xmin, xmax) = (
        d.coords.iter().map(|c| c[0]).min().unwrap(),
        d.coords.iter().map(|c| c[0]).max().unwrap(),
    );
    let (ymin, ymax) = (
        d.coords.iter().map(|c| c[1]).min().unwrap(),
        d.coords.iter().map(|c| c[1]).max().unwrap(),
    );
    if ((xmax - xmin + 1) * (ymax - ymin + 1)) as usize != d.len() {
        return domain("domain is not a rectangle");
    }
    if wired.is_empty() {
        return domain("wired arc is empty");
    }
    for (i, &v) in wired.iter().enumerate() {
        if v >= d.len() || d.coords[v][1] != ymin {
            return domain("wired arc must lie on the bottom row");
        }
        if i > 0 {
            let prev = wired[i - 1];
            if d.coords[v][0] != d.coords[prev][0] + 1 || !t.contains_edge(v, prev) {
                return domain("wired arc must run left to right along tree edges");
            }
        }
    }
    let index = d.index();
    let n = d.len();
    let mut loop_pts = Vec::with_capacity(4 * n);
    let (mut v, mut c) = (wired[0], 3usize);
    for _ in 0..4 * n {
        let [x, y] = d.coords[v];
        loop_pts.push([4 * x + CORNER_OFFSET[c][0], 4 * y + CORNER_OFFSET[c][1]]);
        let nc = [x + CORNER_DIR[c][0], y + CORNER_DIR[c][1]];
        match index.get(&nc) {
            Some(&u) if t.contains_edge(v, u) => {
                v = u;
                c = (c + 3) % 4;
            }
            _ => c = (c + 1) % 4,
        }
    }
    if v != wired[0] || c != 3 {
        return Err(Error::Invalid(
            "contour did not close; the tree does not span".into(),
        ));
    }
    let cut = 2 * wired.len();
    let points = loop_pts[cut..].to_vec();
    let unique: FxHashSet<[i64; 2]> = loop_pts.iter().copied().collect();
    if unique.len() != loop_pts.len() {
        return Err(Error::Invalid("contour revisits a corner".into()));
    }
    Ok(PeanoCurve { points })
}
