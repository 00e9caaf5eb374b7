//! Finite lattice domains, simple random walks and the Green-function linear
//! algebra used as exact oracles on small graphs.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rustc_hash::FxHashMap;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, VecDeque};

use crate::error::{domain, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LatticeKind {
    Square,
    /// Axial coordinates `(p, q)` embedded at `p + q/2, q sqrt(3)/2`; the
    /// vertices are the hexagonal cells of the dual.
    Triangular,
    /// Abstract graph without a lattice embedding.
    Graph,
}

const SQUARE_STEPS: [(i64, i64); 4] = [(1, 0), (0, 1), (-1, 0), (0, -1)];
/// Counter-clockwise order around a cell.
pub const TRI_STEPS: [(i64, i64); 6] = [(1, 0), (0, 1), (-1, 1), (-1, 0), (0, -1), (1, -1)];

impl LatticeKind {
    pub fn steps(&self) -> &'static [(i64, i64)] {
        match self {
            LatticeKind::Square => &SQUARE_STEPS,
            LatticeKind::Triangular => &TRI_STEPS,
            LatticeKind::Graph => &[],
        }
    }

    /// Plane position of integer coordinates, in lattice units.
    pub fn embed(&self, c: [i64; 2]) -> Complex64 {
        match self {
            LatticeKind::Triangular => Complex64::new(
                c[0] as f64 + 0.5 * c[1] as f64,
                c[1] as f64 * 3f64.sqrt() / 2.0,
            ),
            _ => Complex64::new(c[0] as f64, c[1] as f64),
        }
    }
}

/// Continuum shapes approximated by [`build_domain`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "lowercase")]
pub enum Shape {
    /// Disc of the given radius centered at 0.
    Disc { radius: f64 },
    /// Axis-parallel square `(-half, half)^2`.
    Square { half: f64 },
    /// Equilateral triangle with corners `0`, `side`, `side e^{i pi/3}`.
    Triangle { side: f64 },
    /// `inner < |z| < outer`.
    Annulus { inner: f64, outer: f64 },
}

impl Shape {
    /// Strict interior test.
    pub fn contains(&self, z: Complex64) -> bool {
        match *self {
            Shape::Disc { radius } => z.norm() < radius,
            Shape::Square { half } => z.re.abs() < half && z.im.abs() < half,
            Shape::Triangle { side } => {
                let s3 = 3f64.sqrt();
                z.im > 0.0 && s3 * z.re - z.im > 0.0 && s3 * (side - z.re) - z.im > 0.0
            }
            Shape::Annulus { inner, outer } => {
                let r = z.norm();
                r > inner && r < outer
            }
        }
    }

    fn extent(&self) -> f64 {
        match *self {
            Shape::Disc { radius } => radius,
            Shape::Square { half } => half * 2f64.sqrt(),
            Shape::Triangle { side } => side,
            Shape::Annulus { outer, .. } => outer,
        }
    }

    pub fn diameter(&self) -> f64 {
        match *self {
            Shape::Disc { radius } => 2.0 * radius,
            Shape::Square { half } => 2.0 * half * 2f64.sqrt(),
            Shape::Triangle { side } => side,
            Shape::Annulus { outer, .. } => 2.0 * outer,
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            Shape::Disc { radius } => radius > 0.0,
            Shape::Square { half } => half > 0.0,
            Shape::Triangle { side } => side > 0.0,
            Shape::Annulus { inner, outer } => inner >= 0.0 && outer > inner,
        };
        if ok && self.extent().is_finite() {
            Ok(())
        } else {
            domain("invalid shape parameters")
        }
    }
}

/// Vertices, symmetric adjacency and boundary tags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatticeDomain {
    pub kind: LatticeKind,
    pub mesh: f64,
    /// Integer lattice coordinates (zero for abstract graphs).
    pub coords: Vec<[i64; 2]>,
    pub adjacency: Vec<Vec<usize>>,
    /// Absorbing set `A`.
    pub absorbing: Vec<bool>,
    /// Named boundary arcs.
    pub arcs: BTreeMap<String, Vec<usize>>,
}

impl LatticeDomain {
    /// Abstract graph on `n` vertices.
    pub fn from_graph(n: usize, edges: &[(usize, usize)], absorbing: &[usize]) -> Result<Self> {
        let mut adjacency = vec![Vec::new(); n];
        for &(a, b) in edges {
            if a >= n || b >= n || a == b {
                return domain(format!("bad edge ({a}, {b})"));
            }
            if !adjacency[a].contains(&b) {
                adjacency[a].push(b);
                adjacency[b].push(a);
            }
        }
        let mut mask = vec![false; n];
        for &a in absorbing {
            if a >= n {
                return domain(format!("absorbing vertex {a} out of range"));
            }
            mask[a] = true;
        }
        Ok(LatticeDomain {
            kind: LatticeKind::Graph,
            mesh: 1.0,
            coords: vec![[0, 0]; n],
            adjacency,
            absorbing: mask,
            arcs: BTreeMap::new(),
        })
    }

    /// Domain on the given lattice coordinates with lattice adjacency.
    pub fn from_coords(kind: LatticeKind, mesh: f64, coords: Vec<[i64; 2]>) -> Self {
        let index: FxHashMap<[i64; 2], usize> =
            coords.iter().enumerate().map(|(i, &c)| (c, i)).collect();
        let adjacency = coords
            .iter()
            .map(|c| {
                kind.steps()
                    .iter()
                    .filter_map(|&(dx, dy)| index.get(&[c[0] + dx, c[1] + dy]).copied())
                    .collect()
            })
            .collect();
        let n = coords.len();
        LatticeDomain {
            kind,
            mesh,
            coords,
            adjacency,
            absorbing: vec![false; n],
            arcs: BTreeMap::new(),
        }
    }

    /// `w x h` block of the square lattice with corner at the origin.
    pub fn rectangle(w: usize, h: usize) -> Self {
        let coords = (0..h as i64)
            .flat_map(|y| (0..w as i64).map(move |x| [x, y]))
            .collect();
        LatticeDomain::from_coords(LatticeKind::Square, 1.0, coords)
    }

    pub fn len(&self) -> usize {
        self.adjacency.len()
    }

    pub fn is_empty(&self) -> bool {
        self.adjacency.is_empty()
    }

    pub fn position(&self, v: usize) -> Complex64 {
        self.kind.embed(self.coords[v]) * self.mesh
    }

    pub fn interior(&self) -> Vec<usize> {
        (0..self.len()).filter(|&v| !self.absorbing[v]).collect()
    }

    pub fn absorbing_vertices(&self) -> Vec<usize> {
        (0..self.len()).filter(|&v| self.absorbing[v]).collect()
    }

    pub fn index(&self) -> FxHashMap<[i64; 2], usize> {
        self.coords
            .iter()
            .enumerate()
            .map(|(i, &c)| (c, i))
            .collect()
    }

    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (a, nb) in self.adjacency.iter().enumerate() {
            for &b in nb {
                if a < b {
                    out.push((a, b));
                }
            }
        }
        out
    }

    /// JSON dump with a fixed key order.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "kind": self.kind,
            "mesh": self.mesh,
            "vertices": (0..self.len()).map(|v| {
                let z = self.position(v);
                serde_json::json!({"id": v, "coord": self.coords[v], "x": z.re, "y": z.im})
            }).collect::<Vec<_>>(),
            "adjacency": self.adjacency,
            "absorbing": self.absorbing_vertices(),
            "arcs": self.arcs,
        })
    }
}

/// Lattice approximation of `shape` at mesh `mesh`: interior vertices lie
/// strictly inside, absorbing vertices are their outside neighbors. A mesh
/// at least the diameter of the shape does not resolve it and counts as an
/// empty interior.
pub fn build_domain(shape: Shape, mesh: f64, kind: LatticeKind) -> Result<LatticeDomain> {
    shape.validate()?;
    if !(mesh > 0.0) || !mesh.is_finite() {
        return domain("mesh must be positive");
    }
    if kind == LatticeKind::Graph {
        return domain("build_domain needs a lattice kind");
    }
    if mesh >= shape.diameter() {
        return Err(Error::EmptyInterior);
    }
    let r = (shape.extent() / mesh).ceil() as i64 + 2;
    let inside = |c: [i64; 2]| shape.contains(kind.embed(c) * mesh);
    let mut coords = Vec::new();
    for q in -2 * r..=2 * r {
        for p in -2 * r..=2 * r {
            let c = [p, q];
            if inside(c) {
                coords.push(c);
            }
        }
    }
    if coords.is_empty() {
        return Err(Error::EmptyInterior);
    }
    let n_int = coords.len();
    let mut index: FxHashMap<[i64; 2], usize> =
        coords.iter().enumerate().map(|(i, &c)| (c, i)).collect();
    let mut adjacency: Vec<Vec<usize>> = vec![Vec::new(); n_int];
    for v in 0..n_int {
        let c = coords[v];
        for &(dx, dy) in kind.steps() {
            let nc = [c[0] + dx, c[1] + dy];
            let w = match index.get(&nc) {
                Some(&w) => w,
                None => {
                    let w = coords.len();
                    coords.push(nc);
                    adjacency.push(Vec::new());
                    index.insert(nc, w);
                    w
                }
            };
            adjacency[v].push(w);
            if w >= n_int {
                adjacency[w].push(v);
            }
        }
    }
    let absorbing = (0..coords.len()).map(|v| v >= n_int).collect();
    Ok(LatticeDomain {
        kind,
        mesh,
        coords,
        adjacency,
        absorbing,
        arcs: BTreeMap::new(),
    })
}

/// Sequence of adjacent vertex indices.
pub type LatticePath = Vec<usize>;

pub const SRW_STEP_CAP: u64 = 1_000_000_000;

/// Simple random walk from `start` until it enters `absorbing`.
pub fn srw_path<R: Rng + ?Sized>(
    d: &LatticeDomain,
    start: usize,
    absorbing: &[bool],
    rng: &mut R,
) -> Result<LatticePath> {
    if start >= d.len() || absorbing.len() != d.len() {
        return domain("start or absorbing mask out of range");
    }
    let mut path = vec![start];
    let mut v = start;
    let mut steps = 0u64;
    while !absorbing[v] {
        let nb = &d.adjacency[v];
        if nb.is_empty() {
            return Err(Error::Singular(format!("vertex {v} has no neighbors")));
        }
        v = nb[rng.random_range(0..nb.len())];
        path.push(v);
        steps += 1;
        if steps >= SRW_STEP_CAP {
            return Err(Error::StepCap(SRW_STEP_CAP));
        }
    }
    Ok(path)
}

/// Every vertex outside `absorbing` must reach it.
fn check_reaches(d: &LatticeDomain, absorbing: &[bool]) -> Result<()> {
    let mut seen = absorbing.to_vec();
    let mut queue: VecDeque<usize> = (0..d.len()).filter(|&v| absorbing[v]).collect();
    if queue.is_empty() {
        return Err(Error::Singular("absorbing set is empty".into()));
    }
    while let Some(v) = queue.pop_front() {
        for &w in &d.adjacency[v] {
            if !seen[w] {
                seen[w] = true;
                queue.push_back(w);
            }
        }
    }
    match seen.iter().position(|s| !s) {
        Some(v) => Err(Error::Singular(format!(
            "vertex {v} cannot reach the absorbing set"
        ))),
        None => Ok(()),
    }
}

/// Dense factorization up to this many free vertices, conjugate gradients above.
pub const DENSE_LIMIT: usize = 2500;

/// Solve `L u = rhs` where `L = D - Adj` restricted to the free vertices.
/// `L` is symmetric positive definite once every free vertex reaches `A`.
fn solve_laplacian(
    d: &LatticeDomain,
    free: &[usize],
    slot: &[Option<usize>],
    rhs: &[f64],
) -> Result<Vec<f64>> {
    let n = free.len();
    if n <= DENSE_LIMIT {
        let mut m = DMatrix::<f64>::zeros(n, n);
        for (i, &v) in free.iter().enumerate() {
            m[(i, i)] = d.adjacency[v].len() as f64;
            for &w in &d.adjacency[v] {
                if let Some(j) = slot[w] {
                    m[(i, j)] -= 1.0;
                }
            }
        }
        let chol = m
            .cholesky()
            .ok_or_else(|| Error::Singular("Laplacian is not positive definite".into()))?;
        return Ok(chol
            .solve(&DVector::from_column_slice(rhs))
            .as_slice()
            .to_vec());
    }
    // Jacobi-preconditioned conjugate gradients.
    let apply = |x: &[f64], out: &mut [f64]| {
        for (i, &v) in free.iter().enumerate() {
            let mut s = d.adjacency[v].len() as f64 * x[i];
            for &w in &d.adjacency[v] {
                if let Some(j) = slot[w] {
                    s -= x[j];
                }
            }
            out[i] = s;
        }
    };
    let diag: Vec<f64> = free.iter().map(|&v| d.adjacency[v].len() as f64).collect();
    let mut x = vec![0.0; n];
    let mut r = rhs.to_vec();
    let mut z: Vec<f64> = r.iter().zip(&diag).map(|(a, b)| a / b).collect();
    let mut p = z.clone();
    let mut ap = vec![0.0; n];
    let norm_b = rhs.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-300);
    let mut rz: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
    for _ in 0..20 * n + 1000 {
        apply(&p, &mut ap);
        let pap: f64 = p.iter().zip(&ap).map(|(a, b)| a * b).sum();
        if pap <= 0.0 {
            return Err(Error::Singular("Laplacian is not positive definite".into()));
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        if r.iter().map(|v| v * v).sum::<f64>().sqrt() < 1e-12 * norm_b {
            return Ok(x);
        }
        for i in 0..n {
            z[i] = r[i] / diag[i];
        }
        let rz_new: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(Error::Numerical {
        step: 0,
        reason: "conjugate gradients did not converge".into(),
    })
}

fn free_slots(d: &LatticeDomain, absorbing: &[bool]) -> (Vec<usize>, Vec<Option<usize>>) {
    let free: Vec<usize> = (0..d.len()).filter(|&v| !absorbing[v]).collect();
    let mut slot = vec![None; d.len()];
    for (i, &v) in free.iter().enumerate() {
        slot[v] = Some(i);
    }
    (free, slot)
}

/// `G(x, y)`: expected visits to `y` before hitting `A`, walk started at `x`.
#[derive(Debug, Clone, PartialEq)]
pub struct GreenMatrix {
    pub free: Vec<usize>,
    slot: Vec<Option<usize>>,
    pub matrix: DMatrix<f64>,
}

impl GreenMatrix {
    /// Zero when either vertex is absorbing.
    pub fn get(&self, x: usize, y: usize) -> f64 {
        match (self.slot[x], self.slot[y]) {
            (Some(i), Some(j)) => self.matrix[(i, j)],
            _ => 0.0,
        }
    }
}

/// `(I - P)^{-1}` on the vertices outside `absorbing`.
pub fn green_matrix(d: &LatticeDomain, absorbing: &[bool]) -> Result<GreenMatrix> {
    if absorbing.len() != d.len() {
        return domain("absorbing mask has the wrong length");
    }
    check_reaches(d, absorbing)?;
    let (free, slot) = free_slots(d, absorbing);
    let n = free.len();
    let mut m = DMatrix::<f64>::identity(n, n);
    for (i, &v) in free.iter().enumerate() {
        let deg = d.adjacency[v].len() as f64;
        for &w in &d.adjacency[v] {
            if let Some(j) = slot[w] {
                m[(i, j)] -= 1.0 / deg;
            }
        }
    }
    let matrix = m
        .lu()
        .try_inverse()
        .ok_or_else(|| Error::Singular("I - P is singular".into()))?;
    Ok(GreenMatrix { free, slot, matrix })
}

/// `G(x, A)`: expected visits to `x` before `A` for the walk started at `x`.
pub fn green_at(d: &LatticeDomain, x: usize, absorbing: &[bool]) -> Result<f64> {
    if absorbing[x] {
        return Ok(0.0);
    }
    Ok(green_matrix(d, absorbing)?.get(x, x))
}

/// Dirichlet problem: `values` are read on absorbing vertices; the returned
/// vector holds the harmonic extension on the rest.
pub fn harmonic_solve(d: &LatticeDomain, absorbing: &[bool], values: &[f64]) -> Result<Vec<f64>> {
    if absorbing.len() != d.len() || values.len() != d.len() {
        return domain("mask and values must cover every vertex");
    }
    check_reaches(d, absorbing)?;
    let (free, slot) = free_slots(d, absorbing);
    let rhs: Vec<f64> = free
        .iter()
        .map(|&v| {
            d.adjacency[v]
                .iter()
                .filter(|&&w| absorbing[w])
                .map(|&w| values[w])
                .sum()
        })
        .collect();
    let u = solve_laplacian(d, &free, &slot, &rhs)?;
    let mut out = values.to_vec();
    for (i, &v) in free.iter().enumerate() {
        out[v] = u[i];
    }
    Ok(out)
}

/// Exit law `P_x[X_tau = y]` for every absorbing `y`, from one solve of the
/// adjoint system.
pub fn exit_distribution(d: &LatticeDomain, start: usize, absorbing: &[bool]) -> Result<Vec<f64>> {
    if absorbing.len() != d.len() || start >= d.len() {
        return domain("start or mask out of range");
    }
    let mut law = vec![0.0; d.len()];
    if absorbing[start] {
        law[start] = 1.0;
        return Ok(law);
    }
    check_reaches(d, absorbing)?;
    let (free, slot) = free_slots(d, absorbing);
    let mut rhs = vec![0.0; free.len()];
    rhs[slot[start].unwrap()] = 1.0;
    // Visits v = D u with L u = e_start.
    let u = solve_laplacian(d, &free, &slot, &rhs)?;
    for (i, &z) in free.iter().enumerate() {
        // v(z) p(z, y) = u(z) deg(z) / deg(z).
        for &y in &d.adjacency[z] {
            if absorbing[y] {
                law[y] += u[i];
            }
        }
    }
    Ok(law)
}
