//! Site percolation on the triangular lattice (hexagonal cells): crossings,
//! Cardy's triangle experiment, exploration interfaces and arm events.
//!
//! Colors: `true` is open (white), `false` is closed (black).

use num_complex::Complex64;
use petgraph::unionfind::UnionFind;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, VecDeque};

use crate::error::{domain, Error, Result};
use crate::formulas::{cardy_equilateral, TriangleFrame};
use crate::lattice::{LatticeDomain, LatticeKind, TRI_STEPS};
use crate::montecarlo::{map_trials, splitmix64, EstimateRecord};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PercolationConfig {
    pub domain: LatticeDomain,
    pub colors: Vec<bool>,
    pub p: f64,
}

fn tri_domain(coords: Vec<[i64; 2]>) -> LatticeDomain {
    LatticeDomain::from_coords(LatticeKind::Triangular, 1.0, coords)
}

fn arc_where(d: &LatticeDomain, f: impl Fn([i64; 2]) -> bool) -> Vec<usize> {
    (0..d.len()).filter(|&v| f(d.coords[v])).collect()
}

/// `n x n` rhombus `0 <= p, q < n` with sides `left`, `right`, `bottom`, `top`.
pub fn rhombus(n: usize) -> LatticeDomain {
    let n = n as i64;
    let mut d = tri_domain((0..n).flat_map(|q| (0..n).map(move |p| [p, q])).collect());
    d.arcs.insert("left".into(), arc_where(&d, |c| c[0] == 0));
    d.arcs
        .insert("right".into(), arc_where(&d, |c| c[0] == n - 1));
    d.arcs.insert("bottom".into(), arc_where(&d, |c| c[1] == 0));
    d.arcs
        .insert("top".into(), arc_where(&d, |c| c[1] == n - 1));
    d
}

/// Equilateral triangle of cells `p, q >= 0, p + q < n` with corners
/// O = (0,0), A = (n-1, 0), C = (0, n-1). Arc `ca` runs from A to C.
pub fn triangle_cells(n: usize) -> LatticeDomain {
    let n = n as i64;
    let mut d = tri_domain(
        (0..n)
            .flat_map(|q| (0..n - q).map(move |p| [p, q]))
            .collect(),
    );
    d.arcs.insert("oa".into(), arc_where(&d, |c| c[1] == 0));
    d.arcs.insert("oc".into(), arc_where(&d, |c| c[0] == 0));
    let mut ca = arc_where(&d, |c| c[0] + c[1] == n - 1);
    ca.sort_by_key(|&v| d.coords[v][1]);
    d.arcs.insert("ca".into(), ca);
    d
}

/// Cells with `r0 < |z| <= n`, arcs `inner` and `outer` for cells next to
/// the excluded disc and the exterior.
pub fn annulus_cells(r0: f64, n: f64) -> Result<LatticeDomain> {
    if !(r0 >= 0.0 && n > r0 + 0.5) {
        return domain("need 0 <= r0 < n");
    }
    let kind = LatticeKind::Triangular;
    let inside = |c: [i64; 2]| {
        let r = kind.embed(c).norm();
        r > r0 && r <= n
    };
    let m = n.ceil() as i64 + 2;
    let mut coords = Vec::new();
    for q in -2 * m..=2 * m {
        for p in -2 * m..=2 * m {
            if inside([p, q]) {
                coords.push([p, q]);
            }
        }
    }
    let mut d = tri_domain(coords);
    let touches = |c: [i64; 2], outer: bool| {
        TRI_STEPS.iter().any(|&(dx, dy)| {
            let nc = [c[0] + dx, c[1] + dy];
            !inside(nc) && ((kind.embed(nc).norm() > n) == outer)
        })
    };
    d.arcs
        .insert("inner".into(), arc_where(&d, |c| touches(c, false)));
    d.arcs
        .insert("outer".into(), arc_where(&d, |c| touches(c, true)));
    Ok(d)
}

/// Forced colors from the `black` and `white` arcs.
fn forced(d: &LatticeDomain) -> Vec<Option<bool>> {
    let mut f = vec![None; d.len()];
    for (name, color) in [("black", false), ("white", true)] {
        if let Some(arc) = d.arcs.get(name) {
            for &v in arc {
                f[v] = Some(color);
            }
        }
    }
    f
}

fn check_p(p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return domain("p must lie in [0, 1]");
    }
    Ok(())
}

/// Independent colors with `P[open] = p`, cells drawn in index order.
pub fn percolation_sample<R: Rng + ?Sized>(
    d: &LatticeDomain,
    p: f64,
    rng: &mut R,
) -> Result<PercolationConfig> {
    check_p(p)?;
    let f = forced(d);
    let colors = f
        .iter()
        .map(|c| c.unwrap_or_else(|| rng.random_bool(p)))
        .collect();
    Ok(PercolationConfig {
        domain: d.clone(),
        colors,
        p,
    })
}

/// Color of `cell` under the hash key `key`, so that a walk revealing cells
/// lazily and a full sample agree cell by cell.
#[inline]
pub fn keyed_color(key: u64, cell: usize, p: f64) -> bool {
    let h = splitmix64(key ^ splitmix64(cell as u64 + 1));
    ((h >> 11) as f64) * (1.0 / (1u64 << 53) as f64) < p
}

pub fn percolation_sample_keyed(d: &LatticeDomain, p: f64, key: u64) -> Result<PercolationConfig> {
    check_p(p)?;
    let f = forced(d);
    let colors = (0..d.len())
        .map(|v| f[v].unwrap_or_else(|| keyed_color(key, v, p)))
        .collect();
    Ok(PercolationConfig {
        domain: d.clone(),
        colors,
        p,
    })
}

fn clusters(d: &LatticeDomain, colors: &[bool], color: bool) -> UnionFind<usize> {
    let mut uf = UnionFind::new(d.len());
    for v in 0..d.len() {
        if colors[v] != color {
            continue;
        }
        for &w in &d.adjacency[v] {
            if w > v && colors[w] == color {
                uf.union(v, w);
            }
        }
    }
    uf
}

/// Is there a path of cells of `color` from `from` to `to`?
pub fn arc_crossing(cfg: &PercolationConfig, from: &[usize], to: &[usize], color: bool) -> bool {
    let uf = clusters(&cfg.domain, &cfg.colors, color);
    let mut roots: Vec<usize> = from
        .iter()
        .filter(|&&v| cfg.colors[v] == color)
        .map(|&v| uf.find(v))
        .collect();
    roots.sort_unstable();
    to.iter()
        .any(|&v| cfg.colors[v] == color && roots.binary_search(&uf.find(v)).is_ok())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CrossingDirection {
    LeftRight,
    TopBottom,
}

/// Crossing of a rhombus by cells of `color` (open when `true`).
pub fn crossing(cfg: &PercolationConfig, dir: CrossingDirection, color: bool) -> Result<bool> {
    let (a, b) = match dir {
        CrossingDirection::LeftRight => ("left", "right"),
        CrossingDirection::TopBottom => ("bottom", "top"),
    };
    match (cfg.domain.arcs.get(a), cfg.domain.arcs.get(b)) {
        (Some(x), Some(y)) => Ok(arc_crossing(cfg, x, y, color)),
        _ => domain("domain lacks the crossing arcs"),
    }
}

/// Open left-right crossing frequency of the `n x n` rhombus.
pub fn rhombus_crossing_experiment(
    n: usize,
    p: f64,
    trials: u64,
    seed: u64,
    par: usize,
) -> Result<EstimateRecord> {
    check_p(p)?;
    let d = rhombus(n);
    let hits: Vec<Result<f64>> = map_trials(trials, seed, par, |_, rng| {
        let cfg = percolation_sample(&d, p, rng)?;
        Ok(crossing(&cfg, CrossingDirection::LeftRight, true)? as u8 as f64)
    });
    bernoulli_record("rhombus_crossing", n as f64, hits, seed)
}

fn bernoulli_record(
    name: &str,
    scale: f64,
    hits: Vec<Result<f64>>,
    seed: u64,
) -> Result<EstimateRecord> {
    let hits: Vec<f64> = hits.into_iter().collect::<Result<_>>()?;
    if hits.is_empty() {
        return Err(Error::Invalid("trials must be at least 1".into()));
    }
    let n = hits.len() as f64;
    let value = hits.iter().sum::<f64>() / n;
    Ok(EstimateRecord {
        name: name.into(),
        scale,
        value,
        stderr: (value * (1.0 - value) / n).sqrt(),
        trials: hits.len() as u64,
        seed,
    })
}

/// Crossing estimate next to Cardy's value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CardyReport {
    pub record: EstimateRecord,
    pub exact: f64,
    /// Number of `ca` cells, counted from C, in the target arc.
    pub target_cells: usize,
}

/// Open crossing in the side-`n` triangle from side OA to the part of CA
/// between X and C, where `|CX| / |CA|` is as close to `s` as the lattice allows.
///
/// Cells of `ca` have unit length along a side of length `n`. X sits at the
/// centre of the last target cell: with the target being the `m + 1` cells
/// nearest C, `|CX| = m + 1/2`. This is where duality puts it, since the
/// crossing probabilities for `m` and `n - 1 - m` add up to exactly one.
pub fn cardy_crossing_experiment(
    n: usize,
    s: f64,
    p: f64,
    trials: u64,
    seed: u64,
    par: usize,
) -> Result<CardyReport> {
    check_p(p)?;
    if n < 2 || !(0.0..=1.0).contains(&s) {
        return domain("need n >= 2 and s in [0, 1]");
    }
    let d = triangle_cells(n);
    let ca = &d.arcs["ca"];
    let cells = ((s * n as f64 - 0.5).round() + 1.0).clamp(0.0, n as f64) as usize;
    let target: Vec<usize> = ca[n - cells..].to_vec();
    let source = d.arcs["oa"].clone();
    let hits = map_trials(trials, seed, par, |_, rng| {
        let cfg = percolation_sample(&d, p, rng)?;
        Ok(arc_crossing(&cfg, &source, &target, true) as u8 as f64)
    });
    let record = bernoulli_record("cardy_crossing", s, hits, seed)?;
    let frame = TriangleFrame::standard(1.0);
    let cx = ((cells as f64 - 0.5) / n as f64).max(0.0);
    let x = frame.c + (frame.a - frame.c) * cx;
    Ok(CardyReport {
        record,
        exact: cardy_equilateral(&frame, x)?,
        target_cells: cells,
    })
}

/// Number of distinct open clusters touching both the `inner` and `outer` arcs.
pub fn arm_count(cfg: &PercolationConfig) -> Result<usize> {
    let d = &cfg.domain;
    let (Some(inner), Some(outer)) = (d.arcs.get("inner"), d.arcs.get("outer")) else {
        return domain("domain lacks inner and outer arcs");
    };
    let uf = clusters(d, &cfg.colors, true);
    let mut a: Vec<usize> = inner
        .iter()
        .filter(|&&v| cfg.colors[v])
        .map(|&v| uf.find(v))
        .collect();
    a.sort_unstable();
    a.dedup();
    let mut b: Vec<usize> = outer
        .iter()
        .filter(|&&v| cfg.colors[v])
        .map(|&v| uf.find(v))
        .collect();
    b.sort_unstable();
    b.dedup();
    Ok(a.iter().filter(|r| b.binary_search(r).is_ok()).count())
}

/// At least `arms` disjoint open clusters cross the annulus `r0 < |z| <= n`.
pub fn arm_indicator<R: Rng + ?Sized>(
    d: &LatticeDomain,
    arms: usize,
    p: f64,
    rng: &mut R,
) -> Result<bool> {
    if arms < 1 {
        return domain("need at least one arm");
    }
    Ok(arm_count(&percolation_sample(d, p, rng)?)? >= arms)
}

/// Arm frequency at each outer radius, with fresh trials per radius.
pub fn arm_experiment(
    r0: f64,
    radii: &[f64],
    arms: usize,
    p: f64,
    trials: u64,
    seed: u64,
    par: usize,
) -> Result<Vec<EstimateRecord>> {
    radii
        .iter()
        .enumerate()
        .map(|(i, &n)| {
            let d = annulus_cells(r0, n)?;
            let hits = map_trials(
                trials,
                crate::montecarlo::trial_seed(seed, i as u64),
                par,
                |_, rng| Ok(arm_indicator(&d, arms, p, rng)? as u8 as f64),
            );
            let mut r = bernoulli_record("arm_probability", n, hits, seed)?;
            r.seed = seed;
            Ok(r)
        })
        .collect()
}

/// Interface between the black cluster of the black arc (on the left) and
/// the white cluster of the white arc (on the right).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExplorationPath {
    /// `(black cell, white cell)` across each crossed hexagon edge.
    pub edges: Vec<(usize, usize)>,
    /// Honeycomb vertices (triangle centroids) in the plane.
    pub points: Vec<[f64; 2]>,
}

/// Rhombus of side `n` with a ring of boundary cells: black along the left
/// and top, white along the bottom and right. The interface runs from the
/// bottom-left corner to the top-right corner.
pub fn exploration_domain(n: usize) -> LatticeDomain {
    let n = n as i64;
    let mut coords: Vec<[i64; 2]> = (0..n).flat_map(|q| (0..n).map(move |p| [p, q])).collect();
    let inner = |c: [i64; 2]| (0..n).contains(&c[0]) && (0..n).contains(&c[1]);
    let mut ring = Vec::new();
    for q in -1..=n {
        for p in -1..=n {
            let c = [p, q];
            if !inner(c) && TRI_STEPS.iter().any(|&(dx, dy)| inner([p + dx, q + dy])) {
                ring.push(c);
            }
        }
    }
    coords.extend(ring.iter().copied());
    let mut d = tri_domain(coords);
    let start = (n * n) as usize;
    let (black, white): (Vec<usize>, Vec<usize>) =
        (start..d.len()).partition(|&v| d.coords[v][0] < 0 || d.coords[v][1] >= n);
    d.arcs.insert("black".into(), black);
    d.arcs.insert("white".into(), white);
    d
}

fn common_neighbors(u: [i64; 2], v: [i64; 2]) -> Option<[[i64; 2]; 2]> {
    let k = TRI_STEPS
        .iter()
        .position(|&(dx, dy)| [u[0] + dx, u[1] + dy] == v)?;
    let a = TRI_STEPS[(k + 5) % 6];
    let b = TRI_STEPS[(k + 1) % 6];
    Some([[u[0] + a.0, u[1] + a.1], [u[0] + b.0, u[1] + b.1]])
}

fn centroid(kind: LatticeKind, cells: [[i64; 2]; 3]) -> [f64; 2] {
    let z: Complex64 = cells.iter().map(|&c| kind.embed(c)).sum::<Complex64>() / 3.0;
    [z.re, z.im]
}

/// The black/white junction at the bottom-left corner and the first front cell.
fn start_state(d: &LatticeDomain) -> Result<(usize, usize, [i64; 2])> {
    let index = d.index();
    let (Some(b), Some(w)) = (index.get(&[-1, 0]), index.get(&[0, -1])) else {
        return domain("not an exploration domain");
    };
    Ok((*b, *w, [0, 0]))
}

/// Walk that reveals one cell at a time: the front cell joins the left side
/// if black and the right side if white. `color_of` is asked only for cells
/// without a forced color.
pub fn exploration_walk(
    d: &LatticeDomain,
    mut color_of: impl FnMut(usize) -> bool,
) -> Result<ExplorationPath> {
    let f = forced(d);
    let index = d.index();
    let (mut l, mut r, mut front) = start_state(d)?;
    let mut edges = vec![(l, r)];
    let mut points = vec![centroid(d.kind, [d.coords[l], d.coords[r], front])];
    for _ in 0..4 * d.len() + 8 {
        let Some(&fi) = index.get(&front) else {
            return Ok(ExplorationPath { edges, points });
        };
        let white = f[fi].unwrap_or_else(|| color_of(fi));
        let excluded = if white {
            std::mem::replace(&mut r, fi)
        } else {
            std::mem::replace(&mut l, fi)
        };
        let cn = common_neighbors(d.coords[l], d.coords[r]).expect("adjacent cells");
        front = if cn[0] == d.coords[excluded] {
            cn[1]
        } else {
            cn[0]
        };
        edges.push((l, r));
        points.push(centroid(d.kind, [d.coords[l], d.coords[r], front]));
    }
    Err(Error::Invalid("exploration did not terminate".into()))
}

/// Myopic exploration with independent colors revealed on demand.
pub fn exploration_interface<R: Rng + ?Sized>(
    d: &LatticeDomain,
    p: f64,
    rng: &mut R,
) -> Result<ExplorationPath> {
    check_p(p)?;
    let key: u64 = rng.random();
    exploration_walk(d, |v| keyed_color(key, v, p))
}

/// The same interface read off a fully colored configuration: grow the
/// black cluster of the black arc and the white cluster of the white arc,
/// then chain the hexagon edges separating them.
pub fn extract_interface(cfg: &PercolationConfig) -> Result<ExplorationPath> {
    let d = &cfg.domain;
    let grow = |arc: &str, color: bool| -> Result<Vec<bool>> {
        let Some(seeds) = d.arcs.get(arc) else {
            return domain("domain lacks colored arcs");
        };
        let mut inside = vec![false; d.len()];
        let mut queue: VecDeque<usize> = seeds
            .iter()
            .copied()
            .filter(|&v| cfg.colors[v] == color)
            .collect();
        for &v in &queue {
            inside[v] = true;
        }
        while let Some(v) = queue.pop_front() {
            for &w in &d.adjacency[v] {
                if !inside[w] && cfg.colors[w] == color {
                    inside[w] = true;
                    queue.push_back(w);
                }
            }
        }
        Ok(inside)
    };
    let black = grow("black", false)?;
    let white = grow("white", true)?;
    let mut separating: BTreeMap<(usize, usize), ()> = BTreeMap::new();
    for v in 0..d.len() {
        if black[v] {
            for &w in &d.adjacency[v] {
                if white[w] {
                    separating.insert((v, w), ());
                }
            }
        }
    }
    let index = d.index();
    let (mut l, mut r, mut front) = start_state(d)?;
    if !separating.contains_key(&(l, r)) {
        return domain("start edge does not separate the two clusters");
    }
    let mut edges = vec![(l, r)];
    let mut points = vec![centroid(d.kind, [d.coords[l], d.coords[r], front])];
    while let Some(&fi) = index.get(&front) {
        let (nl, nr, excluded) = if separating.contains_key(&(fi, r)) {
            (fi, r, l)
        } else if separating.contains_key(&(l, fi)) {
            (l, fi, r)
        } else {
            return Err(Error::Invalid("interface is broken".into()));
        };
        l = nl;
        r = nr;
        let cn = common_neighbors(d.coords[l], d.coords[r]).expect("adjacent cells");
        front = if cn[0] == d.coords[excluded] {
            cn[1]
        } else {
            cn[0]
        };
        edges.push((l, r));
        points.push(centroid(d.kind, [d.coords[l], d.coords[r], front]));
        if edges.len() > 4 * d.len() + 8 {
            return Err(Error::Invalid("interface does not terminate".into()));
        }
    }
    Ok(ExplorationPath { edges, points })
}

/// Run-length dump: a JSON header line, then run lengths of the row-major
/// bitmap over the bounding box, alternating closed/open and starting with
/// closed. Cells outside the domain count as closed.
pub fn rle_dump(cfg: &PercolationConfig, seed: u64) -> String {
    let d = &cfg.domain;
    let pmin = d.coords.iter().map(|c| c[0]).min().unwrap_or(0);
    let pmax = d.coords.iter().map(|c| c[0]).max().unwrap_or(-1);
    let qmin = d.coords.iter().map(|c| c[1]).min().unwrap_or(0);
    let qmax = d.coords.iter().map(|c| c[1]).max().unwrap_or(-1);
    let (cols, rows) = (
        (pmax - pmin + 1).max(0) as usize,
        (qmax - qmin + 1).max(0) as usize,
    );
    let mut bits = vec![false; cols * rows];
    for (v, c) in d.coords.iter().enumerate() {
        bits[(c[1] - qmin) as usize * cols + (c[0] - pmin) as usize] = cfg.colors[v];
    }
    let mut runs = Vec::new();
    let mut current = false;
    let mut len = 0usize;
    for b in bits {
        if b == current {
            len += 1;
        } else {
            runs.push(len);
            current = b;
            len = 1;
        }
    }
    runs.push(len);
    let header = serde_json::json!({
        "cols": cols,
        "rows": rows,
        "origin": [pmin, qmin],
        "p": cfg.p,
        "seed": seed,
        "encoding": "rle-row-major-closed-first",
    });
    let body: Vec<String> = runs.iter().map(|r| r.to_string()).collect();
    format!("{header}\n{}\n", body.join(" "))
}

/// Inverse of [`rle_dump`]: the header and the bitmap.
pub fn rle_decode(text: &str) -> Result<(serde_json::Value, Vec<bool>)> {
    let mut lines = text.lines();
    let header: serde_json::Value = serde_json::from_str(lines.next().unwrap_or(""))
        .map_err(|e| Error::Invalid(format!("bad header: {e}")))?;
    let mut bits = Vec::new();
    let mut current = false;
    for tok in lines.next().unwrap_or("").split_whitespace() {
        let n: usize = tok
            .parse()
            .map_err(|_| Error::Invalid(format!("bad run length {tok}")))?;
        bits.extend(std::iter::repeat_n(current, n));
        current = !current;
    }
    let cols = header["cols"].as_u64().unwrap_or(0) as usize;
    let rows = header["rows"].as_u64().unwrap_or(0) as usize;
    if bits.len() != cols * rows {
        return Err(Error::Invalid("run lengths do not fill the bitmap".into()));
    }
    Ok((header, bits))
}
