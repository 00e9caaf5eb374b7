//! The reflected walk in the wedge `{m + m' omega : m, m' >= 0}`,
//! `omega = e^{i pi/3}`, and its transport to the half-plane by `z -> z^3`.
//!
//! On the real axis the walk steps `+1` with probability 1/3 and `-1`,
//! `+omega`, `+omega^2` or stays with 1/6 each; the rules on the other side
//! are the mirror image, and the origin moves to `1` or `omega` with 1/2.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rustc_hash::FxHashMap;
use serde::{Deserialize, Serialize};
use std::collections::VecDeque;
use std::f64::consts::PI;

use crate::error::{domain, Error, Result};
use crate::lattice::TRI_STEPS;
use crate::montecarlo::{chi_square_gof, map_trials, trial_seed, EstimateRecord, GofResult};

/// Wedge state `(m, m')`.
pub type WedgeState = [i64; 2];

/// Outgoing transitions of a wedge state with their probabilities.
pub fn wedge_transitions(s: WedgeState) -> Vec<(WedgeState, f64)> {
    let [m, n] = s;
    let sixth = 1.0 / 6.0;
    match (m, n) {
        (0, 0) => vec![([1, 0], 0.5), ([0, 1], 0.5)],
        (_, 0) => vec![
            ([m + 1, 0], 1.0 / 3.0),
            ([m - 1, 0], sixth),
            ([m, 1], sixth),
            ([m - 1, 1], sixth),
            ([m, 0], sixth),
        ],
        (0, _) => vec![
            ([0, n + 1], 1.0 / 3.0),
            ([1, n], sixth),
            ([1, n - 1], sixth),
            ([0, n - 1], sixth),
            ([0, n], sixth),
        ],
        _ => TRI_STEPS
            .iter()
            .map(|&(dx, dy)| ([m + dx, n + dy], sixth))
            .collect(),
    }
}

#[inline]
fn wedge_step<R: Rng + ?Sized>(s: WedgeState, rng: &mut R) -> WedgeState {
    let [m, n] = s;
    match (m, n) {
        (0, 0) => {
            if rng.random_bool(0.5) {
                [1, 0]
            } else {
                [0, 1]
            }
        }
        (_, 0) => match rng.random_range(0..6u8) {
            0 | 1 => [m + 1, 0],
            2 => [m - 1, 0],
            3 => [m, 1],
            4 => [m - 1, 1],
            _ => s,
        },
        (0, _) => match rng.random_range(0..6u8) {
            0 | 1 => [0, n + 1],
            2 => [1, n],
            3 => [1, n - 1],
            4 => [0, n - 1],
            _ => s,
        },
        _ => {
            let (dx, dy) = TRI_STEPS[rng.random_range(0..6usize)];
            [m + dx, n + dy]
        }
    }
}

pub fn wedge_point(s: WedgeState) -> Complex64 {
    Complex64::new(
        s[0] as f64 + 0.5 * s[1] as f64,
        s[1] as f64 * 3f64.sqrt() / 2.0,
    )
}

/// Run from 0 to the segment `N + omega^2 [0, N]` and return the index `k`
/// of the hit point `N + k omega^2`.
pub fn wedge_reflected_walk<R: Rng + ?Sized>(n: u32, rng: &mut R) -> Result<usize> {
    if n < 1 {
        return domain("need N >= 1");
    }
    let n = n as i64;
    let mut s = [0i64, 0];
    let cap = 1_000_000_000u64;
    for _ in 0..cap {
        if s[0] + s[1] >= n {
            return Ok(s[1] as usize);
        }
        s = wedge_step(s, rng);
    }
    Err(Error::StepCap(cap))
}

/// Exact hitting law of the far segment by a dense linear solve.
pub fn wedge_exact_law(n: u32) -> Result<Vec<f64>> {
    if n < 1 {
        return domain("need N >= 1");
    }
    let n = n as i64;
    let states: Vec<WedgeState> = (0..n)
        .flat_map(|s| (0..=s).map(move |k| [s - k, k]))
        .collect();
    let index: FxHashMap<WedgeState, usize> =
        states.iter().enumerate().map(|(i, &s)| (s, i)).collect();
    let size = states.len();
    let mut a = DMatrix::<f64>::identity(size, size);
    let mut b = DMatrix::<f64>::zeros(size, n as usize + 1);
    for (i, &s) in states.iter().enumerate() {
        for (t, p) in wedge_transitions(s) {
            if t[0] + t[1] >= n {
                b[(i, t[1] as usize)] += p;
            } else {
                a[(i, index[&t])] -= p;
            }
        }
    }
    let lu = a.lu();
    let h = lu
        .solve(&b)
        .ok_or_else(|| Error::Singular("wedge chain".into()))?;
    Ok((0..=n as usize).map(|k| h[(index[&[0, 0]], k)]).collect())
}

/// Hit counts over the `N + 1` points and a chi-square test of uniformity.
pub fn wedge_uniformity_experiment(
    n: u32,
    trials: u64,
    seed: u64,
    par: usize,
) -> Result<(Vec<u64>, GofResult)> {
    let hits: Vec<Result<usize>> =
        map_trials(trials, seed, par, |_, rng| wedge_reflected_walk(n, rng));
    let mut counts = vec![0u64; n as usize + 1];
    for h in hits {
        counts[h?] += 1;
    }
    let probs = vec![1.0 / (n as f64 + 1.0); n as usize + 1];
    let gof = chi_square_gof(&counts, &probs)?;
    Ok((counts, gof))
}

/// Half-plane position `(wedge_point(s) / scale)^3` of a wedge state.
pub fn halfplane_position(s: WedgeState, scale: f64) -> Complex64 {
    (wedge_point(s) / scale).powi(3)
}

/// The wedge chain read in the half-plane: it reflects off the positive
/// axis along `e^{i pi/3}` and off the negative axis along `e^{2 i pi/3}`.
/// Runs until `stop` holds at the current half-plane position.
pub fn halfplane_reflected_walk<R: Rng + ?Sized>(
    scale: f64,
    mut stop: impl FnMut(Complex64) -> bool,
    max_steps: u64,
    rng: &mut R,
) -> Result<Vec<WedgeState>> {
    if !(scale > 0.0) {
        return domain("scale must be positive");
    }
    let mut s = [0i64, 0];
    let mut path = vec![s];
    for _ in 0..max_steps {
        if stop(halfplane_position(s, scale)) {
            return Ok(path);
        }
        s = wedge_step(s, rng);
        path.push(s);
    }
    Err(Error::StepCap(max_steps))
}

/// Disc coordinate of a half-plane point under `h -> (i - h) / (i + h)`,
/// which sends 0, i, infinity to 1, 0, -1.
#[inline]
pub fn disc_coordinate(h: Complex64) -> Complex64 {
    let i = Complex64::new(0.0, 1.0);
    (i - h) / (i + h)
}

const VISITED: u8 = 1;
const SEEN: u8 = 2;

/// Flags on the wedge sites `0 <= m, m' < side`, grown by doubling.
struct WedgeGrid {
    side: usize,
    cells: Vec<u8>,
}

impl WedgeGrid {
    fn new(side: usize) -> Self {
        WedgeGrid {
            side,
            cells: vec![0; side * side],
        }
    }

    #[inline]
    fn idx(&self, s: WedgeState) -> Option<usize> {
        let (m, n) = (s[0] as usize, s[1] as usize);
        (s[0] >= 0 && s[1] >= 0 && m < self.side && n < self.side).then(|| n * self.side + m)
    }

    fn mark(&mut self, s: WedgeState) {
        while self.idx(s).is_none() {
            let side = 2 * self.side;
            let mut cells = vec![0; side * side];
            for n in 0..self.side {
                cells[n * side..n * side + self.side]
                    .copy_from_slice(&self.cells[n * self.side..(n + 1) * self.side]);
            }
            self.side = side;
            self.cells = cells;
        }
        let i = self.idx(s).expect("grown");
        self.cells[i] |= VISITED;
    }

    /// Is every unvisited site with `|u| < r` cut off from the sites beyond
    /// `max_norm + 3`? Visited sites and the outside of the wedge block.
    fn target_enclosed(&mut self, scale: f64, r: f64, max_norm: f64) -> bool {
        let center = Complex64::from_polar(scale, PI / 6.0);
        let reach = (scale * r * 2.0).ceil() as i64 + 2;
        let escape2 = (max_norm + 3.0).powi(2);
        let cn = (center.im * 2.0 / 3f64.sqrt()).round() as i64;
        let cm = (center.re - 0.5 * cn as f64).round() as i64;
        let mut touched = Vec::new();
        let mut queue = VecDeque::new();
        for dm in -2 * reach..=2 * reach {
            for dn in -2 * reach..=2 * reach {
                let s = [cm + dm, cn + dn];
                if s[0] < 0 || s[1] < 0 || disc_coordinate(halfplane_position(s, scale)).norm() >= r
                {
                    continue;
                }
                match self.idx(s) {
                    None => {
                        self.clear(&touched);
                        return false;
                    }
                    Some(i) if self.cells[i] == 0 => {
                        self.cells[i] |= SEEN;
                        touched.push(i);
                        queue.push_back(s);
                    }
                    _ => {}
                }
            }
        }
        let mut escaped = false;
        'bfs: while let Some(s) = queue.pop_front() {
            for &(dx, dy) in TRI_STEPS.iter() {
                let t = [s[0] + dx, s[1] + dy];
                if t[0] < 0 || t[1] < 0 {
                    continue;
                }
                let Some(i) = self.idx(t) else {
                    escaped = true;
                    break 'bfs;
                };
                if self.cells[i] != 0 {
                    continue;
                }
                if wedge_point(t).norm_sqr() >= escape2 {
                    escaped = true;
                    break 'bfs;
                }
                self.cells[i] |= SEEN;
                touched.push(i);
                queue.push_back(t);
            }
        }
        self.clear(&touched);
        !escaped && !touched.is_empty()
    }

    fn clear(&mut self, touched: &[usize]) {
        for &i in touched {
            self.cells[i] &= !SEEN;
        }
    }
}

/// Runs that wander beyond `NONDISCONNECTION_CAP * scale` are stopped.
pub const NONDISCONNECTION_CAP: f64 = 64.0;

/// Reflected walk started at the boundary point corresponding to `1` in the
/// disc picture and run until it reaches `|u| <= r`. `Some(true)` when its
/// trace (with the boundary) does not separate the center from `-1`;
/// `None` when the walk wandered beyond the cap first. `scale` is the wedge
/// distance of the point mapped to the center.
pub fn reflected_nondisconnection_indicator<R: Rng + ?Sized>(
    scale: f64,
    r: f64,
    rng: &mut R,
) -> Result<Option<bool>> {
    if !(r > 0.0 && r < 1.0) || !(scale * r >= 2.0) {
        return domain("need 0 < r < 1 and a target at least two sites wide");
    }
    let mut s = [0i64, 0];
    let mut grid = WedgeGrid::new((4.0 * scale) as usize + 8);
    grid.mark(s);
    let mut max_norm: f64 = 0.0;
    let mut checkpoint = (scale * scale) as u64;
    let cap = 1_000_000_000u64;
    for step in 1..=cap {
        s = wedge_step(s, rng);
        grid.mark(s);
        let norm = wedge_point(s).norm();
        if norm > max_norm {
            max_norm = norm;
            if max_norm > NONDISCONNECTION_CAP * scale {
                return Ok(None);
            }
        }
        if disc_coordinate(halfplane_position(s, scale)).norm() <= r {
            return Ok(Some(!grid.target_enclosed(scale, r, max_norm)));
        }
        // Disconnection only grows, so long runs can stop once it happens.
        if step == checkpoint {
            checkpoint *= 2;
            if grid.target_enclosed(scale, r, max_norm) {
                return Ok(Some(false));
            }
        }
    }
    Err(Error::StepCap(cap))
}

/// Non-disconnection frequency at one scale; capped runs count as disconnected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NondisconnectionEstimate {
    pub record: EstimateRecord,
    pub capped: u64,
}

/// Non-disconnection frequency at each `r`, fresh trials per scale.
pub fn reflected_nondisconnection_experiment(
    scale: f64,
    radii: &[f64],
    trials: u64,
    seed: u64,
    par: usize,
) -> Result<Vec<NondisconnectionEstimate>> {
    radii
        .iter()
        .enumerate()
        .map(|(i, &r)| {
            let outs: Vec<Result<Option<bool>>> =
                map_trials(trials, trial_seed(seed, i as u64), par, |_, rng| {
                    reflected_nondisconnection_indicator(scale, r, rng)
                });
            let outs: Vec<Option<bool>> = outs.into_iter().collect::<Result<_>>()?;
            let value = outs.iter().filter(|o| **o == Some(true)).count() as f64 / trials as f64;
            Ok(NondisconnectionEstimate {
                record: EstimateRecord {
                    name: "reflected_nondisconnection".into(),
                    scale: r,
                    value,
                    stderr: (value * (1.0 - value) / trials as f64).sqrt(),
                    trials,
                    seed,
                },
                capped: outs.iter().filter(|o| o.is_none()).count() as u64,
            })
        })
        .collect()
}
