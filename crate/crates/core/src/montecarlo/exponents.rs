use rand::Rng;
use rustc_hash::{FxHashMap, FxHashSet};
use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::montecarlo::{run_trials, trial_seed, EstimateRecord};

const STEPS: [(i32, i32); 4] = [(1, 0), (-1, 0), (0, 1), (0, -1)];

/// Square grid of cell flags centered on the origin.
struct Grid {
    half: i32,
    side: usize,
    cells: Vec<u8>,
}

const TRACE: u8 = 1;
const SEEN: u8 = 2;

impl Grid {
    fn new(half: i32) -> Self {
        let side = (2 * half + 1) as usize;
        Grid {
            half,
            side,
            cells: vec![0; side * side],
        }
    }

    #[inline]
    fn idx(&self, x: i32, y: i32) -> Option<usize> {
        if x.abs() > self.half || y.abs() > self.half {
            return None;
        }
        Some((y + self.half) as usize * self.side + (x + self.half) as usize)
    }

    /// Is the origin cut off from every free cell at squared radius
    /// `>= r2_escape`? Trace cells block 4-connected moves.
    fn origin_enclosed(&mut self, r2_escape: i64) -> bool {
        let start = self.idx(0, 0).expect("origin inside grid");
        if self.cells[start] & TRACE != 0 {
            return true;
        }
        let mut touched = vec![start];
        self.cells[start] |= SEEN;
        let mut queue = VecDeque::from([(0i32, 0i32)]);
        let mut escaped = false;
        'bfs: while let Some((x, y)) = queue.pop_front() {
            for (dx, dy) in STEPS {
                let (nx, ny) = (x + dx, y + dy);
                let r2 = nx as i64 * nx as i64 + ny as i64 * ny as i64;
                let Some(i) = self.idx(nx, ny) else {
                    escaped = true;
                    break 'bfs;
                };
                if self.cells[i] & (TRACE | SEEN) != 0 {
                    continue;
                }
                if r2 >= r2_escape {
                    escaped = true;
                    break 'bfs;
                }
                self.cells[i] |= SEEN;
                touched.push(i);
                queue.push_back((nx, ny));
            }
        }
        for i in touched {
            self.cells[i] &= !SEEN;
        }
        !escaped
    }
}

/// Does the set of `cells` separate the origin from the circle of radius
/// `outer`? Used for synthetic checks of the flood fill.
pub fn trace_disconnects(cells: &FxHashSet<(i32, i32)>, outer: f64) -> bool {
    let half = outer.ceil() as i32 + 1;
    let mut g = Grid::new(half);
    for &(x, y) in cells {
        if let Some(i) = g.idx(x, y) {
            g.cells[i] |= TRACE;
        }
    }
    let r2 = (outer * outer).ceil() as i64;
    g.origin_enclosed(r2)
}

/// Walk from `(m, 0)` until `|Z| >= r m`; true when the trace does not
/// disconnect the origin from the outer circle.
pub fn disconnection_indicator<R: Rng + ?Sized>(r: u32, m: u32, rng: &mut R) -> Result<bool> {
    if r < 1 || m < 1 {
        return Err(Error::Invalid("need R >= 1 and M >= 1".into()));
    }
    let outer = r as i64 * m as i64;
    let outer2 = outer * outer;
    let mut grid = Grid::new(outer as i32 + 1);
    let (mut x, mut y) = (m as i32, 0i32);
    let mark = |g: &mut Grid, x: i32, y: i32| {
        let i = g.idx(x, y).expect("walk stays inside the grid");
        g.cells[i] |= TRACE;
    };
    mark(&mut grid, x, y);
    let mut checkpoint = 2 * m as i64;
    let mut max_r2 = (m as i64) * (m as i64);
    let cap: u64 = 1_000_000_000;
    let mut steps = 0u64;
    loop {
        let r2 = x as i64 * x as i64 + y as i64 * y as i64;
        if r2 >= outer2 {
            break;
        }
        // Disconnection is monotone in time, so dyadic checkpoints allow an early exit.
        if r2 >= checkpoint * checkpoint {
            checkpoint *= 2;
            let escape = ((max_r2 as f64).sqrt() + 2.0).powi(2).ceil() as i64;
            if grid.origin_enclosed(escape) {
                return Ok(false);
            }
        }
        let (dx, dy) = STEPS[rng.random_range(0..4)];
        x += dx;
        y += dy;
        mark(&mut grid, x, y);
        max_r2 = max_r2.max(x as i64 * x as i64 + y as i64 * y as i64);
        steps += 1;
        if steps > cap {
            return Err(Error::StepCap(cap));
        }
    }
    Ok(!grid.origin_enclosed(outer2))
}

/// Smallest `k` such that the ranges of two walks from `(0,0)` and `(1,0)`
/// meet within `k` steps each, or `None` if they stay apart for `n` steps.
pub fn nonintersection_first_meeting<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Option<usize> {
    let mut first: FxHashMap<(i32, i32), usize> = FxHashMap::default();
    first.reserve(n + 1);
    let (mut x, mut y) = (0i32, 0i32);
    first.insert((x, y), 0);
    for i in 1..=n {
        let (dx, dy) = STEPS[rng.random_range(0..4)];
        x += dx;
        y += dy;
        first.entry((x, y)).or_insert(i);
    }
    let (mut x, mut y) = (1i32, 0i32);
    let mut best: Option<usize> = first.get(&(x, y)).copied();
    for j in 1..=n {
        if best.is_some_and(|b| b <= j) {
            break;
        }
        let (dx, dy) = STEPS[rng.random_range(0..4)];
        x += dx;
        y += dy;
        if let Some(&i) = first.get(&(x, y)) {
            let meet = i.max(j);
            best = Some(best.map_or(meet, |b| b.min(meet)));
        }
    }
    best
}

/// True when two `n`-step walks from adjacent origins have disjoint ranges.
pub fn nonintersection_indicator<R: Rng + ?Sized>(n: usize, rng: &mut R) -> bool {
    nonintersection_first_meeting(n, rng).is_none()
}

/// Non-disconnection frequency for each outer ratio in `radii` (inner
/// radius `m`), fresh trials per ratio.
pub fn disconnection_experiment(
    m: u32,
    radii: &[u32],
    trials: u64,
    seed: u64,
    par: usize,
) -> Result<Vec<EstimateRecord>> {
    radii
        .iter()
        .enumerate()
        .map(|(i, &r)| {
            let rep = run_trials(
                "nondisconnection",
                r as f64,
                trials,
                trial_seed(seed, i as u64),
                par,
                |_, rng| Ok(disconnection_indicator(r, m, rng)? as u8 as f64),
            )?;
            strict(rep)
        })
        .collect()
}

/// Two-walk non-intersection frequency for each length in `ns`.
pub fn nonintersection_experiment(
    ns: &[usize],
    trials: u64,
    seed: u64,
    par: usize,
) -> Result<Vec<EstimateRecord>> {
    ns.iter()
        .enumerate()
        .map(|(i, &n)| {
            let rep = run_trials(
                "nonintersection",
                n as f64,
                trials,
                trial_seed(seed, i as u64),
                par,
                |_, rng| Ok(nonintersection_indicator(n, rng) as u8 as f64),
            )?;
            strict(rep)
        })
        .collect()
}

fn strict(rep: crate::montecarlo::RunReport) -> Result<EstimateRecord> {
    match rep.first_failure {
        Some(e) => Err(Error::Invalid(format!(
            "{} trials failed: {e}",
            rep.failures
        ))),
        None => Ok(rep.record),
    }
}
