//! Flowing a Hull `A` under the chordal chain and the removal map
//! `h_t = Phi_{g_t(A)}` of its image.
//!
//! The image `g_t(A)` is a polyline through flowed sample points of `A`.
//! Points are inserted (and re-flowed through the recorded steps) wherever
//! the polyline is coarse compared with its distance to the driving, so the
//! geometry next to `W_t` stays resolved. `h_t` and its derivatives come
//! from the vertical-slit zipper over that polyline.

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::normal;
use crate::conformal::{segment_distance, vslit_forward, Jet, SlitParams};
use crate::error::{domain, Error, Result};
use crate::formulas::slit_derivative_at_zero;
use crate::loewner::DrivingPath;
use crate::montecarlo::{map_trials, mean_stderr, EstimateRecord};

/// Sampled image of a straight Hull under the chordal chain.
#[derive(Debug, Clone)]
pub struct HullTracker {
    base: Complex64,
    tip: Complex64,
    s: Vec<f64>,
    pts: Vec<Complex64>,
    history: Vec<(f64, f64)>,
    max_points: usize,
    hit: bool,
}

impl HullTracker {
    /// `n + 1` equally spaced samples of `hull`, base first.
    pub fn new(hull: &SlitParams, n: usize) -> Result<Self> {
        if hull.base().norm() == 0.0 {
            return domain("the Hull must sit away from the origin");
        }
        let n = n.max(1);
        let s: Vec<f64> = (0..=n).map(|k| k as f64 / n as f64).collect();
        let (base, tip) = (hull.base(), hull.tip());
        let pts = s.iter().map(|&u| base + (tip - base) * u).collect();
        Ok(HullTracker {
            base,
            tip,
            s,
            pts,
            history: Vec::new(),
            max_points: 4096,
            hit: false,
        })
    }

    pub fn points(&self) -> &[Complex64] {
        &self.pts
    }

    /// True once a slit step landed on the tracked image.
    pub fn hit(&self) -> bool {
        self.hit
    }

    /// Apply the slit step with frozen driving `w` and duration `dt`.
    pub fn step(&mut self, w: f64, dt: f64) {
        let h = 2.0 * dt.sqrt();
        let (lo, hi) = (Complex64::new(w, 0.0), Complex64::new(w, h));
        for (i, p) in self.pts.iter_mut().enumerate() {
            if i > 0 && segment_distance(*p, lo, hi) < 1e-13 * (1.0 + p.norm()) {
                self.hit = true;
            }
            *p = vslit_forward(*p, w, h);
        }
        self.pts[0].im = 0.0;
        self.history.push((w, h));
    }

    fn replay(&self, u: f64) -> Complex64 {
        let mut z = self.base + (self.tip - self.base) * u;
        for &(w, h) in &self.history {
            z = vslit_forward(z, w, h);
        }
        z
    }

    /// Distance from the real point `w` to the polyline.
    pub fn distance(&self, w: f64) -> f64 {
        let z = Complex64::new(w, 0.0);
        self.pts
            .windows(2)
            .map(|p| segment_distance(z, p[0], p[1]))
            .fold(f64::INFINITY, f64::min)
    }

    /// Diagonal of the bounding box of the polyline.
    pub fn diameter(&self) -> f64 {
        let (mut x0, mut x1, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, 0.0f64);
        for p in &self.pts {
            x0 = x0.min(p.re);
            x1 = x1.max(p.re);
            y1 = y1.max(p.im);
        }
        (x1 - x0).hypot(y1)
    }

    /// Insert samples until every polyline edge is shorter than `eta` times
    /// the distance from `w` to its nearer endpoint.
    pub fn refine(&mut self, w: f64, eta: f64) {
        let z = Complex64::new(w, 0.0);
        let mut i = 0;
        while i + 1 < self.pts.len() {
            let (a, b) = (self.pts[i], self.pts[i + 1]);
            let near = (a - z).norm().min((b - z).norm());
            let gap = self.s[i + 1] - self.s[i];
            if (a - b).norm() > eta * near && self.pts.len() < self.max_points && gap > 1e-12 {
                let u = 0.5 * (self.s[i] + self.s[i + 1]);
                let p = self.replay(u);
                self.s.insert(i + 1, u);
                self.pts.insert(i + 1, p);
            } else {
                i += 1;
            }
        }
    }

    /// Vertical-slit zipper over the polyline: returns the capacity of the
    /// image and the jets of its removal map at `zs`.
    pub fn zipper(&self, zs: &[Complex64]) -> (f64, Vec<Jet>) {
        let mut cur = self.pts.clone();
        let mut jets: Vec<Jet> = zs.iter().map(|&z| Jet::identity(z)).collect();
        let mut cap = 0.0;
        for j in 1..cur.len() {
            let q = cur[j];
            let y = q.im.max(0.0);
            if y == 0.0 {
                continue;
            }
            for p in cur.iter_mut().skip(j + 1) {
                *p = vslit_forward(*p, q.re, y);
            }
            for jet in jets.iter_mut() {
                *jet = jet.then_vslit(q.re, y);
            }
            cap += y * y / 4.0;
        }
        (cap, jets)
    }

    /// Capacity of the image of the Hull.
    pub fn capacity(&self) -> f64 {
        self.zipper(&[]).0
    }
}

/// One recorded time of the removal-map evolution.
#[derive(Debug, Clone, PartialEq)]
pub struct RemovalMapState {
    pub time: f64,
    /// Jets of `h_t` at the flowed grid points; `None` once dropped.
    pub grid: Vec<Option<Jet>>,
    pub w: f64,
    /// `h_t(W_t)`.
    pub w_tilde: f64,
    /// `h_t'(W_t)`.
    pub deriv_at_w: f64,
    /// `hcap(A cup K_t) = t + hcap(g_t(A))`.
    pub capacity: f64,
    /// `hcap(A) + int_0^t h_s'(W_s)^2 ds` by the trapezoid rule.
    pub capacity_integral: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RemovalTrajectory {
    pub states: Vec<RemovalMapState>,
    /// Time at which the trace came within two slit heights of `g_t(A)`.
    pub stopped_at: Option<f64>,
    /// Grid indices dropped because the hull reached them.
    pub dropped: Vec<usize>,
}

/// Evolve `h_t` along a fixed-step chordal driving, recording every
/// `record_every` steps (and the last one).
pub fn evolve_removal_map(
    d: &DrivingPath,
    hull: &SlitParams,
    grid: &[Complex64],
    samples: usize,
    record_every: usize,
) -> Result<RemovalTrajectory> {
    if grid
        .iter()
        .any(|z| !(z.im > 0.0) || hull.distance(*z) < 1e-12)
    {
        return domain("grid points must lie in the upper half-plane off the Hull");
    }
    let mut tracker = HullTracker::new(hull, samples)?;
    let record_every = record_every.max(1);
    let height = 2.0 * d.dt.sqrt();
    let mut flowed: Vec<Option<Complex64>> = grid.iter().map(|&z| Some(z)).collect();
    let mut dropped = Vec::new();
    let mut states = Vec::new();
    let mut integral = 0.0;
    let mut last_sq: Option<f64> = None;
    let mut stopped_at = None;
    let n = d.steps();
    for k in 0..=n {
        let t = k as f64 * d.dt;
        let w = d.values[k];
        let live: Vec<Complex64> = flowed.iter().flatten().copied().collect();
        let mut zs = vec![Complex64::new(w, 0.0)];
        zs.extend(&live);
        let (cap, jets) = tracker.zipper(&zs);
        let dw = jets[0].d1.re;
        let sq = dw * dw;
        if let Some(prev) = last_sq {
            integral += 0.5 * d.dt * (prev + sq);
        }
        last_sq = Some(sq);
        let a0 = if k == 0 {
            cap
        } else {
            states.first().map_or(cap, |s: &RemovalMapState| s.capacity)
        };
        let too_close = tracker.distance(w) < 2.0 * height || tracker.hit();
        if k % record_every == 0 || k == n || too_close {
            let mut it = jets[1..].iter();
            let g = flowed
                .iter()
                .map(|p| p.map(|_| *it.next().unwrap()))
                .collect();
            states.push(RemovalMapState {
                time: t,
                grid: g,
                w,
                w_tilde: jets[0].value.re,
                deriv_at_w: dw,
                capacity: t + cap,
                capacity_integral: a0 + integral,
            });
        }
        if too_close {
            stopped_at = Some(t);
            break;
        }
        if k == n {
            break;
        }
        tracker.step(w, d.dt);
        for (i, p) in flowed.iter_mut().enumerate() {
            if let Some(z) = p {
                let on_slit =
                    segment_distance(*z, Complex64::new(w, 0.0), Complex64::new(w, height)) < 1e-12;
                let next = vslit_forward(*z, w, height);
                if on_slit || !(next.im > 0.0) {
                    *p = None;
                    dropped.push(i);
                } else {
                    *z = next;
                }
            }
        }
        tracker.refine(d.values[k + 1], 0.5);
    }
    Ok(RemovalTrajectory {
        states,
        stopped_at,
        dropped,
    })
}

/// Tuning of the adaptive Hull-avoidance simulation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RestrictionOptions {
    /// Slit height per step as a fraction of the distance from `W` to `g_t(A)`.
    pub eps: f64,
    /// Hit once that distance is below `hit_rel` times the image diameter.
    pub hit_rel: f64,
    /// Avoided once the image diameter is below `stop_ratio` times the distance.
    pub stop_ratio: f64,
    /// Refinement threshold for polyline edges.
    pub eta: f64,
    pub initial_samples: usize,
    pub max_steps: u64,
}

impl Default for RestrictionOptions {
    fn default() -> Self {
        RestrictionOptions {
            eps: 0.1,
            hit_rel: 1e-6,
            stop_ratio: 1e-3,
            eta: 0.5,
            initial_samples: 16,
            max_steps: 2_000_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RestrictionOutcome {
    Avoided,
    Hit,
    /// Step budget exhausted before either criterion; counted as avoided.
    Capped,
}

struct AdaptiveRun {
    tracker: HullTracker,
    w: f64,
    t: f64,
    hit: bool,
}

/// Adaptive chordal run next to the Hull until `stop` says so, or `until`.
fn adaptive_run<R: Rng + ?Sized>(
    hull: &SlitParams,
    kappa: f64,
    until: f64,
    opts: &RestrictionOptions,
    rng: &mut R,
    stop_far: bool,
) -> Result<(AdaptiveRun, bool)> {
    let mut run = AdaptiveRun {
        tracker: HullTracker::new(hull, opts.initial_samples)?,
        w: 0.0,
        t: 0.0,
        hit: false,
    };
    let sk = kappa.sqrt();
    run.tracker.refine(0.0, opts.eta);
    let mut steps = 0u64;
    while run.t < until {
        let d = run.tracker.distance(run.w);
        let diam = run.tracker.diameter();
        if d < opts.hit_rel * diam || run.tracker.hit() {
            run.hit = true;
            return Ok((run, true));
        }
        if stop_far && diam < opts.stop_ratio * d {
            return Ok((run, true));
        }
        let dt = (0.5 * opts.eps * d).powi(2).min(until - run.t);
        run.tracker.step(run.w, dt);
        run.w += sk * dt.sqrt() * normal(rng);
        run.t += dt;
        run.tracker.refine(run.w, opts.eta);
        steps += 1;
        if steps >= opts.max_steps {
            return Ok((run, false));
        }
    }
    Ok((run, true))
}

fn check_hull(hull: &SlitParams, kappa: f64) -> Result<()> {
    if !(kappa > 0.0 && kappa <= 4.0) {
        return domain("Hull avoidance needs 0 < kappa <= 4");
    }
    if hull.base().re == 0.0 {
        return domain("the Hull must sit away from the origin");
    }
    Ok(())
}

/// Does a chordal SLE trace avoid `hull` forever?
pub fn restriction_trial<R: Rng + ?Sized>(
    hull: &SlitParams,
    kappa: f64,
    opts: &RestrictionOptions,
    rng: &mut R,
) -> Result<RestrictionOutcome> {
    check_hull(hull, kappa)?;
    let (run, finished) = adaptive_run(hull, kappa, f64::INFINITY, opts, rng, true)?;
    Ok(match (finished, run.hit) {
        (_, true) => RestrictionOutcome::Hit,
        (true, false) => RestrictionOutcome::Avoided,
        (false, false) => RestrictionOutcome::Capped,
    })
}

/// Avoidance frequency and, for a vertical Hull at `kappa = 8/3`, the exact
/// value `Phi_A'(0)^{5/8}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RestrictionReport {
    pub record: EstimateRecord,
    pub capped: u64,
    pub exact: Option<f64>,
}

pub fn restriction_avoidance_experiment(
    hull: &SlitParams,
    kappa: f64,
    trials: u64,
    seed: u64,
    parallelism: usize,
    opts: &RestrictionOptions,
) -> Result<RestrictionReport> {
    check_hull(hull, kappa)?;
    let outs = map_trials(trials, seed, parallelism, |_, rng| {
        restriction_trial(hull, kappa, opts, rng)
    });
    let mut xs = Vec::with_capacity(outs.len());
    let mut capped = 0;
    for o in outs {
        let o = o?;
        if o == RestrictionOutcome::Capped {
            capped += 1;
        }
        xs.push(if o == RestrictionOutcome::Hit {
            0.0
        } else {
            1.0
        });
    }
    let (value, stderr) = mean_stderr(&xs);
    let exact = if hull.is_vertical() && (kappa - 8.0 / 3.0).abs() < 1e-12 {
        Some(slit_derivative_at_zero(hull.foot, hull.height)?.powf(0.625))
    } else {
        None
    };
    Ok(RestrictionReport {
        record: EstimateRecord {
            name: "restriction_avoidance".into(),
            scale: hull.foot,
            value,
            stderr,
            trials,
            seed,
        },
        capped,
        exact,
    })
}

/// `h_tau'(W_tau)^{5/8} - Phi_A'(0)^{5/8}` for `tau = min(horizon, hit)`;
/// a hit contributes `h' = 0`.
pub fn removal_martingale_increment<R: Rng + ?Sized>(
    hull: &SlitParams,
    kappa: f64,
    horizon: f64,
    opts: &RestrictionOptions,
    rng: &mut R,
) -> Result<f64> {
    check_hull(hull, kappa)?;
    if !(horizon > 0.0) {
        return domain("horizon must be positive");
    }
    let start = HullTracker::new(hull, opts.initial_samples)?;
    let m0 = start.zipper(&[Complex64::new(0.0, 0.0)]).1[0]
        .d1
        .re
        .powf(0.625);
    let (run, finished) = adaptive_run(hull, kappa, horizon, opts, rng, false)?;
    if !finished {
        return Err(Error::StepCap(opts.max_steps));
    }
    if run.hit {
        return Ok(-m0);
    }
    let jet = run.tracker.zipper(&[Complex64::new(run.w, 0.0)]).1[0];
    Ok(jet.d1.re.max(0.0).powf(0.625) - m0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formulas::slit_derivative_at_zero;
    use crate::loewner::DrivingKind;
    use crate::montecarlo::{run_trials, trial_rng};

    #[test]
    fn zipper_is_exact_for_vertical_slits() {
        let hull = SlitParams::vertical(1.0, 1.0);
        let t = HullTracker::new(&hull, 8).unwrap();
        let (cap, jets) = t.zipper(&[Complex64::new(0.0, 0.0)]);
        assert!((cap - 0.25).abs() < 1e-14);
        let exact = slit_derivative_at_zero(1.0, 1.0).unwrap();
        assert!((jets[0].d1.re - exact).abs() < 1e-14);
        // h(0) = 1 - sqrt(2) for the slit at 1.
        assert!((jets[0].value.re - (1.0 - 2f64.sqrt())).abs() < 1e-14);
    }

    #[test]
    fn zipper_converges_for_tilted_slits() {
        let hull = SlitParams::new(1.0, 1.0, std::f64::consts::FRAC_PI_4).unwrap();
        let exact = hull.capacity();
        let mut errs = Vec::new();
        for n in [64, 256, 1024] {
            let t = HullTracker::new(&hull, n).unwrap();
            errs.push((t.capacity() - exact).abs());
        }
        assert!(errs[2] < 2e-3 * exact, "{errs:?}");
        assert!(errs[2] < errs[0]);
        let t = HullTracker::new(&hull, 1024).unwrap();
        let z = Complex64::new(-0.5, 0.0);
        let h = 1e-5;
        let fd = (hull.forward(z + h).unwrap() - hull.forward(z - h).unwrap()).re / (2.0 * h);
        let jet = t.zipper(&[z]).1[0];
        assert!((jet.d1.re - fd).abs() < 5e-3, "{} vs {fd}", jet.d1.re);
    }

    #[test]
    fn refinement_resolves_the_driving_neighbourhood() {
        let hull = SlitParams::vertical(1.0, 1.0);
        let mut t = HullTracker::new(&hull, 2).unwrap();
        t.refine(0.99, 0.5);
        let near = t.points().iter().filter(|p| p.norm() < 0.2 + 1.0).count();
        assert!(near > 5);
        assert!((t.distance(0.99) - 0.01).abs() < 1e-12);
    }

    #[test]
    fn initial_state_matches_removal_map() {
        let d = DrivingPath::zero(DrivingKind::Chordal, 0.01, 1e-3).unwrap();
        let hull = SlitParams::vertical(1.0, 1.0);
        let grid = [Complex64::new(0.0, 1.0), Complex64::new(2.0, 0.5)];
        let tr = evolve_removal_map(&d, &hull, &grid, 16, 1).unwrap();
        let s0 = &tr.states[0];
        assert!((s0.capacity - 0.25).abs() < 1e-14);
        for (g, z) in s0.grid.iter().zip(grid) {
            let v = g.unwrap().value;
            assert!((v - hull.forward(z).unwrap()).norm() < 1e-12);
        }
    }

    #[test]
    fn zero_driving_capacity_matches_integral() {
        let d = DrivingPath::zero(DrivingKind::Chordal, 1.0, 1e-3).unwrap();
        let hull = SlitParams::vertical(1.0, 1.0);
        let tr = evolve_removal_map(&d, &hull, &[], 64, 100).unwrap();
        assert!(tr.stopped_at.is_none());
        for s in &tr.states {
            assert!((s.capacity - s.capacity_integral).abs() < 2e-3, "{s:?}");
        }
        let caps: Vec<f64> = tr.states.iter().map(|s| s.capacity).collect();
        assert!(caps.windows(2).all(|w| w[1] >= w[0]));
        assert!(tr
            .states
            .iter()
            .all(|s| s.deriv_at_w > 0.0 && s.deriv_at_w <= 1.0));
    }

    #[test]
    fn far_hull_is_avoided() {
        let hull = SlitParams::vertical(100.0, 1.0);
        let opts = RestrictionOptions::default();
        let r = restriction_avoidance_experiment(&hull, 8.0 / 3.0, 200, 4, 0, &opts).unwrap();
        assert!(r.record.value > 0.99);
    }

    #[test]
    fn martingale_increment_is_centered() {
        let hull = SlitParams::vertical(1.0, 1.0);
        let opts = RestrictionOptions::default();
        let r = run_trials("increment", 1.0, 300, 12, 0, |_, rng| {
            removal_martingale_increment(&hull, 8.0 / 3.0, 1.0, &opts, rng)
        })
        .unwrap();
        assert!(
            r.record.value.abs() < 3.0 * r.record.stderr,
            "{:?}",
            r.record
        );
    }

    #[test]
    fn restriction_trial_is_deterministic() {
        let hull = SlitParams::vertical(1.0, 1.0);
        let opts = RestrictionOptions::default();
        let a = restriction_trial(&hull, 8.0 / 3.0, &opts, &mut trial_rng(1, 2)).unwrap();
        let b = restriction_trial(&hull, 8.0 / 3.0, &opts, &mut trial_rng(1, 2)).unwrap();
        assert_eq!(a, b);
    }
}
