//! Random SLE: Brownian drivings, the Bessel swallowing process, boundary
//! hitting experiments, the radial angle diffusion and the hull-removal map.

mod radial;
mod removal;

pub use radial::{
    radial_boundary_survival, radial_diffusion_path, radial_functional_estimates,
    radial_general_identity, radial_martingale_check, MartingaleCheck, RadialDiffusionOptions,
    RadialDiffusionState,
};
pub use removal::{
    evolve_removal_map, removal_martingale_increment, restriction_avoidance_experiment,
    restriction_trial, HullTracker, RemovalMapState, RemovalTrajectory, RestrictionOptions,
    RestrictionOutcome, RestrictionReport,
};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::loewner::{chordal_tip, steps_for, DrivingKind, DrivingPath};
use crate::montecarlo::{map_trials, mean_stderr, EstimateRecord};

/// Parameters shared by every sampler.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SleParams {
    pub kappa: f64,
    pub horizon: f64,
    pub dt: f64,
    pub seed: u64,
}

impl SleParams {
    pub fn new(kappa: f64, horizon: f64, dt: f64, seed: u64) -> Result<Self> {
        let p = SleParams {
            kappa,
            horizon,
            dt,
            seed,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.kappa >= 0.0) || !self.kappa.is_finite() {
            return domain("kappa must be finite and non-negative");
        }
        if !(self.horizon > 0.0) || !self.horizon.is_finite() {
            return domain("horizon must be positive");
        }
        if !(self.dt > 0.0) || self.dt >= self.horizon {
            return domain("need 0 < dt < horizon");
        }
        Ok(())
    }
}

#[inline]
pub(crate) fn normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

/// Brownian driving `sqrt(kappa) B_t` on the grid of `p`, drawn from `rng`.
pub fn sample_driving_with<R: Rng + ?Sized>(
    p: &SleParams,
    kind: DrivingKind,
    rng: &mut R,
) -> Result<DrivingPath> {
    p.validate()?;
    let n = steps_for(p.horizon, p.dt)?;
    let sd = (p.kappa * p.dt).sqrt();
    let mut values = Vec::with_capacity(n + 1);
    let mut w = 0.0;
    values.push(w);
    for _ in 0..n {
        w += sd * normal(rng);
        values.push(w);
    }
    DrivingPath::new(kind, p.dt, values)
}

/// Brownian driving seeded from `p.seed`.
pub fn sample_driving(p: &SleParams, kind: DrivingKind) -> Result<DrivingPath> {
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    sample_driving_with(p, kind, &mut rng)
}

/// Is `x` swallowed before `p.horizon`? Simulates the Bessel process
/// `dX = dB + 2/(kappa X) dt` from `x / sqrt(kappa)`.
///
/// Steps are `min(p.dt, (X/10)^2)` so the drift singularity is resolved;
/// the process is absorbed when it crosses 0 or drops below `1e-9 |X_0|`.
pub fn bessel_swallow_indicator<R: Rng + ?Sized>(
    x: f64,
    p: &SleParams,
    rng: &mut R,
) -> Result<bool> {
    p.validate()?;
    if x == 0.0 || !x.is_finite() {
        return domain("x must be real and nonzero");
    }
    if p.kappa == 0.0 {
        return Ok(false);
    }
    let mut y = x.abs() / p.kappa.sqrt();
    let floor = 1e-9 * y;
    let c = 2.0 / p.kappa;
    let mut t = 0.0;
    while t < p.horizon {
        let h = p.dt.min(0.01 * y * y).min(p.horizon - t);
        y += c / y * h + h.sqrt() * normal(rng);
        t += h;
        if y <= floor {
            return Ok(true);
        }
    }
    Ok(false)
}

/// Which boundary interval the chordal hull reaches first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SideHit {
    /// `[c, inf)` swallowed first.
    Right,
    /// `(-inf, a]` swallowed first.
    Left,
    /// Neither swallowed before the horizon.
    Inconclusive,
}

/// Relative step size for the boundary-point flows.
const SIDE_EPS: f64 = 0.1;
/// A point counts as swallowed once its gap to the driving is this small
/// relative to the gap between the two images.
const SIDE_RATIO: f64 = 1e-12;

/// Flow `a < 0 < c` under the chordal equation with Brownian driving and
/// report which is swallowed first.
///
/// Only the gaps `u = g(c) - W` and `v = W - g(a)` are tracked. Each step
/// freezes the driving, applies the exact slit flow to both gaps and then
/// moves the driving; steps shrink as `(min(u, v) / 20)^2` near swallowing.
pub fn side_hit_experiment<R: Rng + ?Sized>(
    a: f64,
    c: f64,
    p: &SleParams,
    rng: &mut R,
) -> Result<SideHit> {
    p.validate()?;
    if !(a < 0.0 && c > 0.0) {
        return domain("need a < 0 < c");
    }
    if !(p.kappa > 4.0) {
        return domain("side hits need kappa > 4");
    }
    let sk = p.kappa.sqrt();
    let (mut u, mut v) = (c, -a);
    let mut t = 0.0;
    while t < p.horizon {
        let m = u.min(v);
        let h = p.dt.min(0.25 * (SIDE_EPS * m).powi(2)).min(p.horizon - t);
        let dw = sk * h.sqrt() * normal(rng);
        u = (u * u + 4.0 * h).sqrt() - dw;
        v = (v * v + 4.0 * h).sqrt() + dw;
        t += h;
        let s = u + v;
        if u <= SIDE_RATIO * s {
            return Ok(SideHit::Right);
        }
        if v <= SIDE_RATIO * s {
            return Ok(SideHit::Left);
        }
    }
    Ok(SideHit::Inconclusive)
}

/// Frequency of [`SideHit::Right`] among conclusive runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SideHitReport {
    pub record: EstimateRecord,
    pub inconclusive: u64,
}

/// Repeat [`side_hit_experiment`]; inconclusive runs are dropped from both
/// numerator and denominator and counted separately.
pub fn side_hit_estimate(
    a: f64,
    c: f64,
    p: &SleParams,
    trials: u64,
    parallelism: usize,
) -> Result<SideHitReport> {
    p.validate()?;
    let outs = map_trials(trials, p.seed, parallelism, |_, rng| {
        side_hit_experiment(a, c, p, rng)
    });
    let mut xs = Vec::with_capacity(outs.len());
    let mut inconclusive = 0;
    for o in outs {
        match o? {
            SideHit::Right => xs.push(1.0),
            SideHit::Left => xs.push(0.0),
            SideHit::Inconclusive => inconclusive += 1,
        }
    }
    if xs.is_empty() {
        return Err(Error::InsufficientCounts(
            "every side-hit run was inconclusive".into(),
        ));
    }
    let (value, stderr) = mean_stderr(&xs);
    Ok(SideHitReport {
        record: EstimateRecord {
            name: format!("side_hit_a{a}_c{c}"),
            scale: c / -a,
            value,
            stderr,
            trials: xs.len() as u64,
            seed: p.seed,
        },
        inconclusive,
    })
}

/// Growth of the chordal trace over increasing horizons.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransienceReport {
    pub horizons: Vec<f64>,
    /// Median over runs of `max_{s <= T} |gamma(s)|`.
    pub median_max_modulus: Vec<f64>,
    pub increasing: bool,
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    }
}

/// Median running maximum of the tip modulus at each horizon. Tips are
/// sampled every `stride` steps.
pub fn transience_diagnostic(
    p: &SleParams,
    horizons: &[f64],
    runs: u64,
    stride: usize,
    parallelism: usize,
) -> Result<TransienceReport> {
    if !(p.kappa < 4.0) {
        return domain("transience diagnostic needs kappa < 4");
    }
    if horizons.is_empty() || horizons.windows(2).any(|w| w[1] <= w[0]) {
        return domain("horizons must be increasing");
    }
    let top = *horizons.last().unwrap();
    let q = SleParams::new(p.kappa, top, p.dt, p.seed)?;
    let stride = stride.max(1);
    let ends: Vec<usize> = horizons
        .iter()
        .map(|&h| steps_for(h, p.dt))
        .collect::<Result<_>>()?;
    let per_run: Vec<Result<Vec<f64>>> = map_trials(runs, p.seed, parallelism, |_, rng| {
        let d = sample_driving_with(&q, DrivingKind::Chordal, rng)?;
        let mut best = 0.0f64;
        let mut out = Vec::with_capacity(ends.len());
        let mut k = 0;
        for &e in &ends {
            while k <= e.min(d.steps()) {
                best = best.max(chordal_tip(&d, k).norm());
                k += stride;
            }
            best = best.max(chordal_tip(&d, e.min(d.steps())).norm());
            out.push(best);
        }
        Ok(out)
    });
    let per_run: Vec<Vec<f64>> = per_run.into_iter().collect::<Result<_>>()?;
    let medians: Vec<f64> = (0..horizons.len())
        .map(|i| median(per_run.iter().map(|r| r[i]).collect()))
        .collect();
    let increasing = medians.windows(2).all(|w| w[1] > w[0]);
    Ok(TransienceReport {
        horizons: horizons.to_vec(),
        median_max_modulus: medians,
        increasing,
    })
}

/// `|gamma(T)|` for independent traces.
pub fn tip_moduli(p: &SleParams, runs: u64, parallelism: usize) -> Result<Vec<f64>> {
    map_trials(runs, p.seed, parallelism, |_, rng| {
        let d = sample_driving_with(p, DrivingKind::Chordal, rng)?;
        Ok(chordal_tip(&d, d.steps()).norm())
    })
    .into_iter()
    .collect()
}

/// Tip of the trace driven by `d` at its final time.
pub fn final_tip(d: &DrivingPath) -> Complex64 {
    chordal_tip(d, d.steps())
}
