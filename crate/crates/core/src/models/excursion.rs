//! Brownian excursions in the half-plane: `W = X + iY` with `X` a Brownian
//! motion and `Y` a three-dimensional Bessel process.

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::conformal::SlitParams;
use crate::error::{domain, Error, Result};
use crate::formulas::excursion_halfplane_avoid;
use crate::montecarlo::{map_trials, mean_stderr, EstimateRecord};
use crate::sle::normal;

/// One exact Bessel(3) step: the norm of a 3-d Gaussian displacement.
#[inline]
fn bessel3_step<R: Rng + ?Sized>(y: f64, h: f64, rng: &mut R) -> f64 {
    let s = h.sqrt();
    let a = y + s * normal(rng);
    let b = s * normal(rng);
    let c = s * normal(rng);
    (a * a + b * b + c * c).sqrt()
}

/// Excursion from `i sqrt(dt)` until `Im W >= horizon`. Steps are at most
/// `(frac Y)^2` so the path is resolved near the real line.
pub fn sample_brownian_excursion<R: Rng + ?Sized>(
    horizon: f64,
    dt: f64,
    rng: &mut R,
) -> Result<Vec<Complex64>> {
    check(horizon, dt)?;
    let mut w = Complex64::new(0.0, dt.sqrt());
    let mut path = vec![w];
    while w.im < horizon {
        let h = (0.1 * w.im).powi(2).max(1e-2 * dt);
        let y = bessel3_step(w.im, h, rng);
        w = Complex64::new(w.re + h.sqrt() * normal(rng), y);
        path.push(w);
        if path.len() > 100_000_000 {
            return Err(Error::StepCap(100_000_000));
        }
    }
    Ok(path)
}

fn check(horizon: f64, dt: f64) -> Result<()> {
    if !(dt > 0.0 && dt < 1.0) || !(horizon > dt.sqrt()) {
        return domain("need 0 < dt < 1 and horizon above sqrt(dt)");
    }
    Ok(())
}

/// Outcome of one excursion run against a hull.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExcursionRun {
    pub avoided: bool,
    /// Where the path crossed the horizon (meaningless when hit).
    pub end: Complex64,
}

/// Run until the hull comes within `sqrt(dt)` (hit) or `Im W >= horizon`.
/// Steps shrink to `(0.1 d)^2` at distance `d` from the hull or the axis.
pub fn excursion_against_hull<R: Rng + ?Sized>(
    hull: &SlitParams,
    horizon: f64,
    dt: f64,
    rng: &mut R,
) -> Result<ExcursionRun> {
    check(horizon, dt)?;
    let eps = dt.sqrt();
    let mut w = Complex64::new(0.0, eps);
    if hull.distance(w) < eps {
        return domain("the hull touches the starting point");
    }
    let cap = 100_000_000u64;
    for _ in 0..cap {
        let d = hull.distance(w);
        if d < eps {
            return Ok(ExcursionRun {
                avoided: false,
                end: w,
            });
        }
        if w.im >= horizon {
            return Ok(ExcursionRun {
                avoided: true,
                end: w,
            });
        }
        let h = (0.1 * d.min(w.im)).powi(2).max(1e-2 * dt);
        let y = bessel3_step(w.im, h, rng);
        w = Complex64::new(w.re + h.sqrt() * normal(rng), y);
    }
    Err(Error::StepCap(cap))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExcursionReport {
    /// Frequency of avoiding the hull up to the horizon.
    pub raw: EstimateRecord,
    /// Avoidance up to the horizon times the exact chance `Im Phi(W)/Im W`
    /// that the rest of the excursion avoids it too.
    pub completed: EstimateRecord,
    /// `Phi'(0)` for the hull.
    pub exact: f64,
    /// The raw frequency exceeds the full-path probability by at most
    /// `height / horizon`, the chance of coming back down to the hull.
    pub bias_bound: f64,
}

pub fn excursion_avoid_experiment(
    hull: &SlitParams,
    horizon: f64,
    dt: f64,
    trials: u64,
    seed: u64,
    par: usize,
) -> Result<ExcursionReport> {
    if !hull.is_vertical() {
        return domain("the exact value is available for vertical slits");
    }
    let exact = crate::formulas::slit_derivative_at_zero(hull.foot, hull.height)?;
    let runs: Vec<Result<(f64, f64)>> = map_trials(trials, seed, par, |_, rng| {
        let r = excursion_against_hull(hull, horizon, dt, rng)?;
        if !r.avoided {
            return Ok((0.0, 0.0));
        }
        let tail = excursion_halfplane_avoid(r.end, hull.forward(r.end)?.im)?;
        Ok((1.0, tail))
    });
    let runs: Vec<(f64, f64)> = runs.into_iter().collect::<Result<_>>()?;
    let raw: Vec<f64> = runs.iter().map(|r| r.0).collect();
    let done: Vec<f64> = runs.iter().map(|r| r.1).collect();
    let rec = |name: &str, xs: &[f64]| {
        let (value, stderr) = mean_stderr(xs);
        EstimateRecord {
            name: name.into(),
            scale: horizon,
            value,
            stderr,
            trials,
            seed,
        }
    };
    Ok(ExcursionReport {
        raw: rec("excursion_avoid_raw", &raw),
        completed: rec("excursion_avoid", &done),
        exact,
        bias_bound: hull.height / horizon,
    })
}

/// Brownian motion in `Im` started at height `r`: does it reach `big_r`
/// before the real line?
pub fn halfplane_survival_indicator<R: Rng + ?Sized>(
    r: f64,
    big_r: f64,
    rng: &mut R,
) -> Result<bool> {
    if !(r > 0.0 && big_r > r) {
        return domain("need 0 < r < R");
    }
    let floor = 1e-9 * r;
    let mut y = r;
    for _ in 0..100_000_000u64 {
        let gap = y.min(big_r - y);
        if y <= floor {
            return Ok(false);
        }
        if big_r - y <= floor {
            return Ok(true);
        }
        y += 0.1 * gap * normal(rng);
    }
    Err(Error::StepCap(100_000_000))
}
