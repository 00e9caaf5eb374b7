//! The angle diffusion `dY = sqrt(kappa) dB + cot(Y/2) dt` between a
//! boundary point and the radial driving, and the derivative weight
//! `log Phi = -1/2 int ds / sin^2(Y/2)`.
//!
//! Paths are simulated in `V = log tan(Y/4)`. With the clock
//! `d sigma = kappa cosh^2(V) dt / 4` the equation becomes
//! `dV = dB_sigma + ((kappa - 4) / (2 kappa)) tanh(V) d sigma`, the weight is
//! `log Phi = -2 sigma / kappa` and `sin(Y/2) = 1 / cosh V`. Absorption at
//! `Y = 0, 2 pi` is `V -> -inf, +inf`, which the near-constant drift reaches
//! in a few hundred long steps instead of an ever-shrinking Euler ladder.

use rand::Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};

use super::normal;
use crate::error::{domain, Result};
use crate::formulas::{lambda_exponent, q_exponent};
use crate::montecarlo::{map_trials, mean_stderr, EstimateRecord};

/// State of one diffusion path at a given time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadialDiffusionState {
    pub time: f64,
    pub y: f64,
    pub log_deriv: f64,
    pub tau_hit: Option<f64>,
}

impl RadialDiffusionState {
    pub fn alive(&self) -> bool {
        self.tau_hit.is_none()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadialDiffusionOptions {
    /// Largest step in real time.
    pub dt_max: f64,
    /// Largest clock step is `sigma_rel * cosh^2(V)`, capped at `sigma_max`.
    pub sigma_rel: f64,
    pub sigma_max: f64,
    /// Chance of returning from the absorption level to the bulk.
    pub return_tol: f64,
}

impl Default for RadialDiffusionOptions {
    fn default() -> Self {
        RadialDiffusionOptions {
            dt_max: 1e-3,
            sigma_rel: 0.01,
            sigma_max: 1.0,
            return_tol: 1e-12,
        }
    }
}

/// `|V|` beyond which a path counts as absorbed. A Brownian motion with
/// drift `mu` returns from distance `v` with probability `exp(-2 mu v)`.
fn absorption_level(kappa: f64, tol: f64) -> f64 {
    let mu = (kappa - 4.0) / (2.0 * kappa);
    if mu <= 0.0 {
        return 300.0;
    }
    (-tol.ln() / (2.0 * mu) + 5.0).clamp(20.0, 300.0)
}

#[inline]
fn angle_of(v: f64) -> f64 {
    4.0 * v.exp().atan()
}

/// Simulate from `Y_0 = x` and return the state at each of the increasing
/// `times`. Every visited state is appended to `path` when given.
pub fn radial_diffusion_path<R: Rng + ?Sized>(
    x: f64,
    kappa: f64,
    times: &[f64],
    opts: &RadialDiffusionOptions,
    rng: &mut R,
    mut path: Option<&mut Vec<RadialDiffusionState>>,
) -> Result<Vec<RadialDiffusionState>> {
    if !(x > 0.0 && x < TAU) {
        return domain("x must lie in (0, 2 pi)");
    }
    if !(kappa > 0.0) {
        return domain("kappa must be positive");
    }
    if times.iter().any(|t| !(*t >= 0.0)) || times.windows(2).any(|w| w[1] < w[0]) {
        return domain("times must be non-negative and sorted");
    }
    let mu = (kappa - 4.0) / (2.0 * kappa);
    let v_kill = absorption_level(kappa, opts.return_tol);
    let mut v = (0.25 * x).tan().ln();
    let mut st = RadialDiffusionState {
        time: 0.0,
        y: x,
        log_deriv: 0.0,
        tau_hit: None,
    };
    if let Some(p) = path.as_deref_mut() {
        p.push(st);
    }
    let mut out = Vec::with_capacity(times.len());
    for &target in times {
        while st.alive() && st.time < target {
            let ch2 = v.cosh().powi(2);
            let rate = 0.25 * kappa * ch2;
            let ds_cap = (opts.sigma_rel * ch2).min(opts.sigma_max);
            let dt = opts.dt_max.min(ds_cap / rate).min(target - st.time);
            let ds = dt * rate;
            v += mu * v.tanh() * ds + ds.sqrt() * normal(rng);
            st.time += dt;
            st.log_deriv -= 2.0 * ds / kappa;
            if v.abs() >= v_kill {
                st.tau_hit = Some(st.time);
                st.y = if v < 0.0 { 0.0 } else { TAU };
            } else {
                st.y = angle_of(v);
            }
            if let Some(p) = path.as_deref_mut() {
                p.push(st);
            }
        }
        out.push(RadialDiffusionState { time: target, ..st });
    }
    Ok(out)
}

/// Estimates of `E[1_H Phi^b sin(Y_t/2)^q]` at each of `times`.
#[allow(clippy::too_many_arguments)]
pub fn radial_functional_estimates(
    name: &str,
    x: f64,
    kappa: f64,
    b: f64,
    q: f64,
    times: &[f64],
    trials: u64,
    seed: u64,
    parallelism: usize,
    opts: &RadialDiffusionOptions,
) -> Result<Vec<EstimateRecord>> {
    let per: Vec<Result<Vec<f64>>> = map_trials(trials, seed, parallelism, |_, rng| {
        let states = radial_diffusion_path(x, kappa, times, opts, rng, None)?;
        Ok(states
            .iter()
            .map(|s| {
                if s.alive() {
                    (b * s.log_deriv).exp() * (0.5 * s.y).sin().powf(q)
                } else {
                    0.0
                }
            })
            .collect())
    });
    let per: Vec<Vec<f64>> = per.into_iter().collect::<Result<_>>()?;
    Ok(times
        .iter()
        .enumerate()
        .map(|(i, &t)| {
            let col: Vec<f64> = per.iter().map(|r| r[i]).collect();
            let (value, stderr) = mean_stderr(&col);
            EstimateRecord {
                name: name.to_string(),
                scale: t,
                value,
                stderr,
                trials,
                seed,
            }
        })
        .collect())
}

/// Monte Carlo value next to its exact counterpart.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MartingaleCheck {
    pub record: EstimateRecord,
    pub exact: f64,
}

impl MartingaleCheck {
    /// `|estimate - exact|` in units of the standard error.
    pub fn z_score(&self) -> f64 {
        if self.record.stderr == 0.0 {
            return if self.record.value == self.exact {
                0.0
            } else {
                f64::INFINITY
            };
        }
        (self.record.value - self.exact).abs() / self.record.stderr
    }
}

fn check_kappa(kappa: f64) -> Result<()> {
    if !(kappa > 4.0) {
        return domain("the radial boundary diffusion needs kappa > 4");
    }
    Ok(())
}

/// `E[1_H(x,t) Phi^b sin(Y_t/2)^q]` with `q = q(kappa, b)` against the exact
/// value `e^{-lambda t} sin(x/2)^q`. Time 0 is returned without simulation.
pub fn radial_general_identity(
    x: f64,
    b: f64,
    times: &[f64],
    kappa: f64,
    trials: u64,
    seed: u64,
    parallelism: usize,
) -> Result<Vec<MartingaleCheck>> {
    check_kappa(kappa)?;
    if !(b >= 0.0) {
        return domain("b must be non-negative");
    }
    let q = q_exponent(kappa, b);
    let lam = lambda_exponent(kappa, b);
    let start = (0.5 * x).sin().powf(q);
    let positive: Vec<f64> = times.iter().copied().filter(|&t| t > 0.0).collect();
    let name = if b == 0.0 {
        "radial_martingale"
    } else {
        "radial_weighted_martingale"
    };
    let mut recs = if positive.is_empty() {
        Vec::new()
    } else {
        radial_functional_estimates(
            name,
            x,
            kappa,
            b,
            q,
            &positive,
            trials,
            seed,
            parallelism,
            &RadialDiffusionOptions::default(),
        )?
    }
    .into_iter();
    let mut out = Vec::with_capacity(times.len());
    for &t in times {
        let exact = (-lam * t).exp() * start;
        let record = if t > 0.0 {
            recs.next().expect("one record per positive time")
        } else {
            EstimateRecord {
                name: name.to_string(),
                scale: 0.0,
                value: start,
                stderr: 0.0,
                trials: 0,
                seed,
            }
        };
        out.push(MartingaleCheck { record, exact });
    }
    Ok(out)
}

/// `E[1_H sin(Y_t/2)^{q0}]` against `e^{-lambda0 t} sin(x/2)^{q0}`.
pub fn radial_martingale_check(
    x: f64,
    times: &[f64],
    kappa: f64,
    trials: u64,
    seed: u64,
    parallelism: usize,
) -> Result<Vec<MartingaleCheck>> {
    radial_general_identity(x, 0.0, times, kappa, trials, seed, parallelism)
}

/// Weighted survival `E[1_H(x,t) Phi^b]`, which decays like `e^{-lambda t}`.
pub fn radial_boundary_survival(
    x: f64,
    b: f64,
    t: f64,
    kappa: f64,
    trials: u64,
    seed: u64,
    parallelism: usize,
) -> Result<EstimateRecord> {
    check_kappa(kappa)?;
    if !(b >= 0.0) {
        return domain("b must be non-negative");
    }
    if !(x > 0.0 && x < 2.0 * PI) {
        return domain("x must lie in (0, 2 pi)");
    }
    let mut r = radial_functional_estimates(
        "radial_survival",
        x,
        kappa,
        b,
        0.0,
        &[t],
        trials,
        seed,
        parallelism,
        &RadialDiffusionOptions::default(),
    )?;
    Ok(r.remove(0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::montecarlo::trial_rng;

    #[test]
    fn time_zero_is_exact() {
        let r = radial_martingale_check(1.0, &[0.0], 6.0, 10, 0, 0).unwrap();
        assert_eq!(r[0].record.value, (0.5f64).sin().powf(1.0 / 3.0));
        assert_eq!(r[0].record.stderr, 0.0);
        assert!(r[0].z_score() < 1e-12);
    }

    #[test]
    fn martingale_identity_on_time_grid() {
        let r = radial_martingale_check(PI, &[0.25, 0.5, 1.0, 2.0], 6.0, 20_000, 17, 0).unwrap();
        for c in &r {
            assert!(
                c.z_score() < 3.0,
                "t={} est={} exact={}",
                c.record.scale,
                c.record.value,
                c.exact
            );
        }
    }

    #[test]
    fn near_boundary_start_gives_small_value() {
        let r = radial_martingale_check(1e-6, &[1.0], 6.0, 2000, 3, 0).unwrap();
        assert!(r[0].record.value < 0.02);
    }

    #[test]
    fn log_deriv_is_non_increasing() {
        let mut path = Vec::new();
        radial_diffusion_path(
            2.0,
            6.0,
            &[3.0],
            &RadialDiffusionOptions::default(),
            &mut trial_rng(4, 0),
            Some(&mut path),
        )
        .unwrap();
        assert!(path.windows(2).all(|w| w[1].log_deriv <= w[0].log_deriv));
        assert!(path.iter().all(|s| !s.alive() || (s.y > 0.0 && s.y < TAU)));
    }

    #[test]
    fn weighted_survival_decay_rate() {
        let t1 = radial_boundary_survival(PI, 1.0, 1.0, 6.0, 20_000, 8, 0).unwrap();
        let t2 = radial_boundary_survival(PI, 1.0, 2.0, 6.0, 20_000, 9, 0).unwrap();
        let ratio = t2.value / t1.value;
        let se = ratio * ((t1.stderr / t1.value).powi(2) + (t2.stderr / t2.value).powi(2)).sqrt();
        assert!(
            (ratio - (-1.25f64).exp()).abs() < 3.0 * se,
            "{ratio} ({se})"
        );
    }

    #[test]
    fn kappa_at_most_four_is_rejected() {
        assert!(radial_martingale_check(PI, &[1.0], 4.0, 10, 0, 0).is_err());
    }
}
