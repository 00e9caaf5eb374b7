//! Chordal and radial Loewner chains driven by sampled functions.
//!
//! Chordal steps are exact: with the driving frozen at `w` on a step of
//! length `dt`, the flow `dg = 2/(g - w) dt` is the vertical slit map of
//! height `2 sqrt(dt)` rooted at `w`. Radial points are flowed with RK4,
//! and radial traces use the closed-form radial slit map
//! `g(z) = zeta K^{-1}(e^{dt} K(z/zeta))`, `K(w) = w/(1+w)^2`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::conformal::{vslit_forward, vslit_inverse, MapChain, SlitParams};
use crate::error::{domain, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DrivingKind {
    Chordal,
    Radial,
}

/// Driving function sampled on the grid `t_k = k dt`, `k = 0..=N`.
///
/// Radial values are angles; the driving point is `exp(i theta_k)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DrivingPath {
    pub kind: DrivingKind,
    pub dt: f64,
    pub values: Vec<f64>,
}

impl DrivingPath {
    pub fn new(kind: DrivingKind, dt: f64, values: Vec<f64>) -> Result<Self> {
        if !(dt > 0.0) || !dt.is_finite() {
            return domain("dt must be positive");
        }
        if values.is_empty() {
            return domain("driving path needs at least one sample");
        }
        if values.iter().any(|v| !v.is_finite()) {
            return domain("driving values must be finite");
        }
        Ok(DrivingPath { kind, dt, values })
    }

    /// Sample `f` on `[0, horizon]`.
    pub fn from_fn(
        kind: DrivingKind,
        horizon: f64,
        dt: f64,
        f: impl Fn(f64) -> f64,
    ) -> Result<Self> {
        let n = steps_for(horizon, dt)?;
        let values = (0..=n).map(|k| f(k as f64 * dt)).collect();
        Self::new(kind, dt, values)
    }

    pub fn zero(kind: DrivingKind, horizon: f64, dt: f64) -> Result<Self> {
        Self::from_fn(kind, horizon, dt, |_| 0.0)
    }

    pub fn steps(&self) -> usize {
        self.values.len() - 1
    }

    pub fn horizon(&self) -> f64 {
        self.steps() as f64 * self.dt
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.values.len()).map(|k| k as f64 * self.dt).collect()
    }

    /// Every driving value shifted by `x0`.
    pub fn shifted(&self, x0: f64) -> Self {
        DrivingPath {
            kind: self.kind,
            dt: self.dt,
            values: self.values.iter().map(|v| v + x0).collect(),
        }
    }

    pub fn negated(&self) -> Self {
        DrivingPath {
            kind: self.kind,
            dt: self.dt,
            values: self.values.iter().map(|v| -v).collect(),
        }
    }
}

pub(crate) fn steps_for(horizon: f64, dt: f64) -> Result<usize> {
    if !(dt > 0.0) || !(horizon >= 0.0) {
        return domain("need dt > 0 and horizon >= 0");
    }
    Ok((horizon / dt - 1e-9).ceil().max(0.0) as usize)
}

/// State of one flowed point at one grid time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowState {
    pub time: f64,
    pub point: Complex64,
    pub swallowed_at: Option<f64>,
    pub alive: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FlowOptions {
    /// Distance to the driving point below which a point counts as
    /// swallowed. Defaults to `2 sqrt(dt)`.
    pub swallow_tol: Option<f64>,
}

fn check_kind(d: &DrivingPath, kind: DrivingKind) -> Result<()> {
    if d.kind != kind {
        return domain(format!("expected a {kind:?} driving path"));
    }
    Ok(())
}

/// Flow `z` under the chordal equation; the trajectory ends at swallowing.
pub fn solve_chordal_flow(
    d: &DrivingPath,
    z: Complex64,
    opts: FlowOptions,
) -> Result<Vec<FlowState>> {
    check_kind(d, DrivingKind::Chordal)?;
    if z.im < 0.0 || !z.re.is_finite() || !z.im.is_finite() {
        return domain("z must lie in the closed upper half-plane");
    }
    if z.im == 0.0 && z.re == d.values[0] {
        return domain("z coincides with the initial driving value");
    }
    let tol = opts.swallow_tol.unwrap_or(2.0 * d.dt.sqrt());
    let height = 2.0 * d.dt.sqrt();
    let mut out = Vec::with_capacity(d.values.len());
    let mut g = z;
    for k in 0..d.values.len() {
        let t = k as f64 * d.dt;
        if (g - d.values[k]).norm() < tol {
            out.push(FlowState {
                time: t,
                point: g,
                swallowed_at: Some(t),
                alive: false,
            });
            return Ok(out);
        }
        out.push(FlowState {
            time: t,
            point: g,
            swallowed_at: None,
            alive: true,
        });
        if k + 1 < d.values.len() {
            g = vslit_forward(g, d.values[k], height);
        }
    }
    Ok(out)
}

/// Sampled trace with capacity time stamps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoewnerTrace {
    pub times: Vec<f64>,
    pub tips: Vec<Complex64>,
    /// Elementary slits for chordal traces; radial traces carry none.
    pub chain: Option<MapChain>,
    /// Steps whose tip needed clamping back into the closed domain.
    pub flagged: Vec<usize>,
}

/// Tip `gamma(t_n)` for a chordal driving, composing inverse slit maps.
pub fn chordal_tip(d: &DrivingPath, n: usize) -> Complex64 {
    if n == 0 {
        return Complex64::new(d.values[0], 0.0);
    }
    let h = 2.0 * d.dt.sqrt();
    let mut z = Complex64::new(d.values[n - 1], h);
    for k in (0..n - 1).rev() {
        z = vslit_inverse(z, d.values[k], h);
    }
    z
}

/// Reconstruct the chordal trace at every grid time. Costs O(N^2).
pub fn chordal_trace(d: &DrivingPath) -> Result<LoewnerTrace> {
    check_kind(d, DrivingKind::Chordal)?;
    let n = d.steps();
    let h = 2.0 * d.dt.sqrt();
    let mut chain = MapChain::with_capacity(n);
    for k in 0..n {
        chain.push(SlitParams::vertical(d.values[k], h));
    }
    let mut tips = Vec::with_capacity(n + 1);
    let mut flagged = Vec::new();
    for m in 0..=n {
        let mut z = chordal_tip(d, m);
        if !z.re.is_finite() || !z.im.is_finite() {
            return Err(Error::Numerical {
                step: m,
                reason: "non-finite tip".into(),
            });
        }
        if z.im < 0.0 {
            z.im = 0.0;
            flagged.push(m);
        }
        tips.push(z);
    }
    Ok(LoewnerTrace {
        times: d.times(),
        tips,
        chain: Some(chain),
        flagged,
    })
}

/// Constant `c` such that the driving `c sqrt(t)` grows a straight ray at
/// angle `theta`, found by bisection on the final tip argument.
pub fn calibrate_sqrt_driving(theta: f64, dt: f64) -> Result<f64> {
    use std::f64::consts::FRAC_PI_2;
    if !(theta > 0.0 && theta < std::f64::consts::PI) {
        return domain("theta must lie in (0, pi)");
    }
    if (theta - FRAC_PI_2).abs() < 1e-15 {
        return Ok(0.0);
    }
    let angle = |c: f64| -> Result<f64> {
        let d = DrivingPath::from_fn(DrivingKind::Chordal, 1.0, dt, |t| c * t.sqrt())?;
        let tip = chordal_tip(&d, d.steps());
        Ok(tip.im.atan2(tip.re))
    };
    // The ray angle decreases as c grows.
    let (mut lo, mut hi) = (-1.0, 1.0);
    let mut iter = 0;
    while angle(hi)? > theta {
        hi *= 2.0;
        iter += 1;
        if iter > 60 {
            return Err(Error::Calibration { iterations: iter });
        }
    }
    while angle(lo)? < theta {
        lo *= 2.0;
        iter += 1;
        if iter > 60 {
            return Err(Error::Calibration { iterations: iter });
        }
    }
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if angle(mid)? > theta {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-12 {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[inline]
fn radial_rhs(g: Complex64, zeta: Complex64) -> Complex64 {
    -g * (g + zeta) / (g - zeta)
}

#[inline]
fn rk4_radial(g: Complex64, zeta: Complex64, h: f64) -> Complex64 {
    let k1 = radial_rhs(g, zeta);
    let k2 = radial_rhs(g + k1 * (h / 2.0), zeta);
    let k3 = radial_rhs(g + k2 * (h / 2.0), zeta);
    let k4 = radial_rhs(g + k3 * h, zeta);
    g + (k1 + 2.0 * k2 + 2.0 * k3 + k4) * (h / 6.0)
}

/// Flow `z` in the unit disc under the radial equation with RK4.
pub fn solve_radial_flow(
    d: &DrivingPath,
    z: Complex64,
    opts: FlowOptions,
) -> Result<Vec<FlowState>> {
    check_kind(d, DrivingKind::Radial)?;
    if z.norm() > 1.0 + 1e-12 {
        return domain("z must lie in the closed unit disc");
    }
    let tol = opts.swallow_tol.unwrap_or(2.0 * d.dt.sqrt());
    let mut out = Vec::with_capacity(d.values.len());
    let mut g = z;
    for k in 0..d.values.len() {
        let t = k as f64 * d.dt;
        let zeta = Complex64::from_polar(1.0, d.values[k]);
        if (g - zeta).norm() < tol {
            out.push(FlowState {
                time: t,
                point: g,
                swallowed_at: Some(t),
                alive: false,
            });
            return Ok(out);
        }
        out.push(FlowState {
            time: t,
            point: g,
            swallowed_at: None,
            alive: true,
        });
        if k + 1 < d.values.len() {
            let full = rk4_radial(g, zeta, d.dt);
            let bad = !full.re.is_finite() || !full.im.is_finite() || (full - zeta).norm() < tol;
            g = if bad {
                let half = rk4_radial(g, zeta, d.dt / 2.0);
                rk4_radial(half, zeta, d.dt / 2.0)
            } else {
                full
            };
            if !g.re.is_finite() || !g.im.is_finite() {
                out.push(FlowState {
                    time: t + d.dt,
                    point: g,
                    swallowed_at: Some(t + d.dt),
                    alive: false,
                });
                return Ok(out);
            }
        }
    }
    Ok(out)
}

/// Root of `w/(1+w)^2 = v` inside the closed unit disc.
#[inline]
fn koebe_inverse(v: Complex64) -> Complex64 {
    if v.norm() == 0.0 {
        return v;
    }
    let b = 1.0 - 2.0 * v;
    let s = (1.0 - 4.0 * v).sqrt();
    let (p, m) = (b + s, b - s);
    let den = if p.norm_sqr() >= m.norm_sqr() { p } else { m };
    2.0 * v / den
}

#[inline]
fn koebe(w: Complex64) -> Complex64 {
    let d = 1.0 + w;
    w / (d * d)
}

/// One radial step with driving frozen at `zeta`: exact solution of the
/// radial equation for time `dt`.
#[inline]
pub fn radial_slit_forward(z: Complex64, zeta: Complex64, dt: f64) -> Complex64 {
    zeta * koebe_inverse(dt.exp() * koebe(z / zeta))
}

/// Inverse of [`radial_slit_forward`].
#[inline]
pub fn radial_slit_inverse(w: Complex64, zeta: Complex64, dt: f64) -> Complex64 {
    zeta * koebe_inverse((-dt).exp() * koebe(w / zeta))
}

/// Tip `gamma(t_n)` of a radial driving.
pub fn radial_tip(d: &DrivingPath, n: usize) -> Complex64 {
    let zetas = |k: usize| Complex64::from_polar(1.0, d.values[k]);
    if n == 0 {
        return zetas(0);
    }
    let mut z = radial_slit_inverse(zetas(n - 1), zetas(n - 1), d.dt);
    for k in (0..n - 1).rev() {
        z = radial_slit_inverse(z, zetas(k), d.dt);
    }
    z
}

/// Reconstruct the radial trace at every grid time. Costs O(N^2).
pub fn radial_trace(d: &DrivingPath) -> Result<LoewnerTrace> {
    check_kind(d, DrivingKind::Radial)?;
    let n = d.steps();
    let zetas: Vec<Complex64> = d
        .values
        .iter()
        .map(|&t| Complex64::from_polar(1.0, t))
        .collect();
    let mut tips = Vec::with_capacity(n + 1);
    let mut flagged = Vec::new();
    tips.push(zetas[0]);
    for m in 1..=n {
        let mut z = radial_slit_inverse(zetas[m - 1], zetas[m - 1], d.dt);
        for k in (0..m - 1).rev() {
            z = radial_slit_inverse(z, zetas[k], d.dt);
        }
        if !z.re.is_finite() || !z.im.is_finite() {
            return Err(Error::Numerical {
                step: m,
                reason: "non-finite tip".into(),
            });
        }
        if z.norm() > 1.0 {
            z /= z.norm();
            flagged.push(m);
        }
        tips.push(z);
    }
    Ok(LoewnerTrace {
        times: d.times(),
        tips,
        chain: None,
        flagged,
    })
}

/// Output of the radial-to-chordal coordinate change.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialChordal {
    pub t: Vec<f64>,
    pub u: Vec<f64>,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub r: Vec<f64>,
    pub beta: Vec<f64>,
    /// True when the run stopped at `|zeta - e| < 1/n_stop`.
    pub truncated: bool,
    /// `(beta(U) - beta(0)) / (sqrt(kappa) U)` over the computed range.
    pub drift_per_u: f64,
}

/// Change a radial driving into the driving of the chordal chain aimed
/// at -1, on the chordal capacity clock `u`.
///
/// `e_t = g_t(-1)` is flowed on the circle with RK4, `r_t = psi(-zeta_t/e_t)`,
/// and `a, b, u` are integrated with the trapezoid rule.
pub fn radial_to_chordal_transform(
    d: &DrivingPath,
    kappa: f64,
    n_stop: f64,
) -> Result<RadialChordal> {
    check_kind(d, DrivingKind::Radial)?;
    if !(n_stop > 0.0) {
        return domain("n_stop must be positive");
    }
    // Angle of e_t solves dphi/dt = cot((phi - theta)/2).
    let rhs = |phi: f64, theta: f64| 1.0 / ((phi - theta) / 2.0).tan();
    let rfun = |theta: f64, phi: f64| -1.0 / ((theta - phi) / 2.0).tan();
    let mut phi = d.values[0] + std::f64::consts::PI;
    let dt = d.dt;
    let mut out = RadialChordal {
        t: vec![0.0],
        u: vec![0.0],
        a: vec![1.0],
        b: vec![0.0],
        r: vec![rfun(d.values[0], phi)],
        beta: vec![rfun(d.values[0], phi)],
        truncated: false,
        drift_per_u: 0.0,
    };
    for k in 0..d.steps() {
        let theta = d.values[k];
        let k1 = rhs(phi, theta);
        let k2 = rhs(phi + 0.5 * dt * k1, theta);
        let k3 = rhs(phi + 0.5 * dt * k2, theta);
        let k4 = rhs(phi + dt * k3, theta);
        phi += dt * (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0;
        let theta_next = d.values[k + 1];
        let gap = (Complex64::from_polar(1.0, theta_next) - Complex64::from_polar(1.0, phi)).norm();
        if gap < 1.0 / n_stop || !phi.is_finite() {
            out.truncated = true;
            break;
        }
        let r0 = *out.r.last().unwrap();
        let r1 = rfun(theta_next, phi);
        let a0 = *out.a.last().unwrap();
        // da = -(1+r^2) a/2 dt, exact for r frozen at the midpoint rate.
        let rate = 0.25 * ((1.0 + r0 * r0) + (1.0 + r1 * r1));
        let a1 = a0 * (-rate * dt).exp();
        let b0 = *out.b.last().unwrap();
        let b1 = b0 - 0.25 * dt * ((1.0 + r0 * r0) * a0 * r0 + (1.0 + r1 * r1) * a1 * r1);
        let u0 = *out.u.last().unwrap();
        let q0 = (1.0 + r0 * r0) * a0;
        let q1 = (1.0 + r1 * r1) * a1;
        let u1 = u0 + 0.125 * dt * (q0 * q0 + q1 * q1);
        out.t.push((k + 1) as f64 * dt);
        out.a.push(a1);
        out.b.push(b1);
        out.u.push(u1);
        out.r.push(r1);
        out.beta.push(a1 * r1 + b1);
    }
    let uu = *out.u.last().unwrap();
    if uu > 0.0 {
        out.drift_per_u = (out.beta.last().unwrap() - out.beta[0]) / (kappa.max(0.0).sqrt() * uu);
    }
    Ok(out)
}

/// Sup-norm distance between tips of two traces at common times, where
/// `fine` uses half the step of `coarse`.
pub fn refinement_gap(coarse: &LoewnerTrace, fine: &LoewnerTrace) -> f64 {
    coarse
        .tips
        .iter()
        .enumerate()
        .filter_map(|(k, z)| fine.tips.get(2 * k).map(|w| (z - w).norm()))
        .fold(0.0, f64::max)
}

/// Map a point by the chordal slit step rooted at `w` with capacity `dt`.
#[inline]
pub fn chordal_step(z: Complex64, w: f64, dt: f64) -> Complex64 {
    vslit_forward(z, w, 2.0 * dt.sqrt())
}

/// Real-axis version of [`chordal_step`] for a point at signed offset
/// `x - w`; returns the new offset.
#[inline]
pub fn chordal_step_real(offset: f64, dt: f64) -> f64 {
    let s = (offset * offset + 4.0 * dt).sqrt();
    if offset < 0.0 {
        -s
    } else {
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn zero_driving_flow_point() {
        let d = DrivingPath::zero(DrivingKind::Chordal, 1.0, 1e-4).unwrap();
        let traj = solve_chordal_flow(&d, c(1.0, 0.0), FlowOptions::default()).unwrap();
        let last = traj.last().unwrap();
        assert!((last.point - c(5f64.sqrt(), 0.0)).norm() < 1e-6);
        assert_eq!(traj[0].point, c(1.0, 0.0));
        let traj = solve_chordal_flow(&d, c(0.0, 1.0), FlowOptions::default()).unwrap();
        assert_eq!(traj[0].point, c(0.0, 1.0));
    }

    #[test]
    fn near_driving_point_is_swallowed_at_once() {
        // |z - w| < 2 sqrt(dt) at t = 0, so the point is inside the first slit's reach.
        let d = DrivingPath::zero(DrivingKind::Chordal, 1.0, 1e-4).unwrap();
        let traj = solve_chordal_flow(&d, c(1e-3, 0.0), FlowOptions::default()).unwrap();
        assert_eq!(traj.last().unwrap().swallowed_at, Some(0.0));
        // A real point beyond the tolerance is never swallowed: x_t^2 = x^2 + 4t.
        let traj = solve_chordal_flow(&d, c(0.05, 0.0), FlowOptions::default()).unwrap();
        let last = traj.last().unwrap();
        assert!(last.alive);
        assert!((last.point.re - (0.0025f64 + 4.0).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn zero_driving_tip() {
        let d = DrivingPath::zero(DrivingKind::Chordal, 1.0, 1e-4).unwrap();
        let tip = chordal_tip(&d, d.steps());
        assert!((tip - c(0.0, 2.0)).norm() < 2e-3);
        assert!((chordal_tip(&d, 2500) - c(0.0, 1.0)).norm() < 2e-3);
        let tr =
            chordal_trace(&DrivingPath::zero(DrivingKind::Chordal, 0.1, 1e-3).unwrap()).unwrap();
        assert_eq!(tr.tips.len(), tr.times.len());
        let chain = tr.chain.unwrap();
        assert!((chain.total_capacity() - 0.1).abs() < 1e-12);
    }

    #[test]
    fn sqrt_driving_calibration_against_tilted_slit() {
        // A tilted slit at angle alpha*pi is driven by 2(1-2alpha)/sqrt(alpha(1-alpha)) sqrt(t).
        let alpha: f64 = 0.25;
        let exact = 2.0 * (1.0 - 2.0 * alpha) / (alpha * (1.0 - alpha)).sqrt();
        let c1 = calibrate_sqrt_driving(PI / 4.0, 1e-4).unwrap();
        assert!((c1 - exact).abs() / exact < 0.02, "{c1} vs {exact}");
        let c2 = calibrate_sqrt_driving(PI / 4.0, 1e-3).unwrap();
        assert!((c1 - c2).abs() / c1 < 0.01);
        let m = calibrate_sqrt_driving(3.0 * PI / 4.0, 1e-3).unwrap();
        assert!((m + c2).abs() < 1e-9);
        assert_eq!(calibrate_sqrt_driving(FRAC_PI_2, 1e-3).unwrap(), 0.0);
        let d = DrivingPath::from_fn(DrivingKind::Chordal, 1.0, 1e-4, |t| c1 * t.sqrt()).unwrap();
        let tip = chordal_tip(&d, d.steps());
        assert!((tip.arg() - PI / 4.0).abs() < 0.02);
    }

    #[test]
    fn radial_origin_fixed_and_derivative() {
        let d = DrivingPath::from_fn(DrivingKind::Radial, 0.5, 1e-3, |t| (3.0 * t).sin()).unwrap();
        let traj = solve_radial_flow(&d, c(0.0, 0.0), FlowOptions::default()).unwrap();
        assert!(traj.iter().all(|s| s.point.norm() == 0.0));
        let h = 1e-5;
        let gp = solve_radial_flow(&d, c(h, 0.0), FlowOptions::default()).unwrap();
        let gm = solve_radial_flow(&d, c(-h, 0.0), FlowOptions::default()).unwrap();
        let deriv = (gp.last().unwrap().point - gm.last().unwrap().point) / (2.0 * h);
        assert!((deriv.norm() - 0.5f64.exp()).abs() < 1e-4);
    }

    #[test]
    fn radial_constant_driving_real_point() {
        let coarse = DrivingPath::zero(DrivingKind::Radial, 0.2, 1e-3).unwrap();
        let fine = DrivingPath::zero(DrivingKind::Radial, 0.2, 1e-6).unwrap();
        let a = solve_radial_flow(&coarse, c(-1.0, 0.0), FlowOptions::default()).unwrap();
        let b = solve_radial_flow(&fine, c(-1.0, 0.0), FlowOptions::default()).unwrap();
        let (ga, gb) = (a.last().unwrap().point, b.last().unwrap().point);
        assert!((ga - gb).norm() < 1e-9);
        // The exact step map agrees with the integrator.
        let exact = radial_slit_forward(c(-0.5, 0.0), c(1.0, 0.0), 0.2);
        let fl = solve_radial_flow(&coarse, c(-0.5, 0.0), FlowOptions::default()).unwrap();
        assert!((fl.last().unwrap().point - exact).norm() < 1e-9);
        // Along the real axis the constant-driving map stays real and grows in modulus.
        assert!(exact.im.abs() < 1e-15 && exact.re < -0.5);
    }

    #[test]
    fn radial_constant_trace_is_a_segment() {
        let d = DrivingPath::zero(DrivingKind::Radial, 1.0, 1e-2).unwrap();
        let tr = radial_trace(&d).unwrap();
        for (t, z) in tr.times.iter().zip(&tr.tips) {
            assert!(z.im.abs() < 1e-12);
            assert!(z.re > 0.0 && z.re <= 1.0);
            // Tip x solves x/(1+x)^2 = e^{-t}/4.
            let x = z.re;
            assert!((x / ((1.0 + x) * (1.0 + x)) - (-t).exp() / 4.0).abs() < 1e-12);
        }
    }

    #[test]
    fn radial_refinement() {
        let f = |t: f64| 0.8 * (2.0 * t).sin();
        let a = radial_trace(&DrivingPath::from_fn(DrivingKind::Radial, 1.0, 2e-3, f).unwrap())
            .unwrap();
        let b = radial_trace(&DrivingPath::from_fn(DrivingKind::Radial, 1.0, 1e-3, f).unwrap())
            .unwrap();
        assert!(refinement_gap(&a, &b) < 5e-3);
    }

    #[test]
    fn radial_chordal_initial_values() {
        let d = DrivingPath::zero(DrivingKind::Radial, 0.1, 1e-3).unwrap();
        let rc = radial_to_chordal_transform(&d, 6.0, 100.0).unwrap();
        assert_eq!(rc.u[0], 0.0);
        assert_eq!(rc.a[0], 1.0);
        assert_eq!(rc.b[0], 0.0);
        assert_eq!(rc.beta[0], rc.r[0]);
        assert!(rc.r[0].abs() < 1e-15);
    }
}
