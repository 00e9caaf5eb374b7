//! Closed-form probabilities and exponent tables.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::cell::Cell;
use std::f64::consts::PI;

use crate::conformal::segment_distance;
use crate::error::{domain, Result};

// Gauss-Kronrod 7/15 nodes and weights on [-1, 1].
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let x = h * XGK[j];
        let s = f(c - x) + f(c + x);
        kron += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    (kron * h, ((kron - gauss) * h).abs())
}

/// Adaptive Gauss-Kronrod quadrature to absolute tolerance `tol`.
pub fn integrate(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
        let (v, err) = gk15(f, a, b);
        if err <= tol || depth == 0 {
            return v;
        }
        let m = 0.5 * (a + b);
        rec(f, a, m, tol / 2.0, depth - 1) + rec(f, m, b, tol / 2.0, depth - 1)
    }
    rec(f, a, b, tol, 40)
}

/// `int_0^z u^{-4/k}(1-u)^{-4/k} du` for `z <= 1/2`, after `u = s^m`,
/// `m = k/(k-4)`, which removes the endpoint singularity.
fn beta_partial(kappa: f64, z: f64) -> f64 {
    let e = 4.0 / kappa;
    let m = kappa / (kappa - 4.0);
    let upper = z.powf(1.0 / m);
    let f = move |s: f64| m * (1.0 - s.powf(m)).powf(-e);
    integrate(&f, 0.0, upper, 1e-13)
}

thread_local! {
    static NORM_CACHE: Cell<(f64, f64)> = const { Cell::new((f64::NAN, f64::NAN)) };
}

fn hitting_norm(kappa: f64) -> f64 {
    NORM_CACHE.with(|cache| {
        let (k, c) = cache.get();
        if (k - kappa).abs() <= 1e-14 {
            return c;
        }
        let c = 1.0 / (2.0 * beta_partial(kappa, 0.5));
        cache.set((kappa, c));
        c
    })
}

/// Normalized `F(z) = c(k) int_0^z u^{-4/k}(1-u)^{-4/k} du` with `F(1) = 1`.
pub fn hitting_cdf(kappa: f64, z: f64) -> Result<f64> {
    if !(kappa > 4.0) || !kappa.is_finite() {
        return domain("hitting_cdf needs kappa > 4");
    }
    if !(0.0..=1.0).contains(&z) {
        return domain("z must lie in [0, 1]");
    }
    if z == 0.5 {
        return Ok(0.5);
    }
    let c = hitting_norm(kappa);
    if z < 0.5 {
        Ok(c * beta_partial(kappa, z))
    } else {
        Ok(1.0 - c * beta_partial(kappa, 1.0 - z))
    }
}

/// Probability that chordal SLE from 0 hits `[c, inf)` before `(-inf, a]`.
pub fn side_hit_probability(kappa: f64, a: f64, c: f64) -> Result<f64> {
    if !(a < 0.0 && c > 0.0) {
        return domain("need a < 0 < c");
    }
    hitting_cdf(kappa, -a / (c - a))
}

/// Equilateral triangle with vertices O, A, C.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TriangleFrame {
    pub o: Complex64,
    pub a: Complex64,
    pub c: Complex64,
}

impl TriangleFrame {
    pub fn new(o: Complex64, a: Complex64, c: Complex64) -> Result<Self> {
        let (s1, s2, s3) = ((a - o).norm(), (c - a).norm(), (o - c).norm());
        let scale = s1.max(s2).max(s3);
        if scale == 0.0 || (s1 - s2).abs() > 1e-12 * scale || (s2 - s3).abs() > 1e-12 * scale {
            return domain("triangle is not equilateral");
        }
        Ok(TriangleFrame { o, a, c })
    }

    /// O at the origin, A at `side`, C above the real axis.
    pub fn standard(side: f64) -> Self {
        TriangleFrame {
            o: Complex64::new(0.0, 0.0),
            a: Complex64::new(side, 0.0),
            c: Complex64::from_polar(side, PI / 3.0),
        }
    }

    pub fn side(&self) -> f64 {
        (self.a - self.o).norm()
    }

    /// Same triangle with the vertex roles rotated (O, A, C) -> (A, C, O).
    pub fn rotated(&self) -> Self {
        TriangleFrame {
            o: self.a,
            a: self.c,
            c: self.o,
        }
    }

    pub fn contains(&self, z: Complex64) -> bool {
        let cross = |p: Complex64, q: Complex64| ((q - p).conj() * (z - p)).im;
        let s = [
            cross(self.o, self.a),
            cross(self.a, self.c),
            cross(self.c, self.o),
        ];
        let tol = -1e-12 * self.side() * self.side();
        s.iter().all(|&v| v >= tol) || s.iter().all(|&v| v <= -tol)
    }
}

/// Cardy's formula in the equilateral triangle: `|CX| / |CA|`.
pub fn cardy_equilateral(frame: &TriangleFrame, x: Complex64) -> Result<f64> {
    let ca = (frame.a - frame.c).norm();
    if segment_distance(x, frame.c, frame.a) > 1e-9 * ca {
        return domain("X is not on the side CA");
    }
    Ok(((x - frame.c).norm() / ca).min(1.0))
}

fn line_distance(z: Complex64, p: Complex64, q: Complex64) -> f64 {
    let d = q - p;
    ((d.conj() * (z - p)).im / d.norm()).abs()
}

/// `d(z, OC) / d(A, OC)`: the harmonic-type observable attached to vertex A.
pub fn smirnov_h1(z: Complex64, frame: &TriangleFrame) -> Result<f64> {
    if !frame.contains(z) {
        return domain("z lies outside the triangle");
    }
    Ok(line_distance(z, frame.o, frame.c) / line_distance(frame.a, frame.o, frame.c))
}

/// The winding functional `F((Z - A)/(C - A))` with
/// `F(r e^{i theta}) = atan((1 - r) / (2 sqrt(r) sin(theta/2))) / pi`.
pub fn ust_winding_h(a: f64, c: f64, z: Complex64) -> Result<f64> {
    if a == c {
        return domain("A and C must differ");
    }
    if !(z.im > 0.0) {
        return domain("Z must lie in the open upper half-plane");
    }
    let w = (z - a) / (c - a);
    let r = w.norm();
    let mut theta = w.arg();
    if theta < 0.0 {
        theta += 2.0 * PI;
    }
    Ok(((1.0 - r) / (2.0 * r.sqrt() * (theta / 2.0).sin())).atan() / PI)
}

/// `phi_prime^exponent` with exponent 5/8 (SLE restriction) or 1 (excursion).
pub fn avoid_probability(phi_prime_at_0: f64, exponent: f64) -> Result<f64> {
    if !(phi_prime_at_0 > 0.0 && phi_prime_at_0 <= 1.0) {
        return domain("derivative must lie in (0, 1]");
    }
    if !(exponent > 0.0) {
        return domain("exponent must be positive");
    }
    Ok(phi_prime_at_0.powf(exponent))
}

/// Derivative at 0 of the removal map of the vertical slit of height `h`
/// rooted at `x0`: `|x0| / sqrt(x0^2 + h^2)`.
pub fn slit_derivative_at_zero(x0: f64, h: f64) -> Result<f64> {
    if x0 == 0.0 || !x0.is_finite() {
        return domain("slit must sit away from the origin");
    }
    if !(h >= 0.0) {
        return domain("height must be non-negative");
    }
    Ok(x0.abs() / x0.hypot(h))
}

/// `Im Phi(z) / Im z`, the chance a half-plane excursion from `z` avoids the hull.
pub fn excursion_halfplane_avoid(z: Complex64, map_im: f64) -> Result<f64> {
    if !(z.im > 0.0) {
        return domain("z must lie in the upper half-plane");
    }
    let ratio = map_im / z.im;
    if !(0.0..=1.0 + 1e-12).contains(&ratio) {
        return domain("Im Phi(z) must lie in [0, Im z]");
    }
    Ok(ratio.min(1.0))
}

/// Exponents at given `(kappa, b, k, n)`. The `q`/`lambda` family is only
/// defined for `kappa > 4`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExponentTable {
    pub kappa: f64,
    pub b: f64,
    pub k: u32,
    pub n: u32,
    pub q0: Option<f64>,
    pub lambda0: Option<f64>,
    pub q: Option<f64>,
    pub lambda: Option<f64>,
    pub eta_k: f64,
    pub xi_k: f64,
    pub alpha_n: f64,
    pub bessel_dim: Option<f64>,
    pub xi_halfplane_pair: f64,
}

pub fn q0(kappa: f64) -> f64 {
    1.0 - 4.0 / kappa
}

pub fn lambda0(kappa: f64) -> f64 {
    (kappa - 4.0) / 8.0
}

fn disc(kappa: f64, b: f64) -> f64 {
    ((kappa - 4.0) * (kappa - 4.0) + 16.0 * b * kappa).sqrt()
}

pub fn q_exponent(kappa: f64, b: f64) -> f64 {
    (kappa - 4.0 + disc(kappa, b)) / (2.0 * kappa)
}

pub fn lambda_exponent(kappa: f64, b: f64) -> f64 {
    (8.0 * b + kappa - 4.0 + disc(kappa, b)) / 16.0
}

/// Disconnection exponent for `k` Brownian motions.
pub fn eta(k: u32) -> f64 {
    let s = (24.0 * k as f64 + 1.0).sqrt() - 1.0;
    (s * s - 4.0) / 48.0
}

/// Intersection exponent for `k` Brownian motions against one.
pub fn xi(k: u32) -> f64 {
    let k = k as f64;
    (4.0 * k * k - 1.0) / 12.0
}

/// Percolation `n`-arm exponent.
pub fn alpha_arm(n: u32) -> f64 {
    if n == 1 {
        5.0 / 48.0
    } else {
        xi(n)
    }
}

pub fn exponent_table(kappa: f64, b: f64, k: u32, n: u32) -> Result<ExponentTable> {
    if !kappa.is_finite() || kappa < 0.0 {
        return domain("kappa must be finite and non-negative");
    }
    if !(b >= 0.0) {
        return domain("b must be non-negative");
    }
    if k == 0 || n == 0 {
        return domain("k and n must be at least 1");
    }
    let above = kappa > 4.0;
    Ok(ExponentTable {
        kappa,
        b,
        k,
        n,
        q0: above.then(|| q0(kappa)),
        lambda0: above.then(|| lambda0(kappa)),
        q: above.then(|| q_exponent(kappa, b)),
        lambda: above.then(|| lambda_exponent(kappa, b)),
        eta_k: eta(k),
        xi_k: xi(k),
        alpha_n: alpha_arm(n),
        bessel_dim: (kappa > 0.0).then(|| 1.0 + 4.0 / kappa),
        xi_halfplane_pair: 10.0 / 3.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use statrs::function::beta::beta_reg;

    #[test]
    fn hitting_cdf_midpoint_and_oracle() {
        for &k in &[4.5, 6.0, 8.0, 12.0] {
            assert_eq!(hitting_cdf(k, 0.5).unwrap(), 0.5);
            let a = 1.0 - 4.0 / k;
            for &z in &[0.01, 0.1, 0.25, 0.4, 0.6, 0.9, 0.999] {
                let f = hitting_cdf(k, z).unwrap();
                assert!((f - beta_reg(a, a, z)).abs() < 1e-9, "k={k} z={z}");
            }
        }
    }

    #[test]
    fn hitting_cdf_independent_quadrature() {
        // Plain composite midpoint rule on the substituted integrand at high resolution.
        let k: f64 = 8.0;
        let m = k / (k - 4.0);
        let e = 4.0 / k;
        let g = |s: f64| m * (1.0 - s.powf(m)).powf(-e);
        let simpson = |lo: f64, hi: f64, n: usize| {
            let h = (hi - lo) / n as f64;
            let mut acc = g(lo) + g(hi);
            for i in 1..n {
                acc += g(lo + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
            }
            acc * h / 3.0
        };
        let n = 200_000;
        let part = simpson(0.0, 0.25f64.powf(1.0 / m), n);
        let half = simpson(0.0, 0.5f64.powf(1.0 / m), n);
        let oracle = part / (2.0 * half);
        assert!((hitting_cdf(k, 0.25).unwrap() - oracle).abs() < 1e-8);
    }

    #[test]
    fn hitting_cdf_small_z_exponent() {
        // F(z) ~ C z^{1/3} for kappa = 6.
        let r1 = hitting_cdf(6.0, 1e-6).unwrap() / 1e-6f64.powf(1.0 / 3.0);
        let r2 = hitting_cdf(6.0, 1e-9).unwrap() / 1e-9f64.powf(1.0 / 3.0);
        assert_relative_eq!(r1, r2, max_relative = 1e-4);
        assert!(hitting_cdf(4.0, 0.3).is_err());
    }

    #[test]
    fn cardy_points() {
        let fr = TriangleFrame::standard(1.0);
        assert_eq!(cardy_equilateral(&fr, fr.c).unwrap(), 0.0);
        assert_relative_eq!(
            cardy_equilateral(&fr, 0.5 * (fr.a + fr.c)).unwrap(),
            0.5,
            epsilon = 1e-15
        );
        let third = fr.c + (fr.a - fr.c) / 3.0;
        assert_relative_eq!(
            cardy_equilateral(&fr, third).unwrap(),
            1.0 / 3.0,
            epsilon = 1e-15
        );
        assert!(cardy_equilateral(&fr, Complex64::new(0.5, 0.0)).is_err());
    }

    #[test]
    fn smirnov_points() {
        let fr = TriangleFrame::standard(2.0);
        assert_relative_eq!(smirnov_h1(fr.a, &fr).unwrap(), 1.0, epsilon = 1e-14);
        assert!(smirnov_h1(0.5 * (fr.o + fr.c), &fr).unwrap().abs() < 1e-14);
        let g = (fr.o + fr.a + fr.c) / 3.0;
        assert_relative_eq!(smirnov_h1(g, &fr).unwrap(), 1.0 / 3.0, epsilon = 1e-14);
        assert!(smirnov_h1(Complex64::new(5.0, 5.0), &fr).is_err());
    }

    #[test]
    fn winding_limits() {
        let z = Complex64::from_polar(1.0, 1.0);
        assert!(ust_winding_h(0.0, 1.0, z).unwrap().abs() < 1e-15);
        let near = Complex64::new(0.5, 1e-12);
        assert_relative_eq!(ust_winding_h(0.0, 1.0, near).unwrap(), 0.5, epsilon = 1e-6);
    }

    #[test]
    fn winding_is_harmonic_and_affine_invariant() {
        let h = 1e-3;
        for z in [
            Complex64::new(0.3, 0.4),
            Complex64::new(1.5, 0.7),
            Complex64::new(-2.0, 1.0),
        ] {
            let f = |w: Complex64| ust_winding_h(0.0, 1.0, w).unwrap();
            let i = Complex64::i();
            let lap = (f(z + h) + f(z - h) + f(z + i * h) + f(z - i * h) - 4.0 * f(z)) / (h * h);
            assert!(lap.abs() < 1e-5, "{z}: {lap}");
            let moved = ust_winding_h(-1.0, 2.0, z * 3.0 - 1.0).unwrap();
            assert_relative_eq!(moved, f(z), epsilon = 1e-14);
        }
    }

    #[test]
    fn slit_derivative_by_differentiation() {
        // Phi(z) = x0 + sqrt((z - x0)^2 + h^2) shifted so Phi(0) is the image of 0.
        let (x0, h) = (1.0f64, 1.0f64);
        let phi = |z: f64| {
            let u: f64 = z - x0;
            x0 - (u * u + h * h).sqrt()
        };
        let d = (phi(1e-6) - phi(-1e-6)) / 2e-6;
        assert_relative_eq!(
            d,
            slit_derivative_at_zero(x0, h).unwrap(),
            max_relative = 1e-8
        );
        assert_relative_eq!(
            slit_derivative_at_zero(1.0, 1.0).unwrap(),
            0.5f64.sqrt(),
            epsilon = 1e-15
        );
        assert_relative_eq!(
            slit_derivative_at_zero(3.0, 2.0).unwrap(),
            slit_derivative_at_zero(21.0, 14.0).unwrap(),
            epsilon = 1e-15
        );
        assert!(slit_derivative_at_zero(0.0, 1.0).is_err());
    }

    #[test]
    fn avoid_and_excursion() {
        let x = slit_derivative_at_zero(1.0, 1.0).unwrap();
        assert_relative_eq!(
            avoid_probability(x, 5.0 / 8.0).unwrap(),
            2f64.powf(-5.0 / 16.0),
            epsilon = 1e-15
        );
        assert_eq!(avoid_probability(1.0, 1.0).unwrap(), 1.0);
        assert_eq!(
            excursion_halfplane_avoid(Complex64::new(0.0, 2.0), 2.0).unwrap(),
            1.0
        );
        assert!(excursion_halfplane_avoid(Complex64::new(0.0, 2.0), 3.0).is_err());
    }

    #[test]
    fn table_values() {
        let t = exponent_table(6.0, 1.0, 1, 1).unwrap();
        assert_eq!(t.lambda, Some(1.25));
        assert_eq!(t.q, Some(1.0));
        assert_eq!(t.lambda0, Some(0.25));
        assert_relative_eq!(t.q0.unwrap(), 1.0 / 3.0, epsilon = 1e-16);
        assert_eq!(t.eta_k, 0.25);
        assert_eq!(t.alpha_n, 5.0 / 48.0);
        assert_eq!(xi(2), 1.25);
        let low = exponent_table(8.0 / 3.0, 0.0, 1, 1).unwrap();
        assert!(low.q.is_none() && low.lambda.is_none());
    }
}
