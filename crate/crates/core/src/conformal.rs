//! Slit maps, capacity bookkeeping, map chains and the Cayley transform.
//!
//! All maps here are hydrodynamically normalized, `g(z) = z + 2a/z + O(1/z^2)`
//! at infinity, where `a` is the half-plane capacity of the removed hull.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{domain, Error, Result};

pub type ComplexPoint = Complex64;

/// Evaluations closer than this to a slit are rejected.
pub const SLIT_GUARD: f64 = 1e-10;

/// Square root with non-negative imaginary part.
///
/// On the real axis the sign follows `side`, so points left of a slit foot
/// stay on the left.
#[inline]
pub fn upper_sqrt(w: Complex64, side: f64) -> Complex64 {
    let s = w.sqrt();
    if s.im < 0.0 || (s.im == 0.0 && side < 0.0) {
        -s
    } else {
        s
    }
}

/// Distance from `z` to the segment `[a, b]`.
pub fn segment_distance(z: Complex64, a: Complex64, b: Complex64) -> f64 {
    let d = b - a;
    let len2 = d.norm_sqr();
    if len2 == 0.0 {
        return (z - a).norm();
    }
    let t = ((z - a) * d.conj()).re / len2;
    let t = t.clamp(0.0, 1.0);
    (z - (a + d * t)).norm()
}

/// Removal map of the vertical slit `[0, iy]`: `sqrt(z^2 + y^2)`.
pub fn vertical_slit_map(z: Complex64, y: f64) -> Result<Complex64> {
    if y <= 0.0 {
        return if y == 0.0 {
            Ok(z)
        } else {
            domain("slit height must be non-negative")
        };
    }
    if z.im < 0.0 {
        return domain("point below the real axis");
    }
    if segment_distance(z, Complex64::new(0.0, 0.0), Complex64::new(0.0, y)) < SLIT_GUARD {
        return Err(Error::Swallowed { step: 0 });
    }
    Ok(vslit_forward(z, 0.0, y))
}

/// `z -> f + sqrt((z-f)^2 + y^2)` without the guard.
#[inline]
pub fn vslit_forward(z: Complex64, foot: f64, y: f64) -> Complex64 {
    let u = z - foot;
    let s = upper_sqrt(u * u + y * y, u.re);
    // The offset y^2/(s+u) keeps far-field evaluations accurate.
    z + (y * y) / (s + u)
}

/// Inverse of [`vslit_forward`]: `f + sqrt((w-f)^2 - y^2)`.
#[inline]
pub fn vslit_inverse(w: Complex64, foot: f64, y: f64) -> Complex64 {
    let u = w - foot;
    let s = upper_sqrt(u * u - y * y, u.re);
    Complex64::new(foot, 0.0) + s
}

/// Offset `g(z) - z` of the vertical slit map at foot 0.
///
/// At `|z| = 1e6` the map itself cannot resolve the `O(1/z)` term below one
/// ulp, so far-field checks use this instead.
pub fn vertical_slit_offset(z: Complex64, y: f64) -> Complex64 {
    let s = upper_sqrt(z * z + y * y, z.re);
    (y * y) / (s + z)
}

/// Value and first three derivatives of a map at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet {
    pub value: Complex64,
    pub d1: Complex64,
    pub d2: Complex64,
    pub d3: Complex64,
}

impl Jet {
    /// The identity jet at `z`.
    pub fn identity(z: Complex64) -> Self {
        let zero = Complex64::new(0.0, 0.0);
        Jet {
            value: z,
            d1: Complex64::new(1.0, 0.0),
            d2: zero,
            d3: zero,
        }
    }

    /// Compose a vertical slit map (foot, y) after this jet.
    #[inline]
    pub fn then_vslit(&self, foot: f64, y: f64) -> Self {
        let u = self.value - foot;
        let s = upper_sqrt(u * u + y * y, u.re);
        let y2 = y * y;
        let p1 = u / s;
        let s3 = s * s * s;
        let p2 = y2 / s3;
        let p3 = -3.0 * y2 * u / (s3 * s * s);
        let (v1, v2, v3) = (self.d1, self.d2, self.d3);
        Jet {
            value: self.value + y2 / (s + u),
            d1: p1 * v1,
            d2: p2 * v1 * v1 + p1 * v2,
            d3: p3 * v1 * v1 * v1 + 3.0 * p2 * v1 * v2 + p1 * v3,
        }
    }
}

/// A straight slit rooted on the real axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlitParams {
    pub foot: f64,
    /// Length of the slit.
    pub height: f64,
    /// Angle with the positive real axis, in (0, pi).
    pub angle: f64,
}

impl SlitParams {
    pub fn vertical(foot: f64, height: f64) -> Self {
        SlitParams {
            foot,
            height,
            angle: PI / 2.0,
        }
    }

    pub fn new(foot: f64, height: f64, angle: f64) -> Result<Self> {
        if !(height >= 0.0) || !height.is_finite() || !foot.is_finite() {
            return domain("slit height must be finite and non-negative");
        }
        if !(angle > 0.0 && angle < PI) {
            return domain("slit angle must lie in (0, pi)");
        }
        Ok(SlitParams {
            foot,
            height,
            angle,
        })
    }

    pub fn is_vertical(&self) -> bool {
        (self.angle - PI / 2.0).abs() < 1e-15
    }

    /// Image under `z -> lambda z`.
    pub fn scaled(&self, lambda: f64) -> Self {
        SlitParams {
            foot: self.foot * lambda,
            height: self.height * lambda,
            angle: self.angle,
        }
    }

    pub fn base(&self) -> Complex64 {
        Complex64::new(self.foot, 0.0)
    }

    pub fn tip(&self) -> Complex64 {
        self.base() + Complex64::from_polar(self.height, self.angle)
    }

    pub fn distance(&self, z: Complex64) -> f64 {
        segment_distance(z, self.base(), self.tip())
    }

    pub fn capacity(&self) -> f64 {
        slit_capacity(self)
    }

    /// Tilted slit of angle `alpha*pi` is the image of `[q, p]` under
    /// `f(w) = (w-p)^alpha (w-q)^(1-alpha)` with `alpha p + (1-alpha) q = 0`.
    fn tilted_roots(&self) -> (f64, f64, f64) {
        let alpha = self.angle / PI;
        let span = self.height / (alpha.powf(alpha) * (1.0 - alpha).powf(1.0 - alpha));
        ((1.0 - alpha) * span, -alpha * span, alpha)
    }

    /// Removal map of this slit (forward direction).
    pub fn forward(&self, z: Complex64) -> Result<Complex64> {
        if self.height == 0.0 {
            return Ok(z);
        }
        if self.distance(z) < SLIT_GUARD {
            return Err(Error::Swallowed { step: 0 });
        }
        if self.is_vertical() {
            return Ok(vslit_forward(z, self.foot, self.height));
        }
        self.tilted_forward(z)
    }

    /// Inverse removal map: half-plane onto the slit complement.
    pub fn inverse(&self, w: Complex64) -> Complex64 {
        if self.height == 0.0 {
            return w;
        }
        if self.is_vertical() {
            return vslit_inverse(w, self.foot, self.height);
        }
        let (p, q, alpha) = self.tilted_roots();
        let u = w - self.foot;
        let f = (alpha * (u - p).ln() + (1.0 - alpha) * (u - q).ln()).exp();
        f + self.foot
    }

    fn tilted_forward(&self, z: Complex64) -> Result<Complex64> {
        let (p, q, alpha) = self.tilted_roots();
        let target = (z - self.foot).ln();
        let mut w = z - self.foot;
        if w.im <= 0.0 {
            w.im = 1e-3 * self.height;
        }
        for _ in 0..200 {
            let lf = alpha * (w - p).ln() + (1.0 - alpha) * (w - q).ln();
            let df = alpha / (w - p) + (1.0 - alpha) / (w - q);
            let step = (lf - target) / df;
            let mut next = w - step;
            // Damp steps that would leave the closed upper half-plane.
            let mut damp = 1.0;
            while next.im < 0.0 && damp > 1e-6 {
                damp *= 0.5;
                next = w - step * damp;
            }
            if next.im < 0.0 {
                next.im = 0.0;
            }
            let moved = (next - w).norm();
            w = next;
            if moved <= 1e-15 * (1.0 + w.norm()) {
                return Ok(w + self.foot);
            }
        }
        Err(Error::Numerical {
            step: 0,
            reason: "tilted slit inversion did not converge".into(),
        })
    }
}

/// Half-plane capacity of a straight slit.
///
/// Vertical slits give `h^2/4`. For angle `alpha*pi` the capacity is
/// `h^2 alpha^(1-2 alpha) (1-alpha)^(2 alpha-1) / 4`.
pub fn slit_capacity(p: &SlitParams) -> f64 {
    let h2 = p.height * p.height;
    if p.is_vertical() {
        return h2 / 4.0;
    }
    let alpha = p.angle / PI;
    h2 * alpha.powf(1.0 - 2.0 * alpha) * (1.0 - alpha).powf(2.0 * alpha - 1.0) / 4.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    Forward,
    Inverse,
}

/// An ordered composition of slit removal maps.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MapChain {
    steps: Vec<(SlitParams, f64)>,
    total_capacity: f64,
}

impl MapChain {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_capacity(n: usize) -> Self {
        MapChain {
            steps: Vec::with_capacity(n),
            total_capacity: 0.0,
        }
    }

    pub fn push(&mut self, slit: SlitParams) {
        let a = slit.capacity();
        self.steps.push((slit, a));
        self.total_capacity += a;
    }

    pub fn steps(&self) -> &[(SlitParams, f64)] {
        &self.steps
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn total_capacity(&self) -> f64 {
        self.total_capacity
    }

    /// Apply `self` first, then `other`.
    pub fn concat(&self, other: &MapChain) -> MapChain {
        let mut out = self.clone();
        out.steps.extend_from_slice(&other.steps);
        out.total_capacity += other.total_capacity;
        out
    }

    pub fn eval(&self, z: Complex64, direction: Direction) -> Result<Complex64> {
        match direction {
            Direction::Forward => {
                let mut w = z;
                for (k, (s, _)) in self.steps.iter().enumerate() {
                    w = s.forward(w).map_err(|e| match e {
                        Error::Swallowed { .. } => Error::Swallowed { step: k },
                        other => other,
                    })?;
                }
                Ok(w)
            }
            Direction::Inverse => {
                let mut w = z;
                for (k, (s, _)) in self.steps.iter().enumerate().rev() {
                    w = s.inverse(w);
                    if !w.re.is_finite() || !w.im.is_finite() {
                        return Err(Error::Numerical {
                            step: k,
                            reason: "non-finite inverse".into(),
                        });
                    }
                }
                Ok(w)
            }
        }
    }
}

/// Evaluate the chain, free function form.
pub fn chain_eval(c: &MapChain, z: Complex64, direction: Direction) -> Result<Complex64> {
    c.eval(z, direction)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CayleyDirection {
    DiscToHalf,
    HalfToDisc,
}

/// `psi(z) = i(1-z)/(1+z)` and its inverse `(i-w)/(i+w)`.
pub fn cayley(z: Complex64, direction: CayleyDirection) -> Result<Complex64> {
    let i = Complex64::i();
    match direction {
        CayleyDirection::DiscToHalf => {
            let den = 1.0 + z;
            if den.norm() < 1e-300 {
                return domain("z = -1 is the pole of the Cayley map");
            }
            Ok(i * (1.0 - z) / den)
        }
        CayleyDirection::HalfToDisc => {
            let den = i + z;
            if den.norm() < 1e-300 {
                return domain("w = -i is the pole of the inverse Cayley map");
            }
            Ok((i - z) / den)
        }
    }
}
