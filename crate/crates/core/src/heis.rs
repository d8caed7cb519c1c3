//! Group law, dilations and Pansu difference quotients in the first
//! Heisenberg group, plus the Leibniz stack for horizontal jets.

use std::ops::Mul;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::whitney::PiecewiseCm;

/// A point `(x, y, z)` of the first Heisenberg group.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct HPoint {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl HPoint {
    pub const ORIGIN: HPoint = HPoint { x: 0.0, y: 0.0, z: 0.0 };

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    /// `(x, y, z) * (x', y', z') = (x + x', y + y', z + z' + 2(y x' - x y'))`.
    pub fn group_mul(&self, q: &HPoint) -> HPoint {
        HPoint {
            x: self.x + q.x,
            y: self.y + q.y,
            z: self.z + q.z + 2.0 * (self.y * q.x - self.x * q.y),
        }
    }

    pub fn inverse(&self) -> HPoint {
        HPoint { x: -self.x, y: -self.y, z: -self.z }
    }

    /// `(r x, r y, r^2 z)`.
    pub fn dilate(&self, r: f64) -> Result<HPoint> {
        if r == 0.0 {
            return Err(Error::ZeroDilation);
        }
        Ok(HPoint { x: r * self.x, y: r * self.y, z: r * r * self.z })
    }

    /// Whether the point lies in the horizontal plane `z = 0`, up to `tol`.
    pub fn is_horizontal(&self, tol: f64) -> bool {
        self.z.abs() <= tol
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    /// Euclidean distance in the coordinates `(x, y, z)`.
    pub fn euclidean_dist(&self, q: &HPoint) -> f64 {
        ((self.x - q.x).powi(2) + (self.y - q.y).powi(2) + (self.z - q.z).powi(2)).sqrt()
    }
}

impl Mul for HPoint {
    type Output = HPoint;

    fn mul(self, rhs: HPoint) -> HPoint {
        self.group_mul(&rhs)
    }
}

/// A point of the higher Heisenberg group `H^n = R^n x R^n x R`.
#[derive(Debug, Clone, PartialEq)]
pub struct HnPoint {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub z: f64,
}

impl HnPoint {
    pub fn new(x: Vec<f64>, y: Vec<f64>, z: f64) -> Result<Self> {
        if x.len() != y.len() {
            return Err(Error::LengthMismatch { expected: x.len(), got: y.len() });
        }
        Ok(Self { x, y, z })
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }

    pub fn group_mul(&self, q: &HnPoint) -> Result<HnPoint> {
        if self.dim() != q.dim() {
            return Err(Error::LengthMismatch { expected: self.dim(), got: q.dim() });
        }
        let twist: f64 = (0..self.dim()).map(|j| self.y[j] * q.x[j] - self.x[j] * q.y[j]).sum();
        Ok(HnPoint {
            x: self.x.iter().zip(&q.x).map(|(a, b)| a + b).collect(),
            y: self.y.iter().zip(&q.y).map(|(a, b)| a + b).collect(),
            z: self.z + q.z + 2.0 * twist,
        })
    }

    pub fn inverse(&self) -> HnPoint {
        HnPoint {
            x: self.x.iter().map(|v| -v).collect(),
            y: self.y.iter().map(|v| -v).collect(),
            z: -self.z,
        }
    }

    pub fn dilate(&self, r: f64) -> Result<HnPoint> {
        if r == 0.0 {
            return Err(Error::ZeroDilation);
        }
        Ok(HnPoint {
            x: self.x.iter().map(|v| r * v).collect(),
            y: self.y.iter().map(|v| r * v).collect(),
            z: r * r * self.z,
        })
    }
}

impl From<HPoint> for HnPoint {
    fn from(p: HPoint) -> Self {
        HnPoint { x: vec![p.x], y: vec![p.y], z: p.z }
    }
}

/// Pansu difference quotient `delta_{1/(b-a)}(gamma(a)^{-1} * gamma(b))`.
pub fn pansu_dq(gamma_a: &HPoint, gamma_b: &HPoint, a: f64, b: f64) -> Result<HPoint> {
    if a == b {
        return Err(Error::CoincidentNodes(a));
    }
    gamma_a.inverse().group_mul(gamma_b).dilate(1.0 / (b - a))
}

/// Binomial coefficient as a float; exact for the small arguments used here.
pub(crate) fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Height derivatives forced on a horizontal curve by its planar jets:
/// returns `(H^1, ..., H^m)` with
/// `H^k = 2 sum_{i<k} C(k-1, i) (F^{k-i} G^i - G^{k-i} F^i)`.
pub fn leibniz_stack(fjet: &[f64], gjet: &[f64], m: usize) -> Result<Vec<f64>> {
    for jet in [fjet, gjet] {
        if jet.len() < m + 1 {
            return Err(Error::LengthMismatch { expected: m + 1, got: jet.len() });
        }
    }
    let stack = (1..=m)
        .map(|k| {
            2.0 * (0..k)
                .map(|i| binomial(k - 1, i) * (fjet[k - i] * gjet[i] - gjet[k - i] * fjet[i]))
                .sum::<f64>()
        })
        .collect();
    Ok(stack)
}

/// `max |h' - 2(f' g - f g')|` over `grid`.
pub fn horizontality_defect(
    f: &PiecewiseCm,
    g: &PiecewiseCm,
    h: &PiecewiseCm,
    grid: &[f64],
) -> Result<f64> {
    let mut worst = 0.0_f64;
    let mut prev = f64::NEG_INFINITY;
    for &t in grid {
        if !t.is_finite() || t < prev {
            return Err(Error::DomainViolation(t));
        }
        prev = t;
        let (fv, fd) = (f.eval(t), f.derivative(t, 1));
        let (gv, gd) = (g.eval(t), g.derivative(t, 1));
        let defect = (h.derivative(t, 1) - 2.0 * (fd * gv - fv * gd)).abs();
        worst = worst.max(defect);
    }
    Ok(worst)
}
