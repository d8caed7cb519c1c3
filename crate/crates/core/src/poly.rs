//! Dense univariate polynomials with `f64` coefficients.
//!
//! Every polynomial the pipelines touch (Taylor polynomials of jets, Newton
//! interpolants, Whitney blends, bumps and their brackets) is carried by
//! [`Poly`]. Pieces are usually stored in a local variable `u = x - origin`,
//! which keeps coefficients well scaled on short gaps.

use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative threshold below which trailing coefficients are dropped.
const TRIM_REL: f64 = 1e-14;

/// Bisection iteration cap; float exhaustion normally stops far earlier.
const BISECTION_BUDGET: usize = 200;

/// Closed interval `[lo, hi]` with `lo <= hi`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    lo: f64,
    hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo <= hi) {
            return Err(Error::OrderViolation { a: lo, b: hi });
        }
        Ok(Self { lo, hi })
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn length(&self) -> f64 {
        self.hi - self.lo
    }
}

/// A polynomial `c[0] + c[1] x + ... + c[d] x^d`.
///
/// The zero polynomial has no coefficients. Trailing coefficients smaller than
/// `1e-14 * max|c|` are trimmed on construction.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Poly {
    coeffs: Vec<f64>,
}

impl Poly {
    pub fn new(coeffs: Vec<f64>) -> Self {
        let mut p = Self { coeffs };
        p.trim();
        p
    }

    pub fn zero() -> Self {
        Self { coeffs: Vec::new() }
    }

    pub fn constant(c: f64) -> Self {
        Self::new(vec![c])
    }

    /// `c * x^k`.
    pub fn monomial(c: f64, k: usize) -> Self {
        let mut coeffs = vec![0.0; k + 1];
        coeffs[k] = c;
        Self::new(coeffs)
    }

    /// The identity polynomial `x`.
    pub fn x() -> Self {
        Self::new(vec![0.0, 1.0])
    }

    /// Taylor polynomial `sum_k jet[k] / k! * u^k` of a jet, in the local variable `u`.
    pub fn taylor(jet: &[f64]) -> Self {
        let mut fact = 1.0;
        let coeffs = jet
            .iter()
            .enumerate()
            .map(|(k, &v)| {
                if k > 0 {
                    fact *= k as f64;
                }
                v / fact
            })
            .collect();
        Self::new(coeffs)
    }

    fn trim(&mut self) {
        let max = self.coeffs.iter().fold(0.0_f64, |m, c| m.max(c.abs()));
        if max == 0.0 {
            self.coeffs.clear();
            return;
        }
        let cut = TRIM_REL * max;
        while let Some(&last) = self.coeffs.last() {
            if last.abs() < cut {
                self.coeffs.pop();
            } else {
                break;
            }
        }
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Coefficient of `x^k`, zero past the degree.
    pub fn coeff(&self, k: usize) -> f64 {
        self.coeffs.get(k).copied().unwrap_or(0.0)
    }

    /// Degree, or `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_finite())
    }

    /// Horner evaluation.
    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }

    /// Value of the `k`-th derivative at `x` without materializing it.
    pub fn eval_derivative(&self, x: f64, k: usize) -> f64 {
        if k == 0 {
            return self.eval(x);
        }
        let mut acc = 0.0;
        for j in (k..self.coeffs.len()).rev() {
            let falling: f64 = ((j - k + 1)..=j).map(|i| i as f64).product();
            acc = acc * x + self.coeffs[j] * falling;
        }
        acc
    }

    /// `eval_derivative` with every coefficient and `x` replaced by its
    /// absolute value. Bounds the rounding floor of the evaluation.
    pub fn magnitude_derivative(&self, x: f64, k: usize) -> f64 {
        let mut acc = 0.0;
        for j in (k..self.coeffs.len()).rev() {
            let falling: f64 = ((j - k + 1)..=j).map(|i| i as f64).product();
            acc = acc * x.abs() + (self.coeffs[j] * falling).abs();
        }
        acc
    }

    /// Values of derivatives `0..=order` at `x`.
    pub fn jet_at(&self, x: f64, order: usize) -> Vec<f64> {
        (0..=order).map(|k| self.eval_derivative(x, k)).collect()
    }

    pub fn derivative(&self) -> Self {
        if self.coeffs.len() <= 1 {
            return Self::zero();
        }
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(k, &c)| k as f64 * c)
            .collect();
        Self::new(coeffs)
    }

    pub fn nth_derivative(&self, n: usize) -> Self {
        (0..n).fold(self.clone(), |p, _| p.derivative())
    }

    /// Antiderivative with zero constant term.
    pub fn antiderivative(&self) -> Self {
        if self.is_zero() {
            return Self::zero();
        }
        let mut coeffs = Vec::with_capacity(self.coeffs.len() + 1);
        coeffs.push(0.0);
        coeffs.extend(
            self.coeffs
                .iter()
                .enumerate()
                .map(|(k, &c)| c / (k as f64 + 1.0)),
        );
        Self::new(coeffs)
    }

    /// Signed integral over `iv`.
    pub fn integrate(&self, iv: Interval) -> f64 {
        self.integrate_between(iv.lo, iv.hi)
    }

    /// Signed integral from `a` to `b` (either orientation).
    pub fn integrate_between(&self, a: f64, b: f64) -> f64 {
        if a == b {
            return 0.0;
        }
        let anti = self.antiderivative();
        anti.eval(b) - anti.eval(a)
    }

    pub fn scale(&self, s: f64) -> Self {
        Self::new(self.coeffs.iter().map(|c| c * s).collect())
    }

    /// `p(alpha * x + beta)`.
    pub fn compose_affine(&self, alpha: f64, beta: f64) -> Self {
        let inner = Self::new(vec![beta, alpha]);
        let mut acc = Self::zero();
        for &c in self.coeffs.iter().rev() {
            acc = &(&acc * &inner) + &Self::constant(c);
        }
        acc
    }

    /// Re-expand around a new origin: returns `q` with `q(u) = p(u + shift)`.
    pub fn shift(&self, shift: f64) -> Self {
        self.compose_affine(1.0, shift)
    }

    /// A bound on the rounding error of evaluating at `x`.
    fn eval_error_bound(&self, x: f64) -> f64 {
        let ax = x.abs();
        let mag = self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * ax + c.abs());
        64.0 * f64::EPSILON * mag
    }

    /// All real roots in `iv`, each located to within `tol`, multiple roots
    /// reported once.
    ///
    /// The interval is cut at a uniform grid of `64 * (deg + 1)` cells and at
    /// the critical points (roots of the derivative, found recursively). The
    /// polynomial is monotone between consecutive cut points, so sign changes
    /// bracket every crossing root; touching roots are picked up at critical
    /// points where the value vanishes to rounding accuracy.
    pub fn real_roots(&self, iv: Interval, tol: f64) -> Result<Vec<f64>> {
        if self.is_zero() {
            return Err(Error::IdenticallyZero);
        }
        if !self.is_finite() {
            return Err(Error::RootNonConvergence { lo: iv.lo, hi: iv.hi });
        }
        let deg = self.coeffs.len() - 1;
        let (lo, hi) = (iv.lo, iv.hi);
        let mut roots = Vec::new();
        match deg {
            0 => return Ok(roots),
            1 => {
                let r = -self.coeffs[0] / self.coeffs[1];
                if r >= lo && r <= hi {
                    roots.push(r);
                }
                return Ok(roots);
            }
            _ => {}
        }
        if lo == hi {
            if self.eval(lo).abs() <= self.eval_error_bound(lo) {
                roots.push(lo);
            }
            return Ok(roots);
        }

        let critical = self.derivative().real_roots(iv, tol)?;
        let cells = 64 * (deg + 1);
        let width = hi - lo;
        let mut cuts: Vec<f64> = (0..=cells)
            .map(|i| lo + width * (i as f64) / (cells as f64))
            .collect();
        cuts[cells] = hi;
        cuts.extend(critical.iter().copied());
        cuts.sort_by(|a, b| a.total_cmp(b));
        cuts.dedup();

        let values: Vec<f64> = cuts.iter().map(|&x| self.eval(x)).collect();
        for i in 0..cuts.len() {
            if values[i] == 0.0 {
                roots.push(cuts[i]);
            } else if i + 1 < cuts.len() && values[i + 1] != 0.0 && (values[i] < 0.0) != (values[i + 1] < 0.0) {
                roots.push(self.bisect(cuts[i], cuts[i + 1], values[i], tol)?);
            }
        }
        for &c in &critical {
            if self.eval(c).abs() <= self.eval_error_bound(c) {
                roots.push(c);
            }
        }

        roots.sort_by(|a, b| a.total_cmp(b));
        let mut merged: Vec<f64> = Vec::with_capacity(roots.len());
        for r in roots {
            match merged.last() {
                Some(&prev) if r - prev <= (4.0 * tol).max(1e-7 * (1.0 + r.abs())) => {}
                _ => merged.push(r),
            }
        }
        Ok(merged)
    }

    fn bisect(&self, mut lo: f64, mut hi: f64, flo: f64, tol: f64) -> Result<f64> {
        let neg_at_lo = flo < 0.0;
        for _ in 0..BISECTION_BUDGET {
            let mid = 0.5 * (lo + hi);
            if hi - lo <= tol || mid <= lo || mid >= hi {
                return Ok(mid);
            }
            let fm = self.eval(mid);
            if fm == 0.0 {
                return Ok(mid);
            }
            if (fm < 0.0) == neg_at_lo {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Err(Error::RootNonConvergence { lo, hi })
    }

    /// `integral of |p|` over `iv`, split at the real roots of `p`.
    pub fn abs_integral(&self, iv: Interval, tol: f64) -> Result<f64> {
        if self.is_zero() || iv.lo == iv.hi {
            return Ok(0.0);
        }
        let anti = self.antiderivative();
        let mut cuts = vec![iv.lo];
        cuts.extend(
            self.real_roots(iv, tol)?
                .into_iter()
                .filter(|&r| r > iv.lo && r < iv.hi),
        );
        cuts.push(iv.hi);
        let total = cuts
            .windows(2)
            .map(|w| (anti.eval(w[1]) - anti.eval(w[0])).abs())
            .sum();
        Ok(total)
    }
}

impl Add for &Poly {
    type Output = Poly;

    fn add(self, rhs: &Poly) -> Poly {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        Poly::new((0..n).map(|k| self.coeff(k) + rhs.coeff(k)).collect())
    }
}

impl Sub for &Poly {
    type Output = Poly;

    fn sub(self, rhs: &Poly) -> Poly {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        Poly::new((0..n).map(|k| self.coeff(k) - rhs.coeff(k)).collect())
    }
}

impl Mul for &Poly {
    type Output = Poly;

    fn mul(self, rhs: &Poly) -> Poly {
        if self.is_zero() || rhs.is_zero() {
            return Poly::zero();
        }
        let mut coeffs = vec![0.0; self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in rhs.coeffs.iter().enumerate() {
                coeffs[i + j] += a * b;
            }
        }
        Poly::new(coeffs)
    }
}

impl Neg for &Poly {
    type Output = Poly;

    fn neg(self) -> Poly {
        self.scale(-1.0)
    }
}

macro_rules! forward_owned_binop {
    ($tr:ident, $method:ident) => {
        impl $tr for Poly {
            type Output = Poly;

            fn $method(self, rhs: Poly) -> Poly {
                (&self).$method(&rhs)
            }
        }

        impl $tr<&Poly> for Poly {
            type Output = Poly;

            fn $method(self, rhs: &Poly) -> Poly {
                (&self).$method(rhs)
            }
        }
    };
}

forward_owned_binop!(Add, add);
forward_owned_binop!(Sub, sub);
forward_owned_binop!(Mul, mul);
