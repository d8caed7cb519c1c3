//! Whitney fields on finite node sets and a linear 1-D extension operator.
//!
//! On each bounded gap `[a, b]` the extension is the blend
//! `T_a + S((x - a)/(b - a)) (T_b - T_a)` of the two endpoint Taylor
//! polynomials, where `S` is the degree `2m + 1` transition polynomial that is
//! flat to order `m` at both ends. Outside the hull the extreme Taylor
//! polynomials are used. Everything stays piecewise polynomial.

use serde::{Deserialize, Serialize};

use crate::divdiff::newton_interp_at;
use crate::error::{Error, Result};
use crate::poly::Poly;
use crate::profile::{cumulative_profile, DecayProfile, GridSpec};

pub(crate) fn check_nodes(nodes: &[f64]) -> Result<()> {
    for (i, t) in nodes.iter().enumerate() {
        if !t.is_finite() {
            return Err(Error::NonFinite(i));
        }
    }
    for (i, w) in nodes.windows(2).enumerate() {
        if w[1] == w[0] {
            return Err(Error::DuplicateNodes(w[0]));
        }
        if w[1] < w[0] {
            return Err(Error::NonIncreasingNodes(i + 1));
        }
    }
    Ok(())
}

/// An `m`-jet `(F^0, ..., F^m)` prescribed at each node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WhitneyField {
    nodes: Vec<f64>,
    jets: Vec<Vec<f64>>,
}

impl WhitneyField {
    pub fn new(nodes: Vec<f64>, jets: Vec<Vec<f64>>) -> Result<Self> {
        check_nodes(&nodes)?;
        if jets.len() != nodes.len() {
            return Err(Error::LengthMismatch { expected: nodes.len(), got: jets.len() });
        }
        let len = jets.first().map_or(1, Vec::len);
        if len == 0 {
            return Err(Error::LengthMismatch { expected: 1, got: 0 });
        }
        for (i, jet) in jets.iter().enumerate() {
            if jet.len() != len {
                return Err(Error::LengthMismatch { expected: len, got: jet.len() });
            }
            if jet.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite(i));
            }
        }
        Ok(Self { nodes, jets })
    }

    /// Jets of a polynomial at the given nodes.
    pub fn from_poly(nodes: Vec<f64>, p: &Poly, m: usize) -> Result<Self> {
        let jets = nodes.iter().map(|&t| p.jet_at(t, m)).collect();
        Self::new(nodes, jets)
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn jets(&self) -> &[Vec<f64>] {
        &self.jets
    }

    pub fn jet(&self, i: usize) -> &[f64] {
        &self.jets[i]
    }

    /// The order `m` (jets have length `m + 1`).
    pub fn order(&self) -> usize {
        self.jets.first().map_or(0, |j| j.len() - 1)
    }

    /// `alpha * self + beta * other` on the same nodes.
    pub fn linear_combination(&self, alpha: f64, other: &WhitneyField, beta: f64) -> Result<Self> {
        if self.nodes != other.nodes || self.order() != other.order() {
            return Err(Error::LengthMismatch { expected: self.nodes.len(), got: other.nodes.len() });
        }
        let jets = self
            .jets
            .iter()
            .zip(&other.jets)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| alpha * x + beta * y).collect())
            .collect();
        Self::new(self.nodes.clone(), jets)
    }
}

/// Modulus of continuity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ModulusFn {
    /// `c * t^s`, `0 < s <= 1`.
    Power { c: f64, s: f64 },
    /// Piecewise linear through `(0, 0)` and the listed points, constant after
    /// the last one.
    Tabulated { points: Vec<(f64, f64)> },
}

impl ModulusFn {
    pub fn power(c: f64, s: f64) -> Result<Self> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::InvalidModulus(format!("constant must be positive, got {c}")));
        }
        if !(s > 0.0 && s <= 1.0) {
            return Err(Error::InvalidModulus(format!("exponent must lie in (0, 1], got {s}")));
        }
        Ok(ModulusFn::Power { c, s })
    }

    /// `omega(t) = t`.
    pub fn lipschitz() -> Self {
        ModulusFn::Power { c: 1.0, s: 1.0 }
    }

    pub fn tabulated(points: Vec<(f64, f64)>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidModulus("empty table".into()));
        }
        let mut prev = (0.0, 0.0);
        for &(t, w) in &points {
            if !(t > prev.0) || !(w >= prev.1) || !w.is_finite() {
                return Err(Error::InvalidModulus(
                    "table must be strictly increasing in t, nondecreasing and nonnegative in value".into(),
                ));
            }
            prev = (t, w);
        }
        Ok(ModulusFn::Tabulated { points })
    }

    pub fn eval(&self, t: f64) -> f64 {
        let t = t.abs();
        match self {
            ModulusFn::Power { c, s } => c * t.powf(*s),
            ModulusFn::Tabulated { points } => {
                let mut prev = (0.0, 0.0);
                for &(pt, pw) in points {
                    if t <= pt {
                        return prev.1 + (pw - prev.1) * (t - prev.0) / (pt - prev.0);
                    }
                    prev = (pt, pw);
                }
                prev.1
            }
        }
    }

    /// `sup_{0 < t <= d} t / omega(t)`.
    pub fn max_rate(&self, d: f64) -> f64 {
        match self {
            // t^(1-s) / c is nondecreasing for s <= 1.
            ModulusFn::Power { c, s } => d.powf(1.0 - s) / c,
            ModulusFn::Tabulated { points } => {
                let mut best = 0.0_f64;
                // On each linear segment t/omega(t) is monotone, so check the ends.
                let mut cands: Vec<f64> = points.iter().map(|p| p.0).filter(|&t| t <= d).collect();
                cands.push(d);
                if let Some(&(t1, w1)) = points.first() {
                    // Near zero omega is linear with slope w1/t1.
                    best = if w1 > 0.0 { t1 / w1 } else { f64::INFINITY };
                }
                for t in cands {
                    let w = self.eval(t);
                    best = best.max(if w > 0.0 { t / w } else { f64::INFINITY });
                }
                best
            }
        }
    }
}

/// What [`validate_field`] measures.
#[derive(Debug, Clone, PartialEq)]
pub enum ValidationMode {
    /// Decay profile of the Taylor remainder ratios.
    Cm,
    /// Smallest constant bounding the ratios by `C * omega(|b - a|)`.
    CmOmega(ModulusFn),
}

/// Diagnostics of a Whitney field. Index `k` runs over derivative orders.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub order: usize,
    /// `sup_{|b-a| <= delta} R_k(a, b)` per `k`.
    pub profiles: Vec<DecayProfile>,
    /// `max_{a != b} R_k(a, b)` per `k`.
    pub max_ratio: Vec<f64>,
    /// `max_{a != b} R_k(a, b) / omega(|b - a|)` per `k`, in `C^{m,omega}` mode.
    pub omega_constants: Option<Vec<f64>>,
}

impl ValidationReport {
    /// The overall `C^{m,omega}` constant.
    pub fn omega_constant(&self) -> Option<f64> {
        self.omega_constants.as_ref().map(|c| c.iter().fold(0.0, |m: f64, v| m.max(*v)))
    }
}

/// `R_k(a, b) = |F^k(b) - T_a^{m-k} F^k(b)| / |b - a|^{m-k}`.
pub fn remainder_ratio(jet_a: &[f64], jet_b: &[f64], a: f64, b: f64, k: usize) -> f64 {
    let m = jet_a.len() - 1;
    let d = b - a;
    let mut taylor = 0.0;
    let mut term = 1.0;
    for j in 0..=(m - k) {
        if j > 0 {
            term *= d / j as f64;
        }
        taylor += jet_a[k + j] * term;
    }
    (jet_b[k] - taylor).abs() / d.abs().powi((m - k) as i32)
}

pub fn validate_field(field: &WhitneyField, mode: &ValidationMode) -> Result<ValidationReport> {
    validate_field_with(field, mode, &GridSpec::default())
}

pub fn validate_field_with(
    field: &WhitneyField,
    mode: &ValidationMode,
    grid: &GridSpec,
) -> Result<ValidationReport> {
    let n = field.nodes.len();
    if n < 2 {
        return Err(Error::TooFewNodes { needed: 2, got: n });
    }
    let m = field.order();
    let deltas = grid.deltas(&field.nodes)?;
    let mut items: Vec<Vec<(f64, f64)>> = vec![Vec::with_capacity(n * (n - 1)); m + 1];
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let (a, b) = (field.nodes[i], field.nodes[j]);
            for (k, bucket) in items.iter_mut().enumerate() {
                bucket.push(((b - a).abs(), remainder_ratio(&field.jets[i], &field.jets[j], a, b, k)));
            }
        }
    }
    let max_ratio = items.iter().map(|it| it.iter().fold(0.0, |m: f64, p| m.max(p.1))).collect();
    let omega_constants = match mode {
        ValidationMode::Cm => None,
        ValidationMode::CmOmega(omega) => Some(
            items
                .iter()
                .map(|it| it.iter().fold(0.0, |m: f64, &(d, r)| m.max(r / omega.eval(d))))
                .collect(),
        ),
    };
    let profiles = items.iter().map(|it| cumulative_profile(it, &deltas)).collect();
    Ok(ValidationReport { order: m, profiles, max_ratio, omega_constants })
}

/// Indices of the `count` nodes nearest to `nodes[i]`, ties toward smaller `t`,
/// returned in increasing order.
pub(crate) fn nearest_indices(nodes: &[f64], i: usize, count: usize) -> Vec<usize> {
    let n = nodes.len();
    let (mut lo, mut hi) = (i, i);
    while hi - lo + 1 < count.min(n) {
        let take_left = match (lo.checked_sub(1), (hi + 1 < n).then_some(hi + 1)) {
            (Some(l), Some(r)) => nodes[i] - nodes[l] <= nodes[r] - nodes[i],
            (Some(_), None) => true,
            (None, _) => false,
        };
        if take_left {
            lo -= 1;
        } else {
            hi += 1;
        }
    }
    (lo..=hi).collect()
}

/// Jets read off from local Newton interpolants through the `m + 1` nearest
/// nodes. `F^0` is the sample itself.
pub fn jets_from_samples(nodes: &[f64], values: &[f64], m: usize) -> Result<WhitneyField> {
    check_nodes(nodes)?;
    if values.len() != nodes.len() {
        return Err(Error::LengthMismatch { expected: nodes.len(), got: values.len() });
    }
    if nodes.len() < m + 1 {
        return Err(Error::TooFewNodes { needed: m + 1, got: nodes.len() });
    }
    let jets = (0..nodes.len())
        .map(|i| {
            let idx = nearest_indices(nodes, i, m + 1);
            let xs: Vec<f64> = idx.iter().map(|&j| nodes[j]).collect();
            let ys: Vec<f64> = idx.iter().map(|&j| values[j]).collect();
            let p = newton_interp_at(&xs, &ys, nodes[i])?;
            let mut jet = p.jet_at(0.0, m);
            jet[0] = values[i];
            Ok(jet)
        })
        .collect::<Result<Vec<_>>>()?;
    WhitneyField::new(nodes.to_vec(), jets)
}

/// The degree `2m + 1` polynomial with `S(0) = 0`, `S(1) = 1` and vanishing
/// derivatives of orders `1..=m` at both ends.
pub fn transition_poly(m: usize) -> Poly {
    // S(s) = (2m+1)!/(m!)^2 int_0^s t^m (1 - t)^m dt, expanded termwise.
    let norm = crate::heis::binomial(2 * m + 1, m) * (m + 1) as f64;
    let mut coeffs = vec![0.0; 2 * m + 2];
    for j in 0..=m {
        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
        coeffs[m + j + 1] = sign * norm * crate::heis::binomial(m, j) / (m + j + 1) as f64;
    }
    Poly::new(coeffs)
}

/// Blend of the endpoint Taylor polynomials over a gap of length `len`,
/// in the local variable `u = x - a`.
pub(crate) fn whitney_blend(jet_a: &[f64], jet_b: &[f64], len: f64, transition: &Poly) -> Poly {
    let ta = Poly::taylor(jet_a);
    let tb = Poly::taylor(jet_b).shift(-len);
    let s = transition.compose_affine(1.0 / len, 0.0);
    &ta + &(&s * &(&tb - &ta))
}

/// Piecewise polynomial function with pieces on
/// `(-inf, t_0], [t_0, t_1], ..., [t_{n-1}, +inf)`.
///
/// Piece `i` is a polynomial in `u = x - origins[i]`. By default piece `0` and
/// piece `1` use `t_0` and piece `i >= 1` uses `t_{i-1}`. At a breakpoint the
/// right-hand piece is used.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PiecewiseCm {
    breakpoints: Vec<f64>,
    pieces: Vec<Poly>,
    origins: Vec<f64>,
    order: usize,
}

impl PiecewiseCm {
    pub fn new(breakpoints: Vec<f64>, pieces: Vec<Poly>, order: usize) -> Result<Self> {
        let origins = (0..pieces.len()).map(|i| breakpoints.get(i.saturating_sub(1)).copied().unwrap_or(0.0)).collect();
        Self::with_origins(breakpoints, pieces, origins, order)
    }

    /// Pieces expanded about explicit origins.
    pub fn with_origins(breakpoints: Vec<f64>, pieces: Vec<Poly>, origins: Vec<f64>, order: usize) -> Result<Self> {
        check_nodes(&breakpoints)?;
        if breakpoints.is_empty() {
            return Err(Error::TooFewNodes { needed: 1, got: 0 });
        }
        if pieces.len() != breakpoints.len() + 1 {
            return Err(Error::LengthMismatch { expected: breakpoints.len() + 1, got: pieces.len() });
        }
        if origins.len() != pieces.len() {
            return Err(Error::LengthMismatch { expected: pieces.len(), got: origins.len() });
        }
        if let Some(i) = origins.iter().position(|o| !o.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        Ok(Self { breakpoints, pieces, origins, order })
    }

    /// A single polynomial on the whole line, in the global variable.
    pub fn global(p: Poly, order: usize) -> Self {
        Self { breakpoints: vec![0.0], pieces: vec![p.clone(), p], origins: vec![0.0, 0.0], order }
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn pieces(&self) -> &[Poly] {
        &self.pieces
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Origin of the local variable of piece `i`.
    pub fn origin(&self, i: usize) -> f64 {
        self.origins[i]
    }

    fn locate(&self, x: f64) -> usize {
        self.breakpoints.partition_point(|&b| b <= x)
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.derivative(x, 0)
    }

    pub fn derivative(&self, x: f64, k: usize) -> f64 {
        let i = self.locate(x);
        self.pieces[i].eval_derivative(x - self.origin(i), k)
    }

    pub fn magnitude(&self, x: f64, k: usize) -> f64 {
        let i = self.locate(x);
        self.pieces[i].magnitude_derivative(x - self.origin(i), k)
    }

    /// Derivatives `0..=order` at `x`.
    pub fn jet_at(&self, x: f64, order: usize) -> Vec<f64> {
        (0..=order).map(|k| self.derivative(x, k)).collect()
    }

    /// Largest relative jump `|left - right| / (1 + max(|left|, |right|))` of
    /// derivatives of order `0..=order` across the breakpoints.
    pub fn max_breakpoint_jump(&self, order: usize) -> f64 {
        let mut worst = 0.0_f64;
        for (j, &b) in self.breakpoints.iter().enumerate() {
            let (left, right) = (&self.pieces[j], &self.pieces[j + 1]);
            let (ol, or) = (self.origin(j), self.origin(j + 1));
            for k in 0..=order {
                let l = left.eval_derivative(b - ol, k);
                let r = right.eval_derivative(b - or, k);
                worst = worst.max((l - r).abs() / (1.0 + l.abs().max(r.abs())));
            }
        }
        worst
    }
}

/// The linear Whitney extension of a field.
pub fn extend(field: &WhitneyField) -> Result<PiecewiseCm> {
    check_nodes(&field.nodes)?;
    let m = field.order();
    let transition = transition_poly(m.max(1));
    let n = field.nodes.len();
    let mut pieces = Vec::with_capacity(n + 1);
    pieces.push(Poly::taylor(&field.jets[0]));
    for i in 0..n.saturating_sub(1) {
        let len = field.nodes[i + 1] - field.nodes[i];
        pieces.push(whitney_blend(&field.jets[i], &field.jets[i + 1], len, &transition));
    }
    pieces.push(Poly::taylor(&field.jets[n - 1]));
    PiecewiseCm::new(field.nodes.clone(), pieces, m)
}
