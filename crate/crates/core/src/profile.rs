//! Scale profiles, subset enumeration and the verdict threshold policy.
//!
//! The extension criteria are limits as a scale `delta -> 0`. On a finite
//! sample we can only tabulate a sup-based quantity on a geometric grid of
//! scales and read off its trend, which is what [`Profile`] and
//! [`ThresholdPolicy`] do.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfilePoint {
    pub delta: f64,
    pub value: f64,
}

/// Sup of some quantity over configurations of scale at most `delta`,
/// tabulated for strictly decreasing `delta`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Profile {
    pub points: Vec<ProfilePoint>,
}

/// Convergence profile of divided differences or Whitney remainders.
pub type DecayProfile = Profile;
/// Profile of `|A/V|` ratios.
pub type RatioProfile = Profile;

impl Profile {
    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    /// Value at the smallest scale.
    pub fn terminal(&self) -> Option<f64> {
        self.points.last().map(|p| p.value)
    }

    pub fn max_value(&self) -> f64 {
        self.points.iter().fold(0.0, |m, p| m.max(p.value))
    }

    /// Value at `delta` if that scale is tabulated.
    pub fn value_at(&self, delta: f64) -> Option<f64> {
        self.points
            .iter()
            .find(|p| (p.delta - delta).abs() <= 1e-12 * delta.abs().max(1e-300))
            .map(|p| p.value)
    }

    /// Least-squares slope of `ln value` against `ln delta`, restricted to
    /// scales within `decades` decades of the smallest one. Zeros are floored
    /// at `1e-300`. `None` when fewer than two scales are available.
    pub fn loglog_slope(&self, decades: f64) -> Option<f64> {
        let smallest = self.points.last()?.delta;
        let cutoff = smallest * 10f64.powf(decades) * (1.0 + 1e-12);
        let pts: Vec<(f64, f64)> = self
            .points
            .iter()
            .filter(|p| p.delta <= cutoff)
            .map(|p| (p.delta.ln(), p.value.max(1e-300).ln()))
            .collect();
        fit_slope(&pts)
    }
}

/// Least-squares slope through `(x, y)` pairs.
pub fn fit_slope(pts: &[(f64, f64)]) -> Option<f64> {
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    Some(sxy / sxx)
}

/// How the scale grid is laid out.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum GridSpec {
    /// From `diam(K)` down to the smallest node gap, multiplying by `ratio`.
    Geometric { ratio: f64 },
    /// Fixed scales, sorted decreasing on use.
    Explicit(Vec<f64>),
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec::Geometric { ratio: 0.5 }
    }
}

impl GridSpec {
    pub fn deltas(&self, nodes: &[f64]) -> Result<Vec<f64>> {
        match self {
            GridSpec::Geometric { ratio } => {
                if !(*ratio > 0.0 && *ratio < 1.0) {
                    return Err(Error::InvalidParameter(format!(
                        "delta ratio must lie in (0, 1), got {ratio}"
                    )));
                }
                if nodes.len() < 2 {
                    return Ok(Vec::new());
                }
                let diam = nodes[nodes.len() - 1] - nodes[0];
                let min_gap = nodes.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
                let mut out = Vec::new();
                let mut d = diam;
                while d >= min_gap * (1.0 - 1e-12) {
                    out.push(d);
                    d *= ratio;
                }
                Ok(out)
            }
            GridSpec::Explicit(ds) => {
                if ds.iter().any(|d| !(d.is_finite() && *d > 0.0)) {
                    return Err(Error::InvalidParameter("explicit scales must be positive".into()));
                }
                let mut ds = ds.clone();
                ds.sort_by(|a, b| b.total_cmp(a));
                ds.dedup();
                Ok(ds)
            }
        }
    }
}

/// For each scale, the sup of `value` over items with `scale <= delta`.
/// Scales with no admissible item are omitted, and so are scales above the
/// smallest one that already admits every item (the sup is saturated there).
pub fn cumulative_profile(items: &[(f64, f64)], deltas: &[f64]) -> Profile {
    let mut sorted: Vec<(f64, f64)> = items.to_vec();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut prefix = Vec::with_capacity(sorted.len());
    let mut run = f64::NEG_INFINITY;
    for &(_, v) in &sorted {
        run = run.max(v);
        prefix.push(run);
    }
    let counts: Vec<usize> =
        deltas.iter().map(|&d| sorted.partition_point(|it| it.0 <= d * (1.0 + 1e-12))).collect();
    let points = deltas
        .iter()
        .enumerate()
        .filter(|&(j, _)| counts[j] > 0 && counts.get(j + 1).is_none_or(|&next| next < sorted.len()))
        .map(|(j, &d)| ProfilePoint { delta: d, value: prefix[counts[j] - 1] })
        .collect();
    Profile { points }
}

/// For each scale `delta_j`, the sup of `value` over items with
/// `delta_{j+1} < scale <= delta_j` (the last band reaches down to zero).
pub fn banded_profile(items: &[(f64, f64)], deltas: &[f64]) -> Profile {
    let points = deltas
        .iter()
        .enumerate()
        .filter_map(|(j, &hi)| {
            let lo = deltas.get(j + 1).copied().unwrap_or(0.0);
            let hi = hi * (1.0 + 1e-12);
            let lo = lo * (1.0 + 1e-12);
            items
                .iter()
                .filter(|it| it.0 > lo && it.0 <= hi)
                .map(|it| it.1)
                .reduce(f64::max)
                .map(|value| ProfilePoint { delta: deltas[j], value })
        })
        .collect();
    Profile { points }
}

/// Which node subsets a scan visits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Enumeration {
    /// Subsets whose members lie within `width` consecutive nodes.
    Windowed(usize),
    /// Every subset.
    Full,
}

impl Enumeration {
    /// The default window of `2m + 4` consecutive nodes.
    pub fn default_for(m: usize) -> Self {
        Enumeration::Windowed(2 * m + 4)
    }

    /// Largest allowed index span (last - first) of a subset on `n` nodes.
    pub fn max_span(&self, n: usize) -> usize {
        match *self {
            Enumeration::Windowed(w) => w.saturating_sub(1).min(n.saturating_sub(1)),
            Enumeration::Full => n.saturating_sub(1),
        }
    }
}

/// Index subsets of size `k` drawn from `0..n` whose span respects `enumeration`,
/// each listed once, in lexicographic order.
pub fn subsets(n: usize, k: usize, enumeration: Enumeration) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if k == 0 || k > n {
        return out;
    }
    let span = enumeration.max_span(n);
    let mut current = Vec::with_capacity(k);
    for first in 0..n {
        current.clear();
        current.push(first);
        let last_allowed = (first + span).min(n - 1);
        extend_subsets(first + 1, last_allowed, k, &mut current, &mut out);
    }
    out
}

fn extend_subsets(start: usize, end: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    if cur.len() == k {
        out.push(cur.clone());
        return;
    }
    let need = k - cur.len();
    if start > end + 1 || end + 1 - start < need {
        return;
    }
    for i in start..=end {
        if end + 1 - i < need {
            break;
        }
        cur.push(i);
        extend_subsets(i + 1, end, k, cur, out);
        cur.pop();
    }
}

/// Subset enumeration plus scale grid for a profiling scan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanOptions {
    pub enumeration: Enumeration,
    pub grid: GridSpec,
}

impl ScanOptions {
    /// Default window `2m + 4` and the halving grid.
    pub fn for_order(m: usize) -> Self {
        Self { enumeration: Enumeration::default_for(m), grid: GridSpec::default() }
    }

    pub fn full() -> Self {
        Self { enumeration: Enumeration::Full, grid: GridSpec::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Consistent,
    Inconsistent,
    Inconclusive,
}

impl Status {
    /// Consistent only if every part is; inconsistent as soon as one part is.
    pub fn combine<I: IntoIterator<Item = Status>>(parts: I) -> Status {
        let mut all_consistent = true;
        for s in parts {
            match s {
                Status::Inconsistent => return Status::Inconsistent,
                Status::Inconclusive => all_consistent = false,
                Status::Consistent => {}
            }
        }
        if all_consistent {
            Status::Consistent
        } else {
            Status::Inconclusive
        }
    }
}

/// Graded reading of a profile.
///
/// * consistent: the terminal value is at most `tol * scale`, or the
///   log-log slope over the finest `decades` decades is at least
///   `consistent_slope` (measurable decay);
/// * inconsistent: the slope is at most `inconsistent_slope` and the terminal
///   value is at least `inconsistent_factor * tol * scale`;
/// * inconclusive otherwise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdPolicy {
    pub tol: f64,
    pub consistent_slope: f64,
    pub inconsistent_slope: f64,
    pub inconsistent_factor: f64,
    pub decades: f64,
}

impl Default for ThresholdPolicy {
    fn default() -> Self {
        Self {
            tol: 1e-3,
            consistent_slope: 0.25,
            inconsistent_slope: 0.05,
            inconsistent_factor: 10.0,
            decades: 3.0,
        }
    }
}

/// A named profile with its reading under the policy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evidence {
    pub name: String,
    pub profile: Profile,
    pub slope: Option<f64>,
    pub terminal: Option<f64>,
    pub threshold: f64,
    pub status: Status,
}

impl ThresholdPolicy {
    pub fn assess(&self, name: impl Into<String>, profile: Profile, scale: f64) -> Evidence {
        let threshold = self.tol * scale;
        let slope = profile.loglog_slope(self.decades);
        let terminal = profile.terminal();
        let status = match terminal {
            None => Status::Inconclusive,
            Some(t) if t <= threshold => Status::Consistent,
            Some(t) => match slope {
                Some(s) if s >= self.consistent_slope => Status::Consistent,
                Some(s) if s <= self.inconsistent_slope && t >= self.inconsistent_factor * threshold => {
                    Status::Inconsistent
                }
                _ => Status::Inconclusive,
            },
        };
        Evidence { name: name.into(), profile, slope, terminal, threshold, status }
    }
}
