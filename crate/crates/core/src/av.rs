//! Area discrepancy `A` and velocity `V`, from jets (Taylor polynomials) and
//! from samples alone (Newton interpolants on `(m+1)`-subsets), together with
//! their ratio profiles.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::divdiff::{newton_interp_at, Component, SampledCurve};
use crate::error::{Error, Result};
use crate::heis::HPoint;
use crate::poly::{Interval, Poly};
use crate::profile::{cumulative_profile, subsets, GridSpec, RatioProfile, ScanOptions};
use crate::whitney::{check_nodes, WhitneyField};

/// Jets `(F^k, G^k, H^k)_{k <= m}` of a curve on a node set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveJets {
    nodes: Vec<f64>,
    f: Vec<Vec<f64>>,
    g: Vec<Vec<f64>>,
    h: Vec<Vec<f64>>,
}

impl CurveJets {
    pub fn new(nodes: Vec<f64>, f: Vec<Vec<f64>>, g: Vec<Vec<f64>>, h: Vec<Vec<f64>>) -> Result<Self> {
        check_nodes(&nodes)?;
        let len = f.first().map_or(0, Vec::len);
        if len == 0 {
            return Err(Error::LengthMismatch { expected: 1, got: 0 });
        }
        for comp in [&f, &g, &h] {
            if comp.len() != nodes.len() {
                return Err(Error::LengthMismatch { expected: nodes.len(), got: comp.len() });
            }
            if let Some(bad) = comp.iter().find(|j| j.len() != len) {
                return Err(Error::LengthMismatch { expected: len, got: bad.len() });
            }
        }
        Ok(Self { nodes, f, g, h })
    }

    pub fn from_fields(f: &WhitneyField, g: &WhitneyField, h: &WhitneyField) -> Result<Self> {
        if f.nodes() != g.nodes() || f.nodes() != h.nodes() {
            return Err(Error::BadSubset("fields live on different node sets".into()));
        }
        Self::new(f.nodes().to_vec(), f.jets().to_vec(), g.jets().to_vec(), h.jets().to_vec())
    }

    /// True jets of a polynomial curve.
    pub fn from_polys(nodes: Vec<f64>, f: &Poly, g: &Poly, h: &Poly, m: usize) -> Result<Self> {
        let jets = |p: &Poly| nodes.iter().map(|&t| p.jet_at(t, m)).collect::<Vec<_>>();
        let (fj, gj, hj) = (jets(f), jets(g), jets(h));
        Self::new(nodes, fj, gj, hj)
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn order(&self) -> usize {
        self.f[0].len() - 1
    }

    pub fn f(&self, i: usize) -> &[f64] {
        &self.f[i]
    }

    pub fn g(&self, i: usize) -> &[f64] {
        &self.g[i]
    }

    pub fn h(&self, i: usize) -> &[f64] {
        &self.h[i]
    }

    pub fn point(&self, i: usize) -> HPoint {
        HPoint::new(self.f[i][0], self.g[i][0], self.h[i][0])
    }

    pub fn index_of(&self, t: f64) -> Result<usize> {
        self.nodes
            .binary_search_by(|x| x.total_cmp(&t))
            .map_err(|_| Error::NodeNotFound(t))
    }

    /// Jets of `p * gamma`: `f + x`, `g + y`, `h + z + 2(y f - x g)`.
    pub fn left_translate(&self, p: &HPoint) -> Self {
        let shift = |jets: &[Vec<f64>], c: f64| -> Vec<Vec<f64>> {
            jets.iter()
                .map(|j| {
                    let mut j = j.clone();
                    j[0] += c;
                    j
                })
                .collect()
        };
        let h = self
            .h
            .iter()
            .zip(self.f.iter().zip(&self.g))
            .map(|(hj, (fj, gj))| {
                hj.iter()
                    .enumerate()
                    .map(|(k, &v)| {
                        let base = v + 2.0 * (p.y * fj[k] - p.x * gj[k]);
                        if k == 0 {
                            base + p.z
                        } else {
                            base
                        }
                    })
                    .collect()
            })
            .collect();
        Self { nodes: self.nodes.clone(), f: shift(&self.f, p.x), g: shift(&self.g, p.y), h }
    }
}

/// An `(A, V, A/V)` triple.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AVPair {
    pub area: f64,
    pub velocity: f64,
    pub ratio: f64,
}

impl AVPair {
    fn new(area: f64, velocity: f64) -> Self {
        Self { area, velocity, ratio: area / velocity }
    }
}

fn root_tol(len: f64) -> f64 {
    1e-14 * len.abs().max(f64::MIN_POSITIVE)
}

/// `2 (p' q - q' p)`.
fn bracket(p: &Poly, q: &Poly) -> Poly {
    (&p.derivative() * q - &q.derivative() * p).scale(2.0)
}

/// `A(gamma; a, b)` for nodes `i`, `j` in either order.
pub fn area_discrepancy_oriented(jets: &CurveJets, i: usize, j: usize, m: usize) -> Result<f64> {
    check_order(jets, m)?;
    let (a, b) = (jets.nodes[i], jets.nodes[j]);
    let len = b - a;
    let tf = Poly::taylor(&jets.f[i][..=m]);
    let tg = Poly::taylor(&jets.g[i][..=m]);
    let (fa, ga, ha) = (jets.f[i][0], jets.g[i][0], jets.h[i][0]);
    let (fb, gb, hb) = (jets.f[j][0], jets.g[j][0], jets.h[j][0]);
    let swept = bracket(&tf, &tg).integrate_between(0.0, len);
    Ok(hb - ha - swept + 2.0 * fa * (gb - tg.eval(len)) - 2.0 * ga * (fb - tf.eval(len)))
}

fn check_order(jets: &CurveJets, m: usize) -> Result<()> {
    if jets.order() < m {
        return Err(Error::OrderMismatch { expected: m, got: jets.order() });
    }
    Ok(())
}

/// `A(gamma; a, b)` and `V(gamma; a, b)` for node indices `i < j`.
pub fn av_pair_idx(jets: &CurveJets, i: usize, j: usize, m: usize) -> Result<AVPair> {
    let (a, b) = (jets.nodes[i], jets.nodes[j]);
    if !(a < b) {
        return Err(Error::OrderViolation { a, b });
    }
    let area = area_discrepancy_oriented(jets, i, j, m)?;
    let len = b - a;
    let iv = Interval::new(0.0, len)?;
    let tf = Poly::taylor(&jets.f[i][..=m]).derivative();
    let tg = Poly::taylor(&jets.g[i][..=m]).derivative();
    let path = tf.abs_integral(iv, root_tol(len))? + tg.abs_integral(iv, root_tol(len))?;
    let velocity = len.powi(2 * m as i32) + len.powi(m as i32) * path;
    Ok(AVPair::new(area, velocity))
}

/// `A` and `V` at the nodes `a < b`.
pub fn av_pair(jets: &CurveJets, a: f64, b: f64, m: usize) -> Result<AVPair> {
    let (i, j) = (jets.index_of(a)?, jets.index_of(b)?);
    av_pair_idx(jets, i, j, m)
}

/// `A[X]` and `V[X]` for every pair `a < b` in one subset, from interpolants.
struct SubsetFunctionals {
    pf: Poly,
    pg: Poly,
    anti_bracket: Poly,
    origin: f64,
    diam: f64,
}

impl SubsetFunctionals {
    fn new(xs: &[f64], fx: &[f64], gx: &[f64]) -> Result<Self> {
        let origin = xs[0];
        let pf = newton_interp_at(xs, fx, origin)?;
        let pg = newton_interp_at(xs, gx, origin)?;
        let anti_bracket = bracket(&pf, &pg).antiderivative();
        Ok(Self { pf, pg, anti_bracket, origin, diam: xs[xs.len() - 1] - xs[0] })
    }

    fn pair(&self, a: f64, b: f64, ha: f64, hb: f64, m: usize) -> Result<AVPair> {
        let (ua, ub) = (a - self.origin, b - self.origin);
        let area = hb - ha - (self.anti_bracket.eval(ub) - self.anti_bracket.eval(ua));
        let iv = Interval::new(ua, ub)?;
        let tol = root_tol(b - a);
        let path = self.pf.derivative().abs_integral(iv, tol)? + self.pg.derivative().abs_integral(iv, tol)?;
        let velocity = self.diam.powi(2 * m as i32) + self.diam.powi(m as i32) * path;
        Ok(AVPair::new(area, velocity))
    }
}

fn validate_subset(samples: &SampledCurve, subset: &[usize], m: usize) -> Result<()> {
    if subset.len() != m + 1 {
        return Err(Error::BadSubset(format!("expected {} nodes, got {}", m + 1, subset.len())));
    }
    if subset.iter().any(|&i| i >= samples.len()) {
        return Err(Error::BadSubset("index out of range".into()));
    }
    if subset.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::BadSubset("indices must be strictly increasing".into()));
    }
    Ok(())
}

/// `A[X, gamma; a, b]` and `V[X, gamma; a, b]` for the subset `X` (sorted node
/// indices, `m + 1` of them) and node indices `a < b` in `X`.
pub fn discrete_av_pair(samples: &SampledCurve, subset: &[usize], a: usize, b: usize, m: usize) -> Result<AVPair> {
    validate_subset(samples, subset, m)?;
    if !subset.contains(&a) || !subset.contains(&b) {
        return Err(Error::BadSubset("a and b must belong to the subset".into()));
    }
    let nodes = samples.nodes();
    if !(nodes[a] < nodes[b]) {
        return Err(Error::OrderViolation { a: nodes[a], b: nodes[b] });
    }
    let (xs, fx, gx) = subset_data(samples, subset);
    let sf = SubsetFunctionals::new(&xs, &fx, &gx)?;
    let v = samples.values();
    sf.pair(nodes[a], nodes[b], v[a].z, v[b].z, m)
}

fn subset_data(samples: &SampledCurve, subset: &[usize]) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let nodes = samples.nodes();
    let v = samples.values();
    (
        subset.iter().map(|&i| nodes[i]).collect(),
        subset.iter().map(|&i| Component::X.of(&v[i])).collect(),
        subset.iter().map(|&i| Component::Y.of(&v[i])).collect(),
    )
}

/// One scanned configuration `(X, a, b)` with its discrete functionals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteEntry {
    pub subset: Vec<usize>,
    pub a: usize,
    pub b: usize,
    pub diam: f64,
    pub pair: AVPair,
}

/// Discrete functionals over every scanned subset and every pair in it.
pub fn discrete_av_scan(samples: &SampledCurve, m: usize, opts: &ScanOptions) -> Result<Vec<DiscreteEntry>> {
    let n = samples.len();
    if n < m + 1 {
        return Err(Error::TooFewNodes { needed: m + 1, got: n });
    }
    let nodes = samples.nodes();
    let v = samples.values();
    let per_subset: Vec<Result<Vec<DiscreteEntry>>> = subsets(n, m + 1, opts.enumeration)
        .into_par_iter()
        .map(|idx| {
            let (xs, fx, gx) = subset_data(samples, &idx);
            let sf = SubsetFunctionals::new(&xs, &fx, &gx)?;
            let mut out = Vec::new();
            for p in 0..idx.len() {
                for q in (p + 1)..idx.len() {
                    let (a, b) = (idx[p], idx[q]);
                    let pair = sf.pair(nodes[a], nodes[b], v[a].z, v[b].z, m)?;
                    out.push(DiscreteEntry { subset: idx.clone(), a, b, diam: sf.diam, pair });
                }
            }
            Ok(out)
        })
        .collect();
    let mut all = Vec::new();
    for chunk in per_subset {
        all.extend(chunk?);
    }
    Ok(all)
}

/// `sup |A[X]/V[X]|` over scanned subsets with `diam(X) <= delta`.
pub fn discrete_av_profile(samples: &SampledCurve, m: usize, opts: &ScanOptions) -> Result<RatioProfile> {
    let deltas = opts.grid.deltas(samples.nodes())?;
    let items: Vec<(f64, f64)> = discrete_av_scan(samples, m, opts)?
        .iter()
        .map(|e| (e.diam, e.pair.ratio.abs()))
        .collect();
    Ok(cumulative_profile(&items, &deltas))
}

/// `(b - a, A, V)` for every node pair `a < b`.
pub fn av_scan(jets: &CurveJets, m: usize) -> Result<Vec<(usize, usize, AVPair)>> {
    let n = jets.nodes.len();
    if n < m + 1 || n < 2 {
        return Err(Error::TooFewNodes { needed: (m + 1).max(2), got: n });
    }
    check_order(jets, m)?;
    let rows: Vec<Result<Vec<(usize, usize, AVPair)>>> = (0..n)
        .into_par_iter()
        .map(|i| ((i + 1)..n).map(|j| Ok((i, j, av_pair_idx(jets, i, j, m)?))).collect())
        .collect();
    let mut all = Vec::with_capacity(n * (n - 1) / 2);
    for r in rows {
        all.extend(r?);
    }
    Ok(all)
}

/// `sup |A/V|` over node pairs with `b - a <= delta`.
pub fn av_profile(jets: &CurveJets, m: usize, grid: &GridSpec) -> Result<RatioProfile> {
    let deltas = grid.deltas(&jets.nodes)?;
    let items: Vec<(f64, f64)> = av_scan(jets, m)?
        .iter()
        .map(|&(i, j, p)| (jets.nodes[j] - jets.nodes[i], p.ratio.abs()))
        .collect();
    Ok(cumulative_profile(&items, &deltas))
}

/// `max |A/V - A[X]/V[X]|` over scanned subsets `X` and pairs `a < b` in `X`,
/// with `A/V` taken from `jets` (which must live on the sample nodes).
pub fn equivalence_gap(samples: &SampledCurve, jets: &CurveJets, m: usize, opts: &ScanOptions) -> Result<f64> {
    if samples.nodes() != jets.nodes() {
        return Err(Error::BadSubset("jets and samples live on different nodes".into()));
    }
    let entries = discrete_av_scan(samples, m, opts)?;
    let mut worst = 0.0_f64;
    for e in entries {
        let cont = av_pair_idx(jets, e.a, e.b, m)?;
        worst = worst.max((cont.ratio - e.pair.ratio).abs());
    }
    Ok(worst)
}
