//! Horizontal jet completion, gap synthesis, the extendability checks and the
//! finiteness scan.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::av::{av_pair_idx, av_profile, discrete_av_profile, CurveJets};
use crate::divdiff::{dd_profile, divided_differences_on_subsets, newton_interp_at, Component, SampledCurve};
use crate::error::{Error, Result};
use crate::heis::{horizontality_defect, leibniz_stack, pansu_dq, HPoint};
use crate::poly::Poly;
use crate::profile::{
    banded_profile, subsets, Enumeration, Evidence, Profile, ProfilePoint, ScanOptions, Status, ThresholdPolicy,
};
use crate::whitney::{
    extend, jets_from_samples, transition_poly, validate_field, whitney_blend, ModulusFn, PiecewiseCm,
    ValidationMode, ValidationReport, WhitneyField,
};

/// Scan options and threshold policy shared by the checks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckConfig {
    pub scan: ScanOptions,
    pub policy: ThresholdPolicy,
}

impl CheckConfig {
    pub fn for_order(m: usize) -> Self {
        Self { scan: ScanOptions::for_order(m), policy: ThresholdPolicy::default() }
    }
}

/// Outcome of a check with the profiles it was based on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub status: Status,
    pub evidence: Vec<Evidence>,
    pub policy: ThresholdPolicy,
    pub constants: BTreeMap<String, f64>,
}

impl Verdict {
    fn from_evidence(evidence: Vec<Evidence>, policy: ThresholdPolicy, constants: BTreeMap<String, f64>) -> Self {
        let status = Status::combine(evidence.iter().map(|e| e.status));
        Self { status, evidence, policy, constants }
    }

    pub fn evidence(&self, name: &str) -> Option<&Evidence> {
        self.evidence.iter().find(|e| e.name == name)
    }
}

/// The height field forced by horizontality: `H^0 = h` on the nodes and
/// `H^k = (2(f'g - fg'))^(k-1)` from the jets of the planar extensions.
pub fn horizontal_jet_completion(
    f: &PiecewiseCm,
    g: &PiecewiseCm,
    nodes: &[f64],
    hvals: &[f64],
    m: usize,
) -> Result<(WhitneyField, ValidationReport)> {
    for p in [f, g] {
        if p.order() < m {
            return Err(Error::OrderMismatch { expected: m, got: p.order() });
        }
    }
    if hvals.len() != nodes.len() {
        return Err(Error::LengthMismatch { expected: nodes.len(), got: hvals.len() });
    }
    let jets = nodes
        .iter()
        .zip(hvals)
        .map(|(&t, &h0)| {
            let mut jet = vec![h0];
            jet.extend(leibniz_stack(&f.jet_at(t, m), &g.jet_at(t, m), m)?);
            Ok(jet)
        })
        .collect::<Result<Vec<_>>>()?;
    let field = WhitneyField::new(nodes.to_vec(), jets)?;
    let report = validate_field(&field, &ValidationMode::Cm)?;
    Ok((field, report))
}

/// `2 (p' q - p q')`.
fn bracket(p: &Poly, q: &Poly) -> Poly {
    (&p.derivative() * q - p * &q.derivative()).scale(2.0)
}

/// The bump pair `w(s) = (s(1-s))^(m+1)` and `w(s)(2s - 1)`, written in the
/// centred variable `r = s - 1/2` where `s(1-s) = 1/4 - r^2`. The centred
/// form keeps all coefficients small, so sums of its terms do not cancel.
fn bump_pair(m: usize) -> (Poly, Poly) {
    let base = Poly::new(vec![0.25, 0.0, -1.0]);
    let w = (0..m).fold(base.clone(), |acc, _| &acc * &base);
    let odd = &w * &Poly::new(vec![0.0, 2.0]);
    (w, odd)
}

/// Polynomial pieces of a horizontalized gap.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapPieces {
    /// Left ends of the three sub-pieces: `a`, `a + L/3`, `a + 2L/3`.
    pub starts: [f64; 3],
    /// Expansion points: the left ends of the outer sub-pieces and the
    /// midpoint of the middle one.
    pub origins: [f64; 3],
    /// Pieces in the variable `x - origins[i]`.
    pub f: [Poly; 3],
    pub g: [Poly; 3],
    pub h: [Poly; 3],
    /// Bump amplitude.
    pub lambda: f64,
    /// Sign applied to the first bump.
    pub tau: f64,
    /// Sign applied to the second bump.
    pub sigma: f64,
    /// Area deficit of the plain blends.
    pub deficit: f64,
}

/// Blends the endpoint jets over `[a, b]` and adds a bump pair
/// `(tau lambda beta_1, sigma lambda beta_2)` on the middle
/// third so that the horizontal lift from `h(a)` lands exactly on `h(b)`.
///
/// The deficit `D` of the plain blends is closed by solving
/// `tau sigma c lambda^2 + J(tau, sigma) lambda = D` for the smallest
/// `lambda >= 0` over the bump signs `tau, sigma = +-1`, where `c` is the
/// bracket of the bump pair and `J` collects the cross brackets with the
/// blends.
#[allow(clippy::too_many_arguments)]
pub fn gap_horizontalize(
    f_left: &[f64],
    f_right: &[f64],
    g_left: &[f64],
    g_right: &[f64],
    h_left: f64,
    h_right: f64,
    a: f64,
    b: f64,
    m: usize,
) -> Result<GapPieces> {
    if !(a < b) {
        return Err(Error::DegenerateGap { a, b });
    }
    for jet in [f_left, f_right, g_left, g_right] {
        if jet.len() != m + 1 {
            return Err(Error::LengthMismatch { expected: m + 1, got: jet.len() });
        }
    }
    let len = b - a;
    let transition = transition_poly(m);
    let fb = whitney_blend(f_left, f_right, len, &transition);
    let gb = whitney_blend(g_left, g_right, len, &transition);

    let starts = [a, a + len / 3.0, a + 2.0 * len / 3.0];
    let offs = [0.0, starts[1] - a, starts[2] - a];
    let mid_len = offs[2] - offs[1];

    let (w, odd) = bump_pair(m);
    let c = bracket(&w, &odd).integrate_between(-0.5, 0.5);
    // Middle-third blends in r = (x - starts[1]) / mid_len - 1/2. The bracket
    // integral does not depend on the variable.
    let fm = fb.shift(offs[1]).compose_affine(mid_len, 0.5 * mid_len);
    let gm = gb.shift(offs[1]).compose_affine(mid_len, 0.5 * mid_len);

    let outer = bracket(&fb, &gb);
    let deficit = h_right - h_left - outer.integrate_between(0.0, len);
    let build = |lambda: f64, tau: f64, sigma: f64| {
        let fs = &fm + &w.scale(lambda * tau);
        let gs = &gm + &odd.scale(lambda * sigma);
        let h0 = &outer.antiderivative() + &Poly::constant(h_left);
        let h1_start = h0.eval(offs[1]);
        let anti = bracket(&fs, &gs).antiderivative();
        let hs = &anti + &Poly::constant(h1_start - anti.eval(-0.5));
        let h2_start = hs.eval(0.5);
        let tail = outer.shift(offs[2]);
        let h2 = &tail.antiderivative() + &Poly::constant(h2_start);
        let end = h2.eval(len - offs[2]);
        (fs, gs, [h0, hs, h2], end)
    };
    let (mut lambda, mut tau, mut sigma) = (0.0, 1.0, 1.0);
    if deficit != 0.0 {
        let cross_f = bracket(&fm, &odd).integrate_between(-0.5, 0.5);
        let cross_g = bracket(&w, &gm).integrate_between(-0.5, 0.5);
        // Smallest nonnegative root over the four sign choices. Signs with
        // tau * sigma * c of the same sign as D always have one.
        let mut best = (f64::INFINITY, 1.0, 1.0, 0.0);
        for (tg, sg) in [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)] {
            let (a2, j) = (tg * sg * c, sg * cross_f + tg * cross_g);
            if let Some(root) = smallest_nonnegative_root(a2, j, -deficit) {
                if root < best.0 {
                    best = (root, tg, sg, j);
                }
            }
        }
        let cross;
        (lambda, tau, sigma, cross) = best;
        // Newton polish against the end value actually produced by the pieces.
        for _ in 0..2 {
            let miss = build(lambda, tau, sigma).3 - h_right;
            let slope = cross + 2.0 * tau * sigma * c * lambda;
            if slope != 0.0 {
                lambda -= miss / slope;
            }
        }
    }
    let (fs, gs, [h0, hs, h2], _) = build(lambda, tau, sigma);
    let to_v = 1.0 / mid_len;
    let f: [Poly; 3] = [fb.clone(), fs.compose_affine(to_v, 0.0), fb.shift(offs[2])];
    let g: [Poly; 3] = [gb.clone(), gs.compose_affine(to_v, 0.0), gb.shift(offs[2])];
    let h: [Poly; 3] = [h0, hs.compose_affine(to_v, 0.0), h2];
    let origins = [a, a + offs[1] + 0.5 * mid_len, starts[2]];
    Ok(GapPieces { starts, origins, f, g, h, lambda, tau, sigma, deficit })
}

/// Smallest root `x >= 0` of `a x^2 + b x + c = 0` with `a != 0`.
fn smallest_nonnegative_root(a: f64, b: f64, c: f64) -> Option<f64> {
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return None;
    }
    let q = -0.5 * (b + b.signum() * disc.sqrt());
    let roots = [q / a, if q != 0.0 { c / q } else { q / a }];
    roots.into_iter().filter(|r| *r >= 0.0).reduce(f64::min)
}

/// Spread of the planar Pansu difference quotients and size of their vertical
/// part. The planar part of `pansu_dq` is the first divided difference of
/// `(x, y)`, so its spread profile is the first-order divided-difference
/// profile; the vertical part is banded by `b - a`.
pub fn check_c1(samples: &SampledCurve, cfg: &CheckConfig) -> Result<Verdict> {
    let n = samples.len();
    if n < 2 {
        return Err(Error::TooFewNodes { needed: 2, got: n });
    }
    let nodes = samples.nodes();
    let v = samples.values();
    let mut z_items = Vec::with_capacity(n * (n - 1) / 2);
    let mut max_xy = 0.0_f64;
    for i in 0..n {
        for j in (i + 1)..n {
            let q = pansu_dq(&v[i], &v[j], nodes[i], nodes[j])?;
            z_items.push((nodes[j] - nodes[i], q.z.abs()));
            max_xy = max_xy.max(q.x.abs()).max(q.y.abs());
        }
    }
    let deltas = cfg.scan.grid.deltas(nodes)?;
    let policy = cfg.policy;
    let mut evidence = Vec::new();
    if n >= 3 {
        let [px, py, _] = dd_profile(samples, 1, &cfg.scan)?;
        let spread = merge_max(&px, &py);
        evidence.push(policy.assess("pansu_xy", spread, 1.0 + max_xy));
    }
    let z = banded_profile(&z_items, &deltas);
    let max_z = z.max_value();
    evidence.push(policy.assess("pansu_z", z, 1.0 + max_xy * max_xy));
    let constants = BTreeMap::from([("max_pansu_xy".to_string(), max_xy), ("max_pansu_z".to_string(), max_z)]);
    Ok(Verdict::from_evidence(evidence, policy, constants))
}

/// Pointwise max of two profiles tabulated on the same grid.
fn merge_max(p: &Profile, q: &Profile) -> Profile {
    let mut points: Vec<ProfilePoint> = p.points.clone();
    for qp in &q.points {
        match points.iter_mut().find(|x| x.delta == qp.delta) {
            Some(x) => x.value = x.value.max(qp.value),
            None => points.push(*qp),
        }
    }
    points.sort_by(|a, b| b.delta.total_cmp(&a.delta));
    Profile { points }
}

/// Divided-difference evidence on the curve moved so that its first sample
/// sits at the identity. Raw height differences pick up
/// `2(p_y dd_x - p_x dd_y)` under a left translation by `p`; after the move
/// they do not depend on `p`.
fn dd_evidence(samples: &SampledCurve, m: usize, cfg: &CheckConfig) -> Result<(Vec<Evidence>, f64)> {
    let normalized = samples.left_translate(&samples.values()[0].inverse());
    let samples = &normalized;
    let profiles = dd_profile(samples, m, &cfg.scan)?;
    let dds = divided_differences_on_subsets(samples, m, &cfg.scan);
    let mut evidence = Vec::with_capacity(3);
    let mut worst = 0.0_f64;
    for (c, prof) in Component::ALL.iter().zip(profiles) {
        let idx = *c as usize;
        let max_dd = dds.iter().fold(0.0_f64, |acc, (_, d)| acc.max(d[idx].abs()));
        worst = worst.max(prof.max_value());
        evidence.push(cfg.policy.assess(format!("dd_{}", c.name()), prof, 1.0 + max_dd));
    }
    Ok((evidence, worst))
}

/// Convergence of `m`-th divided differences plus decay of the discrete
/// `A[X]/V[X]` ratios.
pub fn check_cm(samples: &SampledCurve, m: usize, cfg: &CheckConfig) -> Result<Verdict> {
    let n = samples.len();
    if n < m + 2 {
        return Err(Error::TooFewNodes { needed: m + 2, got: n });
    }
    let (mut evidence, dd_spread) = dd_evidence(samples, m, cfg)?;
    let ratios = discrete_av_profile(samples, m, &cfg.scan)?;
    let max_ratio = ratios.max_value();
    evidence.push(cfg.policy.assess("discrete_av", ratios, 1.0));
    let constants =
        BTreeMap::from([("max_dd_spread".to_string(), dd_spread), ("max_discrete_ratio".to_string(), max_ratio)]);
    Ok(Verdict::from_evidence(evidence, cfg.policy, constants))
}

/// The extension of sample-derived jets, one per component.
pub fn extension_of_samples(samples: &SampledCurve, m: usize) -> Result<[PiecewiseCm; 3]> {
    let nodes = samples.nodes();
    let ext = |c: Component| extend(&jets_from_samples(nodes, &samples.component(c), m)?);
    Ok([ext(Component::X)?, ext(Component::Y)?, ext(Component::Z)?])
}

/// Divided-difference convergence plus decay of the continuous `A/V` ratios
/// of the Whitney extension built from the samples.
pub fn check_cm_via_w(samples: &SampledCurve, m: usize, cfg: &CheckConfig) -> Result<Verdict> {
    let n = samples.len();
    if n < m + 2 {
        return Err(Error::TooFewNodes { needed: m + 2, got: n });
    }
    let (mut evidence, dd_spread) = dd_evidence(samples, m, cfg)?;
    let [f, g, h] = extension_of_samples(samples, m)?;
    let nodes = samples.nodes().to_vec();
    let read = |p: &PiecewiseCm| nodes.iter().map(|&t| p.jet_at(t, m)).collect::<Vec<_>>();
    let jets = CurveJets::new(nodes.clone(), read(&f), read(&g), read(&h))?;
    let ratios = av_profile(&jets, m, &cfg.scan.grid)?;
    let max_ratio = ratios.max_value();
    evidence.push(cfg.policy.assess("av_w", ratios, 1.0));
    let constants = BTreeMap::from([("max_dd_spread".to_string(), dd_spread), ("max_ratio".to_string(), max_ratio)]);
    Ok(Verdict::from_evidence(evidence, cfg.policy, constants))
}

/// Audit figures of a synthesized curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthesisReport {
    /// `max |h' - 2(f'g - fg')|` on the audit grid.
    pub defect: f64,
    pub defect_tol: f64,
    /// Largest relative mismatch with the samples at the nodes.
    pub node_error: f64,
    /// Largest relative derivative jump across breakpoints, orders `0..=m`.
    pub max_jump: f64,
    /// Largest relative mismatch between the curve's height jets and the
    /// completed height field at the nodes.
    pub leibniz_error: f64,
    pub max_lambda: f64,
    /// Oscillation of the `m`-th derivatives of `(f, g)` over windows of
    /// length `delta` on the audit grid.
    pub modulus: Profile,
    /// Remainder diagnostics of the completed height field.
    pub height_field: ValidationReport,
}

/// A horizontal piecewise-polynomial curve through the samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HorizontalCurve {
    pub f: PiecewiseCm,
    pub g: PiecewiseCm,
    pub h: PiecewiseCm,
    pub order: usize,
    pub report: SynthesisReport,
}

impl HorizontalCurve {
    pub fn eval(&self, t: f64) -> HPoint {
        HPoint::new(self.f.eval(t), self.g.eval(t), self.h.eval(t))
    }

    pub fn defect_at(&self, t: f64) -> f64 {
        let (fv, fd) = (self.f.eval(t), self.f.derivative(t, 1));
        let (gv, gd) = (self.g.eval(t), self.g.derivative(t, 1));
        (self.h.derivative(t, 1) - 2.0 * (fd * gv - fv * gd)).abs()
    }
}

/// Knobs of [`synthesize_with`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthesisOptions {
    pub audit_points: usize,
    /// Allowed defect relative to the size of the bracket terms (at least 1).
    pub defect_tol: f64,
}

impl Default for SynthesisOptions {
    fn default() -> Self {
        Self { audit_points: 10_000, defect_tol: 1e-9 }
    }
}

pub fn synthesize(samples: &SampledCurve, m: usize) -> Result<HorizontalCurve> {
    synthesize_with(samples, m, &SynthesisOptions::default())
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    (0..n).map(|i| if i + 1 == n { hi } else { lo + (hi - lo) * i as f64 / (n - 1) as f64 }).collect()
}

/// Horizontal `C^m` curve through the samples: Whitney blends of sample jets
/// for `(f, g)`, corrected gap by gap so that the horizontal lift of `(f, g)`
/// hits every sampled height.
pub fn synthesize_with(samples: &SampledCurve, m: usize, opts: &SynthesisOptions) -> Result<HorizontalCurve> {
    if m == 0 {
        return Err(Error::InvalidParameter("order must be at least 1".into()));
    }
    if opts.audit_points < 2 {
        return Err(Error::InvalidParameter("audit grid needs at least 2 points".into()));
    }
    let nodes = samples.nodes();
    let n = nodes.len();
    let fx = jets_from_samples(nodes, &samples.component(Component::X), m)?;
    let gy = jets_from_samples(nodes, &samples.component(Component::Y), m)?;
    let hz = samples.component(Component::Z);
    let (h_field, height_report) = horizontal_jet_completion(&extend(&fx)?, &extend(&gy)?, nodes, &hz, m)?;

    let gaps: Vec<GapPieces> = (0..n - 1)
        .into_par_iter()
        .map(|i| {
            gap_horizontalize(fx.jet(i), fx.jet(i + 1), gy.jet(i), gy.jet(i + 1), hz[i], hz[i + 1], nodes[i], nodes[i + 1], m)
        })
        .collect::<Result<_>>()?;

    let end_piece = |i: usize| {
        let f = Poly::taylor(fx.jet(i));
        let g = Poly::taylor(gy.jet(i));
        let h = &bracket(&f, &g).antiderivative() + &Poly::constant(hz[i]);
        (f, g, h)
    };
    let mut breakpoints = Vec::with_capacity(3 * n);
    let mut origins = vec![nodes[0]];
    let (mut fp, mut gp, mut hp) = (Vec::new(), Vec::new(), Vec::new());
    let (f0, g0, h0) = end_piece(0);
    fp.push(f0);
    gp.push(g0);
    hp.push(h0);
    for gap in &gaps {
        breakpoints.extend_from_slice(&gap.starts);
        origins.extend_from_slice(&gap.origins);
        fp.extend(gap.f.iter().cloned());
        gp.extend(gap.g.iter().cloned());
        hp.extend(gap.h.iter().cloned());
    }
    breakpoints.push(nodes[n - 1]);
    origins.push(nodes[n - 1]);
    let (fl, gl, hl) = end_piece(n - 1);
    fp.push(fl);
    gp.push(gl);
    hp.push(hl);
    let f = PiecewiseCm::with_origins(breakpoints.clone(), fp, origins.clone(), m)?;
    let g = PiecewiseCm::with_origins(breakpoints.clone(), gp, origins.clone(), m)?;
    let h = PiecewiseCm::with_origins(breakpoints, hp, origins, m)?;

    let grid = linspace(nodes[0], nodes[n - 1], opts.audit_points);
    let defect = horizontality_defect(&f, &g, &h, &grid)?;
    // Largest bracket term, or the cancellation floor of evaluating h' when
    // steep jets make the piece coefficients much larger than the values.
    let term_size = grid.iter().fold(0.0_f64, |acc, &t| {
        let terms = 2.0 * (f.derivative(t, 1) * g.eval(t)).abs() + 2.0 * (f.eval(t) * g.derivative(t, 1)).abs();
        let floor = 2.0 * (f.magnitude(t, 1) * g.magnitude(t, 0) + f.magnitude(t, 0) * g.magnitude(t, 1));
        acc.max(terms).max(h.magnitude(t, 1)).max(floor * 1e-3)
    });
    let defect_tol = opts.defect_tol * term_size.max(1.0);
    if !(defect <= defect_tol) {
        return Err(Error::SynthesisDefect { defect, tol: defect_tol });
    }

    let node_error = nodes.iter().zip(samples.values()).fold(0.0_f64, |acc, (&t, p)| {
        let q = HPoint::new(f.eval(t), g.eval(t), h.eval(t));
        let scale = 1.0 + p.x.abs().max(p.y.abs()).max(p.z.abs());
        acc.max(p.euclidean_dist(&q) / scale)
    });
    let max_jump = [&f, &g, &h].iter().fold(0.0_f64, |acc, p| acc.max(p.max_breakpoint_jump(m)));
    let leibniz_error = nodes.iter().enumerate().fold(0.0_f64, |acc, (i, &t)| {
        let jet = h.jet_at(t, m);
        let want = h_field.jet(i);
        jet.iter().zip(want).fold(acc, |a, (x, y)| a.max((x - y).abs() / (1.0 + y.abs())))
    });
    let max_lambda = gaps.iter().fold(0.0_f64, |acc, gp| acc.max(gp.lambda));
    let modulus = derivative_modulus(&f, &g, m, &grid, samples)?;

    let report = SynthesisReport {
        defect,
        defect_tol,
        node_error,
        max_jump,
        leibniz_error,
        max_lambda,
        modulus,
        height_field: height_report,
    };
    Ok(HorizontalCurve { f, g, h, order: m, report })
}

fn derivative_modulus(f: &PiecewiseCm, g: &PiecewiseCm, m: usize, grid: &[f64], samples: &SampledCurve) -> Result<Profile> {
    let deltas = crate::profile::GridSpec::default().deltas(samples.nodes())?;
    let fd: Vec<f64> = grid.iter().map(|&t| f.derivative(t, m)).collect();
    let gd: Vec<f64> = grid.iter().map(|&t| g.derivative(t, m)).collect();
    let points = deltas
        .iter()
        .map(|&d| ProfilePoint { delta: d, value: window_oscillation(grid, &fd, d).max(window_oscillation(grid, &gd, d)) })
        .collect();
    Ok(Profile { points })
}

/// `max (max - min)` of `vals` over windows `[t, t + delta]` of the sorted `ts`.
fn window_oscillation(ts: &[f64], vals: &[f64], delta: f64) -> f64 {
    use std::collections::VecDeque;
    let (mut maxq, mut minq) = (VecDeque::new(), VecDeque::new());
    let mut lo = 0;
    let mut worst = 0.0_f64;
    for hi in 0..ts.len() {
        while maxq.back().is_some_and(|&k: &usize| vals[k] <= vals[hi]) {
            maxq.pop_back();
        }
        maxq.push_back(hi);
        while minq.back().is_some_and(|&k: &usize| vals[k] >= vals[hi]) {
            minq.pop_back();
        }
        minq.push_back(hi);
        while ts[hi] - ts[lo] > delta {
            lo += 1;
        }
        while maxq.front().is_some_and(|&k| k < lo) {
            maxq.pop_front();
        }
        while minq.front().is_some_and(|&k| k < lo) {
            minq.pop_front();
        }
        worst = worst.max(vals[maxq[0]] - vals[minq[0]]);
    }
    worst
}

/// Result of [`finiteness_check`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FinitenessReport {
    /// `max |A(Gamma_X; a, b)| / (V(Gamma_X; a, b) omega(b - a))`.
    pub m_hat: f64,
    /// `max ||Gamma_X||_{C^{m,omega}}` (seminorm of the `m`-th derivative).
    pub c2_hat: f64,
    /// Subset attaining `m_hat`.
    pub worst_subset: Vec<usize>,
    pub subsets_scanned: usize,
}

/// Scans `(m+2)`-subsets `X`, interpolating each by a degree `m+1` curve
/// `Gamma_X`. Without an explicit enumeration, every subset is visited on at
/// most 20 nodes and windows of `2m + 4` nodes are used otherwise.
pub fn finiteness_check(
    samples: &SampledCurve,
    m: usize,
    omega: &ModulusFn,
    enumeration: Option<Enumeration>,
) -> Result<FinitenessReport> {
    let n = samples.len();
    if n < m + 2 {
        return Err(Error::TooFewNodes { needed: m + 2, got: n });
    }
    let enumeration = enumeration.unwrap_or(if n <= 20 { Enumeration::Full } else { Enumeration::default_for(m) });
    if let Enumeration::Windowed(w) = enumeration {
        if w < m + 2 {
            return Err(Error::InvalidParameter(format!("window {w} is narrower than m + 2 = {}", m + 2)));
        }
    }
    let nodes = samples.nodes();
    let comps: Vec<Vec<f64>> = Component::ALL.iter().map(|&c| samples.component(c)).collect();
    let all = subsets(n, m + 2, enumeration);
    let mfact: f64 = (1..=m + 1).map(|k| k as f64).product();
    let per: Vec<Result<(f64, f64)>> = all
        .par_iter()
        .map(|idx| {
            let xs: Vec<f64> = idx.iter().map(|&i| nodes[i]).collect();
            let origin = xs[0];
            let diam = xs[xs.len() - 1] - origin;
            let polys = comps
                .iter()
                .map(|comp| {
                    let ys: Vec<f64> = idx.iter().map(|&i| comp[i]).collect();
                    newton_interp_at(&xs, &ys, origin)
                })
                .collect::<Result<Vec<_>>>()?;
            let rate = omega.max_rate(diam);
            let seminorm = polys.iter().fold(0.0_f64, |acc, p| acc.max((mfact * p.coeff(m + 1)).abs() * rate));
            let read = |p: &Poly| xs.iter().map(|&t| p.jet_at(t - origin, m)).collect::<Vec<_>>();
            let jets = CurveJets::new(xs.clone(), read(&polys[0]), read(&polys[1]), read(&polys[2]))?;
            let mut ratio = 0.0_f64;
            for a in 0..xs.len() {
                for b in (a + 1)..xs.len() {
                    let pair = av_pair_idx(&jets, a, b, m)?;
                    ratio = ratio.max(pair.ratio.abs() / omega.eval(xs[b] - xs[a]));
                }
            }
            Ok((ratio, seminorm))
        })
        .collect();
    let mut report = FinitenessReport { m_hat: 0.0, c2_hat: 0.0, worst_subset: all[0].clone(), subsets_scanned: all.len() };
    for (idx, r) in all.iter().zip(per) {
        let (ratio, seminorm) = r?;
        if ratio > report.m_hat {
            report.m_hat = ratio;
            report.worst_subset = idx.clone();
        }
        report.c2_hat = report.c2_hat.max(seminorm);
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn uniform(n: usize) -> Vec<f64> {
        (0..n).map(|i| i as f64 / (n - 1) as f64).collect()
    }

    fn zeros(m: usize) -> Vec<f64> {
        vec![0.0; m + 1]
    }

    #[test]
    fn zero_gap_stays_zero() {
        let z = zeros(2);
        let gp = gap_horizontalize(&z, &z, &z, &z, 0.0, 0.0, 0.0, 1.0, 2).unwrap();
        assert_eq!(gp.lambda, 0.0);
        for p in gp.f.iter().chain(&gp.g).chain(&gp.h) {
            assert!(p.is_zero());
        }
        assert!(matches!(gap_horizontalize(&z, &z, &z, &z, 0.0, 0.0, 1.0, 1.0, 2), Err(Error::DegenerateGap { .. })));
    }

    #[test]
    fn bump_constant_matches_closed_form() {
        // 2 int (w' w (2s-1) - w (w (2s-1))') = -4 int w^2; for m = 1, int (s(1-s))^4 = 1/630.
        let (w, odd) = bump_pair(1);
        let c = bracket(&w, &odd).integrate_between(-0.5, 0.5);
        assert_abs_diff_eq!(c, -4.0 / 630.0, epsilon = 1e-15);
    }

    #[test]
    fn height_mismatch_is_closed_exactly() {
        for m in 1..=3 {
            let z = zeros(m);
            for c in [1.0, 1e-3, -0.5] {
                let gp = gap_horizontalize(&z, &z, &z, &z, 0.0, c, 0.0, 1.0, m).unwrap();
                let end = gp.h[2].eval(1.0 - gp.origins[2]);
                assert_abs_diff_eq!(end, c, epsilon = 1e-12);
                let (w, odd) = bump_pair(m);
                let c0 = bracket(&w, &odd).integrate_between(-0.5, 0.5).abs();
                assert_abs_diff_eq!(gp.lambda, (c.abs() / c0).sqrt(), epsilon = 1e-9 * gp.lambda);
            }
        }
    }

    #[test]
    fn consistent_jets_need_no_bump() {
        // A horizontal polynomial curve; its own jets leave no deficit.
        let m = 2;
        let f = Poly::new(vec![0.2, 1.0, -0.5]);
        let g = Poly::new(vec![-0.1, 0.3, 0.4]);
        let h = &bracket(&f, &g).antiderivative() + &Poly::constant(0.7);
        let (a, b) = (0.25, 0.6);
        let gp = gap_horizontalize(&f.jet_at(a, m), &f.jet_at(b, m), &g.jet_at(a, m), &g.jet_at(b, m), h.eval(a), h.eval(b), a, b, m)
            .unwrap();
        assert!(gp.deficit.abs() < 1e-14);
        assert!(gp.lambda < 1e-6);
        for i in 0..3 {
            for k in 0..=20 {
                let end = if i < 2 { gp.starts[i + 1] } else { b };
                let t = gp.starts[i] + (end - gp.starts[i]) * k as f64 / 20.0;
                let v = t - gp.origins[i];
                assert_abs_diff_eq!(gp.f[i].eval(v), f.eval(t), epsilon = 1e-10);
                assert_abs_diff_eq!(gp.g[i].eval(v), g.eval(t), epsilon = 1e-10);
                assert_abs_diff_eq!(gp.h[i].eval(v), h.eval(t), epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn jet_completion_examples() {
        let nodes = uniform(5);
        let f = PiecewiseCm::global(Poly::x(), 2);
        let g = PiecewiseCm::global(Poly::zero(), 2);
        let (field, _) = horizontal_jet_completion(&f, &g, &nodes, &[1.0; 5], 2).unwrap();
        for i in 0..5 {
            assert_eq!(field.jet(i), &[1.0, 0.0, 0.0]);
        }
        assert!(matches!(horizontal_jet_completion(&f, &g, &nodes, &[1.0; 5], 3), Err(Error::OrderMismatch { .. })));
    }

    #[test]
    fn jet_completion_on_circle_approximates_slope() {
        // eta = 2(f'g - fg') = -2 for (cos, sin); with jets from samples the
        // error shrinks with the gap.
        let mut errs = Vec::new();
        for n in [9, 17, 33] {
            let nodes = uniform(n);
            let s = SampledCurve::from_fn(nodes.clone(), |t| HPoint::new(t.cos(), t.sin(), -2.0 * t)).unwrap();
            let [f, g, _] = extension_of_samples(&s, 2).unwrap();
            let (field, _) = horizontal_jet_completion(&f, &g, &nodes, &s.component(Component::Z), 2).unwrap();
            errs.push((0..n).fold(0.0_f64, |acc, i| acc.max((field.jet(i)[1] + 2.0).abs())));
        }
        assert!(errs[0] < 5e-2 && errs[1] < errs[0] / 2.0 && errs[2] < errs[1] / 2.0, "{errs:?}");
    }

    #[test]
    fn checks_on_controls() {
        let nodes = uniform(33);
        let circle = SampledCurve::from_fn(nodes.clone(), |t| HPoint::new(t.cos(), t.sin(), -2.0 * t)).unwrap();
        let vertical = SampledCurve::from_fn(nodes, |t| HPoint::new(t, 0.0, t)).unwrap();
        assert_eq!(check_c1(&circle, &CheckConfig::for_order(1)).unwrap().status, Status::Consistent);
        assert_eq!(check_c1(&vertical, &CheckConfig::for_order(1)).unwrap().status, Status::Inconsistent);
        for m in 1..=2 {
            let cfg = CheckConfig::for_order(m);
            assert_eq!(check_cm(&circle, m, &cfg).unwrap().status, Status::Consistent, "cm m={m}");
            assert_eq!(check_cm(&vertical, m, &cfg).unwrap().status, Status::Inconsistent, "cm m={m}");
            assert_eq!(check_cm_via_w(&circle, m, &cfg).unwrap().status, Status::Consistent, "w m={m}");
            assert_eq!(check_cm_via_w(&vertical, m, &cfg).unwrap().status, Status::Inconsistent, "w m={m}");
        }
    }

    #[test]
    fn too_few_nodes() {
        let s = SampledCurve::from_fn(vec![0.0, 1.0], |t| HPoint::new(t, 0.0, 0.0)).unwrap();
        assert!(matches!(check_cm(&s, 1, &CheckConfig::for_order(1)), Err(Error::TooFewNodes { .. })));
        assert!(matches!(check_cm_via_w(&s, 1, &CheckConfig::for_order(1)), Err(Error::TooFewNodes { .. })));
        assert!(matches!(finiteness_check(&s, 1, &ModulusFn::lipschitz(), None), Err(Error::TooFewNodes { .. })));
    }

    #[test]
    fn synthesis_of_two_node_mismatch() {
        let s = SampledCurve::new(vec![0.0, 1.0], vec![HPoint::ORIGIN, HPoint::new(0.0, 0.0, 1.0)]).unwrap();
        let c = synthesize(&s, 1).unwrap();
        assert!(c.report.defect <= 1e-9);
        assert!(c.report.node_error <= 1e-10);
        assert!(c.report.max_jump <= 1e-9);
        assert!(c.report.max_lambda > 0.0);
    }

    #[test]
    fn window_oscillation_brute_force() {
        let ts: Vec<f64> = (0..50).map(|i| (i as f64 * 0.37).sin() + i as f64).collect();
        let vals: Vec<f64> = (0..50).map(|i| ((i * 7919) % 23) as f64).collect();
        for d in [0.5, 2.0, 7.5, 100.0] {
            let mut want = 0.0_f64;
            for i in 0..50 {
                for j in i..50 {
                    if ts[j] - ts[i] <= d {
                        want = want.max((vals[i] - vals[j]).abs());
                    }
                }
            }
            assert_eq!(window_oscillation(&ts, &vals, d), want);
        }
    }
}
