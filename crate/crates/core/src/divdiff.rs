//! Divided differences, Newton interpolation, the Hermite-Genocchi simplex
//! integral and divided-difference convergence profiles.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::heis::HPoint;
use crate::poly::Poly;
use crate::profile::{cumulative_profile, subsets, DecayProfile, ScanOptions};
use crate::whitney::check_nodes;

/// Finite samples `t -> gamma(t) = (f, g, h)(t)` on strictly increasing nodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampledCurve {
    nodes: Vec<f64>,
    values: Vec<HPoint>,
}

/// Which coordinate of a sampled curve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Component {
    X,
    Y,
    Z,
}

impl Component {
    pub const ALL: [Component; 3] = [Component::X, Component::Y, Component::Z];

    pub fn of(&self, p: &HPoint) -> f64 {
        match self {
            Component::X => p.x,
            Component::Y => p.y,
            Component::Z => p.z,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Component::X => "x",
            Component::Y => "y",
            Component::Z => "z",
        }
    }
}

impl SampledCurve {
    pub fn new(nodes: Vec<f64>, values: Vec<HPoint>) -> Result<Self> {
        if values.len() != nodes.len() {
            return Err(Error::LengthMismatch { expected: nodes.len(), got: values.len() });
        }
        if nodes.len() < 2 {
            return Err(Error::TooFewNodes { needed: 2, got: nodes.len() });
        }
        check_nodes(&nodes)?;
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        Ok(Self { nodes, values })
    }

    /// Sorts the samples by `t`; exact repeats of `t` are rejected.
    pub fn from_unsorted(mut samples: Vec<(f64, HPoint)>) -> Result<Self> {
        if let Some(i) = samples.iter().position(|s| !s.0.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        samples.sort_by(|a, b| a.0.total_cmp(&b.0));
        if let Some(w) = samples.windows(2).find(|w| w[0].0 == w[1].0) {
            return Err(Error::DuplicateNodes(w[0].0));
        }
        let (nodes, values) = samples.into_iter().unzip();
        Self::new(nodes, values)
    }

    /// Samples `curve` at `nodes`.
    pub fn from_fn(nodes: Vec<f64>, curve: impl Fn(f64) -> HPoint) -> Result<Self> {
        let values = nodes.iter().map(|&t| curve(t)).collect();
        Self::new(nodes, values)
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn values(&self) -> &[HPoint] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn component(&self, c: Component) -> Vec<f64> {
        self.values.iter().map(|v| c.of(v)).collect()
    }

    pub fn diam(&self) -> f64 {
        self.nodes[self.nodes.len() - 1] - self.nodes[0]
    }

    /// `p * gamma`, pointwise.
    pub fn left_translate(&self, p: &HPoint) -> Self {
        Self { nodes: self.nodes.clone(), values: self.values.iter().map(|v| p.group_mul(v)).collect() }
    }

    /// The curve restricted to the given node indices (sorted, distinct).
    pub fn restrict(&self, idx: &[usize]) -> Result<Self> {
        Self::new(idx.iter().map(|&i| self.nodes[i]).collect(), idx.iter().map(|&i| self.values[i]).collect())
    }
}

fn sorted_pairs(nodes: &[f64], values: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    if nodes.len() != values.len() {
        return Err(Error::LengthMismatch { expected: nodes.len(), got: values.len() });
    }
    if nodes.is_empty() {
        return Err(Error::TooFewNodes { needed: 1, got: 0 });
    }
    let mut pairs: Vec<(f64, f64)> = nodes.iter().copied().zip(values.iter().copied()).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    if let Some(w) = pairs.windows(2).find(|w| w[0].0 == w[1].0) {
        return Err(Error::DuplicateNodes(w[0].0));
    }
    Ok(pairs.into_iter().unzip())
}

/// Newton coefficients `f[x_0], f[x_0, x_1], ..., f[x_0, ..., x_k]` of sorted nodes.
fn newton_coefficients(xs: &[f64], ys: &[f64]) -> Vec<f64> {
    let mut c = ys.to_vec();
    for k in 1..xs.len() {
        for i in (k..xs.len()).rev() {
            c[i] = (c[i] - c[i - 1]) / (xs[i] - xs[i - k]);
        }
    }
    c
}

/// The divided difference `f[x_0, ..., x_k]`. Nodes are sorted first and the
/// table is combined left to right.
pub fn divided_difference(values: &[f64], nodes: &[f64]) -> Result<f64> {
    let (xs, ys) = sorted_pairs(nodes, values)?;
    Ok(*newton_coefficients(&xs, &ys).last().expect("nonempty"))
}

/// Interpolating polynomial of minimal degree, in the global variable.
pub fn newton_interp(nodes: &[f64], values: &[f64]) -> Result<Poly> {
    newton_interp_at(nodes, values, 0.0)
}

/// Interpolating polynomial expressed in the local variable `u = x - origin`.
pub fn newton_interp_at(nodes: &[f64], values: &[f64], origin: f64) -> Result<Poly> {
    let (xs, ys) = sorted_pairs(nodes, values)?;
    let c = newton_coefficients(&xs, &ys);
    let mut p = Poly::constant(c[c.len() - 1]);
    for j in (0..c.len() - 1).rev() {
        let factor = Poly::new(vec![origin - xs[j], 1.0]);
        p = &(&p * &factor) + &Poly::constant(c[j]);
    }
    Ok(p)
}

/// Gauss-Kronrod 7/15 abscissae and weights on `[-1, 1]`.
const GK_NODES: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const GK_WEIGHTS: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_728_8,
];
const G_WEIGHTS: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

const MAX_BISECTIONS: usize = 48;

fn gk15(f: &mut dyn FnMut(f64) -> Result<f64>, a: f64, b: f64) -> Result<(f64, f64)> {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c)?;
    let mut kronrod = fc * GK_WEIGHTS[7];
    let mut gauss = fc * G_WEIGHTS[3];
    for j in 0..7 {
        let dx = h * GK_NODES[j];
        let s = f(c - dx)? + f(c + dx)?;
        kronrod += GK_WEIGHTS[j] * s;
        if j % 2 == 1 {
            gauss += G_WEIGHTS[j / 2] * s;
        }
    }
    Ok((kronrod * h, ((kronrod - gauss) * h).abs()))
}

fn adaptive(f: &mut dyn FnMut(f64) -> Result<f64>, a: f64, b: f64, tol: f64, depth: usize) -> Result<f64> {
    let (val, err) = gk15(f, a, b)?;
    if err <= tol || (b - a).abs() <= 1e-15 * (1.0 + a.abs()) {
        return Ok(val);
    }
    if depth >= MAX_BISECTIONS {
        return Err(Error::QuadratureBudgetExceeded);
    }
    let mid = 0.5 * (a + b);
    Ok(adaptive(f, a, mid, 0.5 * tol, depth + 1)? + adaptive(f, mid, b, 0.5 * tol, depth + 1)?)
}

fn simplex_level(fm: &dyn Fn(f64) -> f64, steps: &[f64], upper: f64, base: f64, tol: f64) -> Result<f64> {
    match steps.split_first() {
        None => Ok(fm(base)),
        Some((&step, rest)) => {
            if upper == 0.0 {
                return Ok(0.0);
            }
            let mut inner = |t: f64| simplex_level(fm, rest, t, base + t * step, tol);
            adaptive(&mut inner, 0.0, upper, tol, 0)
        }
    }
}

/// Divided difference through its simplex integral
/// `int_{1 >= t_1 >= ... >= t_m >= 0} f^(m)(x_0 + sum_i t_i (x_i - x_{i-1}))`,
/// computed by nested adaptive Gauss-Kronrod quadrature. Nodes may repeat.
pub fn hermite_genocchi(fm: &dyn Fn(f64) -> f64, nodes: &[f64], tol: f64) -> Result<f64> {
    if nodes.is_empty() {
        return Err(Error::TooFewNodes { needed: 1, got: 0 });
    }
    let steps: Vec<f64> = nodes.windows(2).map(|w| w[1] - w[0]).collect();
    simplex_level(fm, &steps, 1.0, nodes[0], tol)
}

/// Error bounds for the Newton interpolant of `f` in `C^{m,alpha}` with
/// seminorm `norm`, on an `(m+1)`-set of diameter `diam`:
/// `(|f - P| bound, |f' - P'| bound)` valid on the hull of the set.
pub fn interpolation_error_bounds(m: usize, norm: f64, alpha_at_diam: f64, diam: f64) -> (f64, f64) {
    let k = norm * (2 * m + 1) as f64 * alpha_at_diam;
    let value = k * diam.powi(m as i32);
    let slope = k * (m + 3) as f64 * diam.powi(m as i32 - 1);
    (value, slope)
}

/// `m`-th divided differences of each component on every scanned subset.
/// Returns `(subset, [f[X], g[X], h[X]])`.
pub fn divided_differences_on_subsets(
    samples: &SampledCurve,
    m: usize,
    opts: &ScanOptions,
) -> Vec<(Vec<usize>, [f64; 3])> {
    let comps: Vec<Vec<f64>> = Component::ALL.iter().map(|&c| samples.component(c)).collect();
    subsets(samples.len(), m + 1, opts.enumeration)
        .into_iter()
        .map(|idx| {
            let xs: Vec<f64> = idx.iter().map(|&i| samples.nodes[i]).collect();
            let mut dd = [0.0; 3];
            for (c, comp) in comps.iter().enumerate() {
                let ys: Vec<f64> = idx.iter().map(|&i| comp[i]).collect();
                dd[c] = *newton_coefficients(&xs, &ys).last().expect("nonempty");
            }
            (idx, dd)
        })
        .collect()
}

/// Convergence profiles `eps(delta) = max |gamma[X] - gamma[Y]|` over pairs of
/// `(m+1)`-subsets with `diam(X u Y) <= delta`, one per component.
pub fn dd_profile(samples: &SampledCurve, m: usize, opts: &ScanOptions) -> Result<[DecayProfile; 3]> {
    let n = samples.len();
    if n < m + 2 {
        return Err(Error::TooFewNodes { needed: m + 2, got: n });
    }
    let deltas = opts.grid.deltas(&samples.nodes)?;
    let span = opts.enumeration.max_span(n);
    let dds = divided_differences_on_subsets(samples, m, opts);

    // Extremes of dd over subsets with exactly this (first, last) index pair,
    // then over all subsets inside an index range, by dynamic programming.
    let width = span + 1;
    let empty = [(f64::INFINITY, f64::NEG_INFINITY); 3];
    let mut range = vec![empty; n * width];
    for (idx, dd) in &dds {
        let (i, j) = (idx[0], idx[idx.len() - 1]);
        let slot = &mut range[i * width + (j - i)];
        for c in 0..3 {
            slot[c].0 = slot[c].0.min(dd[c]);
            slot[c].1 = slot[c].1.max(dd[c]);
        }
    }
    for len in 1..=span {
        for i in 0..n.saturating_sub(len) {
            let inner_left = range[i * width + len - 1];
            let inner_right = range[(i + 1) * width + len - 1];
            let slot = &mut range[i * width + len];
            for c in 0..3 {
                slot[c].0 = slot[c].0.min(inner_left[c].0).min(inner_right[c].0);
                slot[c].1 = slot[c].1.max(inner_left[c].1).max(inner_right[c].1);
            }
        }
    }

    let mut items: [Vec<(f64, f64)>; 3] = Default::default();
    for len in (m + 1)..=span {
        for i in 0..n.saturating_sub(len) {
            let slot = range[i * width + len];
            let diam = samples.nodes[i + len] - samples.nodes[i];
            for c in 0..3 {
                if slot[c].1 >= slot[c].0 {
                    items[c].push((diam, slot[c].1 - slot[c].0));
                }
            }
        }
    }
    Ok(items.map(|it| cumulative_profile(&it, &deltas)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profile::{Enumeration, GridSpec};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn divided_difference_examples() {
        assert_abs_diff_eq!(divided_difference(&[0.0, 1.0, 4.0], &[0.0, 1.0, 2.0]).unwrap(), 1.0);
        assert_abs_diff_eq!(divided_difference(&[0.0, 1.0, 8.0, 27.0], &[0.0, 1.0, 2.0, 3.0]).unwrap(), 1.0);
        assert_eq!(divided_difference(&[2.5, 2.5, 2.5], &[0.1, 0.7, 0.3]).unwrap(), 0.0);
        assert_eq!(divided_difference(&[1.0, 2.0], &[0.5, 0.5]), Err(Error::DuplicateNodes(0.5)));
    }

    #[test]
    fn hermite_genocchi_examples() {
        for m in 0..=4 {
            let fact: f64 = (1..=m).map(|k| k as f64).product();
            let nodes: Vec<f64> = (0..=m).map(|i| 0.3 * i as f64 - 0.2).collect();
            let v = hermite_genocchi(&|_| fact, &nodes, 1e-12).unwrap();
            assert_abs_diff_eq!(v, 1.0, epsilon = 1e-12);
        }
        // Recursive table as the independent oracle.
        let nodes = [0.0, 0.1, 0.3];
        let vals: Vec<f64> = nodes.iter().map(|t: &f64| t.exp()).collect();
        let dd = divided_difference(&vals, &nodes).unwrap();
        let hg = hermite_genocchi(&|x| x.exp(), &nodes, 1e-12).unwrap();
        assert_abs_diff_eq!(hg, dd, epsilon = 1e-9);
        // Confluent limit: f^(m)(a) / m!.
        let hg = hermite_genocchi(&|x| x.exp(), &[0.4; 4], 1e-12).unwrap();
        assert_abs_diff_eq!(hg, 0.4f64.exp() / 6.0, epsilon = 1e-12);
    }

    #[test]
    fn newton_examples() {
        let p = newton_interp(&[0.0, 1.0], &[0.0, 2.0]).unwrap();
        assert_eq!(p.coeffs(), &[0.0, 2.0]);
        let p = newton_interp(&[-1.0, 0.0, 1.0], &[1.0, 0.0, 1.0]).unwrap();
        assert_abs_diff_eq!(p.coeff(0), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(p.coeff(1), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(p.coeff(2), 1.0, epsilon = 1e-15);
        assert!(newton_interp(&[1.0, 1.0], &[0.0, 1.0]).is_err());
        let q = Poly::new(vec![0.5, -2.0, 1.0, 3.0]);
        let xs = [0.9, -0.3, 0.2, 1.4];
        let ys: Vec<f64> = xs.iter().map(|&x| q.eval(x)).collect();
        let p = newton_interp(&xs, &ys).unwrap();
        for k in 0..4 {
            assert_abs_diff_eq!(p.coeff(k), q.coeff(k), epsilon = 1e-10);
        }
        let local = newton_interp_at(&xs, &ys, 0.7).unwrap();
        assert_abs_diff_eq!(local.eval(0.0), q.eval(0.7), epsilon = 1e-12);
    }

    fn uniform_curve(n: usize, f: impl Fn(f64) -> f64) -> SampledCurve {
        let nodes: Vec<f64> = (0..n).map(|i| i as f64 / (n - 1) as f64).collect();
        SampledCurve::from_fn(nodes, |t| HPoint::new(f(t), 0.0, 0.0)).unwrap()
    }

    #[test]
    fn dd_profile_of_degree_m_monomial_vanishes() {
        for m in 1..=3 {
            let s = uniform_curve(24, |t| t.powi(m as i32));
            let prof = dd_profile(&s, m, &ScanOptions::for_order(m)).unwrap();
            assert!(!prof[0].is_empty());
            assert!(prof[0].max_value() <= 1e-10, "m={m}: {:?}", prof[0]);
        }
    }

    #[test]
    fn dd_profile_of_next_monomial_is_linear() {
        // m-th dd of x^(m+1) is the node sum, so |f[X] - f[Y]| <= (m+1) diam(X u Y).
        for m in 1..=3 {
            let s = uniform_curve(20, |t| t.powi(m as i32 + 1));
            let prof = dd_profile(&s, m, &ScanOptions::full()).unwrap();
            for p in &prof[0].points {
                assert!(p.value <= (m + 1) as f64 * p.delta + 1e-9, "m={m} {:?}", p);
            }
            // Brute-force oracle over all subset pairs at the smallest scale.
            let last = prof[0].points.last().unwrap();
            let nodes = s.nodes();
            let all = subsets(nodes.len(), m + 1, Enumeration::Full);
            let mut worst = 0.0_f64;
            for x in &all {
                for y in &all {
                    let lo = nodes[x[0].min(y[0])];
                    let hi = nodes[(*x.last().unwrap()).max(*y.last().unwrap())];
                    if hi - lo <= last.delta * (1.0 + 1e-12) {
                        let sx: f64 = x.iter().map(|&i| nodes[i]).sum();
                        let sy: f64 = y.iter().map(|&i| nodes[i]).sum();
                        worst = worst.max((sx - sy).abs());
                    }
                }
            }
            assert_abs_diff_eq!(last.value, worst, epsilon = 1e-9);
        }
    }

    #[test]
    fn dd_profile_of_half_power_has_sqrt_rate() {
        // |x|^(m + 1/2) near zero: m-th derivative is Holder-1/2 there.
        let m = 1;
        let nodes: Vec<f64> = (0..256).map(|i| -1.0 + 2.0 * i as f64 / 255.0).collect();
        let s = SampledCurve::from_fn(nodes, |t| HPoint::new(t.abs().powf(m as f64 + 0.5), 0.0, 0.0)).unwrap();
        let prof = dd_profile(&s, m, &ScanOptions::full()).unwrap();
        let slope = prof[0].loglog_slope(3.0).unwrap();
        assert!((slope - 0.5).abs() <= 0.1, "slope {slope}");
    }

    #[test]
    fn dd_profile_needs_enough_nodes() {
        let s = uniform_curve(3, |t| t);
        assert!(matches!(dd_profile(&s, 2, &ScanOptions::for_order(2)), Err(Error::TooFewNodes { .. })));
    }

    #[test]
    fn windowed_profile_matches_full_on_small_sets() {
        let s = uniform_curve(10, |t| (3.0 * t).sin());
        let full = dd_profile(&s, 2, &ScanOptions::full()).unwrap();
        let wide = dd_profile(
            &s,
            2,
            &ScanOptions { enumeration: Enumeration::Windowed(10), grid: GridSpec::default() },
        )
        .unwrap();
        assert_eq!(full, wide);
    }

    #[test]
    fn sampled_curve_validation() {
        assert!(matches!(SampledCurve::new(vec![0.0], vec![HPoint::ORIGIN]), Err(Error::TooFewNodes { .. })));
        let dup = SampledCurve::from_unsorted(vec![(1.0, HPoint::ORIGIN), (1.0, HPoint::ORIGIN)]);
        assert_eq!(dup, Err(Error::DuplicateNodes(1.0)));
        let sorted = SampledCurve::from_unsorted(vec![(1.0, HPoint::new(1.0, 0.0, 0.0)), (0.0, HPoint::ORIGIN)]).unwrap();
        assert_eq!(sorted.nodes(), &[0.0, 1.0]);
        assert!(matches!(
            SampledCurve::new(vec![0.0, 1.0], vec![HPoint::ORIGIN, HPoint::new(f64::NAN, 0.0, 0.0)]),
            Err(Error::NonFinite(1))
        ));
    }

    proptest! {
        #[test]
        fn divided_difference_is_symmetric(vals in prop::collection::vec(-2.0..2.0_f64, 2..7), seed in 0u64..1000) {
            let n = vals.len();
            let nodes: Vec<f64> = (0..n).map(|i| i as f64 * 0.37 + ((i * 7 + seed as usize) % 5) as f64 * 0.01).collect();
            let base = divided_difference(&vals, &nodes).unwrap();
            let mut perm: Vec<usize> = (0..n).collect();
            perm.rotate_left((seed as usize) % n);
            perm.swap(0, n - 1);
            let pv: Vec<f64> = perm.iter().map(|&i| vals[i]).collect();
            let pn: Vec<f64> = perm.iter().map(|&i| nodes[i]).collect();
            let other = divided_difference(&pv, &pn).unwrap();
            prop_assert!((base - other).abs() <= 1e-12 * (1.0 + base.abs()));
        }

        #[test]
        fn recursion_identity_holds(vals in prop::collection::vec(-2.0..2.0_f64, 3..7)) {
            let n = vals.len();
            let nodes: Vec<f64> = (0..n).map(|i| (i as f64).powf(1.3) * 0.2).collect();
            for i in 0..n {
                for j in (i + 1)..n {
                    let whole = divided_difference(&vals[i..=j], &nodes[i..=j]).unwrap();
                    let right = divided_difference(&vals[i + 1..=j], &nodes[i + 1..=j]).unwrap();
                    let left = divided_difference(&vals[i..j], &nodes[i..j]).unwrap();
                    let rec = (right - left) / (nodes[j] - nodes[i]);
                    prop_assert!((whole - rec).abs() <= 1e-12 * (1.0 + whole.abs()));
                }
            }
        }

        #[test]
        fn newton_reproduces_inputs(vals in prop::collection::vec(-5.0..5.0_f64, 1..9), shift in -1.0..1.0_f64) {
            let nodes: Vec<f64> = (0..vals.len()).map(|i| shift + i as f64 / 8.0).collect();
            let p = newton_interp_at(&nodes, &vals, nodes[0]).unwrap();
            let scale = 1.0 + vals.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
            for (x, y) in nodes.iter().zip(&vals) {
                prop_assert!((p.eval(*x - nodes[0]) - y).abs() <= 1e-10 * scale);
            }
        }
    }
}
