//! Invariants of the pipelines under random inputs.

use heiswhit_core::av::{av_profile, discrete_av_profile, CurveJets};
use heiswhit_core::divdiff::{dd_profile, SampledCurve};
use heiswhit_core::horizontal::{check_c1, check_cm, synthesize, CheckConfig};
use heiswhit_core::{Enumeration, GridSpec, HPoint, Poly, Profile, ScanOptions};
use proptest::prelude::*;

fn point() -> impl Strategy<Value = HPoint> {
    (-2.0..2.0_f64, -2.0..2.0_f64, -2.0..2.0_f64).prop_map(|(x, y, z)| HPoint::new(x, y, z))
}

fn curve(n: usize) -> impl Strategy<Value = SampledCurve> {
    prop::collection::vec((0.05..1.0_f64, point()), n).prop_map(|steps| {
        let mut t = 0.0;
        let samples = steps
            .into_iter()
            .map(|(dt, p)| {
                t += dt;
                (t, p)
            })
            .collect();
        SampledCurve::from_unsorted(samples).unwrap()
    })
}

fn assert_dominated(sub: &Profile, sup: &Profile) -> Result<(), TestCaseError> {
    for p in &sub.points {
        if let Some(v) = sup.value_at(p.delta) {
            prop_assert!(p.value <= v + 1e-12 * (1.0 + v.abs()), "at {}: {} > {}", p.delta, p.value, v);
        }
    }
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn verdicts_are_left_invariant(s in curve(9), p in point(), m in 1usize..3) {
        let moved = s.left_translate(&p);
        let cfg = CheckConfig::for_order(m);
        let (a, b) = (check_cm(&s, m, &cfg).unwrap(), check_cm(&moved, m, &cfg).unwrap());
        prop_assert_eq!(a.status, b.status);
        let (ea, eb) = (a.evidence("discrete_av").unwrap(), b.evidence("discrete_av").unwrap());
        for (x, y) in ea.profile.points.iter().zip(&eb.profile.points) {
            prop_assert!((x.value - y.value).abs() <= 1e-10 * (1.0 + x.value.abs()));
        }
        let (c, d) = (check_c1(&s, &cfg).unwrap(), check_c1(&moved, &cfg).unwrap());
        prop_assert_eq!(c.status, d.status);
    }

    #[test]
    fn removing_nodes_never_increases_evidence(s in curve(8), drop in 0usize..8, m in 1usize..3) {
        let keep: Vec<usize> = (0..s.len()).filter(|&i| i != drop).collect();
        let sub = s.restrict(&keep).unwrap();
        let grid = GridSpec::Explicit(vec![8.0, 4.0, 2.0, 1.0, 0.5, 0.25]);
        let opts = ScanOptions { enumeration: Enumeration::Full, grid: grid.clone() };
        let (full, part) = (dd_profile(&s, m, &opts).unwrap(), dd_profile(&sub, m, &opts).unwrap());
        for c in 0..3 {
            assert_dominated(&part[c], &full[c])?;
        }
        assert_dominated(&discrete_av_profile(&sub, m, &opts).unwrap(), &discrete_av_profile(&s, m, &opts).unwrap())?;

        let f = Poly::new(vec![0.1, 1.0, -0.4, 0.2]);
        let g = Poly::new(vec![0.3, -0.2, 0.5]);
        let jets = CurveJets::from_polys(s.nodes().to_vec(), &f, &g, &Poly::x(), m).unwrap();
        let sub_jets = CurveJets::from_polys(sub.nodes().to_vec(), &f, &g, &Poly::x(), m).unwrap();
        assert_dominated(&av_profile(&sub_jets, m, &grid).unwrap(), &av_profile(&jets, m, &grid).unwrap())?;
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn synthesis_is_horizontal_and_interpolating(s in curve(6), m in 1usize..4) {
        let c = synthesize(&s, m).unwrap();
        prop_assert!(c.report.defect <= c.report.defect_tol);
        prop_assert!(c.report.node_error <= 1e-10);
        prop_assert!(c.report.leibniz_error <= 1e-9);
        for (t, p) in s.nodes().iter().zip(s.values()) {
            let q = c.eval(*t);
            prop_assert_eq!((q.x, q.y, q.z), (p.x, p.y, p.z));
        }
    }
}
