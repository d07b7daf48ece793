use eink_core::chart::{DiffEngine, GridSample};
use eink_core::curvature::{curvature_at, curvature_from_jet};
use eink_core::families::{make_family, FamilyDescriptor, FamilyName};
use eink_core::invariants::{invariant_report, reference_invariants, ExtendedReal};
use eink_core::sampling::PointSampler;
use eink_core::verify::berger_table;

fn random_point(field: &eink_core::chart::MetricField, s: &mut PointSampler) -> Vec<f64> {
    field
        .chart()
        .axes()
        .iter()
        .map(|a| {
            let pad = if a.periodic { 0.0 } else { 0.05 * (a.max - a.min) };
            s.uniform(a.min + pad, a.max - pad)
        })
        .collect()
}

fn descriptors() -> Vec<FamilyDescriptor> {
    vec![
        FamilyDescriptor::new(FamilyName::Sphere).with("dim", 3.0).with("radius", 2.0),
        FamilyDescriptor::new(FamilyName::Sphere).with("dim", 5.0),
        FamilyDescriptor::new(FamilyName::Torus).with("dim", 4.0),
        FamilyDescriptor::new(FamilyName::Hyperbolic).with("dim", 4.0),
        FamilyDescriptor::new(FamilyName::Berger).with("t", 0.5),
        FamilyDescriptor::new(FamilyName::Berger).with("t", 3.0),
        FamilyDescriptor::new(FamilyName::Product).with("lambda", 0.5),
        FamilyDescriptor::new(FamilyName::Product).with("p", 3.0).with("kappa", -1.0),
        FamilyDescriptor::new(FamilyName::Product).with("q", 3.0).with("kappa", 1.0),
    ]
}

#[test]
fn chart_ricci_spectra_match_closed_forms() {
    let mut s = PointSampler::new(7);
    for d in descriptors() {
        let f = make_family(&d).unwrap();
        let field = f.field.unwrap();
        let want = f.reference.unwrap().ricci_spectrum();
        for _ in 0..10 {
            let x = random_point(&field, &mut s);
            let got = curvature_at(&field, &x).unwrap().ricci_spectrum();
            for (a, b) in got.iter().zip(&want) {
                assert!((a - b).abs() < 1e-8, "{d:?} at {x:?}: {got:?} vs {want:?}");
            }
        }
    }
}

#[test]
fn derivative_engines_agree() {
    let mut s = PointSampler::new(11);
    for d in descriptors() {
        let field = make_family(&d).unwrap().field.unwrap();
        let x = random_point(&field, &mut s);
        let a = curvature_from_jet(&field.metric_derivatives_with(&x, 2, DiffEngine::HyperDual).unwrap()).unwrap();
        let b = curvature_from_jet(&field.metric_derivatives_with(&x, 2, DiffEngine::CentralDifference).unwrap())
            .unwrap();
        let scale = 1.0 + a.riemann.max_abs();
        assert!((&a.ricci - &b.ricci).amax() < 1e-5 * scale, "{d:?}");
        assert!((a.scal - b.scal).abs() < 1e-5 * scale, "{d:?}");
    }
}

#[test]
fn berger_spot_values() {
    // unit S³ with fibres scaled by t: horizontal 4 − 2t, vertical 2t
    let cases = [(1.0, [2.0, 2.0, 2.0], 3.0), (2.0, [0.0, 0.0, 4.0], 1.0), (0.5, [3.0, 3.0, 1.0], 7.0 / 3.0)];
    for (t, spec, ein) in cases {
        let f = make_family(&FamilyDescriptor::new(FamilyName::Berger).with("t", t)).unwrap();
        let mut want = spec.to_vec();
        want.sort_by(f64::total_cmp);
        assert_eq!(f.reference.clone().unwrap().ricci_spectrum(), want);
        let field = f.field.unwrap();
        let got = curvature_at(&field, &[0.9, 1.0, 2.0]).unwrap().ricci_spectrum();
        for (a, b) in got.iter().zip(&want) {
            assert!((a - b).abs() < 1e-9);
        }
        let (upper, _) = berger_table(1, t);
        let r = reference_invariants(&f.reference.unwrap(), &[]).unwrap();
        assert!((r.ein_upper - ein).abs() < 1e-12);
        assert!((upper - ein).abs() < 1e-12);
    }
}

#[test]
fn sphere_times_flat_torus() {
    let d = FamilyDescriptor::new(FamilyName::Product).with("lambda", 0.1);
    let f = make_family(&d).unwrap();
    let reference = reference_invariants(f.reference.as_ref().unwrap(), &[]).unwrap();
    // Ric = (100, 100, 0, 0), Scal = 200: Ein = 2, ein = −∞
    assert!((reference.ein_upper - 2.0).abs() < 1e-12);
    assert_eq!(reference.ein_lower, ExtendedReal::NegInfinity);
    let field = f.field.unwrap();
    let r = invariant_report(&field, &GridSample::lattice(field.chart(), 12).unwrap(), &[]).unwrap();
    assert!((r.ein_upper - 2.0).abs() < 1e-6);
}
