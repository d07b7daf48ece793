use nalgebra::DMatrix;
use proptest::prelude::*;

use eink_core::chart::GridSample;
use eink_core::curvature::curvature_at;
use eink_core::families::{canonical_variation, hyperbolic_field, product_field, sphere_field, torus_field, Factor};
use eink_core::integrals::{gradient_alpha, modified_inner};
use eink_core::invariants::{ein_pointwise, grid_invariants};
use eink_core::sampling::PointSampler;
use eink_core::tensors::{ein_k, pairing, PointData};

fn point(n: usize, seed: u64) -> PointData {
    PointSampler::new(seed).consistent(n)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn ein_k_is_affine_in_k(n in 2usize..=7, seed in any::<u64>(), a in -5.0f64..5.0, b in -5.0f64..5.0, s in 0.0f64..1.0) {
        let p = point(n, seed);
        let mixed = ein_k(&p, a).scaled(s).0 + ein_k(&p, b).scaled(1.0 - s).0;
        let direct = ein_k(&p, s * a + (1.0 - s) * b).0;
        let expected = &p.g * p.scal - &p.ric * (s * a + (1.0 - s) * b);
        prop_assert!((&mixed - &direct).amax() <= 1e-10 * (1.0 + direct.amax()));
        prop_assert!((&expected - &direct).amax() <= 1e-10 * (1.0 + direct.amax()));
    }

    #[test]
    fn ein_is_scale_invariant(n in 2usize..=6, seed in any::<u64>(), c in 0.2f64..5.0) {
        // g -> c²g leaves Ric unchanged and divides Scal by c²
        let p = point(n, seed);
        let q = PointData::consistent(&p.g * (c * c), p.ric.clone()).unwrap();
        prop_assert!((q.scal - p.scal / (c * c)).abs() <= 1e-9 * (1.0 + p.scal.abs()));
        prop_assert!((ein_pointwise(&p) - ein_pointwise(&q)).abs() <= 1e-8);
    }

    #[test]
    fn alpha_is_decreasing_below_one_over_n(n in 3usize..=8, k1 in 0.01f64..0.99, k2 in 0.01f64..0.99) {
        let (lo, hi) = if k1 < k2 { (k1, k2) } else { (k2, k1) };
        prop_assume!(hi - lo > 1e-6);
        let nf = n as f64;
        let (a_lo, a_hi) = (gradient_alpha(lo * nf, n), gradient_alpha(hi * nf, n));
        prop_assert!(a_hi < a_lo);
        prop_assert!(a_lo < 1.0 / nf);
        let direct = (lo * nf - 2.0) / (2.0 * (lo * nf - nf));
        prop_assert!((a_lo - direct).abs() < 1e-12);
    }

    #[test]
    fn modified_pairing_coercive(n in 2usize..=6, seed in any::<u64>(), alpha in -3.0f64..0.99) {
        // ⟨h,h⟩_α ≥ (1 − α n)⟨h,h⟩₀ whenever α n < 1; pointwise form
        let alpha = alpha / n as f64;
        let mut s = PointSampler::new(seed);
        let g = s.metric(n);
        let h = s.ricci(n);
        let ginv = g.clone().try_inverse().unwrap();
        let tr = (&ginv * &h).trace();
        let plain = pairing(&h, &h, &ginv);
        let modified = plain - alpha * tr * tr;
        prop_assert!(modified >= (1.0 - alpha * n as f64).min(1.0) * plain - 1e-9 * plain.max(1.0));
    }
}

fn fields() -> Vec<eink_core::chart::MetricField> {
    vec![
        sphere_field(3, 1.3).unwrap(),
        sphere_field(4, 1.0).unwrap(),
        torus_field(3, 0.3).unwrap(),
        hyperbolic_field(3, 0.8).unwrap(),
        canonical_variation(0.6).unwrap(),
        product_field(vec![Factor::sphere(2, 0.7).unwrap(), Factor::torus(2, 2.0 * std::f64::consts::PI, 0.2).unwrap()], "p").unwrap(),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn riemann_symmetries_and_bianchi(which in 0usize..6, u in prop::collection::vec(0.1f64..0.9, 4)) {
        let field = &fields()[which];
        let x: Vec<f64> = field
            .chart()
            .axes()
            .iter()
            .zip(&u)
            .map(|(a, t)| a.min + t * (a.max - a.min))
            .collect();
        let c = curvature_at(field, &x).unwrap();
        let r = &c.riemann;
        let n = c.dim;
        let scale = 1.0 + r.max_abs();
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        let v = r.get(i, j, k, l);
                        prop_assert!((v + r.get(j, i, k, l)).abs() < 1e-9 * scale);
                        prop_assert!((v + r.get(i, j, l, k)).abs() < 1e-9 * scale);
                        prop_assert!((v - r.get(k, l, i, j)).abs() < 1e-9 * scale);
                        let b = v + r.get(i, k, l, j) + r.get(i, l, j, k);
                        prop_assert!(b.abs() < 1e-9 * scale);
                    }
                }
            }
        }
        prop_assert!((&c.ricci - c.ricci.transpose()).amax() < 1e-9 * scale);
    }
}

#[test]
fn product_block_rule() {
    // Ric of a product is block diagonal with each factor's Ricci
    let field = product_field(vec![Factor::sphere(2, 0.5).unwrap(), Factor::sphere(3, 2.0).unwrap()], "s2xs3").unwrap();
    let c = curvature_at(&field, &[1.1, 0.4, 1.2, 2.0, 0.7]).unwrap();
    let rel = c.metric_inv.clone() * &c.ricci;
    let mut expected = DMatrix::zeros(5, 5);
    for i in 0..2 {
        expected[(i, i)] = 1.0 / 0.25;
    }
    for i in 2..5 {
        expected[(i, i)] = 2.0 / 4.0;
    }
    assert!((rel - expected).amax() < 1e-9);
    assert!((c.scal - (2.0 * 4.0 + 3.0 * 0.5)).abs() < 1e-9);
}

#[test]
fn nested_lattice_refinement_is_monotone() {
    for (field, grid) in [(torus_field(3, 0.3).unwrap(), 8), (canonical_variation(0.4).unwrap(), 8)] {
        let coarse = GridSample::lattice(field.chart(), grid).unwrap();
        let fine = coarse.refined();
        let a = grid_invariants(&field, &coarse, &[]).unwrap();
        let b = grid_invariants(&field, &fine, &[]).unwrap();
        assert!(b.ein_upper <= a.ein_upper + 1e-12);
        assert!(b.ein_lower >= a.ein_lower);
    }
}

#[test]
fn modified_inner_matches_pointwise_formula() {
    let field = torus_field(2, 0.0).unwrap();
    let grid = GridSample::quadrature(field.chart(), 6).unwrap();
    let h = |_: &[f64]| Ok(DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 0.0]));
    // |h|² = 6, tr h = 2, flat area 4π²
    let v = modified_inner(&field, &grid, 0.5, h, h).unwrap();
    let area = 4.0 * std::f64::consts::PI.powi(2);
    assert!((v - (6.0 - 0.5 * 4.0) * area).abs() < 1e-9);
}
