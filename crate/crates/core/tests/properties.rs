use grushin_core::fields::{by_name, sample_to_grid};
use grushin_core::frequency::{smallness_check, vanishing_order_fit};
use grushin_core::geometry::{dilate, gauge, psi};
use grushin_core::solver::LiftedField;
use grushin_core::taylor::Series2;
use grushin_core::{GridSpec, Point, SpaceParams};
use proptest::prelude::*;

fn space() -> impl Strategy<Value = SpaceParams> {
    (3usize..6, 1usize..3, prop_oneof![Just(0.5), Just(1.0), 0.1f64..1.0]).prop_map(|(m, n, a)| SpaceParams::new(m, n, a).unwrap())
}

fn point(sp: SpaceParams) -> impl Strategy<Value = Point> {
    prop::collection::vec(-2.0f64..2.0, sp.dim()).prop_map(move |z| Point::from_flat(&z, &sp))
}

proptest! {
    #[test]
    fn gauge_is_homogeneous((sp, p) in space().prop_flat_map(|sp| (Just(sp), point(sp))), lambda in 0.1f64..10.0) {
        let r = gauge(&p, &sp);
        let rl = gauge(&dilate(&p, lambda, &sp), &sp);
        prop_assert!((rl - lambda * r).abs() <= 1e-12 * (1.0 + lambda * r));
    }

    #[test]
    fn psi_lies_in_unit_interval((sp, p) in space().prop_flat_map(|sp| (Just(sp), point(sp)))) {
        prop_assume!(gauge(&p, &sp) > 1e-8);
        let v = psi(&p, &sp).unwrap();
        prop_assert!((0.0..=1.0 + 1e-12).contains(&v));
    }

    #[test]
    fn series_product_rule(a in -2.0f64..2.0, b in -2.0f64..2.0, s0 in 0.1f64..2.0, t0 in 0.1f64..2.0) {
        let s = Series2::var_s(s0, 4);
        let t = Series2::var_t(t0, 4);
        let f = (s.scale(a) + t).exp();
        let g = s * t.scale(b) + s;
        let lhs = (f * g).d_s();
        let rhs = f.d_s() * g + f * g.d_s();
        for i in 0..3 {
            for j in 0..3 - i {
                prop_assert!((lhs.coeff(i, j) - rhs.coeff(i, j)).abs() <= 1e-9 * (1.0 + lhs.coeff(i, j).abs()));
            }
        }
    }

    #[test]
    fn smallness_is_monotone_in_c0(c0 in 0.0f64..5.0, dc in 0.0f64..1.0) {
        let sp = SpaceParams::new(5, 1, 1.0).unwrap();
        let a = smallness_check(c0, &sp).unwrap();
        let b = smallness_check(c0 + dc, &sp).unwrap();
        prop_assert!(b.doubling_margin <= a.doubling_margin);
        prop_assert!(!b.positivity || a.positivity);
        prop_assert!(a.unique_continuation_margin <= a.positivity_margin);
    }

    #[test]
    fn power_laws_fit_exactly(k in 0.5f64..12.0, c in 0.1f64..10.0) {
        let radii: Vec<f64> = (0..8).map(|i| 0.05 * 1.3f64.powi(i)).collect();
        let m: Vec<f64> = radii.iter().map(|r| c * r.powf(k)).collect();
        let fit = vanishing_order_fit(&radii, &m).unwrap();
        prop_assert!((fit.order - k).abs() < 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]
    #[test]
    fn spline_lift_interpolates_nodes(ns in 4usize..20, nt in 4usize..20, alpha in prop_oneof![Just(0.5), Just(1.0)]) {
        let sp = SpaceParams::new(5, 1, alpha).unwrap();
        let g = GridSpec::new(1.0, 1.3, ns, nt).unwrap();
        let gf = sample_to_grid(by_name("gauss", 1.0).unwrap().as_ref(), g, &sp).unwrap();
        let lf = LiftedField::new("gauss", &gf).unwrap();
        for i in 0..ns {
            for j in 0..nt {
                prop_assert!((lf.value_of(g.s(i), g.t(j)).unwrap() - gf.at(i, j)).abs() < 1e-12);
            }
        }
    }
}
