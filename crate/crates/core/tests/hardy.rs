use std::sync::Arc;

use grushin_core::fields::{by_name, Dilated, CATALOG};
use grushin_core::hardy::{check_all, check_many, InequalityId, Verdict};
use grushin_core::{FieldRef, Quadrature, SpaceParams};

#[test]
fn explicit_constants_hold_on_the_catalog() {
    for alpha in [1.0, 0.5] {
        let q = Quadrature::reduced(SpaceParams::new(5, 1, alpha).unwrap());
        for name in CATALOG {
            let u = by_name(name, 1.0).unwrap();
            for r in [0.5, 1.0] {
                for rep in check_all(u.as_ref(), r, &q).unwrap() {
                    if rep.id.explicit() {
                        assert_eq!(rep.verdict, Verdict::Pass, "{rep:?}");
                    } else {
                        assert_eq!(rep.verdict, Verdict::Reported);
                        assert!(rep.empirical_constant.unwrap().is_finite());
                    }
                }
            }
        }
    }
}

#[test]
fn verdicts_survive_node_doubling() {
    let q = Quadrature::reduced(SpaceParams::new(5, 1, 0.5).unwrap());
    let fine = q.refined(1).unwrap();
    for name in ["poly_mix", "gauss", "bump"] {
        let u = by_name(name, 1.0).unwrap();
        let a = check_all(u.as_ref(), 0.8, &q).unwrap();
        let b = check_all(u.as_ref(), 0.8, &fine).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.verdict, y.verdict);
            assert!((x.lhs - y.lhs).abs() <= 1e-6 * x.lhs.abs().max(1e-300));
        }
    }
}

#[test]
fn ratios_are_dilation_invariant() {
    let q = Quadrature::reduced(SpaceParams::new(5, 1, 1.0).unwrap());
    let u = by_name("gauss", 1.0).unwrap();
    let lambda = 1.7;
    let ud: FieldRef = Arc::new(Dilated::new(u.clone(), lambda).unwrap());
    let ids = [InequalityId::HardyX, InequalityId::Rellich1];
    let a = check_many(u.as_ref(), 0.9, &q, &ids).unwrap();
    let b = check_many(ud.as_ref(), 0.9 / lambda, &q, &ids).unwrap();
    for (x, y) in a.iter().zip(&b) {
        assert!((x.ratio - y.ratio).abs() < 1e-8 * x.ratio.abs(), "{x:?} {y:?}");
    }
}
