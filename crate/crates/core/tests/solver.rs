use std::sync::Arc;

use grushin_core::frequency::InverseQuartic;
use grushin_core::solver::{manufactured_error, manufactured_problem, observed_orders, solve, BiradialOperator};
use grushin_core::{GridSpec, SpaceParams};

fn study(alpha: f64) -> (Vec<f64>, Vec<f64>) {
    let sp = SpaceParams::new(5, 1, alpha).unwrap();
    let v = Arc::new(InverseQuartic { c0: 1.0, eps: 0.1 });
    let mut l2 = Vec::new();
    let mut mx = Vec::new();
    for n in [65, 129, 257] {
        let g = GridSpec::new(1.0, 1.0, n, n).unwrap();
        let op = BiradialOperator::assemble(g, &sp).unwrap();
        let sol = solve(&manufactured_problem(g, v.clone()), &op).unwrap();
        assert!(sol.report.residual < 1e-10);
        let e = manufactured_error(&sol, &sp).unwrap();
        l2.push(e.l2);
        mx.push(e.max);
    }
    (observed_orders(&l2), observed_orders(&mx))
}

#[test]
fn manufactured_solution_converges_at_second_order() {
    for alpha in [0.5, 1.0] {
        let (l2, mx) = study(alpha);
        eprintln!("alpha {alpha}: l2 orders {l2:?}, max orders {mx:?}");
        assert!(l2.iter().all(|o| *o >= 1.9), "{l2:?}");
        assert!(mx.iter().all(|o| *o >= 1.7), "{mx:?}");
    }
}

#[test]
fn discrete_maximum_principle_smoke() {
    use grushin_core::fields::{by_name, zero};
    use grushin_core::frequency::ZeroPotential;
    use grushin_core::solver::BvpSpec;
    let sp = SpaceParams::new(5, 1, 0.5).unwrap();
    let g = GridSpec::new(1.0, 1.0, 65, 65).unwrap();
    let data = by_name("s2t2", 1.0).unwrap();
    let spec = BvpSpec {
        grid: g,
        u_data: data,
        w_data: zero(),
        potential: Arc::new(ZeroPotential),
        source: None,
        excision: None,
    };
    let sol = solve(&spec, &BiradialOperator::assemble(g, &sp).unwrap()).unwrap();
    // boundary data s^2 t^2 has sup norm 1 on the unit square
    let h = g.hs();
    assert!(sol.u.values.iter().all(|v| *v >= -10.0 * h * h));
}

#[test]
fn excised_singular_potential_gives_positive_h() {
    use grushin_core::fields::{by_name, LaplacianOf};
    use grushin_core::frequency::{compute_profile, log_grid, smallness_check, ProfileOptions};
    use grushin_core::solver::{BvpSpec, LiftedField};
    use grushin_core::{Method, QuadSettings, Quadrature};
    let sp = SpaceParams::new(5, 1, 1.0).unwrap();
    let c0 = 1.0;
    assert!(smallness_check(c0, &sp).unwrap().unique_continuation);
    let g = GridSpec::new(1.0, 1.0, 65, 65).unwrap();
    let data = by_name("rho4", 1.0).unwrap();
    let v = Arc::new(InverseQuartic { c0, eps: 0.0 });
    let spec = BvpSpec {
        grid: g,
        u_data: data.clone(),
        w_data: LaplacianOf::new(data),
        potential: v.clone(),
        source: None,
        excision: Some(0.05),
    };
    let sol = solve(&spec, &BiradialOperator::assemble(g, &sp).unwrap()).unwrap();
    assert!(sol.report.residual < 1e-10);
    assert!(sol.report.excised_nodes > 0);
    let u = LiftedField::new("u", &sol.u).unwrap();
    let w = LiftedField::new("w", &sol.w).unwrap();
    let q = Quadrature::new(sp, Method::Reduced2d, QuadSettings { rel_tol: 1e-6, max_level: 2, ..QuadSettings::default() }).unwrap();
    let p = compute_profile(&u, &w, v.as_ref(), &q, &log_grid(0.1, 0.5, 8).unwrap(), ProfileOptions::default()).unwrap();
    assert!(p.truncated_at.is_none());
    assert!(p.rows.iter().all(|r| r.h > 0.0));
}

#[test]
fn grid_csv_round_trip_of_a_solution() {
    use grushin_core::GridField;
    let sp = SpaceParams::new(5, 1, 1.0).unwrap();
    let g = GridSpec::new(1.0, 1.0, 17, 17).unwrap();
    let sol = solve(&manufactured_problem(g, Arc::new(InverseQuartic { c0: 1.0, eps: 0.1 })), &BiradialOperator::assemble(g, &sp).unwrap()).unwrap();
    let mut buf = Vec::new();
    sol.u.write_csv(&mut buf).unwrap();
    let back = GridField::read_csv(buf.as_slice()).unwrap();
    assert_eq!(back.values, sol.u.values);
}
