//! End-to-end Fermat scenarios on closed-form and oracle-backed cases.

use std::f64::consts::PI;

use finsler_core::causal::TimeOrientation;
use finsler_core::connection::CurvatureRoute;
use finsler_core::curve::FnCurve;
use finsler_core::fermat::jacobi::{find_conjugate_points, Character};
use finsler_core::fermat::observer::Observer;
use finsler_core::fermat::shooting::shoot;
use finsler_core::fermat::variation::{
    first_variation_tau, random_generators, second_variation_check, AllowedFamily, SpatialModes,
};
use finsler_core::models;
use finsler_core::Tolerances;

#[test]
fn minkowski_null_first_and_second_variation() {
    let m = models::minkowski(4).unwrap();
    let tol = Tolerances::default();
    let t = TimeOrientation::for_model(&m).unwrap();
    let obs = Observer::fixed(vec![1.0, 0.0, 0.0]);
    let shot = shoot(&m, &[0.0; 4], &obs, 0.0, &t, None, &tol).unwrap();
    let fam = AllowedFamily::new(m.as_ref(), &shot.path, &obs, 0.0, &t, shot.tau, &tol).unwrap();
    let fv = first_variation_tau(&fam, &random_generators(4, 10, 3, 7)).unwrap();
    eprintln!("null fv {:e} gap {:e}", fv.residual, fv.max_prediction_gap);
    assert!(fv.residual < 1e-7);
    let a = SpatialModes::single(4, 1, 2, 1.0);
    let sv = second_variation_check(&fam, &a, CurvatureRoute::Formal).unwrap();
    eprintln!("null sv {sv:?}");
    assert!((sv.prediction - PI * PI / 2.0).abs() < 1e-8);
    assert!(sv.gap < 1e-3);
}

#[test]
fn schwarzschild_null_bending_case() {
    let m = models::schwarzschild(1.0).unwrap();
    let tol = Tolerances::default();
    let t = TimeOrientation::for_model(&m).unwrap();
    let obs = Observer::fixed(vec![10.0, PI / 2.0, PI / 2.0]);
    let q = [0.0, 10.0, PI / 2.0, 0.0];
    let shot = shoot(&m, &q, &obs, 0.0, &t, None, &tol).unwrap();
    eprintln!("schw tau {} stats {:?} y0 {:?}", shot.tau, shot.stats, shot.y0);
    let fam = AllowedFamily::new(m.as_ref(), &shot.path, &obs, 0.0, &t, shot.tau, &tol).unwrap();
    let fv = first_variation_tau(&fam, &random_generators(4, 10, 3, 11)).unwrap();
    eprintln!("schw fv {:e} gap {:e} steps {:?}", fv.residual, fv.max_prediction_gap, fv.steps);
    assert!(fv.residual < 1e-6);
}

#[test]
fn bent_curve_has_nonzero_first_variation() {
    let m = models::minkowski(4).unwrap();
    let tol = Tolerances::default();
    let t = TimeOrientation::for_model(&m).unwrap();
    let k = 20.0;
    let sm = move |s: f64| -((-k * s).exp() + (-k * (1.0 - s)).exp()).ln() / k;
    let (s0, s1) = (sm(0.0), sm(1.0));
    let bump = move |s: f64| 0.6 * (sm(s) - (1.0 - s) * s0 - s * s1);
    let base = FnCurve::new((0.0, 1.0), move |s| {
        let y = bump(s);
        vec![(2.0f64).sqrt() * s, s, y, 0.0]
    });
    let obs = Observer::fixed(vec![1.0, 0.0, 0.0]);
    let fam = AllowedFamily::new(m.as_ref(), &base, &obs, 1.0, &t, 1.5, &tol).unwrap();
    let fv = first_variation_tau(&fam, &random_generators(4, 10, 3, 3)).unwrap();
    eprintln!("bent fv {:e} gap {:e} d {:?} p {:?}", fv.residual, fv.max_prediction_gap, fv.derivatives, fv.predictions);
    assert!(fv.residual > 1e-3);
}

#[test]
fn sphere_short_arc_second_variation_and_character() {
    let m = models::product_sphere();
    let tol = Tolerances::default();
    let t = TimeOrientation::for_model(&m).unwrap();
    for (arc, want) in [(0.5 * PI, Character::LocalMin), (1.5 * PI, Character::Saddle)] {
        let obs = Observer::fixed(vec![PI / 2.0, arc]);
        let guess = [(1.0 + arc * arc).sqrt(), 0.0, arc];
        let shot = shoot(&m, &[0.0, PI / 2.0, 0.0], &obs, 1.0, &t, Some(&guess), &tol).unwrap();
        let scan = find_conjugate_points(&shot.path, &t, &tol).unwrap();
        assert_eq!(scan.character(), want);
        let fam = AllowedFamily::new(m.as_ref(), &shot.path, &obs, 1.0, &t, shot.tau, &tol).unwrap();
        for (k, i) in [(1, 1), (2, 1), (1, 2), (3, 1), (2, 2)] {
            let a = SpatialModes::single(3, k, i, 0.3);
            let sv = second_variation_check(&fam, &a, CurvatureRoute::Formal).unwrap();
            eprintln!("arc {arc:.3} k{k} i{i}: fd {:e} pred {:e} gap {:e} h {}", sv.fd_hessian, sv.prediction, sv.gap, sv.step);
            assert!(sv.gap < 1e-3);
        }
    }
}
