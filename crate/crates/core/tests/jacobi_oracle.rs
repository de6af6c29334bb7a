//! Jacobi fields against the linearized geodesic flow, which needs neither
//! connection nor curvature.

use finsler_core::connection::CurvatureRoute;
use finsler_core::fermat::jacobi::{auto_route, jacobi_integrate_matrix};
use finsler_core::geodesic::{self, geodesic_rhs, GeodesicIvp};
use finsler_core::models;
use finsler_core::ode::{self, OdeOptions};
use finsler_core::{Lagrangian, PointedVector, Tolerances};
use nalgebra::DMatrix;
use std::collections::BTreeMap;

fn linearized_flow(model: &dyn Lagrangian, x0: &[f64], v0: &[f64], dv0: &[f64], s1: f64) -> Vec<f64> {
    let n = x0.len();
    let tol = Tolerances::default();
    let rhs = |_s: f64, st: &[f64], d: &mut [f64]| {
        let (x, v, dx, dv) = (&st[..n], &st[n..2 * n], &st[2 * n..3 * n], &st[3 * n..]);
        let acc = |x: &[f64], v: &[f64]| geodesic_rhs(model, &PointedVector::new(x.to_vec(), v.to_vec()), &tol);
        let a = acc(x, v)?;
        let h = 1e-5;
        let shift = |base: &[f64], dir: &[f64], e: f64| -> Vec<f64> { base.iter().zip(dir).map(|(b, d)| b + e * d).collect() };
        let ax = (acc(&shift(x, dx, h), v)? - acc(&shift(x, dx, -h), v)?) / (2.0 * h);
        let av = (acc(x, &shift(v, dv, h))? - acc(x, &shift(v, dv, -h))?) / (2.0 * h);
        d[..n].copy_from_slice(v);
        d[n..2 * n].copy_from_slice(a.as_slice());
        d[2 * n..3 * n].copy_from_slice(dv);
        for i in 0..n {
            d[3 * n + i] = ax[i] + av[i];
        }
        Ok(())
    };
    let mut st = x0.to_vec();
    st.extend_from_slice(v0);
    st.extend(vec![0.0; n]);
    st.extend_from_slice(dv0);
    let sol = ode::integrate(rhs, 0.0, &st, s1, &OdeOptions::with_tol(1e-11, 1e-13), None::<fn(f64, &[f64]) -> f64>).unwrap();
    sol.at(s1)[2 * n..3 * n].to_vec()
}

fn compare(name: &str, params: &[(&str, f64)], x0: &[f64], v0: &[f64]) -> (f64, f64, f64) {
    let p: BTreeMap<String, f64> = params.iter().map(|(k, v)| (k.to_string(), *v)).collect();
    let model = models::model_from_name(name, &p).unwrap();
    let tol = Tolerances::default();
    let path = geodesic::integrate(&model, &GeodesicIvp::new(x0.to_vec(), v0.to_vec()), &tol).unwrap();
    let n = x0.len();
    let w0: Vec<f64> = (0..n).map(|i| if i == 2 { 0.3 } else { 0.1 * i as f64 }).collect();
    let oracle = linearized_flow(model.as_ref(), x0, v0, &w0, 1.0);
    let scale = oracle.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut errs = Vec::new();
    for route in [CurvatureRoute::Formal, CurvatureRoute::Horizontal] {
        let f = jacobi_integrate_matrix(
            model.as_ref(),
            &path,
            &DMatrix::zeros(n, 1),
            &DMatrix::from_column_slice(n, 1, &w0),
            (0.0, 1.0),
            route,
            &tol,
        )
        .unwrap();
        let y = f.column(1.0, 0);
        errs.push(y.iter().zip(&oracle).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max) / scale);
    }
    (errs[0], errs[1], scale)
}

#[test]
fn schwarzschild_jacobi_matches_linearized_flow() {
    let (formal, hh, _) = compare("schwarzschild", &[("m", 1.0)], &[0.0, 6.0, 1.2, 0.5], &[1.0, 0.2, -0.1, 0.05]);
    assert!(formal < 1e-6, "formal {formal:e}");
    assert!(hh < 1e-6, "hh {hh:e}");
}

#[test]
fn rutz_jacobi_needs_the_chern_curvature() {
    let x0 = [0.0, 6.0, 1.2, 0.5];
    let v0 = [1.0, 0.2, -0.1, 0.05];
    let (formal, hh, scale) = compare("rutz", &[("m", 1.0), ("delta", 0.05)], &x0, &v0);
    eprintln!("rutz: formal {formal:e}, hh {hh:e}, scale {scale:e}");
    let model = models::model_from_name("rutz", &[("delta".to_string(), 0.05)].into_iter().collect()).unwrap();
    let route = auto_route(model.as_ref(), &PointedVector::new(x0.to_vec(), v0.to_vec()), &Tolerances::default()).unwrap();
    assert_eq!(route, CurvatureRoute::Horizontal);
    assert!(hh < 1e-6, "hh {hh:e}");
    // The y-frozen Riemann tensor of the formal symbols is not the Jacobi
    // operator of a genuinely Finslerian model.
    assert!(formal > 1e-7, "formal {formal:e}");
}
