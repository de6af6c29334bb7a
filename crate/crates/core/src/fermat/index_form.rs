//! The index form `J_λ(A, B) = ∫ [g(B, R(A, λ̇)λ̇) − g(∇A, ∇B)] ds` and its
//! integrated-by-parts variant.

use std::cell::RefCell;

use nalgebra::DVector;

use crate::connection::{CurvatureRoute, FrameNode};
use crate::curve::{derivative, CurveLike, VectorField};
use crate::error::Result;
use crate::fermat::jacobi::covariant_derivative;
use crate::model::Lagrangian;
use crate::point::Tolerances;
use crate::quadrature;
use crate::vertical::fundamental_tensor;

const ABS: f64 = 1e-12;
const REL: f64 = 1e-10;

fn nabla(node: &FrameNode, a: &[f64], da: &[f64]) -> Vec<f64> {
    node.connection_term(a).iter().zip(da).map(|(x, y)| x + y).collect()
}

/// `J_λ(A, B)` by adaptive quadrature along `curve` (parameter in `[0, 1]`).
pub fn index_form(
    model: &dyn Lagrangian,
    curve: &dyn CurveLike,
    a: &dyn VectorField,
    b: &dyn VectorField,
    route: CurvatureRoute,
    tol: &Tolerances,
) -> Result<f64> {
    quadrature::integrate(
        |s| {
            let node = FrameNode::at(model, s, &curve.point(s), tol, route)?;
            let (av, bv) = (a.value(s), b.value(s));
            let na = nabla(&node, &av, &a.derivative(s));
            let nb = nabla(&node, &bv, &b.derivative(s));
            Ok(node.g(&bv, &node.jacobi_term(&av)) - node.g(&na, &nb))
        },
        0.0,
        1.0,
        ABS,
        REL,
    )
}

/// `−[g(∇A, B)]₀¹ + ∫ g(B, ∇∇A + R(A, λ̇)λ̇) ds`; equal to [`index_form`]
/// along geodesics.
pub fn index_form_by_parts(
    model: &dyn Lagrangian,
    curve: &dyn CurveLike,
    a: &dyn VectorField,
    b: &dyn VectorField,
    route: CurvatureRoute,
    tol: &Tolerances,
) -> Result<f64> {
    let nabla_a = |s: f64| -> Result<Vec<f64>> { covariant_derivative(model, curve, &a.value(s), &a.derivative(s), s, tol) };
    let boundary = |s: f64| -> Result<f64> {
        let g = fundamental_tensor(model, &curve.point(s), tol)?;
        Ok(g.pair(&nabla_a(s)?, &b.value(s)))
    };
    let bulk = quadrature::integrate(
        |s| {
            let node = FrameNode::at(model, s, &curve.point(s), tol, route)?;
            let na = nabla_a(s)?;
            let failure = RefCell::new(None);
            let dna = derivative(
                |r| match nabla_a(r) {
                    Ok(v) => v,
                    Err(e) => {
                        failure.borrow_mut().get_or_insert(e);
                        vec![f64::NAN; na.len()]
                    }
                },
                s,
                0.0,
                1.0,
                1e-3,
            );
            if let Some(e) = failure.into_inner() {
                return Err(e);
            }
            let nna = nabla(&node, &na, &dna);
            let ra = node.jacobi_term(&a.value(s));
            let sum: Vec<f64> = nna.iter().zip(&ra).map(|(x, y)| x + y).collect();
            Ok(node.g(&b.value(s), &sum))
        },
        0.0,
        1.0,
        ABS,
        REL,
    )?;
    Ok(-(boundary(1.0)? - boundary(0.0)?) + bulk)
}

/// `g_λ̇(λ̇, A)` at `s`.
pub fn orthogonality_residual(
    model: &dyn Lagrangian,
    curve: &dyn CurveLike,
    a: &dyn VectorField,
    s: f64,
    tol: &Tolerances,
) -> Result<f64> {
    let p = curve.point(s);
    let g = fundamental_tensor(model, &p, tol)?;
    Ok(g.pair(&p.y, &a.value(s)))
}

/// Adds the time component making a spatial field g-orthogonal to `λ̇`:
/// `A⁰ = −Σ_{j≥1} (gλ̇)_j Aʲ / (gλ̇)_0`.
pub struct OrthogonalLift<'a> {
    pub model: &'a dyn Lagrangian,
    pub curve: &'a dyn CurveLike,
    pub field: &'a dyn VectorField,
    pub tol: Tolerances,
}

impl VectorField for OrthogonalLift<'_> {
    fn value(&self, s: f64) -> Vec<f64> {
        let mut a = self.field.value(s);
        let p = self.curve.point(s);
        let Ok(g) = fundamental_tensor(self.model, &p, &self.tol) else {
            return vec![f64::NAN; a.len()];
        };
        let low = &g.g * DVector::from_column_slice(&p.y);
        let rest: f64 = (1..a.len()).map(|j| low[j] * a[j]).sum();
        a[0] = -rest / low[0];
        a
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::{FnCurve, FnField};
    use crate::models;
    use std::f64::consts::PI;

    #[test]
    fn minkowski_sine_mode_index_form() {
        let m = models::minkowski(4).unwrap();
        let tol = Tolerances::default();
        let line = FnCurve::line(vec![0.0; 4], vec![1.0, 0.0, 0.0, 0.0], (0.0, 1.0));
        let a = FnField::sine_mode(1, vec![0.0, 1.0, 0.0, 0.0]);
        let j = index_form(m.as_ref(), &line, &a, &a, CurvatureRoute::Formal, &tol).unwrap();
        // Stored g = 2η, so ∫ g(∇A, ∇A) = 2 · π²/2.
        assert!((j + PI * PI).abs() < 1e-9, "{j}");
        let jp = index_form_by_parts(m.as_ref(), &line, &a, &a, CurvatureRoute::Formal, &tol).unwrap();
        assert!((jp - j).abs() < 1e-7, "{jp} vs {j}");
    }
}
