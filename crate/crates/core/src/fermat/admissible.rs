//! The admissible class: fixed source, endpoint on the observer, constant
//! energy `−c²`, future-pointed throughout.

use serde::Serialize;

use crate::causal::{future_pairing, lightlike_band, TimeOrientation};
use crate::curve::CurveLike;
use crate::error::{FinslerError, Result};
use crate::fermat::observer::Observer;
use crate::jet::HyperDual;
use crate::model::{evaluate, is_regular, Lagrangian};
use crate::point::{norm, PointedVector, Tolerances};
use crate::quadrature;

/// Positive rescaling of `y` onto `L = −c²`; for `c = 0` a null `y` is
/// returned with unit chart norm.
pub fn energy_shell_project(
    model: &dyn Lagrangian,
    x: &[f64],
    y: &[f64],
    c: f64,
    tol: &Tolerances,
) -> Result<Vec<f64>> {
    if !(c >= 0.0 && c.is_finite()) {
        return Err(FinslerError::bad_param("c", "energy level must be finite and >= 0"));
    }
    let p = PointedVector::new(x.to_vec(), y.to_vec());
    let l = evaluate(model, &p, tol)?;
    let band = lightlike_band(&p, tol);
    if c == 0.0 {
        if l.abs() > band {
            return Err(FinslerError::WrongShell { l, c });
        }
        let ny = norm(y);
        return Ok(y.iter().map(|v| v / ny).collect());
    }
    if !(l < -band) {
        return Err(FinslerError::WrongShell { l, c });
    }
    let k = c / (-l).sqrt();
    Ok(y.iter().map(|v| k * v).collect())
}

fn shell_residual(model: &dyn Lagrangian, x: &[f64], ybar: &[f64], c: f64, t: f64) -> (f64, Option<f64>) {
    let mut y = vec![t];
    y.extend_from_slice(ybar);
    let h = model.value(x, &y) + c * c;
    let xs: Vec<HyperDual> = x.iter().map(|v| HyperDual::constant(*v)).collect();
    let ys: Vec<HyperDual> = y
        .iter()
        .enumerate()
        .map(|(k, v)| if k == 0 { HyperDual::seeded(*v, &[0]) } else { HyperDual::constant(*v) })
        .collect();
    let d = match model.value_hd(&xs, &ys) {
        Some(v) => Some(v.coeff(1)),
        None => {
            let e = 1e-6 * (1.0 + t.abs());
            let mut yp = y.clone();
            let mut ym = y.clone();
            yp[0] += e;
            ym[0] -= e;
            Some((model.value(x, &yp) - model.value(x, &ym)) / (2.0 * e))
        }
    };
    (h, d.filter(|v| v.is_finite()))
}

/// The positive time component `v⁰` with `L(x, (v⁰, ȳ)) = −c²`, the chart
/// coordinate 0 being aligned with the time orientation.
pub fn shell_time_component(
    model: &dyn Lagrangian,
    x: &[f64],
    ybar: &[f64],
    c: f64,
    guess: Option<f64>,
    tol: &Tolerances,
) -> Result<f64> {
    let scale = 1.0 + c * c + ybar.iter().map(|v| v * v).sum::<f64>();
    let accept = 1e-14 * scale;
    let start = guess.filter(|g| *g > 0.0).unwrap_or(norm(ybar) + c + 1e-3);
    let regular = |t: f64| {
        let mut y = vec![t];
        y.extend_from_slice(ybar);
        is_regular(model, &PointedVector::new(x.to_vec(), y), tol)
    };

    let mut t = start;
    for _ in 0..30 {
        let (h, d) = shell_residual(model, x, ybar, c, t);
        if !h.is_finite() || !regular(t) {
            break;
        }
        if h.abs() <= accept {
            return Ok(t);
        }
        let Some(d) = d.filter(|d| *d != 0.0) else { break };
        let next = t - h / d;
        if !(next > 0.0) || !next.is_finite() {
            break;
        }
        t = next;
    }

    // Bracketing fallback: {h < 0} is an interval in v⁰ reaching to infinity.
    let inside = |t: f64| {
        let (h, _) = shell_residual(model, x, ybar, c, t);
        h < 0.0 && regular(t)
    };
    let mut hi = start.max(1e-3);
    let mut found = false;
    for _ in 0..80 {
        if inside(hi) {
            found = true;
            break;
        }
        hi *= 2.0;
    }
    if !found {
        return Err(FinslerError::NoConvergence {
            iterations: 80,
            residual: shell_residual(model, x, ybar, c, hi).0,
        });
    }
    let mut lo = hi;
    loop {
        lo *= 0.5;
        if !inside(lo) {
            break;
        }
        if lo < 1e-300 {
            return Err(FinslerError::WrongShell {
                l: model.value(x, &[&[lo], ybar].concat()),
                c,
            });
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if inside(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let mut t = hi;
    for _ in 0..3 {
        let (h, d) = shell_residual(model, x, ybar, c, t);
        match d {
            Some(d) if d != 0.0 && h.is_finite() => {
                let next = t - h / d;
                if next >= lo && next <= 2.0 * hi - lo {
                    t = next;
                }
            }
            _ => break,
        }
    }
    Ok(t)
}

/// `E(λ) = ∫ L(λ, λ̇) ds`.
pub fn energy_functional(model: &dyn Lagrangian, curve: &dyn CurveLike, tol: &Tolerances) -> Result<f64> {
    let (a, b) = curve.span();
    quadrature::integrate(|s| evaluate(model, &curve.point(s), tol), a, b, 1e-12, 1e-11)
}

/// How well a curve satisfies the four conditions of the admissible class.
#[derive(Clone, Debug, Serialize)]
pub struct AdmissibilityReport {
    pub start_error: f64,
    pub endpoint_error: f64,
    pub max_energy_deviation: f64,
    /// Largest `g(λ̇, T)` over the samples; negative when future-pointed.
    pub max_future_pairing: f64,
    pub admissible: bool,
}

#[allow(clippy::too_many_arguments)]
pub fn check_admissible(
    model: &dyn Lagrangian,
    curve: &dyn CurveLike,
    q: &[f64],
    observer: &Observer,
    c: f64,
    t_orient: &TimeOrientation,
    tau: f64,
    tol: &Tolerances,
) -> Result<AdmissibilityReport> {
    let (a, b) = curve.span();
    let diff = |u: &[f64], v: &[f64]| norm(&u.iter().zip(v).map(|(p, q)| p - q).collect::<Vec<_>>());
    let start_error = diff(&curve.position(a), q);
    let end = curve.position(b);
    let endpoint_error = diff(&end, &observer.position(tau));
    let mut max_dev: f64 = 0.0;
    let mut max_pair = f64::NEG_INFINITY;
    for (_, p) in curve.sample(65) {
        let l = evaluate(model, &p, tol)?;
        max_dev = max_dev.max((l + c * c).abs());
        max_pair = max_pair.max(future_pairing(model, &p, t_orient, tol)?);
    }
    let capture = tol.capture_radius * (1.0 + norm(&end));
    let admissible = start_error <= capture
        && endpoint_error <= capture
        && max_dev <= tol.energy * (1.0 + c * c)
        && max_pair < 0.0;
    Ok(AdmissibilityReport {
        start_error,
        endpoint_error,
        max_energy_deviation: max_dev,
        max_future_pairing: max_pair,
        admissible,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models;

    #[test]
    fn shell_projection_examples() {
        let m = models::minkowski(4).unwrap();
        let tol = Tolerances::default();
        let x = [0.0; 4];
        let y = energy_shell_project(m.as_ref(), &x, &[2.0, 0.0, 0.0, 0.0], 1.0, &tol).unwrap();
        assert!((y[0] - 1.0).abs() < 1e-15);
        assert!(matches!(
            energy_shell_project(m.as_ref(), &x, &[0.0, 1.0, 0.0, 0.0], 1.0, &tol),
            Err(FinslerError::WrongShell { .. })
        ));
        let n = energy_shell_project(m.as_ref(), &x, &[2.0, 2.0, 0.0, 0.0], 0.0, &tol).unwrap();
        assert!((n[0] - n[1]).abs() < 1e-15 && (norm(&n) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn shell_time_component_on_several_models() {
        let tol = Tolerances::default();
        let m = models::minkowski(4).unwrap();
        let t = shell_time_component(m.as_ref(), &[0.0; 4], &[1.0, 0.0, 0.0], 1.0, None, &tol).unwrap();
        assert!((t - 2f64.sqrt()).abs() < 1e-13);
        let t0 = shell_time_component(m.as_ref(), &[0.0; 4], &[0.6, 0.0, 0.8], 0.0, Some(3.0), &tol).unwrap();
        assert!((t0 - 1.0).abs() < 1e-12);
        let b = models::catalog_entry("bogoslovsky").unwrap().default_model();
        let ybar = [0.3, -0.2, 0.1];
        let t = shell_time_component(b.as_ref(), &[0.0; 4], &ybar, 1.0, None, &tol).unwrap();
        let l = b.value(&[0.0; 4], &[t, 0.3, -0.2, 0.1]);
        assert!((l + 1.0).abs() < 1e-13);
    }
}
