//! Shooting for causal geodesics from `q` to an observer on a fixed shell.
//!
//! Unknowns are the spatial initial velocity `ū` and the arrival parameter
//! `τ`; the time component follows from the shell `L = −c²`. The residual
//! `λ(1) − γ(τ)` is driven to zero by damped Newton steps with Broyden
//! updates between finite-difference Jacobian refreshes.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::causal::{future_pairing, TimeOrientation};
use crate::error::{FinslerError, Result};
use crate::fermat::admissible::{check_admissible, energy_shell_project, shell_time_component, AdmissibilityReport};
use crate::fermat::observer::Observer;
use crate::geodesic::{self, GeodesicIvp, GeodesicPath};
use crate::model::{ensure_regular, Model};
use crate::point::{norm, PointedVector, Tolerances};

/// A converged shot: an admissible affine geodesic ending on the observer.
#[derive(Clone, Debug)]
pub struct ShotGeodesic {
    pub path: GeodesicPath,
    pub q: Vec<f64>,
    pub y0: Vec<f64>,
    pub c: f64,
    pub tau: f64,
    pub stats: ShootStats,
    pub admissibility: AdmissibilityReport,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct ShootStats {
    pub iterations: usize,
    pub jacobian_refreshes: usize,
    pub residual: f64,
}

struct Problem<'a> {
    model: &'a Model,
    q: &'a [f64],
    observer: &'a Observer,
    c: f64,
    t_orient: &'a TimeOrientation,
    tol: &'a Tolerances,
}

impl Problem<'_> {
    fn n(&self) -> usize {
        self.q.len()
    }

    fn initial_velocity(&self, ubar: &[f64], guess: Option<f64>) -> Result<Vec<f64>> {
        let v0 = shell_time_component(self.model.as_ref(), self.q, ubar, self.c, guess, self.tol)?;
        let mut y = vec![v0];
        y.extend_from_slice(ubar);
        let p = PointedVector::new(self.q.to_vec(), y.clone());
        let pairing = future_pairing(self.model.as_ref(), &p, self.t_orient, self.tol)?;
        if !(pairing < 0.0) {
            return Err(FinslerError::NotFuturePointed { pairing });
        }
        Ok(y)
    }

    fn fly(&self, y0: &[f64]) -> Result<GeodesicPath> {
        let ivp = GeodesicIvp::new(self.q.to_vec(), y0.to_vec());
        let run = geodesic::integrate_to_boundary(self.model, &ivp, self.tol)?;
        if let Some(exit) = run.exit {
            return Err(FinslerError::LeftRegularDomain { s: exit.s });
        }
        Ok(run.path)
    }

    /// `F(z) = λ(1) − γ(τ)` for `z = (ū, τ)`.
    fn residual(&self, z: &[f64], guess: Option<f64>) -> Result<(DVector<f64>, Vec<f64>)> {
        let n = self.n();
        let y0 = self.initial_velocity(&z[..n - 1], guess)?;
        let path = self.fly(&y0)?;
        let end = crate::curve::CurveLike::position(&path, 1.0);
        let target = self.observer.position(z[n - 1]);
        Ok((DVector::from_iterator(n, end.iter().zip(&target).map(|(a, b)| a - b)), y0))
    }

    fn jacobian(&self, z: &[f64], guess: f64) -> Result<DMatrix<f64>> {
        let n = self.n();
        let mut jac = DMatrix::zeros(n, n);
        for j in 0..n {
            let h = 1e-6 * (1.0 + z[j].abs());
            let mut zp = z.to_vec();
            let mut zm = z.to_vec();
            zp[j] += h;
            zm[j] -= h;
            let (fp, _) = self.residual(&zp, Some(guess))?;
            let (fm, _) = self.residual(&zm, Some(guess))?;
            jac.set_column(j, &((fp - fm) / (2.0 * h)));
        }
        Ok(jac)
    }
}

fn solve(jac: &DMatrix<f64>, f: &DVector<f64>) -> Option<DVector<f64>> {
    if let Some(d) = jac.clone().lu().solve(f) {
        if d.iter().all(|v| v.is_finite()) {
            return Some(d);
        }
    }
    jac.clone().svd(true, true).solve(f, 1e-14).ok()
}

/// Shoots a geodesic from `q` on the shell `L = −c²` to `observer`.
///
/// `guess` is an initial velocity at `q` (rescaled onto the shell); by
/// default the chart direction towards the observer is used.
#[allow(clippy::too_many_arguments)]
pub fn shoot(
    model: &Model,
    q: &[f64],
    observer: &Observer,
    c: f64,
    t_orient: &TimeOrientation,
    guess: Option<&[f64]>,
    tol: &Tolerances,
) -> Result<ShotGeodesic> {
    let n = model.dim();
    if q.len() != n {
        return Err(FinslerError::DimensionMismatch { expected: n, got: q.len() });
    }
    if !(c >= 0.0 && c.is_finite()) {
        return Err(FinslerError::bad_param("c", "energy level must be finite and >= 0"));
    }
    t_orient.check(model.as_ref(), q, tol)?;
    ensure_regular(model.as_ref(), &PointedVector::new(q.to_vec(), t_orient.at(q)), tol)?;
    let prob = Problem {
        model,
        q,
        observer,
        c,
        t_orient,
        tol,
    };

    let (ubar, v0) = match guess {
        Some(g) => {
            let y = energy_shell_project(model.as_ref(), q, g, c, tol)?;
            (y[1..].to_vec(), y[0])
        }
        None => {
            let target = observer.position(observer.nearest(q, q[0]).0 + 1.0);
            let ubar: Vec<f64> = target[1..].iter().zip(&q[1..]).map(|(a, b)| a - b).collect();
            let y = prob.initial_velocity(&ubar, None)?;
            (ubar, y[0])
        }
    };
    let first = prob.fly(&prob.initial_velocity(&ubar, Some(v0))?)?;
    let tau0 = observer.nearest(&crate::curve::CurveLike::position(&first, 1.0), q[0] + v0).0;
    let mut z: Vec<f64> = ubar;
    z.push(tau0);

    let scale = |z: &[f64]| 1.0 + norm(&observer.position(z[n - 1]));
    let (mut f, mut y0) = prob.residual(&z, Some(v0))?;
    let mut jac = prob.jacobian(&z, y0[0])?;
    let mut fresh = true;
    let mut refreshes = 1;
    let mut radius = 1.0 + norm(&z[..n - 1]);
    for iter in 0..tol.shoot_max_iter {
        let fnorm = f.amax();
        let target = (1e-3 * tol.shoot_tol).max(1e-13) * scale(&z);
        if fnorm <= target {
            return finish(&prob, z, y0, iter, refreshes, fnorm);
        }
        let Some(mut step) = solve(&jac, &(-&f)) else {
            return Err(FinslerError::NoConvergence {
                iterations: iter,
                residual: fnorm,
            });
        };
        let sn = norm(&step.as_slice()[..n - 1]);
        if sn > radius {
            step *= radius / sn;
        }
        let mut alpha = 1.0;
        let mut accepted = None;
        for _ in 0..30 {
            let trial: Vec<f64> = z.iter().zip(step.iter()).map(|(a, b)| a + alpha * b).collect();
            if let Ok((ft, yt)) = prob.residual(&trial, Some(y0[0])) {
                if ft.amax() < (1.0 - 1e-4 * alpha) * fnorm {
                    accepted = Some((trial, ft, yt));
                    break;
                }
            }
            alpha *= 0.5;
        }
        match accepted {
            Some((trial, ft, yt)) => {
                let dz = DVector::from_iterator(n, trial.iter().zip(&z).map(|(a, b)| a - b));
                let df = &ft - &f;
                let ratio = ft.amax() / fnorm;
                let denom = dz.dot(&dz);
                if denom > 0.0 {
                    let corr = (&df - &jac * &dz) * dz.transpose() / denom;
                    jac += corr;
                }
                radius = if alpha == 1.0 { radius * 2.0 } else { radius * alpha.max(0.25) };
                z = trial;
                f = ft;
                y0 = yt;
                fresh = false;
                if ratio > 0.5 {
                    jac = prob.jacobian(&z, y0[0])?;
                    fresh = true;
                    refreshes += 1;
                }
            }
            None if !fresh => {
                jac = prob.jacobian(&z, y0[0])?;
                fresh = true;
                refreshes += 1;
            }
            None => {
                if fnorm <= tol.shoot_tol * scale(&z) {
                    return finish(&prob, z, y0, iter, refreshes, fnorm);
                }
                return Err(FinslerError::NoConvergence {
                    iterations: iter,
                    residual: fnorm,
                });
            }
        }
    }
    let fnorm = f.amax();
    if fnorm <= tol.shoot_tol * scale(&z) {
        return finish(&prob, z, y0, tol.shoot_max_iter, refreshes, fnorm);
    }
    Err(FinslerError::NoConvergence {
        iterations: tol.shoot_max_iter,
        residual: fnorm,
    })
}

fn finish(
    prob: &Problem,
    z: Vec<f64>,
    y0: Vec<f64>,
    iterations: usize,
    refreshes: usize,
    residual: f64,
) -> Result<ShotGeodesic> {
    let n = prob.n();
    let path = geodesic::integrate(prob.model, &GeodesicIvp::new(prob.q.to_vec(), y0.clone()), prob.tol)?;
    let tau = z[n - 1];
    let admissibility = check_admissible(
        prob.model.as_ref(),
        &path,
        prob.q,
        prob.observer,
        prob.c,
        prob.t_orient,
        tau,
        prob.tol,
    )?;
    Ok(ShotGeodesic {
        path,
        q: prob.q.to_vec(),
        y0,
        c: prob.c,
        tau,
        stats: ShootStats {
            iterations,
            jacobian_refreshes: refreshes,
            residual,
        },
        admissibility,
    })
}
