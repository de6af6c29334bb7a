//! Affinely parameterized geodesics from the Euler–Lagrange equations.

use std::fmt;
use std::io::Write;

use nalgebra::DVector;
use serde::Serialize;

use crate::curve::CurveLike;
use crate::error::{FinslerError, Result};
use crate::model::{ensure_regular, Lagrangian, Model};
use crate::ode::{self, OdeOptions, OdeSolution, OdeStats};
use crate::point::{PointedVector, Tolerances};
use crate::quadrature;
use crate::vertical::{check_nondegenerate, second_order};

/// Acceleration from `g_ij ẍʲ = ∂L/∂xⁱ − (∂²L/∂xᵏ∂yⁱ) ẋᵏ`.
pub fn geodesic_rhs(model: &dyn Lagrangian, p: &PointedVector, tol: &Tolerances) -> Result<DVector<f64>> {
    let s = second_order(model, p, tol)?;
    check_nondegenerate(&s.g, tol)?;
    let v = DVector::from_column_slice(&p.y);
    let rhs = &s.dl_dx - s.mixed.transpose() * v;
    s.g.lu().solve(&rhs).ok_or(FinslerError::DegenerateMetric {
        det: 0.0,
        threshold: tol.degeneracy,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct GeodesicIvp {
    pub x0: Vec<f64>,
    pub y0: Vec<f64>,
    pub span: (f64, f64),
}

impl GeodesicIvp {
    pub fn new(x0: Vec<f64>, y0: Vec<f64>) -> Self {
        Self {
            x0,
            y0,
            span: (0.0, 1.0),
        }
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct PathStats {
    pub steps: usize,
    pub rejected: usize,
    pub rhs_evals: usize,
    pub rtol: f64,
    pub atol: f64,
}

/// An integrated geodesic with dense output.
#[derive(Clone)]
pub struct GeodesicPath {
    model: Model,
    tol: Tolerances,
    sol: OdeSolution,
    pub energies: Vec<f64>,
    pub energy_drift: f64,
    pub stats: PathStats,
}

impl fmt::Debug for GeodesicPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GeodesicPath")
            .field("model", &self.model.name())
            .field("span", &self.span())
            .field("steps", &self.stats.steps)
            .field("energy_drift", &self.energy_drift)
            .finish()
    }
}

impl GeodesicPath {
    fn n(&self) -> usize {
        self.model.dim()
    }

    pub fn model(&self) -> &Model {
        &self.model
    }

    pub fn node_params(&self) -> &[f64] {
        &self.sol.ts
    }

    /// `(s_k, (x_k, ẋ_k))` at the accepted steps.
    pub fn nodes(&self) -> Vec<(f64, PointedVector)> {
        let n = self.n();
        self.sol
            .ts
            .iter()
            .zip(&self.sol.ys)
            .map(|(s, st)| (*s, PointedVector::new(st[..n].to_vec(), st[n..].to_vec())))
            .collect()
    }

    pub fn initial_energy(&self) -> f64 {
        self.energies[0]
    }

    pub fn end_point(&self) -> PointedVector {
        self.point(self.span().1)
    }

    /// Writes `s, x0.., v0.., L` rows with 17 significant digits.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let n = self.n();
        let mut wr = csv::Writer::from_writer(w);
        let mut header = vec!["s".to_string()];
        header.extend((0..n).map(|i| format!("x{i}")));
        header.extend((0..n).map(|i| format!("v{i}")));
        header.push("L".into());
        wr.write_record(&header).map_err(csv_err)?;
        for ((s, st), l) in self.sol.ts.iter().zip(&self.sol.ys).zip(&self.energies) {
            let mut row = vec![fmt17(*s)];
            row.extend(st.iter().map(|v| fmt17(*v)));
            row.push(fmt17(*l));
            wr.write_record(&row).map_err(csv_err)?;
        }
        wr.flush()?;
        Ok(())
    }
}

pub(crate) fn csv_err(e: csv::Error) -> FinslerError {
    FinslerError::Io(e.to_string())
}

/// Decimal float with 17 significant digits.
pub fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

impl CurveLike for GeodesicPath {
    fn span(&self) -> (f64, f64) {
        (self.sol.t_start(), self.sol.t_end())
    }
    fn position(&self, s: f64) -> Vec<f64> {
        let mut st = self.sol.at(s);
        st.truncate(self.n());
        st
    }
    fn velocity(&self, s: f64) -> Vec<f64> {
        self.sol.at(s).split_off(self.n())
    }
    fn acceleration(&self, s: f64) -> Vec<f64> {
        match geodesic_rhs(self.model.as_ref(), &self.point(s), &self.tol) {
            Ok(a) => a.iter().copied().collect(),
            Err(_) => {
                let (a, b) = self.span();
                crate::curve::derivative(|r| self.velocity(r), s, a, b, 1e-4 * (b - a))
            }
        }
    }
}

/// Where and why an integration stopped early.
#[derive(Clone, Debug, Serialize)]
pub struct ExitState {
    pub s: f64,
    pub point: PointedVector,
    pub margin: f64,
}

pub struct Integration {
    pub path: GeodesicPath,
    pub exit: Option<ExitState>,
}

/// Integrates until the end of the span or until the margin drops to twice
/// the floor, whichever comes first.
pub fn integrate_to_boundary(model: &Model, ivp: &GeodesicIvp, tol: &Tolerances) -> Result<Integration> {
    let n = model.dim();
    let p0 = PointedVector::new(ivp.x0.clone(), ivp.y0.clone());
    ensure_regular(model.as_ref(), &p0, tol)?;
    let m = model.as_ref();
    let rhs = |_s: f64, st: &[f64], d: &mut [f64]| -> Result<()> {
        let p = PointedVector::new(st[..n].to_vec(), st[n..].to_vec());
        let a = geodesic_rhs(m, &p, tol)?;
        d[..n].copy_from_slice(&st[n..]);
        d[n..].copy_from_slice(a.as_slice());
        Ok(())
    };
    let level = 2.0 * tol.margin_floor;
    let guard = |_s: f64, st: &[f64]| m.margin(&st[..n], &st[n..]) - level;
    let mut y0 = ivp.x0.clone();
    y0.extend_from_slice(&ivp.y0);
    let opts = OdeOptions::with_tol(tol.ode_rtol, tol.ode_atol);
    let sol = ode::integrate(rhs, ivp.span.0, &y0, ivp.span.1, &opts, Some(guard))?;
    let exit = sol.event.map(|s| {
        let st = sol.at(s);
        let point = PointedVector::new(st[..n].to_vec(), st[n..].to_vec());
        ExitState {
            s,
            margin: m.margin(&point.x, &point.y),
            point,
        }
    });
    let path = finish(model, tol, sol);
    Ok(Integration { path, exit })
}

fn finish(model: &Model, tol: &Tolerances, sol: OdeSolution) -> GeodesicPath {
    let n = model.dim();
    let energies: Vec<f64> = sol.ys.iter().map(|st| model.value(&st[..n], &st[n..])).collect();
    let drift = energies.iter().map(|l| (l - energies[0]).abs()).fold(0.0, f64::max);
    let OdeStats {
        accepted,
        rejected,
        rhs_evals,
    } = sol.stats;
    GeodesicPath {
        model: model.clone(),
        tol: tol.clone(),
        energies,
        energy_drift: drift,
        stats: PathStats {
            steps: accepted,
            rejected,
            rhs_evals,
            rtol: tol.ode_rtol,
            atol: tol.ode_atol,
        },
        sol,
    }
}

/// Integrates the full span; leaving the regular domain or drifting in
/// energy beyond `tol.energy · (1 + |L₀|)` is an error.
pub fn integrate(model: &Model, ivp: &GeodesicIvp, tol: &Tolerances) -> Result<GeodesicPath> {
    let run = integrate_to_boundary(model, ivp, tol)?;
    if let Some(exit) = run.exit {
        return Err(FinslerError::singular(
            format!("trajectory left the regular domain at s={} (margin {:e})", exit.s, exit.margin),
            &exit.point.x,
            &exit.point.y,
        ));
    }
    let path = run.path;
    let allowed = tol.energy * (1.0 + path.initial_energy().abs());
    if path.energy_drift > allowed {
        return Err(FinslerError::EnergyDriftExceeded {
            drift: path.energy_drift,
            tol: allowed,
        });
    }
    Ok(path)
}

/// Result of recovering an affine parameter for a pre-geodesic.
#[derive(Debug)]
pub struct Reparameterization {
    /// The affine geodesic on `[0, 1]`.
    pub path: GeodesicPath,
    /// `(r, f(r))` where `ẍ + 2G(x, ẋ) = f ẋ`.
    pub f_samples: Vec<(f64, f64)>,
    /// `(r, s(r))`, the monotone map onto `[0, 1]`.
    pub s_of_r: Vec<(f64, f64)>,
    pub max_transverse_residual: f64,
    pub max_position_mismatch: f64,
}

const REPARAM_SAMPLES: usize = 65;

/// Infers `f` by projecting the Euler–Lagrange residual on `λ̇`, then
/// integrates `s'' = f s'` and re-integrates the geodesic affinely.
pub fn affine_reparameterize(model: &Model, curve: &dyn CurveLike, tol: &Tolerances) -> Result<Reparameterization> {
    let (r0, r1) = curve.span();
    let m = model.as_ref();
    let f_of = |r: f64| -> Result<(f64, f64)> {
        let p = curve.point(r);
        let acc = curve.acceleration(r);
        let a = geodesic_rhs(m, &p, tol)?;
        let v = &p.y;
        let vv: f64 = v.iter().map(|c| c * c).sum();
        let rho: Vec<f64> = acc.iter().zip(a.iter()).map(|(x, y)| x - y).collect();
        let f = rho.iter().zip(v).map(|(a, b)| a * b).sum::<f64>() / vv;
        let perp = rho
            .iter()
            .zip(v)
            .map(|(a, b)| (a - f * b).powi(2))
            .sum::<f64>()
            .sqrt();
        let scale = 1.0 + acc.iter().map(|c| c * c).sum::<f64>().sqrt();
        Ok((f, perp / scale))
    };
    let mut f_samples = Vec::with_capacity(REPARAM_SAMPLES);
    let mut worst: f64 = 0.0;
    for k in 0..REPARAM_SAMPLES {
        let r = r0 + (r1 - r0) * k as f64 / (REPARAM_SAMPLES - 1) as f64;
        let (f, perp) = f_of(r)?;
        worst = worst.max(perp);
        f_samples.push((r, f));
    }
    let allowed = 1e-6;
    if worst > allowed {
        return Err(FinslerError::NotAGeodesic { residual: worst });
    }
    // (F, S)' = (f, e^F): S is the affine parameter up to an affine map.
    let sol = ode::integrate(
        |r, st: &[f64], d: &mut [f64]| {
            d[0] = f_of(r)?.0;
            d[1] = st[0].exp();
            Ok(())
        },
        r0,
        &[0.0, 0.0],
        r1,
        &OdeOptions::with_tol(1e-12, 1e-14),
        None::<fn(f64, &[f64]) -> f64>,
    )?;
    let total = sol.at(r1)[1];
    if !(total > 0.0) {
        return Err(FinslerError::NumericalBreakdown("degenerate reparameterization".into()));
    }
    let p0 = curve.point(r0);
    let ivp = GeodesicIvp::new(p0.x.clone(), p0.y.iter().map(|v| v * total).collect());
    let path = integrate(model, &ivp, tol)?;
    let mut s_of_r = Vec::with_capacity(REPARAM_SAMPLES);
    let mut mismatch: f64 = 0.0;
    for &(r, _) in &f_samples {
        let s = sol.at(r)[1] / total;
        s_of_r.push((r, s));
        let a = path.position(s);
        let b = curve.position(r);
        let d = a.iter().zip(&b).map(|(u, v)| (u - v).powi(2)).sum::<f64>().sqrt();
        mismatch = mismatch.max(d);
    }
    Ok(Reparameterization {
        path,
        f_samples,
        s_of_r,
        max_transverse_residual: worst,
        max_position_mismatch: mismatch,
    })
}

/// `∫ sqrt(−L(λ, λ̇)) dr` over `[r1, r2]`; physical proper time, since the
/// stored tensor satisfies `L = ½ g(λ̇, λ̇)`.
pub fn proper_time(
    model: &dyn Lagrangian,
    curve: &dyn CurveLike,
    r1: f64,
    r2: f64,
    tol: &Tolerances,
) -> Result<f64> {
    quadrature::integrate(
        |r| {
            let p = curve.point(r);
            let l = crate::model::evaluate(model, &p, tol)?;
            if l >= -crate::causal::lightlike_band(&p, tol) {
                return Err(FinslerError::NotTimelike { at: r });
            }
            Ok((-l).sqrt())
        },
        r1,
        r2,
        1e-13,
        1e-12,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{minkowski, schwarzschild};
    use std::f64::consts::PI;

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    #[test]
    fn minkowski_straight_line() {
        let m = minkowski(4).unwrap();
        let ivp = GeodesicIvp::new(vec![0.0; 4], vec![1.0, 0.5, 0.0, 0.0]);
        let path = integrate(&m, &ivp, &tol()).unwrap();
        let x = path.position(0.7);
        assert!((x[0] - 0.7).abs() < 1e-14 && (x[1] - 0.35).abs() < 1e-14);
        assert!((path.initial_energy() + 0.75).abs() < 1e-15);
        assert!(path.energy_drift < 1e-14);
    }

    #[test]
    fn schwarzschild_circular_orbit_has_no_radial_acceleration() {
        let m = 1.0;
        let r = 6.0 * m;
        let s = schwarzschild(m).unwrap();
        // Keplerian Ω² = m/r³ in coordinate time.
        let omega = (m / r.powi(3)).sqrt();
        let p = PointedVector::new(vec![0.0, r, PI / 2.0, 0.0], vec![1.0, 0.0, 0.0, omega]);
        let a = geodesic_rhs(s.as_ref(), &p, &tol()).unwrap();
        assert!(a[1].abs() < 1e-15, "{}", a[1]);
    }

    #[test]
    fn proper_time_of_boosted_line() {
        let m = minkowski(4).unwrap();
        let c = crate::curve::FnCurve::line(vec![0.0; 4], vec![1.0, 0.6, 0.0, 0.0], (0.0, 1.0));
        let tau = proper_time(m.as_ref(), &c, 0.0, 1.0, &tol()).unwrap();
        assert!((tau - 0.8).abs() < 1e-13);
        let null = crate::curve::FnCurve::line(vec![0.0; 4], vec![1.0, 1.0, 0.0, 0.0], (0.0, 1.0));
        assert!(matches!(
            proper_time(m.as_ref(), &null, 0.0, 1.0, &tol()),
            Err(FinslerError::NotTimelike { .. })
        ));
    }
}
