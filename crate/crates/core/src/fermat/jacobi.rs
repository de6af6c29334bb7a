//! Jacobi fields, conjugate points, Morse index and critical-point character.
//!
//! Fields are integrated as the first-order system `Y' = W − Γ(λ̇)Y`,
//! `W' = −K Y − Γ(λ̇)W` with `W = ∇Y` and `K Y = R(Y, λ̇)λ̇`, so no
//! derivatives of the connection are needed.

use std::fmt;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::causal::{classify, CausalClass, TimeOrientation};
use crate::connection::{connection, CurvatureRoute, FrameNode};
use crate::curve::{derivative, CurveLike};
use crate::error::{FinslerError, Result};
use crate::geodesic::{self, GeodesicIvp, GeodesicPath};
use crate::model::Lagrangian;
use crate::ode::{self, OdeOptions, OdeSolution};
use crate::point::{PointedVector, Tolerances};
use crate::vertical::{cartan_tensor, fundamental_tensor};

/// Conjugate points closer than this to the endpoint are boundary cases.
pub const ENDPOINT_WINDOW: f64 = 1e-6;
/// Singular values below this fraction of the reference scale count
/// towards the multiplicity.
pub const RANK_FLOOR: f64 = 1e-6;

/// Formal curvature for quadratic models, hh-curvature once the Cartan
/// tensor is nonzero at `p`.
pub fn auto_route(model: &dyn Lagrangian, p: &PointedVector, tol: &Tolerances) -> Result<CurvatureRoute> {
    let c = cartan_tensor(model, p, tol)?;
    let g = fundamental_tensor(model, p, tol)?;
    let scale = g.g.amax() / p.y_norm();
    Ok(if c.max_abs() <= 1e-9 * scale {
        CurvatureRoute::Formal
    } else {
        CurvatureRoute::Horizontal
    })
}

/// `(Γ(λ̇), K)` at `s`: `Γ(λ̇)^i_k = Γ^i_jk λ̇ʲ` and `K^i_k = R^i_jkl λ̇ʲ λ̇ˡ`.
pub fn jacobi_coefficients(
    model: &dyn Lagrangian,
    curve: &dyn CurveLike,
    s: f64,
    route: CurvatureRoute,
    tol: &Tolerances,
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let node = FrameNode::at(model, s, &curve.point(s), tol, route)?;
    Ok((connection_matrix(&node.connection.chern, node.velocity()), node.curvature.jacobi_operator(node.velocity())))
}

fn connection_matrix(chern: &[DMatrix<f64>], v: &[f64]) -> DMatrix<f64> {
    let n = v.len();
    DMatrix::from_fn(n, n, |i, k| (0..n).map(|j| chern[i][(j, k)] * v[j]).sum())
}

fn gamma_matrix(model: &dyn Lagrangian, curve: &dyn CurveLike, s: f64, tol: &Tolerances) -> Result<DMatrix<f64>> {
    let p = curve.point(s);
    let cc = connection(model, &p, tol)?;
    Ok(connection_matrix(&cc.chern, &p.y))
}

/// A bundle of `m` Jacobi fields along a curve, stored as columns.
#[derive(Clone)]
pub struct JacobiField {
    sol: OdeSolution,
    n: usize,
    m: usize,
    pub route: CurvatureRoute,
}

impl fmt::Debug for JacobiField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("JacobiField")
            .field("n", &self.n)
            .field("columns", &self.m)
            .field("span", &(self.sol.t_start(), self.sol.t_end()))
            .field("route", &self.route)
            .finish()
    }
}

impl JacobiField {
    pub fn columns(&self) -> usize {
        self.m
    }

    pub fn span(&self) -> (f64, f64) {
        (self.sol.t_start(), self.sol.t_end())
    }

    pub fn nodes(&self) -> &[f64] {
        &self.sol.ts
    }

    /// `Y(s)` as an `n × m` matrix.
    pub fn y(&self, s: f64) -> DMatrix<f64> {
        let st = self.sol.at(s);
        DMatrix::from_column_slice(self.n, self.m, &st[..self.n * self.m])
    }

    /// `∇Y(s)` as an `n × m` matrix.
    pub fn w(&self, s: f64) -> DMatrix<f64> {
        let st = self.sol.at(s);
        DMatrix::from_column_slice(self.n, self.m, &st[self.n * self.m..])
    }

    pub fn column(&self, s: f64, k: usize) -> Vec<f64> {
        self.y(s).column(k).iter().copied().collect()
    }

    /// `‖∇∇Y + R(Y, λ̇)λ̇‖ / (1 + ‖Y‖ + ‖∇Y‖)` for column `k` at `s`,
    /// recomputing `∇∇Y` by differencing the interpolated `∇Y`.
    pub fn residual(
        &self,
        model: &dyn Lagrangian,
        curve: &dyn CurveLike,
        s: f64,
        k: usize,
        tol: &Tolerances,
    ) -> Result<f64> {
        let (a, b) = self.span();
        let h = 1e-3 * (b - a);
        let dw = derivative(|r| self.w(r).column(k).iter().copied().collect(), s, a, b, h);
        let (gm, km) = jacobi_coefficients(model, curve, s, self.route, tol)?;
        let y = self.y(s).column(k).into_owned();
        let w = self.w(s).column(k).into_owned();
        let res = nalgebra::DVector::from_vec(dw) + &gm * &w + &km * &y;
        Ok(res.norm() / (1.0 + y.norm() + w.norm()))
    }
}

/// Integrates Jacobi fields along `curve` over `span` from `Y(s0)`,
/// `∇Y(s0)` (columns of `y0`, `w0`).
pub fn jacobi_integrate_matrix(
    model: &dyn Lagrangian,
    curve: &dyn CurveLike,
    y0: &DMatrix<f64>,
    w0: &DMatrix<f64>,
    span: (f64, f64),
    route: CurvatureRoute,
    tol: &Tolerances,
) -> Result<JacobiField> {
    let n = model.dim();
    let m = y0.ncols();
    if y0.nrows() != n || w0.nrows() != n || w0.ncols() != m {
        return Err(FinslerError::DimensionMismatch {
            expected: n,
            got: y0.nrows(),
        });
    }
    let rhs = |s: f64, st: &[f64], d: &mut [f64]| -> Result<()> {
        let (gm, km) = jacobi_coefficients(model, curve, s, route, tol)?;
        let y = DMatrix::from_column_slice(n, m, &st[..n * m]);
        let w = DMatrix::from_column_slice(n, m, &st[n * m..]);
        let dy = &w - &gm * &y;
        let dw = -(&km * &y) - &gm * &w;
        d[..n * m].copy_from_slice(dy.as_slice());
        d[n * m..].copy_from_slice(dw.as_slice());
        Ok(())
    };
    let mut st = y0.as_slice().to_vec();
    st.extend_from_slice(w0.as_slice());
    let opts = OdeOptions::with_tol(tol.ode_rtol.min(1e-11), tol.ode_atol.min(1e-13));
    let sol = ode::integrate(rhs, span.0, &st, span.1, &opts, None::<fn(f64, &[f64]) -> f64>)?;
    Ok(JacobiField { sol, n, m, route })
}

/// A single Jacobi field on the curve's span from `Y(a)`, `∇Y(a)`.
pub fn jacobi_integrate(
    model: &dyn Lagrangian,
    curve: &dyn CurveLike,
    y0: &[f64],
    dy0: &[f64],
    tol: &Tolerances,
) -> Result<JacobiField> {
    let (a, b) = curve.span();
    let route = auto_route(model, &curve.point(a), tol)?;
    let y = DMatrix::from_column_slice(y0.len(), 1, y0);
    let w = DMatrix::from_column_slice(dy0.len(), 1, dy0);
    jacobi_integrate_matrix(model, curve, &y, &w, (a, b), route, tol)
}

/// Least-squares line fit of `g_λ̇(Y, λ̇)(s)` over `count` samples:
/// `(slope, intercept, max residual)`.
pub fn pairing_affinity(
    model: &dyn Lagrangian,
    curve: &dyn CurveLike,
    field: &JacobiField,
    column: usize,
    count: usize,
    tol: &Tolerances,
) -> Result<(f64, f64, f64)> {
    let (a, b) = field.span();
    let mut pts = Vec::with_capacity(count);
    for k in 0..count {
        let s = a + (b - a) * k as f64 / (count - 1) as f64;
        let p = curve.point(s);
        let g = fundamental_tensor(model, &p, tol)?;
        pts.push((s, g.pair(&field.column(s, column), &p.y)));
    }
    let nf = count as f64;
    let (sx, sy) = pts.iter().fold((0.0, 0.0), |(x, y), p| (x + p.0, y + p.1));
    let (mx, my) = (sx / nf, sy / nf);
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let resid = pts
        .iter()
        .map(|p| (p.1 - intercept - slope * p.0).abs())
        .fold(0.0, f64::max);
    Ok((slope, intercept, resid))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConjugatePoint {
    pub s: f64,
    pub mult: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Character {
    LocalMin,
    Saddle,
    BoundaryCase,
}

impl fmt::Display for Character {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Character::LocalMin => "local_min",
            Character::Saddle => "saddle",
            Character::BoundaryCase => "boundary_case",
        })
    }
}

/// One sample of the conjugate-point scan.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct DeterminantSample {
    pub s: f64,
    /// `det[Y | λ̇ (| T)]`, scaled by the reference size of `Y`.
    pub det: f64,
    /// Smallest singular value of the same matrix over the reference size.
    pub sigma_min: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ConjugateScan {
    /// Conjugate points in the open interval `(0, 1)`.
    pub points: Vec<ConjugatePoint>,
    /// A conjugate point within `ENDPOINT_WINDOW` of `s = 1`.
    pub endpoint: Option<ConjugatePoint>,
    pub causal: CausalClass,
    pub route: CurvatureRoute,
    pub samples: Vec<DeterminantSample>,
}

impl ConjugateScan {
    pub fn morse_index(&self) -> Result<usize> {
        morse_index(self)
    }

    pub fn character(&self) -> Character {
        classify_critical_point(self)
    }
}

struct ScanMatrix<'a> {
    field: &'a JacobiField,
    curve: &'a dyn CurveLike,
    t_orient: Option<&'a TimeOrientation>,
    reference: f64,
}

impl ScanMatrix<'_> {
    fn z(&self, s: f64) -> DMatrix<f64> {
        let y = self.field.y(s) / self.reference;
        let n = y.nrows();
        let mut extra = vec![self.curve.velocity(s)];
        if let Some(t) = self.t_orient {
            extra.push(t.at(&self.curve.position(s)));
        }
        let mut z = DMatrix::zeros(n, y.ncols() + extra.len());
        z.columns_mut(0, y.ncols()).copy_from(&y);
        for (k, e) in extra.iter().enumerate() {
            let ne = crate::point::norm(e);
            for i in 0..n {
                z[(i, y.ncols() + k)] = e[i] / ne;
            }
        }
        z
    }

    fn det(&self, s: f64) -> f64 {
        self.z(s).determinant()
    }

    fn sigma_min(&self, s: f64) -> f64 {
        self.z(s).singular_values().min()
    }

    fn multiplicity(&self, s: f64) -> usize {
        self.z(s).singular_values().iter().filter(|v| **v <= RANK_FLOOR).count()
    }
}

fn bisect_root<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64) -> f64 {
    let mut fa = f(a);
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        let fm = f(m);
        if fm == 0.0 {
            return m;
        }
        if (fm < 0.0) == (fa < 0.0) {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

/// Euclidean-orthonormal basis of the vectors `e` with `Wᵀe = 0`.
fn complement_basis(constraints: &DMatrix<f64>) -> DMatrix<f64> {
    let n = constraints.nrows();
    let k = constraints.ncols();
    let mut full = DMatrix::zeros(n, n + k);
    full.columns_mut(0, k).copy_from(constraints);
    full.columns_mut(k, n).copy_from(&DMatrix::identity(n, n));
    let q = full.qr().q();
    q.columns(k, n - k).into_owned()
}

/// Conjugate points of `λ(0)` along the shot geodesic.
///
/// The matrix Jacobi system starts from `Y(0) = 0` with `∇Y(0)` spanning
/// the g-orthogonal complement of `λ̇(0)` (and of `T` for lightlike `λ̇`).
/// The geodesic is extended slightly beyond `s = 1` so endpoint conjugacy
/// is seen from both sides.
pub fn find_conjugate_points(
    path: &GeodesicPath,
    t_orient: &TimeOrientation,
    tol: &Tolerances,
) -> Result<ConjugateScan> {
    let model = path.model().clone();
    let n = model.dim();
    let p0 = path.point(0.0);
    let causal = classify(model.as_ref(), &p0, tol);
    if !causal.is_causal() {
        return Err(FinslerError::bad_param("geodesic", format!("conjugate scan needs a causal geodesic, got {causal}")));
    }
    let extended: GeodesicPath = {
        let mut ivp = GeodesicIvp::new(p0.x.clone(), p0.y.clone());
        ivp.span = (0.0, 1.02);
        match geodesic::integrate_to_boundary(&model, &ivp, tol) {
            Ok(run) if run.exit.is_none() => run.path,
            _ => path.clone(),
        }
    };
    let s_end = extended.span().1;
    let route = auto_route(model.as_ref(), &p0, tol)?;
    let g0 = fundamental_tensor(model.as_ref(), &p0, tol)?;
    let lowered = &g0.g * nalgebra::DVector::from_column_slice(&p0.y);
    let lightlike = causal == CausalClass::Lightlike;
    let constraints = if lightlike {
        let t0 = t_orient.at(&p0.x);
        let lt = &g0.g * nalgebra::DVector::from_column_slice(&t0);
        DMatrix::from_columns(&[lowered.normalize(), lt.normalize()])
    } else {
        DMatrix::from_columns(&[lowered.normalize()])
    };
    let basis = complement_basis(&constraints);
    let m = basis.ncols();
    let field = jacobi_integrate_matrix(
        model.as_ref(),
        &extended,
        &DMatrix::zeros(n, m),
        &basis,
        (0.0, s_end),
        route,
        tol,
    )?;

    let grid = 800;
    let mut ss: Vec<f64> = (0..=grid).map(|k| s_end * k as f64 / grid as f64).collect();
    ss.extend(field.nodes().iter().copied());
    ss.sort_by(f64::total_cmp);
    ss.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    let reference = ss
        .iter()
        .map(|s| field.y(*s).singular_values().max())
        .fold(0.0, f64::max);
    if !(reference > 0.0) {
        return Err(FinslerError::NumericalBreakdown("Jacobi fields vanish identically".into()));
    }
    let scan = ScanMatrix {
        field: &field,
        curve: &extended,
        t_orient: if lightlike { Some(t_orient) } else { None },
        reference,
    };
    let samples: Vec<DeterminantSample> = ss
        .iter()
        .map(|s| DeterminantSample {
            s: *s,
            det: scan.det(*s),
            sigma_min: scan.sigma_min(*s),
        })
        .collect();

    let mut found: Vec<f64> = Vec::new();
    let s_min = 1e-3 * s_end;
    for w in samples.windows(2) {
        if w[0].s < s_min {
            continue;
        }
        if w[0].det == 0.0 || (w[0].det < 0.0) != (w[1].det < 0.0) {
            let r = if w[0].det == 0.0 { w[0].s } else { bisect_root(|s| scan.det(s), w[0].s, w[1].s) };
            found.push(r);
        }
    }
    for k in 1..samples.len() - 1 {
        let (l, c, r) = (&samples[k - 1], &samples[k], &samples[k + 1]);
        if c.s < s_min || !(c.sigma_min <= l.sigma_min && c.sigma_min <= r.sigma_min) || c.sigma_min > 1e-2 {
            continue;
        }
        let s = crate::fermat::observer::golden_min(&|s| scan.sigma_min(s), l.s, r.s);
        if scan.sigma_min(s) <= RANK_FLOOR && found.iter().all(|f| (f - s).abs() > 1e-6) {
            found.push(s);
        }
    }
    found.sort_by(f64::total_cmp);
    found.dedup_by(|a, b| (*a - *b).abs() <= 1e-6);

    let mut points = Vec::new();
    let mut endpoint = None;
    for s in found {
        let mult = scan.multiplicity(s).max(1);
        if (s - 1.0).abs() < ENDPOINT_WINDOW {
            endpoint = Some(ConjugatePoint { s, mult });
        } else if s < 1.0 {
            points.push(ConjugatePoint { s, mult });
        }
    }
    Ok(ConjugateScan {
        points,
        endpoint,
        causal,
        route,
        samples,
    })
}

/// Total multiplicity of the interior conjugate points.
pub fn morse_index(scan: &ConjugateScan) -> Result<usize> {
    if let Some(e) = scan.endpoint {
        return Err(FinslerError::EndpointConjugate { s: e.s });
    }
    Ok(scan.points.iter().map(|p| p.mult).sum())
}

pub fn classify_critical_point(scan: &ConjugateScan) -> Character {
    if scan.endpoint.is_some() {
        Character::BoundaryCase
    } else if scan.points.is_empty() {
        Character::LocalMin
    } else {
        Character::Saddle
    }
}

/// `∇A = dA/ds + Γ(λ̇)A` along `curve`.
pub fn covariant_derivative(
    model: &dyn Lagrangian,
    curve: &dyn CurveLike,
    a: &[f64],
    da: &[f64],
    s: f64,
    tol: &Tolerances,
) -> Result<Vec<f64>> {
    let gm = gamma_matrix(model, curve, s, tol)?;
    let v = gm * nalgebra::DVector::from_column_slice(a);
    Ok(da.iter().zip(v.iter()).map(|(x, y)| x + y).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models;
    use std::f64::consts::PI;

    fn sphere_path(arc: f64) -> GeodesicPath {
        let m = models::product_sphere();
        let ivp = GeodesicIvp::new(vec![0.0, PI / 2.0, 0.0], vec![(1.0 + arc * arc).sqrt(), 0.0, arc]);
        geodesic::integrate(&m, &ivp, &Tolerances::default()).unwrap()
    }

    #[test]
    fn minkowski_field_is_linear() {
        let m = models::minkowski(4).unwrap();
        let tol = Tolerances::default();
        let ivp = GeodesicIvp::new(vec![0.0; 4], vec![1.0, 0.3, 0.0, 0.0]);
        let path = geodesic::integrate(&m, &ivp, &tol).unwrap();
        let f = jacobi_integrate(m.as_ref(), &path, &[0.0; 4], &[0.0, 0.0, 1.0, 0.0], &tol).unwrap();
        assert!((f.column(0.7, 0)[2] - 0.7).abs() < 1e-12);
    }

    #[test]
    fn sphere_transverse_field_is_a_sine() {
        let tol = Tolerances::default();
        let path = sphere_path(1.5 * PI);
        let m = path.model().clone();
        let f = jacobi_integrate(m.as_ref(), &path, &[0.0; 3], &[0.0, 1.0, 0.0], &tol).unwrap();
        let rho = 1.5 * PI;
        for s in [0.2, 0.5, 0.9] {
            assert!((f.column(s, 0)[1] - (rho * s).sin() / rho).abs() < 1e-9);
        }
        assert!(f.residual(m.as_ref(), &path, 0.4, 0, &tol).unwrap() < 1e-7);
    }

    #[test]
    fn sphere_arcs_have_expected_conjugate_points() {
        let tol = Tolerances::default();
        let t = TimeOrientation::constant(vec![1.0, 0.0, 0.0]);
        for (arc, index) in [(0.5 * PI, 0), (1.5 * PI, 1), (2.5 * PI, 2)] {
            let scan = find_conjugate_points(&sphere_path(arc), &t, &tol).unwrap();
            assert_eq!(scan.morse_index().unwrap(), index, "arc {arc}: {:?}", scan.points);
            for (k, p) in scan.points.iter().enumerate() {
                let exact = (k + 1) as f64 * PI / arc;
                assert!((p.s - exact).abs() < 1e-8, "{} vs {exact}", p.s);
                assert_eq!(p.mult, 1);
            }
        }
        let scan = find_conjugate_points(&sphere_path(PI), &t, &tol).unwrap();
        assert_eq!(scan.character(), Character::BoundaryCase);
    }
}
