//! Formal Christoffel symbols, the nonlinear connection, Chern connection
//! coefficients, hh-curvature and evaluation along curves.
//!
//! Index layouts: three-index objects are stored as `t[i][(j, k)] = t^i_jk`;
//! curvature as a flat array addressed by [`CurvatureTensor::get`]. The
//! curvature convention is
//! `R^i_jkl = δ_k Γ^i_jl − δ_l Γ^i_jk + Γ^i_hk Γ^h_jl − Γ^i_hl Γ^h_jk`
//! with `(R(X, Y)Z)^i = R^i_jkl Zʲ Xᵏ Yˡ`, so that the Jacobi equation reads
//! `∇∇Y + R(Y, λ̇)λ̇ = 0` and the round unit sphere has `R(Y, v)v = |v|² Y`
//! for `Y ⟂ v`.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::curve::{CurveLike, VectorField};
use crate::error::{FinslerError, Result};
use crate::model::{is_regular, Lagrangian};
use crate::point::{PointedVector, Tolerances};
use crate::vertical::{base_jet, check_nondegenerate, derivative_bundle, pair, DerivativeBundle};

fn zeros3(n: usize) -> Vec<DMatrix<f64>> {
    vec![DMatrix::zeros(n, n); n]
}

#[derive(Clone, Debug, Serialize)]
pub struct ConnectionCoefficients {
    /// `gamma2[i][(j, k)] = γ^i_jk(x, y)`.
    pub gamma2: Vec<DMatrix<f64>>,
    /// `nmat[(i, j)] = N^i_j`.
    pub nmat: DMatrix<f64>,
    /// `chern[i][(j, k)] = Γ^i_jk`.
    pub chern: Vec<DMatrix<f64>>,
    /// Stored fundamental tensor at the base point.
    pub g: DMatrix<f64>,
    /// `delta_g[k][(i, j)] = δ_k g_ij = ∂_k g_ij − N^m_k ∂g_ij/∂yᵐ`.
    pub delta_g: Vec<DMatrix<f64>>,
    pub base: PointedVector,
}

impl ConnectionCoefficients {
    pub fn from_bundle(b: &DerivativeBundle, base: PointedVector, tol: &Tolerances) -> Result<Self> {
        let g = b.d2l_dydy.clone();
        check_nondegenerate(&g, tol)?;
        let n = g.nrows();
        let ginv = g
            .clone()
            .try_inverse()
            .ok_or(FinslerError::DegenerateMetric {
                det: g.determinant(),
                threshold: tol.degeneracy,
            })?;
        let y = &base.y;
        let dgx = &b.d3l_dydydx;
        let dgy = &b.d3l_dydydy;

        let gamma2 = raise(&ginv, |s, j, k| {
            0.5 * (dgx[k][(s, j)] - dgx[s][(j, k)] + dgx[j][(s, k)])
        });
        // C^i_jk = g^{il} C_ljk with C_ljk = ½ ∂g_lj/∂yᵏ.
        let cartan_up = raise(&ginv, |l, j, k| 0.5 * dgy[k][(l, j)]);
        let q: Vec<f64> = (0..n).map(|k| quad(&gamma2[k], y)).collect();
        let mut nmat = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                let mut acc = 0.0;
                for k in 0..n {
                    acc += gamma2[i][(j, k)] * y[k] - cartan_up[i][(j, k)] * q[k];
                }
                nmat[(i, j)] = acc;
            }
        }
        let delta_g: Vec<DMatrix<f64>> = (0..n)
            .map(|k| {
                let mut m = dgx[k].clone();
                for mm in 0..n {
                    m -= &dgy[mm] * nmat[(mm, k)];
                }
                m
            })
            .collect();
        let chern = raise(&ginv, |s, j, k| {
            0.5 * (delta_g[k][(s, j)] - delta_g[s][(j, k)] + delta_g[j][(s, k)])
        });
        Ok(Self {
            gamma2,
            nmat,
            chern,
            g,
            delta_g,
            base,
        })
    }

    /// `Γ^i_jk uʲ vᵏ`.
    pub fn contract(&self, u: &[f64], v: &[f64]) -> Vec<f64> {
        self.chern.iter().map(|m| bilinear(m, u, v)).collect()
    }

    /// Largest `|Γ^i_jk − Γ^i_kj|`.
    pub fn torsion(&self) -> f64 {
        self.chern
            .iter()
            .map(|m| (m - m.transpose()).amax())
            .fold(0.0, f64::max)
    }

    /// Horizontal almost-compatibility residual
    /// `max |δ_k g_ij − Γ^m_ik g_mj − Γ^m_jk g_im|`, normalized by `max |g|`.
    pub fn compatibility_residual(&self) -> f64 {
        let n = self.g.nrows();
        let mut worst: f64 = 0.0;
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    let mut r = self.delta_g[k][(i, j)];
                    for m in 0..n {
                        r -= self.chern[m][(i, k)] * self.g[(m, j)] + self.chern[m][(j, k)] * self.g[(i, m)];
                    }
                    worst = worst.max(r.abs());
                }
            }
        }
        worst / self.g.amax()
    }
}

/// `out[i][(j, k)] = Σ_s ginv[(i, s)] lower(s, j, k)`.
fn raise(ginv: &DMatrix<f64>, lower: impl Fn(usize, usize, usize) -> f64) -> Vec<DMatrix<f64>> {
    let n = ginv.nrows();
    let mut low = zeros3(n);
    for s in 0..n {
        for j in 0..n {
            for k in 0..n {
                low[s][(j, k)] = lower(s, j, k);
            }
        }
    }
    let mut out = zeros3(n);
    for i in 0..n {
        for s in 0..n {
            let a = ginv[(i, s)];
            if a != 0.0 {
                out[i] += &low[s] * a;
            }
        }
    }
    out
}

fn quad(m: &DMatrix<f64>, y: &[f64]) -> f64 {
    bilinear(m, y, y)
}

fn bilinear(m: &DMatrix<f64>, u: &[f64], v: &[f64]) -> f64 {
    let mut acc = 0.0;
    for j in 0..u.len() {
        for k in 0..v.len() {
            acc += m[(j, k)] * u[j] * v[k];
        }
    }
    acc
}

pub fn connection(model: &dyn Lagrangian, p: &PointedVector, tol: &Tolerances) -> Result<ConnectionCoefficients> {
    let b = derivative_bundle(model, p, tol)?;
    ConnectionCoefficients::from_bundle(&b, p.clone(), tol)
}

pub fn christoffel_formal(model: &dyn Lagrangian, p: &PointedVector, tol: &Tolerances) -> Result<Vec<DMatrix<f64>>> {
    Ok(connection(model, p, tol)?.gamma2)
}

pub fn nonlinear_connection(model: &dyn Lagrangian, p: &PointedVector, tol: &Tolerances) -> Result<DMatrix<f64>> {
    Ok(connection(model, p, tol)?.nmat)
}

pub fn chern_coefficients(model: &dyn Lagrangian, p: &PointedVector, tol: &Tolerances) -> Result<Vec<DMatrix<f64>>> {
    Ok(connection(model, p, tol)?.chern)
}

/// Four-index curvature `R^i_jkl`.
#[derive(Clone, Debug, Serialize)]
pub struct CurvatureTensor {
    pub n: usize,
    pub r: Vec<f64>,
    pub base: PointedVector,
}

impl CurvatureTensor {
    fn zeros(n: usize, base: PointedVector) -> Self {
        Self {
            n,
            r: vec![0.0; n * n * n * n],
            base,
        }
    }

    fn idx(&self, i: usize, j: usize, k: usize, l: usize) -> usize {
        ((i * self.n + j) * self.n + k) * self.n + l
    }

    pub fn get(&self, i: usize, j: usize, k: usize, l: usize) -> f64 {
        self.r[self.idx(i, j, k, l)]
    }

    fn set(&mut self, i: usize, j: usize, k: usize, l: usize, v: f64) {
        let at = self.idx(i, j, k, l);
        self.r[at] = v;
    }

    pub fn max_abs(&self) -> f64 {
        self.r.iter().fold(0.0, |a, b| a.max(b.abs()))
    }

    /// Largest `|R^i_jkl + R^i_jlk|`.
    pub fn antisymmetry_defect(&self) -> f64 {
        let n = self.n;
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        worst = worst.max((self.get(i, j, k, l) + self.get(i, j, l, k)).abs());
                    }
                }
            }
        }
        worst
    }

    /// `(R(X, Y)Z)^i = R^i_jkl Zʲ Xᵏ Yˡ`.
    pub fn apply(&self, x: &[f64], y: &[f64], z: &[f64]) -> Vec<f64> {
        let n = self.n;
        (0..n)
            .map(|i| {
                let mut acc = 0.0;
                for j in 0..n {
                    for k in 0..n {
                        for l in 0..n {
                            acc += self.get(i, j, k, l) * z[j] * x[k] * y[l];
                        }
                    }
                }
                acc
            })
            .collect()
    }

    /// Jacobi operator `K^i_k = R^i_jkl vʲ vˡ`, so `R(Y, v)v = K Y`.
    pub fn jacobi_operator(&self, v: &[f64]) -> DMatrix<f64> {
        let n = self.n;
        DMatrix::from_fn(n, n, |i, k| {
            let mut acc = 0.0;
            for j in 0..n {
                for l in 0..n {
                    acc += self.get(i, j, k, l) * v[j] * v[l];
                }
            }
            acc
        })
    }

    pub fn max_difference(&self, other: &Self) -> f64 {
        self.r
            .iter()
            .zip(&other.r)
            .fold(0.0, |a, (x, y)| a.max((x - y).abs()))
    }
}

fn assemble(
    n: usize,
    base: PointedVector,
    coeff: &[DMatrix<f64>],
    deriv: impl Fn(usize, usize, usize, usize) -> f64,
) -> CurvatureTensor {
    // deriv(k, i, j, l) = D_k coeff^i_jl.
    let mut out = CurvatureTensor::zeros(n, base);
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    let mut v = deriv(k, i, j, l) - deriv(l, i, j, k);
                    for h in 0..n {
                        v += coeff[i][(h, k)] * coeff[h][(j, l)] - coeff[i][(h, l)] * coeff[h][(j, k)];
                    }
                    out.set(i, j, k, l, v);
                }
            }
        }
    }
    out
}

fn flatten(c: &[DMatrix<f64>]) -> Vec<f64> {
    c.iter().flat_map(|m| m.iter().copied()).collect()
}

/// Central difference of the Chern coefficients along one coordinate of `x`
/// or `y`, with two Richardson levels; shrinks the step near the singular set.
fn chern_partial(
    model: &dyn Lagrangian,
    p: &PointedVector,
    tol: &Tolerances,
    along_y: bool,
    k: usize,
) -> Result<Vec<f64>> {
    let scale = if along_y { p.y_norm() } else { 1.0 + p.x[k].abs() };
    let mut h = 1e-2 * scale;
    for _ in 0..6 {
        let shifted = |d: f64| {
            let mut q = p.clone();
            if along_y {
                q.y[k] += d;
            } else {
                q.x[k] += d;
            }
            q
        };
        let all_regular = [h, -h].iter().all(|d| is_regular(model, &shifted(*d), tol));
        if !all_regular {
            h *= 0.25;
            continue;
        }
        let level = |hh: f64| -> Result<Vec<f64>> {
            let a = flatten(&chern_coefficients(model, &shifted(hh), tol)?);
            let b = flatten(&chern_coefficients(model, &shifted(-hh), tol)?);
            Ok(a.iter().zip(&b).map(|(u, v)| (u - v) / (2.0 * hh)).collect())
        };
        let d0 = level(h)?;
        let d1 = level(h / 2.0)?;
        let d2 = level(h / 4.0)?;
        let mut out = Vec::with_capacity(d0.len());
        let mut err: f64 = 0.0;
        let mut size: f64 = 0.0;
        for i in 0..d0.len() {
            let r01 = (4.0 * d1[i] - d0[i]) / 3.0;
            let r12 = (4.0 * d2[i] - d1[i]) / 3.0;
            let r = (16.0 * r12 - r01) / 15.0;
            err = err.max((r - r12).abs());
            size = size.max(r.abs());
            out.push(r);
        }
        if err > 1e-5 * (1.0 + size) {
            return Err(FinslerError::NumericalBreakdown(format!(
                "outer Richardson for the Chern coefficients did not settle ({err:e})"
            )));
        }
        return Ok(out);
    }
    Err(FinslerError::NumericalBreakdown(
        "no regular stencil for the Chern coefficients".into(),
    ))
}

/// hh-curvature of the Chern connection, with `δ_k = ∂_k − N^m_k ∂/∂yᵐ`
/// realized by outer finite differences of the Chern coefficients.
pub fn hh_curvature(model: &dyn Lagrangian, p: &PointedVector, tol: &Tolerances) -> Result<CurvatureTensor> {
    let cc = connection(model, p, tol)?;
    let n = model.dim();
    let dx: Vec<Vec<f64>> = (0..n)
        .map(|k| chern_partial(model, p, tol, false, k))
        .collect::<Result<_>>()?;
    let dy: Vec<Vec<f64>> = (0..n)
        .map(|m| chern_partial(model, p, tol, true, m))
        .collect::<Result<_>>()?;
    // Column-major flattening of each n×n block: entry (j, l) at j + l·n.
    let at = |i: usize, j: usize, l: usize| i * n * n + j + l * n;
    let delta = |k: usize, i: usize, j: usize, l: usize| {
        let mut v = dx[k][at(i, j, l)];
        for m in 0..n {
            v -= cc.nmat[(m, k)] * dy[m][at(i, j, l)];
        }
        v
    };
    Ok(assemble(n, p.clone(), &cc.chern, delta))
}

/// Riemann tensor of the formal Christoffel symbols at fixed `y`, built from
/// exact base derivatives of `g` (the form used along geodesics).
pub fn formal_riemann(model: &dyn Lagrangian, p: &PointedVector, tol: &Tolerances) -> Result<CurvatureTensor> {
    let bj = base_jet(model, p, tol)?;
    check_nondegenerate(&bj.g, tol)?;
    let n = model.dim();
    let ginv = bj.g.clone().try_inverse().ok_or(FinslerError::DegenerateMetric {
        det: bj.g.determinant(),
        threshold: tol.degeneracy,
    })?;
    let lower = |s: usize, j: usize, k: usize| 0.5 * (bj.dgx[k][(s, j)] - bj.dgx[s][(j, k)] + bj.dgx[j][(s, k)]);
    let gamma = raise(&ginv, lower);
    // ∂_l γ^i_jk = ∂_l(g^{is}) γ_sjk + g^{is} ∂_l γ_sjk, ∂_l g⁻¹ = −g⁻¹ ∂_l g g⁻¹.
    let dgamma: Vec<Vec<DMatrix<f64>>> = (0..n)
        .map(|l| {
            let dginv = -(&ginv * &bj.dgx[l] * &ginv);
            let a = raise(&dginv, lower);
            let b = raise(&ginv, |s, j, k| {
                0.5 * (bj.dgxx[k][l][(s, j)] - bj.dgxx[s][l][(j, k)] + bj.dgxx[j][l][(s, k)])
            });
            a.iter().zip(&b).map(|(x, y)| x + y).collect()
        })
        .collect();
    Ok(assemble(n, p.clone(), &gamma, |k, i, j, l| dgamma[k][i][(j, l)]))
}

/// Which curvature route feeds the Jacobi operator along curves.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CurvatureRoute {
    /// Exact derivatives of the formal Christoffel symbols at `y = λ̇`.
    #[default]
    Formal,
    /// hh-curvature of the Chern connection (outer finite differences).
    Horizontal,
}

/// Connection and curvature at one point of a curve.
#[derive(Clone, Debug, Serialize)]
pub struct FrameNode {
    pub s: f64,
    pub connection: ConnectionCoefficients,
    pub curvature: CurvatureTensor,
}

impl FrameNode {
    pub fn at(
        model: &dyn Lagrangian,
        s: f64,
        p: &PointedVector,
        tol: &Tolerances,
        route: CurvatureRoute,
    ) -> Result<Self> {
        let connection = connection(model, p, tol)?;
        let curvature = match route {
            CurvatureRoute::Formal => formal_riemann(model, p, tol)?,
            CurvatureRoute::Horizontal => hh_curvature(model, p, tol)?,
        };
        Ok(Self {
            s,
            connection,
            curvature,
        })
    }

    pub fn velocity(&self) -> &[f64] {
        &self.connection.base.y
    }

    /// `R(Y, λ̇)λ̇`.
    pub fn jacobi_term(&self, y: &[f64]) -> Vec<f64> {
        let v = self.velocity();
        self.curvature.apply(y, v, v)
    }

    /// `Γ^i_jk λ̇ʲ Aᵏ`.
    pub fn connection_term(&self, a: &[f64]) -> Vec<f64> {
        self.connection.contract(self.velocity(), a)
    }

    pub fn g(&self, u: &[f64], v: &[f64]) -> f64 {
        pair(&self.connection.g, u, v)
    }
}

/// Connection and curvature at the nodes of a curve, based at `(λ, λ̇)`.
#[derive(Clone, Debug, Serialize)]
pub struct CurveFrame {
    pub nodes: Vec<FrameNode>,
    pub route: CurvatureRoute,
}

pub fn riemann_along_curve(
    model: &dyn Lagrangian,
    curve: &dyn CurveLike,
    count: usize,
    tol: &Tolerances,
    route: CurvatureRoute,
) -> Result<CurveFrame> {
    use rayon::prelude::*;
    let samples = curve.sample(count);
    let nodes = samples
        .par_iter()
        .map(|(s, p)| FrameNode::at(model, *s, p, tol, route))
        .collect::<Result<Vec<_>>>()?;
    Ok(CurveFrame { nodes, route })
}

/// Frame along an integrated geodesic, evaluated at its accepted steps.
pub fn riemann_along_geodesic(
    model: &dyn Lagrangian,
    path: &crate::geodesic::GeodesicPath,
    tol: &Tolerances,
) -> Result<CurveFrame> {
    use rayon::prelude::*;
    let nodes = path
        .nodes()
        .par_iter()
        .map(|(s, p)| FrameNode::at(model, *s, p, tol, CurvatureRoute::Formal))
        .collect::<Result<Vec<_>>>()?;
    Ok(CurveFrame {
        nodes,
        route: CurvatureRoute::Formal,
    })
}

/// `(∇A)^i = dAⁱ/ds + Γ^i_jk(λ, λ̇) λ̇ʲ Aᵏ` at parameter `s`.
pub fn covariant_derivative_along(
    model: &dyn Lagrangian,
    curve: &dyn CurveLike,
    field: &dyn VectorField,
    s: f64,
    tol: &Tolerances,
) -> Result<Vec<f64>> {
    let p = curve.point(s);
    let cc = connection(model, &p, tol)?;
    let a = field.value(s);
    let da = field.derivative(s);
    let corr = cc.contract(&p.y, &a);
    Ok(da.iter().zip(&corr).map(|(x, y)| x + y).collect())
}

/// `N^i_j y^j = 2 G^i`; handy for spray identities.
pub fn spray(cc: &ConnectionCoefficients) -> DVector<f64> {
    &cc.nmat * DVector::from_column_slice(&cc.base.y)
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
    fn minkowski_connection_vanishes() {
        let m = minkowski(4).unwrap();
        let p = PointedVector::new(vec![0.3, 1.0, -2.0, 0.0], vec![1.0, 0.2, 0.1, 0.0]);
        let cc = connection(m.as_ref(), &p, &tol()).unwrap();
        assert!(cc.chern.iter().all(|c| c.amax() == 0.0));
        assert_eq!(cc.nmat.amax(), 0.0);
        assert_eq!(hh_curvature(m.as_ref(), &p, &tol()).unwrap().max_abs(), 0.0);
        assert_eq!(formal_riemann(m.as_ref(), &p, &tol()).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn schwarzschild_gamma_r_tt() {
        let s = schwarzschild(1.0).unwrap();
        let p = PointedVector::new(vec![0.0, 4.0, PI / 2.0, 0.0], vec![1.0, 0.0, 0.0, 0.0]);
        let g = christoffel_formal(s.as_ref(), &p, &tol()).unwrap();
        assert!((g[1][(0, 0)] - 0.03125).abs() < 1e-15);
        let cc = connection(s.as_ref(), &p, &tol()).unwrap();
        assert!(cc.torsion() < 1e-15);
        assert!(cc.compatibility_residual() < 1e-14);
    }

    #[test]
    fn curvature_routes_agree_for_schwarzschild() {
        let s = schwarzschild(1.0).unwrap();
        let p = PointedVector::new(vec![0.0, 6.0, 1.1, 0.2], vec![1.0, 0.1, 0.02, 0.03]);
        let a = hh_curvature(s.as_ref(), &p, &tol()).unwrap();
        let b = formal_riemann(s.as_ref(), &p, &tol()).unwrap();
        assert!(a.max_difference(&b) < 1e-8 * b.max_abs(), "{}", a.max_difference(&b));
        assert!(b.antisymmetry_defect() < 1e-14);
    }
}
