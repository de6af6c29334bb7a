//! Fiber and base derivatives of `L`, the fundamental and Cartan tensors, and
//! the axiom checks of a Finsler spacetime.
//!
//! The stored fundamental tensor is the full fiber Hessian
//! `g_ij = ∂²L/∂yⁱ∂yʲ`, so that `L = ½ g_ij yⁱ yʲ`. Every sign test,
//! orthogonality condition and ratio used downstream is insensitive to this
//! uniform factor; [`FundamentalTensor::metric`] returns the half-Hessian for
//! callers that want `h` itself for a quadratic `L = h(y, y)`.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{FinslerError, Result};
use crate::jet::{HyperDual, Jet3, Jet4, MultiDual};
use crate::model::{ensure_regular, Lagrangian};
use crate::point::{norm, PointedVector, Tolerances};

pub use crate::model::evaluate;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Var {
    X(usize),
    Y(usize),
}

/// How derivatives are obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Backend {
    /// Exact jets when the model supports them, otherwise finite differences.
    #[default]
    Auto,
    FiniteDifference,
}

fn seeded<const C: usize>(x: &[f64], y: &[f64], vars: &[Var]) -> (Vec<MultiDual<C>>, Vec<MultiDual<C>>) {
    let mut xs: Vec<MultiDual<C>> = x.iter().map(|v| MultiDual::constant(*v)).collect();
    let mut ys: Vec<MultiDual<C>> = y.iter().map(|v| MultiDual::constant(*v)).collect();
    for (k, v) in vars.iter().enumerate() {
        match *v {
            Var::X(i) => xs[i].c[1 << k] += 1.0,
            Var::Y(i) => ys[i].c[1 << k] += 1.0,
        }
    }
    (xs, ys)
}

fn hd(model: &dyn Lagrangian, p: &PointedVector, vars: [Var; 2]) -> Option<HyperDual> {
    let (xs, ys) = seeded(&p.x, &p.y, &vars);
    model.value_hd(&xs, &ys)
}

fn j3(model: &dyn Lagrangian, p: &PointedVector, vars: [Var; 3]) -> Option<Jet3> {
    let (xs, ys) = seeded(&p.x, &p.y, &vars);
    model.value_jet3(&xs, &ys)
}

fn j4(model: &dyn Lagrangian, p: &PointedVector, vars: [Var; 4]) -> Option<Jet4> {
    let (xs, ys) = seeded(&p.x, &p.y, &vars);
    model.value_jet4(&xs, &ys)
}

/// Mixed partial derivative of `L` by central differences with two levels of
/// Richardson extrapolation.
pub fn fd_partial(model: &dyn Lagrangian, p: &PointedVector, vars: &[Var]) -> Result<f64> {
    let k = vars.len();
    if k == 0 {
        return Ok(model.value(&p.x, &p.y));
    }
    let base = 4.0 * f64::EPSILON.powf(1.0 / (k as f64 + 3.0));
    let steps: Vec<f64> = vars
        .iter()
        .map(|v| {
            let c = match *v {
                Var::X(i) => p.x[i],
                Var::Y(i) => p.y[i],
            };
            base * (1.0 + c.abs()).min(1.0 + norm(&p.y))
        })
        .collect();
    let stencil = |scale: f64| -> f64 {
        let mut acc = 0.0;
        for signs in 0..(1usize << k) {
            let mut x = p.x.clone();
            let mut y = p.y.clone();
            let mut sign = 1.0;
            for (j, v) in vars.iter().enumerate() {
                let s = if signs & (1 << j) != 0 { -1.0 } else { 1.0 };
                sign *= s;
                let h = s * steps[j] * scale;
                match *v {
                    Var::X(i) => x[i] += h,
                    Var::Y(i) => y[i] += h,
                }
            }
            acc += sign * model.value(&x, &y);
        }
        let denom: f64 = steps.iter().map(|h| 2.0 * h * scale).product();
        acc / denom
    };
    let d0 = stencil(1.0);
    let d1 = stencil(0.5);
    let d2 = stencil(0.25);
    let r01 = (4.0 * d1 - d0) / 3.0;
    let r12 = (4.0 * d2 - d1) / 3.0;
    let r = (16.0 * r12 - r01) / 15.0;
    if !r.is_finite() {
        return Err(FinslerError::NumericalBreakdown(format!(
            "finite-difference stencil left the regular domain at {p:?}"
        )));
    }
    let err = (r - r12).abs();
    let allowed = if k <= 2 { 1e-5 } else { 1e-2 };
    if err > allowed * (1.0 + r.abs()) {
        return Err(FinslerError::NumericalBreakdown(format!(
            "Richardson extrapolation did not settle (estimate {err:e}) for {vars:?}"
        )));
    }
    Ok(r)
}

fn finite_or_singular(values: impl IntoIterator<Item = f64>, p: &PointedVector) -> Result<()> {
    if values.into_iter().all(f64::is_finite) {
        Ok(())
    } else {
        Err(FinslerError::singular("non-finite derivative", &p.x, &p.y))
    }
}

fn use_jets(model: &dyn Lagrangian, backend: Backend) -> bool {
    backend == Backend::Auto && model.analytic_level() != crate::model::AnalyticLevel::None
}

/// Derivatives up to second order, enough for the geodesic equation.
#[derive(Clone, Debug)]
pub struct SecondOrder {
    pub value: f64,
    pub dl_dy: DVector<f64>,
    pub dl_dx: DVector<f64>,
    /// `g_ij = ∂²L/∂yⁱ∂yʲ`.
    pub g: DMatrix<f64>,
    /// `mixed[(k, i)] = ∂²L/∂xᵏ∂yⁱ`.
    pub mixed: DMatrix<f64>,
}

pub fn second_order(model: &dyn Lagrangian, p: &PointedVector, tol: &Tolerances) -> Result<SecondOrder> {
    second_order_with(model, p, tol, Backend::Auto)
}

pub fn second_order_with(
    model: &dyn Lagrangian,
    p: &PointedVector,
    tol: &Tolerances,
    backend: Backend,
) -> Result<SecondOrder> {
    ensure_regular(model, p, tol)?;
    let n = model.dim();
    let mut out = SecondOrder {
        value: 0.0,
        dl_dy: DVector::zeros(n),
        dl_dx: DVector::zeros(n),
        g: DMatrix::zeros(n, n),
        mixed: DMatrix::zeros(n, n),
    };
    if use_jets(model, backend) {
        for i in 0..n {
            for j in i..n {
                let v = hd(model, p, [Var::Y(i), Var::Y(j)]).expect("jet support");
                out.value = v.c[0];
                out.g[(i, j)] = v.top();
                out.g[(j, i)] = v.top();
                if i == j {
                    out.dl_dy[i] = v.coeff(1);
                }
            }
            for k in 0..n {
                let v = hd(model, p, [Var::X(k), Var::Y(i)]).expect("jet support");
                out.mixed[(k, i)] = v.top();
                out.dl_dx[k] = v.coeff(1);
            }
        }
    } else {
        out.value = model.value(&p.x, &p.y);
        for i in 0..n {
            out.dl_dy[i] = fd_partial(model, p, &[Var::Y(i)])?;
            out.dl_dx[i] = fd_partial(model, p, &[Var::X(i)])?;
            for j in i..n {
                let v = fd_partial(model, p, &[Var::Y(i), Var::Y(j)])?;
                out.g[(i, j)] = v;
                out.g[(j, i)] = v;
            }
            for k in 0..n {
                out.mixed[(k, i)] = fd_partial(model, p, &[Var::X(k), Var::Y(i)])?;
            }
        }
    }
    finite_or_singular(
        std::iter::once(out.value)
            .chain(out.g.iter().copied())
            .chain(out.mixed.iter().copied())
            .chain(out.dl_dx.iter().copied()),
        p,
    )?;
    Ok(out)
}

/// All derivatives up to third order in `y` and first order in `x` of the
/// fiber Hessian.
#[derive(Clone, Debug, Serialize)]
pub struct DerivativeBundle {
    pub value: f64,
    pub dl_dy: DVector<f64>,
    pub dl_dx: DVector<f64>,
    pub d2l_dydy: DMatrix<f64>,
    /// `d2l_dxdy[(k, i)] = ∂²L/∂xᵏ∂yⁱ`.
    pub d2l_dxdy: DMatrix<f64>,
    /// `d3l_dydydy[k][(i, j)] = ∂g_ij/∂yᵏ`.
    pub d3l_dydydy: Vec<DMatrix<f64>>,
    /// `d3l_dydydx[k][(i, j)] = ∂g_ij/∂xᵏ`.
    pub d3l_dydydx: Vec<DMatrix<f64>>,
}

pub fn derivative_bundle(
    model: &dyn Lagrangian,
    p: &PointedVector,
    tol: &Tolerances,
) -> Result<DerivativeBundle> {
    derivative_bundle_with(model, p, tol, Backend::Auto)
}

pub fn derivative_bundle_with(
    model: &dyn Lagrangian,
    p: &PointedVector,
    tol: &Tolerances,
    backend: Backend,
) -> Result<DerivativeBundle> {
    ensure_regular(model, p, tol)?;
    let n = model.dim();
    let mut b = DerivativeBundle {
        value: 0.0,
        dl_dy: DVector::zeros(n),
        dl_dx: DVector::zeros(n),
        d2l_dydy: DMatrix::zeros(n, n),
        d2l_dxdy: DMatrix::zeros(n, n),
        d3l_dydydy: vec![DMatrix::zeros(n, n); n],
        d3l_dydydx: vec![DMatrix::zeros(n, n); n],
    };
    if use_jets(model, backend) {
        for i in 0..n {
            for j in i..n {
                for k in 0..n {
                    let v = j3(model, p, [Var::Y(i), Var::Y(j), Var::X(k)]).expect("jet support");
                    b.value = v.c[0];
                    b.d2l_dydy[(i, j)] = v.coeff(0b011);
                    b.d2l_dydy[(j, i)] = v.coeff(0b011);
                    b.d3l_dydydx[k][(i, j)] = v.top();
                    b.d3l_dydydx[k][(j, i)] = v.top();
                    b.d2l_dxdy[(k, i)] = v.coeff(0b101);
                    b.d2l_dxdy[(k, j)] = v.coeff(0b110);
                    b.dl_dx[k] = v.coeff(0b100);
                    b.dl_dy[i] = v.coeff(0b001);
                    let w = j3(model, p, [Var::Y(i), Var::Y(j), Var::Y(k)]).expect("jet support");
                    b.d3l_dydydy[k][(i, j)] = w.top();
                    b.d3l_dydydy[k][(j, i)] = w.top();
                }
            }
        }
    } else {
        let s = second_order_with(model, p, tol, backend)?;
        b.value = s.value;
        b.dl_dy = s.dl_dy;
        b.dl_dx = s.dl_dx;
        b.d2l_dydy = s.g;
        b.d2l_dxdy = s.mixed;
        for i in 0..n {
            for j in i..n {
                for k in 0..n {
                    let v = fd_partial(model, p, &[Var::Y(i), Var::Y(j), Var::X(k)])?;
                    b.d3l_dydydx[k][(i, j)] = v;
                    b.d3l_dydydx[k][(j, i)] = v;
                    let w = fd_partial(model, p, &[Var::Y(i), Var::Y(j), Var::Y(k)])?;
                    b.d3l_dydydy[k][(i, j)] = w;
                    b.d3l_dydydy[k][(j, i)] = w;
                }
            }
        }
    }
    finite_or_singular(
        b.d2l_dydy
            .iter()
            .chain(b.d3l_dydydy.iter().flat_map(|m| m.iter()))
            .chain(b.d3l_dydydx.iter().flat_map(|m| m.iter()))
            .copied(),
        p,
    )?;
    Ok(b)
}

/// `g`, `∂g/∂x` and `∂²g/∂x∂x` at a point, for curvature along curves.
#[derive(Clone, Debug)]
pub struct BaseJet {
    pub g: DMatrix<f64>,
    /// `dgx[k] = ∂g/∂xᵏ`.
    pub dgx: Vec<DMatrix<f64>>,
    /// `dgxx[k][l] = ∂²g/∂xᵏ∂xˡ`.
    pub dgxx: Vec<Vec<DMatrix<f64>>>,
}

pub fn base_jet(model: &dyn Lagrangian, p: &PointedVector, tol: &Tolerances) -> Result<BaseJet> {
    ensure_regular(model, p, tol)?;
    let n = model.dim();
    let mut out = BaseJet {
        g: DMatrix::zeros(n, n),
        dgx: vec![DMatrix::zeros(n, n); n],
        dgxx: vec![vec![DMatrix::zeros(n, n); n]; n],
    };
    let jets = use_jets(model, Backend::Auto);
    for i in 0..n {
        for j in i..n {
            for k in 0..n {
                for l in k..n {
                    let (g, dk, dl, dkl) = if jets {
                        let v = j4(model, p, [Var::Y(i), Var::Y(j), Var::X(k), Var::X(l)])
                            .expect("jet support");
                        (v.coeff(0b0011), v.coeff(0b0111), v.coeff(0b1011), v.top())
                    } else {
                        (
                            fd_partial(model, p, &[Var::Y(i), Var::Y(j)])?,
                            fd_partial(model, p, &[Var::Y(i), Var::Y(j), Var::X(k)])?,
                            fd_partial(model, p, &[Var::Y(i), Var::Y(j), Var::X(l)])?,
                            fd_partial(model, p, &[Var::Y(i), Var::Y(j), Var::X(k), Var::X(l)])?,
                        )
                    };
                    for (a, b) in [(i, j), (j, i)] {
                        out.g[(a, b)] = g;
                        out.dgx[k][(a, b)] = dk;
                        out.dgx[l][(a, b)] = dl;
                        out.dgxx[k][l][(a, b)] = dkl;
                        out.dgxx[l][k][(a, b)] = dkl;
                    }
                }
            }
        }
    }
    finite_or_singular(
        out.dgxx
            .iter()
            .flatten()
            .flat_map(|m| m.iter())
            .chain(out.g.iter())
            .copied(),
        p,
    )?;
    Ok(out)
}

/// Stored fundamental tensor `g_ij = ∂²L/∂yⁱ∂yʲ` at a pointed vector.
#[derive(Clone, Debug, Serialize)]
pub struct FundamentalTensor {
    pub g: DMatrix<f64>,
    pub base: PointedVector,
}

impl FundamentalTensor {
    /// Half-Hessian; equals `h` for `L = h(y, y)`.
    pub fn metric(&self) -> DMatrix<f64> {
        &self.g * 0.5
    }

    /// `g_p(u, v)` in the stored convention.
    pub fn pair(&self, u: &[f64], v: &[f64]) -> f64 {
        pair(&self.g, u, v)
    }

    /// Counts of (negative, positive) eigenvalues.
    pub fn signature(&self) -> (usize, usize) {
        signature(&self.g)
    }

    pub fn is_lorentzian(&self) -> bool {
        self.signature() == (1, self.g.nrows() - 1)
    }
}

pub fn pair(g: &DMatrix<f64>, u: &[f64], v: &[f64]) -> f64 {
    let n = g.nrows();
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            acc += g[(i, j)] * u[i] * v[j];
        }
    }
    acc
}

pub fn signature(g: &DMatrix<f64>) -> (usize, usize) {
    let eig = g.clone().symmetric_eigen();
    let neg = eig.eigenvalues.iter().filter(|v| **v < 0.0).count();
    let pos = eig.eigenvalues.iter().filter(|v| **v > 0.0).count();
    (neg, pos)
}

/// Flags `|det g| < degeneracy · (max|g_ij|)ⁿ`.
pub fn check_nondegenerate(g: &DMatrix<f64>, tol: &Tolerances) -> Result<()> {
    let n = g.nrows() as i32;
    let scale = g.amax();
    let det = g.determinant();
    let threshold = tol.degeneracy * scale.powi(n);
    if !(det.abs() >= threshold) || scale == 0.0 {
        return Err(FinslerError::DegenerateMetric { det, threshold });
    }
    Ok(())
}

pub fn fundamental_tensor(
    model: &dyn Lagrangian,
    p: &PointedVector,
    tol: &Tolerances,
) -> Result<FundamentalTensor> {
    let s = second_order(model, p, tol)?;
    check_nondegenerate(&s.g, tol)?;
    Ok(FundamentalTensor {
        g: s.g,
        base: p.clone(),
    })
}

/// `C_ijk = ½ ∂g_ij/∂yᵏ`.
#[derive(Clone, Debug, Serialize)]
pub struct CartanTensor {
    /// `c[k][(i, j)] = C_ijk`.
    pub c: Vec<DMatrix<f64>>,
    pub base: PointedVector,
}

impl CartanTensor {
    pub fn from_bundle(b: &DerivativeBundle, base: PointedVector) -> Self {
        Self {
            c: b.d3l_dydydy.iter().map(|m| m * 0.5).collect(),
            base,
        }
    }

    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.c[k][(i, j)]
    }

    /// `C_ijk vᵏ`.
    pub fn contract(&self, v: &[f64]) -> DMatrix<f64> {
        let n = self.c.len();
        let mut out = DMatrix::zeros(n, n);
        for (k, m) in self.c.iter().enumerate() {
            out += m * v[k];
        }
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.c.iter().map(|m| m.amax()).fold(0.0, f64::max)
    }

    /// Largest deviation from total symmetry.
    pub fn asymmetry(&self) -> f64 {
        let n = self.c.len();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let a = self.get(i, j, k);
                    worst = worst
                        .max((a - self.get(j, i, k)).abs())
                        .max((a - self.get(i, k, j)).abs())
                        .max((a - self.get(k, j, i)).abs());
                }
            }
        }
        worst
    }
}

pub fn cartan_tensor(model: &dyn Lagrangian, p: &PointedVector, tol: &Tolerances) -> Result<CartanTensor> {
    let b = derivative_bundle(model, p, tol)?;
    check_nondegenerate(&b.d2l_dydy, tol)?;
    Ok(CartanTensor::from_bundle(&b, p.clone()))
}

/// Maximal normalized violations of the Finsler-spacetime axioms over a sample.
#[derive(Clone, Debug, Default, Serialize)]
pub struct AxiomReport {
    pub samples_checked: usize,
    pub singular_skipped: usize,
    pub homogeneity: f64,
    pub euler: f64,
    pub cartan_contraction: f64,
    pub symmetry: f64,
    pub signature_failures: usize,
    /// Indices (into the input) of samples with non-Lorentzian signature.
    pub signature_failure_indices: Vec<usize>,
}

impl AxiomReport {
    pub fn max_violation(&self) -> f64 {
        self.homogeneity
            .max(self.euler)
            .max(self.cartan_contraction)
            .max(self.symmetry)
    }

    pub fn passes(&self, tol: f64) -> bool {
        self.max_violation() <= tol && self.signature_failures == 0
    }
}

pub const HOMOGENEITY_FACTORS: [f64; 3] = [0.5, 2.0, 3.0];

/// Full fiber Hessian with every entry computed independently.
fn independent_hessian(model: &dyn Lagrangian, p: &PointedVector) -> Result<DMatrix<f64>> {
    let n = model.dim();
    let mut g = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            g[(i, j)] = if use_jets(model, Backend::Auto) {
                hd(model, p, [Var::Y(i), Var::Y(j)]).expect("jet support").top()
            } else {
                fd_partial(model, p, &[Var::Y(i), Var::Y(j)])?
            };
        }
    }
    Ok(g)
}

pub fn check_axioms(model: &dyn Lagrangian, samples: &[PointedVector], tol: &Tolerances) -> AxiomReport {
    let mut rep = AxiomReport::default();
    for (idx, p) in samples.iter().enumerate() {
        let Ok(b) = derivative_bundle(model, p, tol) else {
            rep.singular_skipped += 1;
            continue;
        };
        rep.samples_checked += 1;
        let y = &p.y;
        let ny = norm(y);
        let l = b.value;
        for k in HOMOGENEITY_FACTORS {
            let lk = model.value(&p.x, &p.scaled(k).y);
            rep.homogeneity = rep.homogeneity.max((lk - k * k * l).abs() / (1.0 + (k * k * l).abs()));
        }
        let yv = DVector::from_column_slice(y);
        let gscale = b.d2l_dydy.amax();
        let e1 = (b.dl_dy.dot(&yv) - 2.0 * l).abs() / (1.0 + b.dl_dy.amax() * ny + l.abs());
        let e2 = (&b.d2l_dydy * &yv - &b.dl_dy).amax() / (1.0 + gscale * ny);
        let e3 = (0.5 * yv.dot(&(&b.d2l_dydy * &yv)) - l).abs() / (1.0 + gscale * ny * ny);
        rep.euler = rep.euler.max(e1).max(e2).max(e3);
        let c = CartanTensor::from_bundle(&b, p.clone());
        let cmax = c.max_abs();
        rep.cartan_contraction = rep
            .cartan_contraction
            .max(c.contract(y).amax() / (1.0 + cmax * ny));
        let mut sym = c.asymmetry() / (1.0 + cmax);
        if let Ok(full) = independent_hessian(model, p) {
            sym = sym.max((&full - full.transpose()).amax() / (1.0 + gscale));
        }
        rep.symmetry = rep.symmetry.max(sym);
        let lorentzian = signature(&b.d2l_dydy) == (1, model.dim() - 1)
            && check_nondegenerate(&b.d2l_dydy, tol).is_ok();
        if !lorentzian {
            rep.signature_failures += 1;
            rep.signature_failure_indices.push(idx);
        }
    }
    rep
}

#[derive(Clone, Debug, Serialize)]
pub struct ReversibilityReport {
    pub reversible: bool,
    pub max_deviation: f64,
    pub samples_checked: usize,
    /// Samples where `y` or `−y` is singular, with the error kind.
    pub skipped: Vec<(usize, String)>,
}

pub fn check_reversibility(
    model: &dyn Lagrangian,
    samples: &[PointedVector],
    tol: &Tolerances,
) -> ReversibilityReport {
    let mut rep = ReversibilityReport {
        reversible: true,
        max_deviation: 0.0,
        samples_checked: 0,
        skipped: Vec::new(),
    };
    for (idx, p) in samples.iter().enumerate() {
        let fwd = evaluate(model, p, tol);
        let back = evaluate(model, &p.reversed(), tol);
        match (fwd, back) {
            (Ok(a), Ok(b)) => {
                rep.samples_checked += 1;
                let d = (a - b).abs();
                rep.max_deviation = rep.max_deviation.max(d);
                if d > tol.abs + tol.rel * a.abs().max(b.abs()) {
                    rep.reversible = false;
                }
            }
            (Err(e), _) | (_, Err(e)) => rep.skipped.push((idx, e.kind().to_string())),
        }
    }
    rep
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{bogoslovsky, minkowski, model_from_name, schwarzschild};
    use std::collections::BTreeMap;
    use std::f64::consts::PI;

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    #[test]
    fn minkowski_hessian_is_twice_eta() {
        let m = minkowski(4).unwrap();
        let p = PointedVector::new(vec![0.0; 4], vec![1.0, 0.2, -0.1, 0.3]);
        let ft = fundamental_tensor(m.as_ref(), &p, &tol()).unwrap();
        let expect = DMatrix::from_diagonal(&DVector::from_vec(vec![-2.0, 2.0, 2.0, 2.0]));
        assert_eq!(ft.g, expect);
        assert!(ft.is_lorentzian());
        let b = derivative_bundle(m.as_ref(), &p, &tol()).unwrap();
        assert!(b.d3l_dydydy.iter().all(|c| c.amax() == 0.0));
        assert!(b.d3l_dydydx.iter().all(|c| c.amax() == 0.0));
    }

    #[test]
    fn schwarzschild_metric_entries() {
        let s = schwarzschild(1.0).unwrap();
        let p = PointedVector::new(vec![0.0, 4.0, PI / 2.0, 0.0], vec![1.0, 0.0, 0.0, 0.0]);
        let h = fundamental_tensor(s.as_ref(), &p, &tol()).unwrap().metric();
        assert!((h[(0, 0)] + 0.5).abs() < 1e-15);
        assert!((h[(1, 1)] - 2.0).abs() < 1e-15);
        assert!((h[(2, 2)] - 16.0).abs() < 1e-13);
        assert!((h[(3, 3)] - 16.0).abs() < 1e-13);
        let cartan = cartan_tensor(s.as_ref(), &p, &tol()).unwrap();
        assert_eq!(cartan.max_abs(), 0.0);
    }

    #[test]
    fn rutz_with_zero_delta_matches_schwarzschild_tensor() {
        let r = model_from_name("rutz", &BTreeMap::from([("delta".to_string(), 0.0)])).unwrap();
        let s = schwarzschild(1.0).unwrap();
        let p = PointedVector::new(vec![0.0, 5.0, 1.1, 0.0], vec![1.0, 0.1, 0.2, -0.1]);
        let a = fundamental_tensor(r.as_ref(), &p, &tol()).unwrap().g;
        let b = fundamental_tensor(s.as_ref(), &p, &tol()).unwrap().g;
        assert!((a - b).amax() < 1e-13);
    }

    #[test]
    fn bogoslovsky_zero_is_minkowski_bundle() {
        let b0 = bogoslovsky(0.0, vec![1.0, 0.0, 0.0, 1.0]).unwrap();
        let m = minkowski(4).unwrap();
        let p = PointedVector::new(vec![0.0; 4], vec![1.0, 0.3, -0.2, 0.1]);
        let a = derivative_bundle(b0.as_ref(), &p, &tol()).unwrap();
        let c = derivative_bundle(m.as_ref(), &p, &tol()).unwrap();
        assert_eq!(a.value, c.value);
        assert!((a.d2l_dydy - c.d2l_dydy).amax() < 1e-14);
        assert!(a.d3l_dydydy.iter().all(|m| m.amax() < 1e-14));
    }

    #[test]
    fn degenerate_metric_is_flagged() {
        let g = DMatrix::from_diagonal(&DVector::from_vec(vec![-1.0, 1.0, 1e-14]));
        assert!(matches!(
            check_nondegenerate(&g, &tol()),
            Err(FinslerError::DegenerateMetric { .. })
        ));
    }

    #[test]
    fn fd_and_jets_agree_on_bogoslovsky() {
        let b = bogoslovsky(0.1, vec![1.0, 0.0, 0.0, 1.0]).unwrap();
        let p = PointedVector::new(vec![0.0; 4], vec![1.0, 0.3, -0.2, 0.1]);
        let a = derivative_bundle_with(b.as_ref(), &p, &tol(), Backend::Auto).unwrap();
        let f = derivative_bundle_with(b.as_ref(), &p, &tol(), Backend::FiniteDifference).unwrap();
        let rel = |x: f64, y: f64| (x - y).abs() / (1.0 + y.abs());
        for i in 0..4 {
            for j in 0..4 {
                assert!(rel(f.d2l_dydy[(i, j)], a.d2l_dydy[(i, j)]) < 1e-6);
                for k in 0..4 {
                    assert!(rel(f.d3l_dydydy[k][(i, j)], a.d3l_dydydy[k][(i, j)]) < 1e-6);
                }
            }
        }
    }

    #[test]
    fn minkowski_axioms_exact() {
        let m = minkowski(4).unwrap();
        let samples: Vec<_> = (0..10)
            .map(|k| {
                let t = k as f64;
                PointedVector::new(vec![t, 0.0, 1.0, -t], vec![1.0 + t, 0.3 * t, -0.2, 0.5])
            })
            .collect();
        let rep = check_axioms(m.as_ref(), &samples, &tol());
        assert_eq!(rep.samples_checked, 10);
        assert!(rep.max_violation() <= 1e-12, "{rep:?}");
        assert_eq!(rep.signature_failures, 0);
        let rev = check_reversibility(m.as_ref(), &samples, &tol());
        assert!(rev.reversible);
        assert_eq!(rev.max_deviation, 0.0);
    }
}
