use std::collections::BTreeMap;

use nalgebra::DMatrix;

use crate::error::{FinslerError, Result};
use crate::jet::Scalar;
use crate::model::GenericLagrangian;

/// `η(u, v)` with signature `(−,+,…,+)`.
pub fn eta<S: Scalar>(u: &[S], v: &[S]) -> S {
    let mut acc = -(u[0] * v[0]);
    for i in 1..u.len() {
        acc += u[i] * v[i];
    }
    acc
}

/// `η` on a constant (f64) vector and a generic one.
pub fn eta_mixed<S: Scalar>(u: &[f64], v: &[S]) -> S {
    let mut acc = v[0] * (-u[0]);
    for i in 1..u.len() {
        acc += v[i] * u[i];
    }
    acc
}

/// Flat spacetime `L = −(y⁰)² + Σ (yⁱ)²`.
#[derive(Clone, Debug)]
pub struct Minkowski {
    n: usize,
}

impl Minkowski {
    pub fn new(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(FinslerError::bad_param("n", "dimension must be at least 2"));
        }
        Ok(Self { n })
    }
}

impl GenericLagrangian for Minkowski {
    fn name(&self) -> &str {
        "minkowski"
    }
    fn dim(&self) -> usize {
        self.n
    }
    fn params(&self) -> BTreeMap<String, f64> {
        BTreeMap::from([("n".to_string(), self.n as f64)])
    }
    fn eval<S: Scalar>(&self, _x: &[S], y: &[S]) -> S {
        eta(y, y)
    }
    fn margin(&self, _x: &[f64], _y: &[f64]) -> f64 {
        1.0
    }
    fn chart_description(&self) -> String {
        format!("inertial coordinates (t, x1..x{})", self.n - 1)
    }
    fn time_orientation(&self, _x: &[f64]) -> Option<Vec<f64>> {
        Some(unit(self.n, 0))
    }
}

pub(crate) fn unit(n: usize, k: usize) -> Vec<f64> {
    let mut v = vec![0.0; n];
    v[k] = 1.0;
    v
}

/// A position-dependent symmetric bilinear form `h_x`.
pub trait MetricField: Send + Sync {
    fn name(&self) -> &str;
    fn dim(&self) -> usize;
    fn params(&self) -> BTreeMap<String, f64>;
    /// `h_x(y, y)`.
    fn quadratic<S: Scalar>(&self, x: &[S], y: &[S]) -> S;
    fn margin(&self, x: &[f64]) -> f64;
    fn chart_description(&self) -> String;
    fn time_orientation(&self, x: &[f64]) -> Option<Vec<f64>>;
}

/// `L(x, y) = h_x(y, y)` for a Lorentzian metric field `h`.
#[derive(Clone, Debug)]
pub struct LorentzianModel<F>(pub F);

impl<F: MetricField> GenericLagrangian for LorentzianModel<F> {
    fn name(&self) -> &str {
        self.0.name()
    }
    fn dim(&self) -> usize {
        self.0.dim()
    }
    fn params(&self) -> BTreeMap<String, f64> {
        self.0.params()
    }
    fn eval<S: Scalar>(&self, x: &[S], y: &[S]) -> S {
        self.0.quadratic(x, y)
    }
    fn margin(&self, x: &[f64], _y: &[f64]) -> f64 {
        self.0.margin(x)
    }
    fn chart_description(&self) -> String {
        self.0.chart_description()
    }
    fn time_orientation(&self, x: &[f64]) -> Option<Vec<f64>> {
        self.0.time_orientation(x)
    }
}

/// Constant metric matrix; must have Lorentzian signature.
#[derive(Clone, Debug)]
pub struct ConstantMetric {
    h: DMatrix<f64>,
    orientation: Vec<f64>,
}

impl ConstantMetric {
    pub fn new(h: DMatrix<f64>) -> Result<Self> {
        let n = h.nrows();
        if n < 2 || h.ncols() != n {
            return Err(FinslerError::DimensionMismatch {
                expected: n,
                got: h.ncols(),
            });
        }
        if (&h - h.transpose()).amax() > 1e-12 * (1.0 + h.amax()) {
            return Err(FinslerError::bad_param("h", "metric must be symmetric"));
        }
        let eig = h.clone().symmetric_eigen();
        let scale = eig.eigenvalues.amax();
        let det = h.determinant();
        if det.abs() < 1e-10 * scale.powi(n as i32) {
            return Err(FinslerError::DegenerateMetric {
                det,
                threshold: 1e-10 * scale.powi(n as i32),
            });
        }
        let neg: Vec<usize> = (0..n).filter(|&i| eig.eigenvalues[i] < 0.0).collect();
        if neg.len() != 1 {
            return Err(FinslerError::bad_param("h", "metric is not Lorentzian"));
        }
        let mut orientation: Vec<f64> = eig.eigenvectors.column(neg[0]).iter().copied().collect();
        // Orient along +t when possible.
        let k = (0..n)
            .max_by(|&a, &b| orientation[a].abs().total_cmp(&orientation[b].abs()))
            .unwrap_or(0);
        if orientation[k] < 0.0 {
            orientation.iter_mut().for_each(|v| *v = -*v);
        }
        Ok(Self { h, orientation })
    }
}

impl MetricField for ConstantMetric {
    fn name(&self) -> &str {
        "lorentzian"
    }
    fn dim(&self) -> usize {
        self.h.nrows()
    }
    fn params(&self) -> BTreeMap<String, f64> {
        let mut p = BTreeMap::new();
        for i in 0..self.dim() {
            for j in i..self.dim() {
                p.insert(format!("h{i}{j}"), self.h[(i, j)]);
            }
        }
        p
    }
    fn quadratic<S: Scalar>(&self, _x: &[S], y: &[S]) -> S {
        let n = self.dim();
        let mut acc = S::zero();
        for i in 0..n {
            acc += y[i] * y[i] * self.h[(i, i)];
            for j in (i + 1)..n {
                acc += y[i] * y[j] * (2.0 * self.h[(i, j)]);
            }
        }
        acc
    }
    fn margin(&self, _x: &[f64]) -> f64 {
        1.0
    }
    fn chart_description(&self) -> String {
        "constant metric chart".into()
    }
    fn time_orientation(&self, _x: &[f64]) -> Option<Vec<f64>> {
        Some(self.orientation.clone())
    }
}

/// Exterior Schwarzschild metric in coordinates `(t, r, θ, φ)`.
#[derive(Clone, Debug)]
pub struct SchwarzschildField {
    pub m: f64,
}

impl SchwarzschildField {
    pub fn new(m: f64) -> Result<Self> {
        if !(m > 0.0 && m.is_finite()) {
            return Err(FinslerError::bad_param("m", "mass must be positive"));
        }
        Ok(Self { m })
    }
}

impl MetricField for SchwarzschildField {
    fn name(&self) -> &str {
        "schwarzschild"
    }
    fn dim(&self) -> usize {
        4
    }
    fn params(&self) -> BTreeMap<String, f64> {
        BTreeMap::from([("m".to_string(), self.m)])
    }
    fn quadratic<S: Scalar>(&self, x: &[S], y: &[S]) -> S {
        let r = x[1];
        let f = S::one() - r.recip() * (2.0 * self.m);
        let s = x[2].sin();
        -(f * y[0] * y[0]) + y[1] * y[1] / f + r * r * (y[2] * y[2] + s * s * y[3] * y[3])
    }
    fn margin(&self, x: &[f64]) -> f64 {
        (x[1] - 2.0 * self.m).min(x[2].sin().abs())
    }
    fn chart_description(&self) -> String {
        "Schwarzschild coordinates (t, r, theta, phi), r > 2m".into()
    }
    fn time_orientation(&self, _x: &[f64]) -> Option<Vec<f64>> {
        Some(unit(4, 0))
    }
}

/// Static product `R × S²` with metric `diag(−1, 1, sin²θ)` in `(t, θ, φ)`.
#[derive(Clone, Debug, Default)]
pub struct ProductSphereField;

impl MetricField for ProductSphereField {
    fn name(&self) -> &str {
        "product_sphere"
    }
    fn dim(&self) -> usize {
        3
    }
    fn params(&self) -> BTreeMap<String, f64> {
        BTreeMap::new()
    }
    fn quadratic<S: Scalar>(&self, x: &[S], y: &[S]) -> S {
        let s = x[1].sin();
        -(y[0] * y[0]) + y[1] * y[1] + s * s * y[2] * y[2]
    }
    fn margin(&self, x: &[f64]) -> f64 {
        x[1].sin().abs()
    }
    fn chart_description(&self) -> String {
        "(t, theta, phi) on R x S^2, unit sphere".into()
    }
    fn time_orientation(&self, _x: &[f64]) -> Option<Vec<f64>> {
        Some(unit(3, 0))
    }
}

pub type Schwarzschild = LorentzianModel<SchwarzschildField>;
pub type ProductSphere = LorentzianModel<ProductSphereField>;
