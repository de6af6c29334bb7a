//! Optical-medium and phenomenological deformations of flat spacetime.

use std::collections::BTreeMap;

use super::lorentzian::{eta, eta_mixed, unit};
use crate::error::{FinslerError, Result};
use crate::jet::Scalar;
use crate::model::GenericLagrangian;
use crate::point::norm;

/// Degree-one homogeneous "spatial" norm, supplied through its square.
pub trait NormField: Send + Sync {
    fn params(&self) -> BTreeMap<String, f64>;
    fn ell_sq<S: Scalar>(&self, x: &[S], y: &[S]) -> S;
}

/// One-form field `U(x)`.
pub trait CovectorField: Send + Sync {
    fn params(&self) -> BTreeMap<String, f64>;
    fn covector<S: Scalar>(&self, x: &[S]) -> Vec<S>;
}

/// `ℓ² = Σ_{i≥1} (yⁱ)²`.
#[derive(Clone, Debug, Default)]
pub struct EuclideanSpatial;

impl NormField for EuclideanSpatial {
    fn params(&self) -> BTreeMap<String, f64> {
        BTreeMap::new()
    }
    fn ell_sq<S: Scalar>(&self, _x: &[S], y: &[S]) -> S {
        let mut acc = S::zero();
        for v in &y[1..] {
            acc += *v * *v;
        }
        acc
    }
}

/// `ℓ² = |ȳ|² + κ (y¹)⁴ / |y|²`: birefringence along the first spatial axis,
/// smooth away from `y = 0`.
#[derive(Clone, Debug)]
pub struct AnisotropicSpatial {
    pub kappa: f64,
}

impl NormField for AnisotropicSpatial {
    fn params(&self) -> BTreeMap<String, f64> {
        BTreeMap::from([("kappa".to_string(), self.kappa)])
    }
    fn ell_sq<S: Scalar>(&self, x: &[S], y: &[S]) -> S {
        let spatial = EuclideanSpatial.ell_sq(x, y);
        if self.kappa == 0.0 {
            return spatial;
        }
        let full = spatial + y[0] * y[0];
        let a2 = y[1] * y[1];
        spatial + a2 * a2 / full * self.kappa
    }
}

#[derive(Clone, Debug)]
pub struct ConstantCovector(pub Vec<f64>);

impl CovectorField for ConstantCovector {
    fn params(&self) -> BTreeMap<String, f64> {
        BTreeMap::from([("index".to_string(), self.0[0])])
    }
    fn covector<S: Scalar>(&self, _x: &[S]) -> Vec<S> {
        self.0.iter().map(|v| S::cst(*v)).collect()
    }
}

/// Light propagation in a linear dielectric: `L = ½(ℓ² − (U·y)²)`.
#[derive(Clone, Debug)]
pub struct Dielectric<N, U> {
    pub ell: N,
    pub u: U,
    n: usize,
}

impl<N: NormField, U: CovectorField> Dielectric<N, U> {
    pub fn new(n: usize, ell: N, u: U) -> Result<Self> {
        if n < 2 {
            return Err(FinslerError::bad_param("n", "dimension must be at least 2"));
        }
        let probe = u.covector::<f64>(&vec![0.0; n]);
        if probe.len() != n {
            return Err(FinslerError::DimensionMismatch {
                expected: n,
                got: probe.len(),
            });
        }
        Ok(Self { ell, u, n })
    }
}

/// The catalog medium: refractive index `index` and anisotropy `kappa`.
pub type AnisotropicMedium = Dielectric<AnisotropicSpatial, ConstantCovector>;

pub fn anisotropic_medium(index: f64, kappa: f64) -> Result<AnisotropicMedium> {
    if !(index > 0.0 && index.is_finite()) {
        return Err(FinslerError::bad_param("index", "must be positive"));
    }
    if !(kappa.is_finite() && kappa > -0.5) {
        return Err(FinslerError::bad_param("kappa", "must exceed -1/2"));
    }
    Dielectric::new(
        4,
        AnisotropicSpatial { kappa },
        ConstantCovector(vec![index, 0.0, 0.0, 0.0]),
    )
}

impl<N: NormField, U: CovectorField> GenericLagrangian for Dielectric<N, U> {
    fn name(&self) -> &str {
        "dielectric"
    }
    fn dim(&self) -> usize {
        self.n
    }
    fn params(&self) -> BTreeMap<String, f64> {
        let mut p = self.ell.params();
        p.extend(self.u.params());
        p
    }
    fn eval<S: Scalar>(&self, x: &[S], y: &[S]) -> S {
        let u = self.u.covector(x);
        let mut uy = S::zero();
        for i in 0..self.n {
            uy += u[i] * y[i];
        }
        (self.ell.ell_sq(x, y) - uy * uy) * 0.5
    }
    fn margin(&self, _x: &[f64], _y: &[f64]) -> f64 {
        1.0
    }
    fn chart_description(&self) -> String {
        "lab frame (t, x1..); medium at rest".into()
    }
    fn time_orientation(&self, _x: &[f64]) -> Option<Vec<f64>> {
        Some(unit(self.n, 0))
    }
}

/// Which sign of `η` the rainbow square roots are taken of.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RainbowSign {
    /// `sqrt(η)`: regular on spacelike vectors.
    Literal,
    /// `sqrt(−η)` with an overall minus: regular on timelike vectors.
    Timelike,
}

impl RainbowSign {
    fn sigma(self) -> f64 {
        match self {
            RainbowSign::Literal => 1.0,
            RainbowSign::Timelike => -1.0,
        }
    }
}

/// Rainbow deformation of flat spacetime relative to a unit timelike `W`:
/// `L = σ (sqrt(e) − C₁ η̄(ȳ,ȳ)^{3/2} / e)²`, `e = σ η(y,y)`.
#[derive(Clone, Debug)]
pub struct Rainbow {
    pub c1: f64,
    pub sign: RainbowSign,
    w: Vec<f64>,
}

impl Rainbow {
    pub fn new(n: usize, c1: f64, w: Vec<f64>, sign: RainbowSign) -> Result<Self> {
        if w.len() != n || n < 2 {
            return Err(FinslerError::DimensionMismatch {
                expected: n,
                got: w.len(),
            });
        }
        if !c1.is_finite() {
            return Err(FinslerError::bad_param("c1", "must be finite"));
        }
        let ww = eta(&w, &w);
        if !(ww < 0.0) {
            return Err(FinslerError::bad_param("w", "W must be timelike"));
        }
        let s = (-ww).sqrt();
        Ok(Self {
            c1,
            sign,
            w: w.iter().map(|v| v / s).collect(),
        })
    }

    fn spatial<S: Scalar>(&self, y: &[S]) -> Vec<S> {
        let yw = eta_mixed(&self.w, y);
        y.iter().zip(&self.w).map(|(a, b)| *a + yw * *b).collect()
    }
}

impl GenericLagrangian for Rainbow {
    fn name(&self) -> &str {
        "rainbow"
    }
    fn dim(&self) -> usize {
        self.w.len()
    }
    fn params(&self) -> BTreeMap<String, f64> {
        BTreeMap::from([
            ("c1".to_string(), self.c1),
            ("sign".to_string(), self.sign.sigma()),
        ])
    }
    fn eval<S: Scalar>(&self, _x: &[S], y: &[S]) -> S {
        let sigma = self.sign.sigma();
        let e = eta(y, y) * sigma;
        if self.c1 == 0.0 {
            return e * sigma;
        }
        let yb = self.spatial(y);
        let eb = eta(&yb, &yb);
        let f = e.sqrt() - eb.powf(1.5) / e * self.c1;
        f * f * sigma
    }
    fn margin(&self, _x: &[f64], y: &[f64]) -> f64 {
        let n = norm(y);
        let e = self.sign.sigma() * eta(y, y) / (n * n);
        if self.c1 == 0.0 {
            return e;
        }
        // η̄^{3/2} loses its third derivative on the W axis.
        let yb = self.spatial(y);
        e.min(eta(&yb, &yb).max(0.0).sqrt() / n)
    }
    fn chart_description(&self) -> String {
        "inertial coordinates adapted to the Killing field W".into()
    }
    fn time_orientation(&self, _x: &[f64]) -> Option<Vec<f64>> {
        Some(self.w.clone())
    }
}

/// Homogeneous polynomial `φ(ŷ) = Σ c_α ŷ^α` of even degree `2p`.
#[derive(Clone, Debug, PartialEq)]
pub struct PolynomialForm {
    pub terms: Vec<(f64, Vec<u32>)>,
}

impl PolynomialForm {
    pub fn degree(&self) -> Option<u32> {
        let mut deg = None;
        for (_, e) in &self.terms {
            let d: u32 = e.iter().sum();
            if deg.is_some_and(|v| v != d) {
                return None;
            }
            deg = Some(d);
        }
        deg
    }

    pub fn coefficient_norm(&self) -> f64 {
        self.terms.iter().map(|(c, _)| c.abs()).sum()
    }

    fn eval<S: Scalar>(&self, y: &[S]) -> S {
        let mut acc = S::zero();
        for (c, e) in &self.terms {
            let mut term = S::cst(*c);
            for (i, k) in e.iter().enumerate() {
                if *k > 0 {
                    term *= y[i].powi(*k as i32);
                }
            }
            acc += term;
        }
        acc
    }

    /// `κ Σ_{1≤i<j<n} ŷ_i^p ŷ_j^p`.
    pub fn pairwise(n: usize, p: u32, kappa: f64) -> Self {
        let mut terms = Vec::new();
        for i in 1..n {
            for j in (i + 1)..n {
                let mut e = vec![0; n];
                e[i] = p;
                e[j] = p;
                terms.push((kappa, e));
            }
        }
        Self { terms }
    }
}

/// Perturbed Berwald–Moor type spacetime:
/// `L = η(y,y) + η̂(y,y)^{1−p} φ(ŷ,…,ŷ) / p`.
#[derive(Clone, Debug)]
pub struct BerwaldMoor {
    pub phi: PolynomialForm,
    pub p: u32,
    w: Vec<f64>,
    kappa: Option<f64>,
}

/// Default bound on `Σ|c_α|` beyond which `φ` is not "small".
pub const PHI_BOUND: f64 = 0.5;

impl BerwaldMoor {
    pub fn new(phi: PolynomialForm, p: u32, w: Vec<f64>, bound: f64) -> Result<Self> {
        let n = w.len();
        if n < 2 {
            return Err(FinslerError::bad_param("w", "dimension must be at least 2"));
        }
        if p == 0 {
            return Err(FinslerError::bad_param("p", "must be a positive integer"));
        }
        if phi.terms.iter().any(|(_, e)| e.len() != n) {
            return Err(FinslerError::bad_param("phi", "exponent vectors must have length n"));
        }
        if !phi.terms.is_empty() && phi.degree() != Some(2 * p) {
            return Err(FinslerError::bad_param("phi", "must be homogeneous of degree 2p"));
        }
        let norm = phi.coefficient_norm();
        if norm > bound {
            return Err(FinslerError::DegenerateMetric {
                det: norm,
                threshold: bound,
            });
        }
        let ww = eta(&w, &w);
        if !(ww < 0.0) {
            return Err(FinslerError::bad_param("w", "W must be timelike"));
        }
        let s = (-ww).sqrt();
        Ok(Self {
            phi,
            p,
            w: w.iter().map(|v| v / s).collect(),
            kappa: None,
        })
    }

    pub fn pairwise(kappa: f64, p: u32) -> Result<Self> {
        let mut out = Self::new(
            PolynomialForm::pairwise(4, p, kappa),
            p,
            unit(4, 0),
            PHI_BOUND,
        )?;
        out.kappa = Some(kappa);
        Ok(out)
    }
}

impl GenericLagrangian for BerwaldMoor {
    fn name(&self) -> &str {
        "berwald_moor"
    }
    fn dim(&self) -> usize {
        self.w.len()
    }
    fn params(&self) -> BTreeMap<String, f64> {
        let mut p = BTreeMap::from([("p".to_string(), self.p as f64)]);
        if let Some(k) = self.kappa {
            p.insert("kappa".into(), k);
        }
        p
    }
    fn eval<S: Scalar>(&self, _x: &[S], y: &[S]) -> S {
        let base = eta(y, y);
        if self.phi.terms.is_empty() {
            return base;
        }
        // With η(W,W) = −1: η̂(y,y) = η(y,y) + 2η(y,W)², ŷ = y + η(y,W) W.
        let yw = eta_mixed(&self.w, y);
        let hat = base + yw * yw * 2.0;
        let yh: Vec<S> = y.iter().zip(&self.w).map(|(a, b)| *a + yw * *b).collect();
        let pert = self.phi.eval(&yh) / self.p as f64;
        if self.p == 1 {
            base + pert
        } else {
            base + pert * hat.powi(1 - self.p as i32)
        }
    }
    fn margin(&self, _x: &[f64], _y: &[f64]) -> f64 {
        1.0
    }
    fn chart_description(&self) -> String {
        "inertial coordinates; W-adapted Euclidean metric for the perturbation".into()
    }
    fn time_orientation(&self, _x: &[f64]) -> Option<Vec<f64>> {
        Some(self.w.clone())
    }
}
