//! Genuinely Finslerian spacetimes that are singular on part of the slit bundle.

use std::collections::BTreeMap;

use nalgebra::DMatrix;

use super::lorentzian::{eta, eta_mixed, unit};
use super::signature_margin;
use crate::error::{FinslerError, Result};
use crate::jet::Scalar;
use crate::model::GenericLagrangian;
use crate::point::norm;

/// Below this `|dΩ/dt|` the Rutz Lagrangian is treated as singular.
pub const RUTZ_OMEGA_FLOOR: f64 = 1e-8;

/// Static spherically symmetric Finsler deformation of Schwarzschild:
/// `L = −f (y_t² − δ y_t ω) + y_r²/f + r² ω²`, `ω = sqrt(y_θ² + sin²θ y_φ²)`.
#[derive(Clone, Debug)]
pub struct Rutz {
    pub m: f64,
    pub delta: f64,
}

impl Rutz {
    pub fn new(m: f64, delta: f64) -> Result<Self> {
        if !(m > 0.0 && m.is_finite()) {
            return Err(FinslerError::bad_param("m", "mass must be positive"));
        }
        if !(delta.abs() < 1.0) {
            return Err(FinslerError::bad_param("delta", "must satisfy |delta| < 1"));
        }
        Ok(Self { m, delta })
    }
}

impl GenericLagrangian for Rutz {
    fn name(&self) -> &str {
        "rutz"
    }
    fn dim(&self) -> usize {
        4
    }
    fn params(&self) -> BTreeMap<String, f64> {
        BTreeMap::from([("delta".to_string(), self.delta), ("m".to_string(), self.m)])
    }
    fn eval<S: Scalar>(&self, x: &[S], y: &[S]) -> S {
        let r = x[1];
        let f = S::one() - r.recip() * (2.0 * self.m);
        let s = x[2].sin();
        let w2 = y[2] * y[2] + s * s * y[3] * y[3];
        let mut time = y[0] * y[0];
        if self.delta != 0.0 {
            time -= y[0] * w2.sqrt() * self.delta;
        }
        -(f * time) + y[1] * y[1] / f + r * r * w2
    }
    fn margin(&self, x: &[f64], y: &[f64]) -> f64 {
        let ny = norm(y);
        let w = (y[2] * y[2] + (x[2].sin() * y[3]).powi(2)).sqrt();
        if w < RUTZ_OMEGA_FLOOR * y[0].abs() {
            return 0.0;
        }
        let base = (x[1] - 2.0 * self.m)
            .min(x[2].sin().abs())
            .min(y[0].abs() / ny)
            .min(w / ny);
        if base <= 0.0 {
            return base;
        }
        base.min(signature_margin(self, x, y))
    }
    fn chart_description(&self) -> String {
        "Schwarzschild coordinates (t, r, theta, phi); singular on y_t = 0, dOmega/dt = 0, r = 2m"
            .into()
    }
    /// `∂_t` lies in the excluded set `dΩ/dt = 0`; tilt it by a small polar
    /// angular speed whose `r²`-weighted size stays `0.05²`.
    fn time_orientation(&self, x: &[f64]) -> Option<Vec<f64>> {
        Some(vec![1.0, 0.0, 0.05 / x[1], 0.0])
    }
}

/// Beem's non-reversible example on the plane of `(y¹, y²)`:
/// `L = ((y¹)³ − y¹(y²)²) / sqrt((y¹)² + (y²)²)`, odd under `y → −y`.
#[derive(Clone, Debug, Default)]
pub struct Beem;

impl GenericLagrangian for Beem {
    fn name(&self) -> &str {
        "beem"
    }
    fn dim(&self) -> usize {
        2
    }
    fn params(&self) -> BTreeMap<String, f64> {
        BTreeMap::new()
    }
    fn eval<S: Scalar>(&self, _x: &[S], y: &[S]) -> S {
        let (a, b) = (y[0], y[1]);
        (a * a * a - a * b * b) / (a * a + b * b).sqrt()
    }
    fn margin(&self, x: &[f64], y: &[f64]) -> f64 {
        // Regular exactly where the Hessian is Lorentzian.
        signature_margin(self, x, y)
    }
    fn chart_description(&self) -> String {
        "(y1, y2) on R^2; six indicatrix components, no canonical time orientation".into()
    }
}

/// Bogoslovsky (very special relativity) metric on the timelike cone:
/// `L = −(−η(y,y))^{1−b} |η(ν, y)|^{2b}`.
#[derive(Clone, Debug)]
pub struct Bogoslovsky {
    pub b: f64,
    pub nu: Vec<f64>,
}

impl Bogoslovsky {
    pub fn new(b: f64, nu: Vec<f64>) -> Result<Self> {
        if !b.is_finite() || b == 1.0 {
            return Err(FinslerError::bad_param("b", "deformation must differ from 1"));
        }
        if nu.len() != 4 {
            return Err(FinslerError::DimensionMismatch {
                expected: 4,
                got: nu.len(),
            });
        }
        if eta(&nu, &nu).abs() > 1e-12 * eta_norm(&nu) {
            return Err(FinslerError::bad_param("nu", "direction must be null"));
        }
        Ok(Self { b, nu })
    }
}

fn eta_norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum()
}

impl GenericLagrangian for Bogoslovsky {
    fn name(&self) -> &str {
        "bogoslovsky"
    }
    fn dim(&self) -> usize {
        4
    }
    fn params(&self) -> BTreeMap<String, f64> {
        let mut p = BTreeMap::from([("b".to_string(), self.b)]);
        for (i, v) in self.nu.iter().enumerate() {
            p.insert(format!("nu{i}"), *v);
        }
        p
    }
    fn eval<S: Scalar>(&self, _x: &[S], y: &[S]) -> S {
        let e = -eta(y, y);
        let n = eta_mixed(&self.nu, y).abs();
        if self.b == 0.0 {
            return -e;
        }
        -(e.powf(1.0 - self.b) * n.powf(2.0 * self.b))
    }
    fn margin(&self, _x: &[f64], y: &[f64]) -> f64 {
        let n2 = eta_norm(y);
        let e = -eta(y, y) / n2;
        let nn = eta_mixed(&self.nu, y).abs() / n2.sqrt();
        e.min(nn)
    }
    fn chart_description(&self) -> String {
        "inertial coordinates (t, x, y, z); regular strictly inside the eta light cone".into()
    }
    fn time_orientation(&self, _x: &[f64]) -> Option<Vec<f64>> {
        Some(unit(4, 0))
    }
}

/// Bi-metric Lagrangian from two constant Lorentzian metrics, signed so that
/// `L < 0` on the common timelike cone: `L = ∓sqrt(L₊ L₋)`.
#[derive(Clone, Debug)]
pub struct Bimetric {
    pub h_plus: DMatrix<f64>,
    pub h_minus: DMatrix<f64>,
    params: BTreeMap<String, f64>,
}

impl Bimetric {
    pub fn new(h_plus: DMatrix<f64>, h_minus: DMatrix<f64>) -> Result<Self> {
        let n = h_plus.nrows();
        if h_minus.nrows() != n || h_plus.ncols() != n || h_minus.ncols() != n {
            return Err(FinslerError::DimensionMismatch {
                expected: n,
                got: h_minus.nrows(),
            });
        }
        for h in [&h_plus, &h_minus] {
            let eig = h.clone().symmetric_eigen();
            if eig.eigenvalues.iter().filter(|v| **v < 0.0).count() != 1 {
                return Err(FinslerError::bad_param("h", "factor metric is not Lorentzian"));
            }
        }
        Ok(Self {
            h_plus,
            h_minus,
            params: BTreeMap::new(),
        })
    }

    /// `h₊ = η`, `h₋ = diag(−1, a², a², a²)`: a medium with light speed `1/a`.
    pub fn isotropic(a: f64) -> Result<Self> {
        if !(a > 0.0 && a.is_finite()) {
            return Err(FinslerError::bad_param("a", "must be positive"));
        }
        let hp = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![-1.0, 1.0, 1.0, 1.0]));
        let hm = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![-1.0, a * a, a * a, a * a]));
        let mut out = Self::new(hp, hm)?;
        out.params.insert("a".into(), a);
        Ok(out)
    }

    fn quad<S: Scalar>(h: &DMatrix<f64>, y: &[S]) -> S {
        let n = y.len();
        let mut acc = S::zero();
        for i in 0..n {
            acc += y[i] * y[i] * h[(i, i)];
            for j in (i + 1)..n {
                if h[(i, j)] != 0.0 {
                    acc += y[i] * y[j] * (2.0 * h[(i, j)]);
                }
            }
        }
        acc
    }
}

impl GenericLagrangian for Bimetric {
    fn name(&self) -> &str {
        "bimetric"
    }
    fn dim(&self) -> usize {
        self.h_plus.nrows()
    }
    fn params(&self) -> BTreeMap<String, f64> {
        self.params.clone()
    }
    fn eval<S: Scalar>(&self, _x: &[S], y: &[S]) -> S {
        let lp = Self::quad(&self.h_plus, y);
        let lm = Self::quad(&self.h_minus, y);
        let root = (lp * lm).sqrt();
        if lp.re() < 0.0 {
            -root
        } else {
            root
        }
    }
    fn margin(&self, _x: &[f64], y: &[f64]) -> f64 {
        let n2 = eta_norm(y);
        let lp = Self::quad(&self.h_plus, y) / n2;
        let lm = Self::quad(&self.h_minus, y) / n2;
        if lp * lm <= 0.0 {
            return 0.0;
        }
        lp.abs().min(lm.abs())
    }
    fn chart_description(&self) -> String {
        "inertial coordinates; singular on both null cones".into()
    }
    fn time_orientation(&self, _x: &[f64]) -> Option<Vec<f64>> {
        Some(unit(self.dim(), 0))
    }
}
