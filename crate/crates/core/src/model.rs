//! The Lagrangian abstraction shared by every module.
//!
//! Built-in models implement [`GenericLagrangian`], i.e. they are written once
//! over the [`Scalar`] arithmetic and receive exact jet derivatives for free via
//! the blanket [`Lagrangian`] impl. Black-box closures go through
//! [`NumericLagrangian`] and fall back to finite differences.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{FinslerError, Result};
use crate::jet::{HyperDual, Jet3, Jet4, Scalar};
use crate::point::{norm, PointedVector, Tolerances};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AnalyticLevel {
    None,
    First,
    Second,
    Third,
}

/// A model expressed over the generic arithmetic.
pub trait GenericLagrangian: Send + Sync {
    fn name(&self) -> &str;
    fn dim(&self) -> usize;
    fn params(&self) -> BTreeMap<String, f64>;
    fn eval<S: Scalar>(&self, x: &[S], y: &[S]) -> S;
    /// Distance proxy to the singular set; nonpositive means singular.
    /// Models need not treat `y = 0`, which is always excluded.
    fn margin(&self, x: &[f64], y: &[f64]) -> f64;

    fn chart_description(&self) -> String {
        String::new()
    }

    /// Default time orientation, if the model has a canonical one.
    fn time_orientation(&self, _x: &[f64]) -> Option<Vec<f64>> {
        None
    }

    fn analytic_level(&self) -> AnalyticLevel {
        AnalyticLevel::Third
    }
}

/// Object-safe view of a Lagrangian.
pub trait Lagrangian: Send + Sync {
    fn name(&self) -> &str;
    fn dim(&self) -> usize;
    fn params(&self) -> BTreeMap<String, f64>;
    fn value(&self, x: &[f64], y: &[f64]) -> f64;
    fn value_hd(&self, x: &[HyperDual], y: &[HyperDual]) -> Option<HyperDual>;
    fn value_jet3(&self, x: &[Jet3], y: &[Jet3]) -> Option<Jet3>;
    fn value_jet4(&self, x: &[Jet4], y: &[Jet4]) -> Option<Jet4>;
    fn margin(&self, x: &[f64], y: &[f64]) -> f64;
    fn chart_description(&self) -> String;
    fn time_orientation(&self, x: &[f64]) -> Option<Vec<f64>>;
    fn analytic_level(&self) -> AnalyticLevel;
}

impl<T: GenericLagrangian> Lagrangian for T {
    fn name(&self) -> &str {
        GenericLagrangian::name(self)
    }
    fn dim(&self) -> usize {
        GenericLagrangian::dim(self)
    }
    fn params(&self) -> BTreeMap<String, f64> {
        GenericLagrangian::params(self)
    }
    fn value(&self, x: &[f64], y: &[f64]) -> f64 {
        self.eval(x, y)
    }
    fn value_hd(&self, x: &[HyperDual], y: &[HyperDual]) -> Option<HyperDual> {
        Some(self.eval(x, y))
    }
    fn value_jet3(&self, x: &[Jet3], y: &[Jet3]) -> Option<Jet3> {
        Some(self.eval(x, y))
    }
    fn value_jet4(&self, x: &[Jet4], y: &[Jet4]) -> Option<Jet4> {
        Some(self.eval(x, y))
    }
    fn margin(&self, x: &[f64], y: &[f64]) -> f64 {
        GenericLagrangian::margin(self, x, y)
    }
    fn chart_description(&self) -> String {
        GenericLagrangian::chart_description(self)
    }
    fn time_orientation(&self, x: &[f64]) -> Option<Vec<f64>> {
        GenericLagrangian::time_orientation(self, x)
    }
    fn analytic_level(&self) -> AnalyticLevel {
        GenericLagrangian::analytic_level(self)
    }
}

pub type Model = Arc<dyn Lagrangian>;

impl fmt::Debug for dyn Lagrangian {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{:?}", self.name(), self.params())
    }
}

/// Margin of `p` including the universal `y != 0` exclusion.
pub fn margin(model: &dyn Lagrangian, p: &PointedVector) -> f64 {
    let ny = p.y_norm();
    if ny == 0.0 || !ny.is_finite() {
        return 0.0;
    }
    model.margin(&p.x, &p.y)
}

pub fn is_regular(model: &dyn Lagrangian, p: &PointedVector, tol: &Tolerances) -> bool {
    p.dim() == model.dim() && p.y.len() == model.dim() && margin(model, p) >= tol.margin_floor
}

/// Refuses points of the wrong dimension or too close to the singular set.
pub fn ensure_regular(model: &dyn Lagrangian, p: &PointedVector, tol: &Tolerances) -> Result<()> {
    p.check_dim(model.dim())?;
    if norm(&p.y) == 0.0 {
        return Err(FinslerError::singular("zero fiber vector", &p.x, &p.y));
    }
    let m = model.margin(&p.x, &p.y);
    if !(m >= tol.margin_floor) {
        return Err(FinslerError::singular(
            format!("margin {m:e} below floor {:e}", tol.margin_floor),
            &p.x,
            &p.y,
        ));
    }
    Ok(())
}

/// `L(x, y)` with regularity checking.
pub fn evaluate(model: &dyn Lagrangian, p: &PointedVector, tol: &Tolerances) -> Result<f64> {
    ensure_regular(model, p, tol)?;
    let v = model.value(&p.x, &p.y);
    if !v.is_finite() {
        return Err(FinslerError::singular("non-finite Lagrangian", &p.x, &p.y));
    }
    Ok(v)
}

type ValueFn = dyn Fn(&[f64], &[f64]) -> f64 + Send + Sync;

/// A black-box Lagrangian given as closures; derivatives are taken numerically.
pub struct NumericLagrangian {
    name: String,
    dim: usize,
    value: Box<ValueFn>,
    margin: Box<ValueFn>,
    orientation: Option<Vec<f64>>,
}

impl NumericLagrangian {
    pub fn new(
        name: impl Into<String>,
        dim: usize,
        value: impl Fn(&[f64], &[f64]) -> f64 + Send + Sync + 'static,
        margin: impl Fn(&[f64], &[f64]) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            dim,
            value: Box::new(value),
            margin: Box::new(margin),
            orientation: None,
        }
    }

    /// Constant time orientation field.
    pub fn with_time_orientation(mut self, t: Vec<f64>) -> Self {
        self.orientation = Some(t);
        self
    }
}

impl Lagrangian for NumericLagrangian {
    fn name(&self) -> &str {
        &self.name
    }
    fn dim(&self) -> usize {
        self.dim
    }
    fn params(&self) -> BTreeMap<String, f64> {
        BTreeMap::new()
    }
    fn value(&self, x: &[f64], y: &[f64]) -> f64 {
        (self.value)(x, y)
    }
    fn value_hd(&self, _: &[HyperDual], _: &[HyperDual]) -> Option<HyperDual> {
        None
    }
    fn value_jet3(&self, _: &[Jet3], _: &[Jet3]) -> Option<Jet3> {
        None
    }
    fn value_jet4(&self, _: &[Jet4], _: &[Jet4]) -> Option<Jet4> {
        None
    }
    fn margin(&self, x: &[f64], y: &[f64]) -> f64 {
        (self.margin)(x, y)
    }
    fn chart_description(&self) -> String {
        "user-supplied closure".into()
    }
    fn time_orientation(&self, _x: &[f64]) -> Option<Vec<f64>> {
        self.orientation.clone()
    }
    fn analytic_level(&self) -> AnalyticLevel {
        AnalyticLevel::None
    }
}
