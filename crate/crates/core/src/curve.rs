//! Parameterized curves and vector fields along them.

use std::sync::Arc;

use crate::point::PointedVector;

/// Step used for derivatives of interpolated or closure-defined quantities.
pub const DIFF_STEP: f64 = 1e-3;

/// Fourth-order derivative of a vector-valued function on `[a, b]`, falling
/// back to one-sided stencils near the ends.
pub fn derivative<F>(f: F, s: f64, a: f64, b: f64, h: f64) -> Vec<f64>
where
    F: Fn(f64) -> Vec<f64>,
{
    let h = h.min((b - a) / 8.0);
    if s - 2.0 * h >= a && s + 2.0 * h <= b {
        let (m2, m1, p1, p2) = (f(s - 2.0 * h), f(s - h), f(s + h), f(s + 2.0 * h));
        return (0..m1.len())
            .map(|i| (m2[i] - 8.0 * m1[i] + 8.0 * p1[i] - p2[i]) / (12.0 * h))
            .collect();
    }
    let dir = if s - 2.0 * h < a { 1.0 } else { -1.0 };
    let v: Vec<Vec<f64>> = (0..5).map(|k| f(s + dir * k as f64 * h)).collect();
    (0..v[0].len())
        .map(|i| {
            dir * (-25.0 * v[0][i] + 48.0 * v[1][i] - 36.0 * v[2][i] + 16.0 * v[3][i] - 3.0 * v[4][i])
                / (12.0 * h)
        })
        .collect()
}

/// A curve `λ : [a, b] → M` in chart coordinates.
pub trait CurveLike: Send + Sync {
    fn span(&self) -> (f64, f64);
    fn position(&self, s: f64) -> Vec<f64>;
    fn velocity(&self, s: f64) -> Vec<f64>;

    fn acceleration(&self, s: f64) -> Vec<f64> {
        let (a, b) = self.span();
        derivative(|r| self.velocity(r), s, a, b, DIFF_STEP * (b - a))
    }

    fn point(&self, s: f64) -> PointedVector {
        PointedVector::new(self.position(s), self.velocity(s))
    }

    /// `count` equally spaced nodes, endpoints included.
    fn sample(&self, count: usize) -> Vec<(f64, PointedVector)> {
        let (a, b) = self.span();
        let count = count.max(2);
        (0..count)
            .map(|k| {
                let s = a + (b - a) * k as f64 / (count - 1) as f64;
                (s, self.point(s))
            })
            .collect()
    }
}

type CurveFn = dyn Fn(f64) -> Vec<f64> + Send + Sync;

/// Curve given by closures; the velocity defaults to numerical differentiation.
#[derive(Clone)]
pub struct FnCurve {
    span: (f64, f64),
    pos: Arc<CurveFn>,
    vel: Option<Arc<CurveFn>>,
}

impl FnCurve {
    pub fn new(span: (f64, f64), pos: impl Fn(f64) -> Vec<f64> + Send + Sync + 'static) -> Self {
        Self {
            span,
            pos: Arc::new(pos),
            vel: None,
        }
    }

    pub fn with_velocity(mut self, vel: impl Fn(f64) -> Vec<f64> + Send + Sync + 'static) -> Self {
        self.vel = Some(Arc::new(vel));
        self
    }

    /// Straight chart line `x(s) = x0 + s·v`.
    pub fn line(x0: Vec<f64>, v: Vec<f64>, span: (f64, f64)) -> Self {
        let v2 = v.clone();
        Self::new(span, move |s| x0.iter().zip(&v).map(|(a, b)| a + s * b).collect())
            .with_velocity(move |_| v2.clone())
    }
}

impl CurveLike for FnCurve {
    fn span(&self) -> (f64, f64) {
        self.span
    }
    fn position(&self, s: f64) -> Vec<f64> {
        (self.pos)(s)
    }
    fn velocity(&self, s: f64) -> Vec<f64> {
        match &self.vel {
            Some(v) => v(s),
            None => {
                let (a, b) = self.span;
                derivative(|r| (self.pos)(r), s, a, b, DIFF_STEP * (b - a))
            }
        }
    }
}

/// A vector field `A(s)` along a curve.
pub trait VectorField: Send + Sync {
    fn value(&self, s: f64) -> Vec<f64>;

    /// Chart derivative `dA/ds`.
    fn derivative(&self, s: f64) -> Vec<f64> {
        derivative(|r| self.value(r), s, 0.0, 1.0, DIFF_STEP)
    }
}

/// Field given by closures on `[0, 1]`.
#[derive(Clone)]
pub struct FnField {
    value: Arc<CurveFn>,
    derivative: Option<Arc<CurveFn>>,
}

impl FnField {
    pub fn new(value: impl Fn(f64) -> Vec<f64> + Send + Sync + 'static) -> Self {
        Self {
            value: Arc::new(value),
            derivative: None,
        }
    }

    pub fn with_derivative(mut self, d: impl Fn(f64) -> Vec<f64> + Send + Sync + 'static) -> Self {
        self.derivative = Some(Arc::new(d));
        self
    }

    /// `sin(kπs) · e`, with its exact derivative.
    pub fn sine_mode(k: u32, e: Vec<f64>) -> Self {
        let w = k as f64 * std::f64::consts::PI;
        let e2 = e.clone();
        Self::new(move |s| e.iter().map(|v| v * (w * s).sin()).collect())
            .with_derivative(move |s| e2.iter().map(|v| v * w * (w * s).cos()).collect())
    }

    pub fn scaled(&self, c: f64) -> Self {
        let v = Arc::clone(&self.value);
        let out = Self::new(move |s| v(s).into_iter().map(|a| a * c).collect());
        match &self.derivative {
            Some(d) => {
                let d = Arc::clone(d);
                out.with_derivative(move |s| d(s).into_iter().map(|a| a * c).collect())
            }
            None => out,
        }
    }
}

impl VectorField for FnField {
    fn value(&self, s: f64) -> Vec<f64> {
        (self.value)(s)
    }
    fn derivative(&self, s: f64) -> Vec<f64> {
        match &self.derivative {
            Some(d) => d(s),
            None => derivative(|r| (self.value)(r), s, 0.0, 1.0, DIFF_STEP),
        }
    }
}
