//! Observer worldlines and the arrival-parameter lookup.

use serde::{Deserialize, Serialize};

use crate::causal::{future_pairing, classify, CausalClass, TimeOrientation};
use crate::error::{FinslerError, Result};
use crate::model::Lagrangian;
use crate::point::{norm, PointedVector, Tolerances};

fn default_interval() -> [f64; 2] {
    [-1.0e3, 1.0e3]
}

/// Serializable observer description.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ObserverSpec {
    /// `γ(t) = (t, x̄)` in the chart.
    Static { position: Vec<f64> },
    /// `γⁱ(t) = Σ_k coefficients[i][k] tᵏ` on `interval`.
    Polynomial {
        coefficients: Vec<Vec<f64>>,
        #[serde(default = "default_interval")]
        interval: [f64; 2],
    },
}

/// An observer curve `γ` with its derivatives.
#[derive(Clone, Debug, PartialEq)]
pub struct Observer {
    spec: ObserverSpec,
    n: usize,
}

fn poly(c: &[f64], t: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, a| acc * t + a)
}

fn poly_d(c: &[f64], t: f64) -> f64 {
    c.iter()
        .enumerate()
        .skip(1)
        .rev()
        .fold(0.0, |acc, (k, a)| acc * t + k as f64 * a)
}

fn poly_dd(c: &[f64], t: f64) -> f64 {
    c.iter()
        .enumerate()
        .skip(2)
        .rev()
        .fold(0.0, |acc, (k, a)| acc * t + (k * (k - 1)) as f64 * a)
}

impl Observer {
    pub fn new(spec: ObserverSpec, n: usize) -> Result<Self> {
        match &spec {
            ObserverSpec::Static { position } => {
                if position.len() + 1 != n {
                    return Err(FinslerError::DimensionMismatch {
                        expected: n - 1,
                        got: position.len(),
                    });
                }
                if position.iter().any(|v| !v.is_finite()) {
                    return Err(FinslerError::bad_param("observer.position", "must be finite"));
                }
            }
            ObserverSpec::Polynomial { coefficients, interval } => {
                if coefficients.len() != n {
                    return Err(FinslerError::DimensionMismatch {
                        expected: n,
                        got: coefficients.len(),
                    });
                }
                if coefficients.iter().any(|c| c.is_empty() || c.iter().any(|v| !v.is_finite())) {
                    return Err(FinslerError::bad_param(
                        "observer.coefficients",
                        "each component needs finite coefficients",
                    ));
                }
                if !(interval[0] < interval[1]) {
                    return Err(FinslerError::bad_param("observer.interval", "must be increasing"));
                }
            }
        }
        Ok(Self { spec, n })
    }

    /// Static observer at spatial point `x̄`.
    pub fn fixed(position: Vec<f64>) -> Self {
        let n = position.len() + 1;
        Self {
            spec: ObserverSpec::Static { position },
            n,
        }
    }

    pub fn spec(&self) -> &ObserverSpec {
        &self.spec
    }

    pub fn is_static(&self) -> bool {
        matches!(self.spec, ObserverSpec::Static { .. })
    }

    pub fn interval(&self) -> (f64, f64) {
        match &self.spec {
            ObserverSpec::Static { .. } => (f64::NEG_INFINITY, f64::INFINITY),
            ObserverSpec::Polynomial { interval, .. } => (interval[0], interval[1]),
        }
    }

    pub fn position(&self, t: f64) -> Vec<f64> {
        match &self.spec {
            ObserverSpec::Static { position } => {
                let mut x = vec![t];
                x.extend_from_slice(position);
                x
            }
            ObserverSpec::Polynomial { coefficients, .. } => coefficients.iter().map(|c| poly(c, t)).collect(),
        }
    }

    pub fn velocity(&self, t: f64) -> Vec<f64> {
        match &self.spec {
            ObserverSpec::Static { .. } => {
                let mut v = vec![0.0; self.n];
                v[0] = 1.0;
                v
            }
            ObserverSpec::Polynomial { coefficients, .. } => coefficients.iter().map(|c| poly_d(c, t)).collect(),
        }
    }

    /// Checks that `γ` is future-pointed timelike at `samples` parameters and
    /// that its time component increases (so `γ` is injective).
    pub fn validate(
        &self,
        model: &dyn Lagrangian,
        t_orient: &TimeOrientation,
        around: f64,
        tol: &Tolerances,
    ) -> Result<()> {
        let (lo, hi) = match self.interval() {
            (a, b) if a.is_finite() => (a, b),
            _ => (around - 1.0, around + 1.0),
        };
        let samples = 33;
        let mut last_t0 = f64::NEG_INFINITY;
        for k in 0..samples {
            let t = lo + (hi - lo) * k as f64 / (samples - 1) as f64;
            let p = PointedVector::new(self.position(t), self.velocity(t));
            if classify(model, &p, tol) != CausalClass::Timelike {
                return Err(FinslerError::bad_param(
                    "observer",
                    format!("worldline is not timelike at t={t}"),
                ));
            }
            let pairing = future_pairing(model, &p, t_orient, tol)?;
            if !(pairing < 0.0) {
                return Err(FinslerError::NotFuturePointed { pairing });
            }
            if p.x[0] <= last_t0 {
                return Err(FinslerError::bad_param("observer", "time component is not increasing"));
            }
            last_t0 = p.x[0];
        }
        Ok(())
    }

    fn acceleration(&self, t: f64) -> Vec<f64> {
        match &self.spec {
            ObserverSpec::Static { .. } => vec![0.0; self.n],
            ObserverSpec::Polynomial { coefficients, .. } => coefficients.iter().map(|c| poly_dd(c, t)).collect(),
        }
    }

    /// Newton polish of a stationary point of `|γ(t) − p|²`.
    fn polish(&self, p: &[f64], mut t: f64, lo: f64, hi: f64) -> f64 {
        for _ in 0..20 {
            let (x, v, a) = (self.position(t), self.velocity(t), self.acceleration(t));
            let r: Vec<f64> = x.iter().zip(p).map(|(a, b)| a - b).collect();
            let phi: f64 = r.iter().zip(&v).map(|(a, b)| a * b).sum();
            let dphi: f64 = v.iter().map(|b| b * b).sum::<f64>() + r.iter().zip(&a).map(|(a, b)| a * b).sum::<f64>();
            if dphi <= 0.0 {
                break;
            }
            let next = (t - phi / dphi).clamp(lo, hi);
            if (next - t).abs() <= 1e-16 * (1.0 + t.abs()) {
                t = next;
                break;
            }
            t = next;
        }
        t
    }

    /// Parameter of the closest observer point to `p` and its distance.
    pub fn nearest(&self, p: &[f64], around: f64) -> (f64, f64) {
        if self.is_static() {
            let t = p[0];
            return (t, norm(&self.position(t).iter().zip(p).map(|(a, b)| a - b).collect::<Vec<_>>()));
        }
        let (lo, hi) = self.interval();
        let (lo, hi) = (lo.max(around - 1e3), hi.min(around + 1e3));
        let dist2 = |t: f64| self.position(t).iter().zip(p).map(|(a, b)| (a - b).powi(2)).sum::<f64>();
        let grid = 4000;
        let mut best = (lo, f64::INFINITY);
        for k in 0..=grid {
            let t = lo + (hi - lo) * k as f64 / grid as f64;
            let d = dist2(t);
            if d < best.1 {
                best = (t, d);
            }
        }
        let w = (hi - lo) / grid as f64;
        let t = golden_min(&dist2, (best.0 - w).max(lo), (best.0 + w).min(hi));
        let t = self.polish(p, t, lo, hi);
        (t, dist2(t).sqrt())
    }

    /// Observer parameter `t` with `γ(t) = p`, within the capture radius.
    pub fn time_arrival(&self, p: &[f64], tol: &Tolerances) -> Result<f64> {
        let capture = tol.capture_radius * (1.0 + norm(p));
        match &self.spec {
            ObserverSpec::Static { position } => {
                let d = norm(&position.iter().zip(&p[1..]).map(|(a, b)| a - b).collect::<Vec<_>>());
                if d > capture {
                    return Err(FinslerError::NoIntersection { distance: d });
                }
                Ok(p[0])
            }
            ObserverSpec::Polynomial { interval, .. } => {
                let dist2 = |t: f64| {
                    self.position(t)
                        .iter()
                        .zip(p)
                        .map(|(a, b)| (a - b).powi(2))
                        .sum::<f64>()
                };
                let grid = 4000;
                let (lo, hi) = (interval[0], interval[1]);
                let ts: Vec<f64> = (0..=grid).map(|k| lo + (hi - lo) * k as f64 / grid as f64).collect();
                let ds: Vec<f64> = ts.iter().map(|t| dist2(*t)).collect();
                let mut hits: Vec<f64> = Vec::new();
                let mut best = f64::INFINITY;
                for k in 0..=grid {
                    let left = if k == 0 { f64::INFINITY } else { ds[k - 1] };
                    let right = if k == grid { f64::INFINITY } else { ds[k + 1] };
                    if ds[k] <= left && ds[k] <= right {
                        let a = ts[k.saturating_sub(1)];
                        let b = ts[(k + 1).min(grid)];
                        let t = self.polish(p, golden_min(&dist2, a, b), lo, hi);
                        let d = dist2(t).sqrt();
                        best = best.min(d);
                        if d <= capture && hits.iter().all(|h| (h - t).abs() > 1e-6 * (1.0 + t.abs())) {
                            hits.push(t);
                        }
                    }
                }
                match hits.len() {
                    0 => Err(FinslerError::NoIntersection { distance: best }),
                    1 => Ok(hits[0]),
                    _ => Err(FinslerError::AmbiguousIntersection {
                        t1: hits[0],
                        t2: hits[1],
                    }),
                }
            }
        }
    }
}

/// Golden-section minimizer on `[a, b]`.
pub(crate) fn golden_min<F: Fn(f64) -> f64>(f: &F, mut a: f64, mut b: f64) -> f64 {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..200 {
        if (b - a).abs() <= 1e-15 * (1.0 + a.abs()) {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}
