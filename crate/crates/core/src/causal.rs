//! Causal character of vectors and curves, time orientations and
//! future-pointedness.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{FinslerError, Result};
use crate::model::{ensure_regular, Lagrangian};
use crate::point::{PointedVector, Tolerances};
use crate::vertical::{fundamental_tensor, pair};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CausalClass {
    Timelike,
    Lightlike,
    Spacelike,
    Singular,
}

impl CausalClass {
    pub fn is_causal(self) -> bool {
        matches!(self, Self::Timelike | Self::Lightlike)
    }
}

impl fmt::Display for CausalClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Self::Timelike => "timelike",
            Self::Lightlike => "lightlike",
            Self::Spacelike => "spacelike",
            Self::Singular => "singular",
        };
        f.write_str(s)
    }
}

/// Scale-aware zero band for `L`: `band · (1 + |y|²)`.
pub fn lightlike_band(p: &PointedVector, tol: &Tolerances) -> f64 {
    tol.lightlike_band * (1.0 + p.y_norm().powi(2))
}

pub fn classify(model: &dyn Lagrangian, p: &PointedVector, tol: &Tolerances) -> CausalClass {
    if ensure_regular(model, p, tol).is_err() {
        return CausalClass::Singular;
    }
    let l = model.value(&p.x, &p.y);
    if !l.is_finite() {
        return CausalClass::Singular;
    }
    let band = lightlike_band(p, tol);
    if l < -band {
        CausalClass::Timelike
    } else if l > band {
        CausalClass::Spacelike
    } else {
        CausalClass::Lightlike
    }
}

type Field = dyn Fn(&[f64]) -> Vec<f64> + Send + Sync;

/// A timelike vector field `T` selecting the future cone.
#[derive(Clone)]
pub struct TimeOrientation {
    field: Arc<Field>,
    label: String,
}

impl fmt::Debug for TimeOrientation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "TimeOrientation({})", self.label)
    }
}

impl TimeOrientation {
    pub fn constant(t: Vec<f64>) -> Self {
        let label = format!("{t:?}");
        Self {
            field: Arc::new(move |_| t.clone()),
            label,
        }
    }

    pub fn from_fn(label: impl Into<String>, f: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static) -> Self {
        Self {
            field: Arc::new(f),
            label: label.into(),
        }
    }

    /// The model's canonical orientation; models without one (Beem's) need
    /// an explicit choice.
    pub fn for_model(model: &Arc<dyn Lagrangian>) -> Result<Self> {
        let m = Arc::clone(model);
        let probe = vec![0.0; model.dim()];
        if m.time_orientation(&probe).is_none() {
            return Err(FinslerError::bad_param(
                "time_orientation",
                format!("model '{}' has no canonical time orientation; supply one", model.name()),
            ));
        }
        Ok(Self {
            label: format!("{} default", model.name()),
            field: Arc::new(move |x| m.time_orientation(x).expect("checked at construction")),
        })
    }

    pub fn at(&self, x: &[f64]) -> Vec<f64> {
        (self.field)(x)
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Fails unless `T(x)` is regular and timelike.
    pub fn check(&self, model: &dyn Lagrangian, x: &[f64], tol: &Tolerances) -> Result<()> {
        let p = PointedVector::new(x.to_vec(), self.at(x));
        match classify(model, &p, tol) {
            CausalClass::Timelike => Ok(()),
            other => Err(FinslerError::bad_param(
                "time_orientation",
                format!("T({x:?}) is {other}, not timelike"),
            )),
        }
    }
}

/// `g_p(y, T(x))` in the stored convention; negative means future-pointed.
pub fn future_pairing(
    model: &dyn Lagrangian,
    p: &PointedVector,
    t: &TimeOrientation,
    tol: &Tolerances,
) -> Result<f64> {
    let g = fundamental_tensor(model, p, tol)?;
    Ok(g.pair(&p.y, &t.at(&p.x)))
}

pub fn is_future_pointed(
    model: &dyn Lagrangian,
    p: &PointedVector,
    t: &TimeOrientation,
    tol: &Tolerances,
) -> Result<bool> {
    Ok(future_pairing(model, p, t, tol)? < 0.0)
}

/// `|g_p(y, −Z) + g_p(y, Z)|`; the second slot is linear, so this vanishes.
pub fn antisymmetry_in_second_slot(
    model: &dyn Lagrangian,
    p: &PointedVector,
    z: &[f64],
    tol: &Tolerances,
) -> Result<f64> {
    let g = fundamental_tensor(model, p, tol)?;
    let minus: Vec<f64> = z.iter().map(|v| -v).collect();
    Ok((pair(&g.g, &p.y, &minus) + pair(&g.g, &p.y, z)).abs())
}

/// `(g_{−y}(−y, Z), −g_y(y, Z))`; equal for reversible models.
pub fn reversal_asymmetry(
    model: &dyn Lagrangian,
    p: &PointedVector,
    z: &[f64],
    tol: &Tolerances,
) -> Result<(f64, f64)> {
    let q = p.reversed();
    let gq = fundamental_tensor(model, &q, tol)?;
    let gp = fundamental_tensor(model, p, tol)?;
    Ok((gq.pair(&q.y, z), -gp.pair(&p.y, z)))
}

#[derive(Clone, Debug, Serialize)]
pub struct CurveClassification {
    pub classes: Vec<CausalClass>,
    pub energies: Vec<f64>,
    pub mean_energy: f64,
    pub max_energy_deviation: f64,
    pub constant_speed: bool,
}

impl CurveClassification {
    /// The common class if every node agrees.
    pub fn uniform_class(&self) -> Option<CausalClass> {
        let first = *self.classes.first()?;
        self.classes.iter().all(|c| *c == first).then_some(first)
    }
}

/// Per-node causal class of a sampled curve plus a constant-speed flag.
pub fn classify_curve(
    model: &dyn Lagrangian,
    nodes: &[PointedVector],
    tol: &Tolerances,
) -> Result<CurveClassification> {
    let mut classes = Vec::with_capacity(nodes.len());
    let mut energies = Vec::with_capacity(nodes.len());
    for (k, p) in nodes.iter().enumerate() {
        if let Err(e) = ensure_regular(model, p, tol) {
            let reason = match e {
                FinslerError::SingularPoint { reason, .. } => reason,
                other => other.to_string(),
            };
            return Err(FinslerError::singular(format!("curve node {k}: {reason}"), &p.x, &p.y));
        }
        classes.push(classify(model, p, tol));
        energies.push(model.value(&p.x, &p.y));
    }
    let mean = if energies.is_empty() {
        0.0
    } else {
        energies.iter().sum::<f64>() / energies.len() as f64
    };
    let dev = energies.iter().map(|l| (l - mean).abs()).fold(0.0, f64::max);
    Ok(CurveClassification {
        constant_speed: dev <= tol.energy * (1.0 + mean.abs()),
        classes,
        energies,
        mean_energy: mean,
        max_energy_deviation: dev,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{beem_r3, minkowski, rutz};

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    #[test]
    fn minkowski_classes() {
        let m = minkowski(4).unwrap();
        let x = vec![0.0; 4];
        let c = |y: [f64; 4]| classify(m.as_ref(), &PointedVector::new(x.clone(), y.to_vec()), &tol());
        assert_eq!(c([1.0, 0.0, 0.0, 0.0]), CausalClass::Timelike);
        assert_eq!(c([1.0, 1.0, 0.0, 0.0]), CausalClass::Lightlike);
        assert_eq!(c([0.0, 1.0, 0.0, 0.0]), CausalClass::Spacelike);
        assert_eq!(c([0.0; 4]), CausalClass::Singular);
    }

    #[test]
    fn minkowski_future_pointing() {
        let m = minkowski(4).unwrap();
        let t = TimeOrientation::for_model(&m).unwrap();
        let p = PointedVector::new(vec![0.0; 4], vec![1.0, 0.0, 0.0, 0.0]);
        assert!(is_future_pointed(m.as_ref(), &p, &t, &tol()).unwrap());
        assert!(!is_future_pointed(m.as_ref(), &p.reversed(), &t, &tol()).unwrap());
        let (a, b) = reversal_asymmetry(m.as_ref(), &p, &[0.3, 1.0, 0.0, 2.0], &tol()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn beem_needs_explicit_orientation() {
        let b = beem_r3();
        assert!(TimeOrientation::for_model(&b).is_err());
    }

    #[test]
    fn rutz_reversal_is_asymmetric() {
        let r = rutz(1.0, 0.01).unwrap();
        let p = PointedVector::new(vec![0.0, 6.0, 1.2, 0.0], vec![1.0, 0.05, 0.02, 0.03]);
        let (a, b) = reversal_asymmetry(r.as_ref(), &p, &[1.0, 0.0, 0.0, 0.0], &tol()).unwrap();
        assert!((a - b).abs() > 1e-4, "{a} vs {b}");
    }
}
