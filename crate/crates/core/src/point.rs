use serde::{Deserialize, Serialize};

use crate::error::{FinslerError, Result};

/// A base point `x` together with a nonzero fiber vector `y`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointedVector {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl PointedVector {
    pub fn new(x: impl Into<Vec<f64>>, y: impl Into<Vec<f64>>) -> Self {
        Self {
            x: x.into(),
            y: y.into(),
        }
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }

    pub fn with_y(&self, y: impl Into<Vec<f64>>) -> Self {
        Self {
            x: self.x.clone(),
            y: y.into(),
        }
    }

    pub fn scaled(&self, k: f64) -> Self {
        self.with_y(self.y.iter().map(|v| k * v).collect::<Vec<_>>())
    }

    pub fn reversed(&self) -> Self {
        self.scaled(-1.0)
    }

    pub fn y_norm(&self) -> f64 {
        norm(&self.y)
    }

    pub fn check_dim(&self, n: usize) -> Result<()> {
        for len in [self.x.len(), self.y.len()] {
            if len != n {
                return Err(FinslerError::DimensionMismatch {
                    expected: n,
                    got: len,
                });
            }
        }
        Ok(())
    }
}

pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

/// Run-wide numerical tolerances.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub abs: f64,
    pub rel: f64,
    /// Points whose regularity margin falls below this are refused.
    pub margin_floor: f64,
    /// `|det g| < degeneracy * scale^n` flags a degenerate metric.
    pub degeneracy: f64,
    /// Relative half-width of the lightlike band around `L = 0`.
    pub lightlike_band: f64,
    pub ode_rtol: f64,
    pub ode_atol: f64,
    pub energy: f64,
    pub capture_radius: f64,
    pub shoot_tol: f64,
    pub shoot_max_iter: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            abs: 1e-8,
            rel: 1e-8,
            margin_floor: 1e-6,
            degeneracy: 1e-10,
            lightlike_band: 1e-9,
            ode_rtol: 1e-10,
            ode_atol: 1e-12,
            energy: 1e-8,
            capture_radius: 1e-9,
            shoot_tol: 1e-9,
            shoot_max_iter: 200,
        }
    }
}

impl Tolerances {
    /// Overrides one field by name, as used by `--tol KEY=VAL`.
    pub fn set(&mut self, key: &str, value: f64) -> Result<()> {
        if !(value.is_finite() && value > 0.0) {
            return Err(FinslerError::bad_param(key, "tolerance must be positive"));
        }
        match key {
            "abs" => self.abs = value,
            "rel" => self.rel = value,
            "margin_floor" => self.margin_floor = value,
            "degeneracy" => self.degeneracy = value,
            "lightlike_band" => self.lightlike_band = value,
            "ode_rtol" => self.ode_rtol = value,
            "ode_atol" => self.ode_atol = value,
            "energy" => self.energy = value,
            "capture_radius" => self.capture_radius = value,
            "shoot_tol" => self.shoot_tol = value,
            "shoot_max_iter" => self.shoot_max_iter = value as usize,
            _ => return Err(FinslerError::bad_param(key, "unknown tolerance key")),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("abs", self.abs),
            ("rel", self.rel),
            ("margin_floor", self.margin_floor),
            ("degeneracy", self.degeneracy),
            ("lightlike_band", self.lightlike_band),
            ("ode_rtol", self.ode_rtol),
            ("ode_atol", self.ode_atol),
            ("energy", self.energy),
            ("capture_radius", self.capture_radius),
            ("shoot_tol", self.shoot_tol),
        ];
        for (name, v) in fields {
            if !(v.is_finite() && v > 0.0) {
                return Err(FinslerError::bad_param(name, "tolerance must be positive"));
            }
        }
        if self.shoot_max_iter == 0 {
            return Err(FinslerError::bad_param("shoot_max_iter", "must be at least 1"));
        }
        Ok(())
    }
}
