use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{FinslerError, Result};
use crate::fermat::observer::ObserverSpec;
use crate::fermat::report::FermatSettings;
use crate::models::catalog_entry;
use crate::point::Tolerances;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Analysis {
    Classify,
    Geodesic,
    Fermat,
    Jacobi,
    Index,
    Validate,
}

impl Analysis {
    /// Execution rank: classify → geodesic → fermat → jacobi/index, with
    /// the model-level validation last.
    pub fn rank(self) -> u8 {
        self as u8
    }

    pub fn name(self) -> &'static str {
        match self {
            Analysis::Classify => "classify",
            Analysis::Geodesic => "geodesic",
            Analysis::Fermat => "fermat",
            Analysis::Jacobi => "jacobi",
            Analysis::Index => "index",
            Analysis::Validate => "validate",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeodesicSettings {
    /// Initial velocity at `q`; the catalog reference vector by default.
    pub y0: Option<Vec<f64>>,
    pub span: [f64; 2],
}

impl Default for GeodesicSettings {
    fn default() -> Self {
        Self { y0: None, span: [0.0, 1.0] }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IndexSettings {
    /// Random fields in `V⊥₀` on which `J(A, A)` is evaluated.
    pub fields: usize,
    pub max_mode: u32,
    /// Samples for the affine fit of `g(Y, λ̇)`.
    pub pairing_samples: usize,
}

impl Default for IndexSettings {
    fn default() -> Self {
        Self {
            fields: 100,
            max_mode: 3,
            pairing_samples: 41,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ValidateSettings {
    pub samples: usize,
}

impl Default for ValidateSettings {
    fn default() -> Self {
        Self { samples: 200 }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSettings {
    /// Directory for `report.json` and the CSV bundle.
    pub dir: Option<String>,
}

fn default_analyses() -> Vec<Analysis> {
    vec![Analysis::Classify, Analysis::Validate]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub model: String,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
    /// Source event; the catalog reference point by default.
    #[serde(default)]
    pub q: Option<Vec<f64>>,
    /// Vector at `q` used by `classify`; the catalog reference vector by default.
    #[serde(default)]
    pub y: Option<Vec<f64>>,
    #[serde(default)]
    pub observer: Option<ObserverSpec>,
    #[serde(default)]
    pub c: f64,
    /// Constant time orientation overriding the model's own.
    #[serde(default)]
    pub time_orientation: Option<Vec<f64>>,
    /// Initial velocity guess for shooting.
    #[serde(default)]
    pub initial_guess: Option<Vec<f64>>,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default = "default_analyses")]
    pub analyses: Vec<Analysis>,
    #[serde(default)]
    pub output: OutputSettings,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub geodesic: GeodesicSettings,
    #[serde(default)]
    pub fermat: FermatSettings,
    #[serde(default)]
    pub index: IndexSettings,
    #[serde(default)]
    pub validate: ValidateSettings,
}

impl ScenarioConfig {
    pub fn minimal(model: &str) -> Self {
        parse_config(&format!("{{\"model\": {}}}", serde_json::Value::from(model))).expect("minimal config")
    }

    /// Checks references and fills model-dependent defaults.
    pub fn resolve(mut self) -> Result<Self> {
        let entry = catalog_entry(&self.model)?;
        let mut params: BTreeMap<String, f64> = entry.defaults.iter().map(|(k, v)| (k.to_string(), *v)).collect();
        let model = entry.build(&self.params)?;
        params.extend(self.params.clone());
        self.params = params;
        self.tolerances.validate()?;
        if !(self.c >= 0.0 && self.c.is_finite()) {
            return Err(FinslerError::bad_param("c", "energy level must be finite and >= 0"));
        }
        let n = model.dim();
        let reference = entry.reference_points.iter().find(|p| p.dim() == n);
        if self.q.is_none() {
            self.q = Some(reference.map(|p| p.x.clone()).unwrap_or_else(|| vec![0.0; n]));
        }
        if self.y.is_none() {
            self.y = Some(reference.map(|p| p.y.clone()).unwrap_or_else(|| {
                let mut y = vec![0.0; n];
                y[0] = 1.0;
                y
            }));
        }
        for (name, v) in [
            ("q", &self.q),
            ("y", &self.y),
            ("time_orientation", &self.time_orientation),
            ("initial_guess", &self.initial_guess),
            ("geodesic.y0", &self.geodesic.y0),
        ] {
            if let Some(v) = v {
                if v.len() != n {
                    return Err(FinslerError::bad_param(name, format!("expected {n} components, got {}", v.len())));
                }
                if v.iter().any(|x| !x.is_finite()) {
                    return Err(FinslerError::bad_param(name, "components must be finite"));
                }
            }
        }
        let mut seen = std::collections::BTreeSet::new();
        for a in &self.analyses {
            if !seen.insert(*a) {
                return Err(FinslerError::bad_param("analyses", format!("'{}' requested twice", a.name())));
            }
        }
        Ok(self)
    }
}

/// Parses and resolves a scenario from JSON text.
pub fn parse_config(text: &str) -> Result<ScenarioConfig> {
    let raw: ScenarioConfig = serde_json::from_str(text).map_err(|e| FinslerError::ParseError {
        line: e.line(),
        column: e.column(),
        msg: e.to_string(),
    })?;
    raw.resolve()
}

pub fn load_config(path: impl AsRef<Path>) -> Result<ScenarioConfig> {
    let text = std::fs::read_to_string(path.as_ref())
        .map_err(|e| FinslerError::Io(format!("{}: {e}", path.as_ref().display())))?;
    parse_config(&text)
}
