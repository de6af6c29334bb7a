//! Built-in spacetimes and the named catalog used by the CLI and test suites.

mod finsler;
mod lorentzian;
mod media;

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::DMatrix;
use rand::Rng;

pub use finsler::{Beem, Bimetric, Bogoslovsky, Rutz, RUTZ_OMEGA_FLOOR};
pub use lorentzian::{
    eta, ConstantMetric, LorentzianModel, MetricField, Minkowski, ProductSphere,
    ProductSphereField, Schwarzschild, SchwarzschildField,
};
pub use media::{
    anisotropic_medium, AnisotropicMedium, AnisotropicSpatial, BerwaldMoor, ConstantCovector,
    CovectorField, Dielectric, EuclideanSpatial, NormField, PolynomialForm, Rainbow, RainbowSign,
    PHI_BOUND,
};

use crate::error::{FinslerError, Result};
use crate::jet::HyperDual;
use crate::model::{is_regular, GenericLagrangian, Model};
use crate::point::{PointedVector, Tolerances};

/// Relative eigenvalue gap of the fiber Hessian if it is Lorentzian, else 0.
///
/// Used as a margin component by models whose regular domain is cut out by the
/// signature condition itself.
pub fn signature_margin<M: GenericLagrangian>(model: &M, x: &[f64], y: &[f64]) -> f64 {
    let n = y.len();
    let ny = crate::point::norm(y);
    let xs: Vec<HyperDual> = x.iter().map(|v| HyperDual::constant(*v)).collect();
    let mut g = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let ys: Vec<HyperDual> = y
                .iter()
                .enumerate()
                .map(|(k, v)| {
                    let mut d = HyperDual::constant(v / ny);
                    if k == i {
                        d.c[1] = 1.0;
                    }
                    if k == j {
                        d.c[2] = 1.0;
                    }
                    d
                })
                .collect();
            let h = model.eval(&xs, &ys).top();
            g[(i, j)] = h;
            g[(j, i)] = h;
        }
    }
    if g.iter().any(|v| !v.is_finite()) {
        return 0.0;
    }
    let eig = g.symmetric_eigen();
    let neg = eig.eigenvalues.iter().filter(|v| **v < 0.0).count();
    let max = eig.eigenvalues.amax();
    if neg != 1 || max == 0.0 {
        return 0.0;
    }
    eig.eigenvalues.iter().fold(f64::INFINITY, |a, v| a.min(v.abs())) / max
}

pub fn minkowski(n: usize) -> Result<Model> {
    Ok(Arc::new(Minkowski::new(n)?))
}

pub fn lorentzian_from_metric<F: MetricField + 'static>(field: F) -> Model {
    Arc::new(LorentzianModel(field))
}

pub fn schwarzschild(m: f64) -> Result<Model> {
    Ok(lorentzian_from_metric(SchwarzschildField::new(m)?))
}

pub fn product_sphere() -> Model {
    lorentzian_from_metric(ProductSphereField)
}

pub fn rutz(m: f64, delta: f64) -> Result<Model> {
    Ok(Arc::new(Rutz::new(m, delta)?))
}

pub fn beem_r3() -> Model {
    Arc::new(Beem)
}

pub fn bogoslovsky(b: f64, null_direction: Vec<f64>) -> Result<Model> {
    Ok(Arc::new(Bogoslovsky::new(b, null_direction)?))
}

pub fn bimetric(h_plus: DMatrix<f64>, h_minus: DMatrix<f64>) -> Result<Model> {
    Ok(Arc::new(Bimetric::new(h_plus, h_minus)?))
}

pub fn dielectric_medium<N, U>(n: usize, ell: N, u: U) -> Result<Model>
where
    N: NormField + 'static,
    U: CovectorField + 'static,
{
    Ok(Arc::new(Dielectric::new(n, ell, u)?))
}

pub fn rainbow(n: usize, c1: f64, w: Vec<f64>, sign: RainbowSign) -> Result<Model> {
    Ok(Arc::new(Rainbow::new(n, c1, w, sign)?))
}

pub fn berwald_moor_perturbed(phi: PolynomialForm, p: u32, w: Vec<f64>) -> Result<Model> {
    Ok(Arc::new(BerwaldMoor::new(phi, p, w, PHI_BOUND)?))
}

/// Machine-checkable statements attached to a catalog entry.
#[derive(Clone, Debug, PartialEq)]
pub enum KnownFact {
    LorentzianSignature,
    Reversible(bool),
    /// `L(x, −y) = −L(x, y)`.
    OddUnderReversal,
    /// With `set` applied, the model equals `target` at every reference point.
    ReducesTo {
        set: Vec<(&'static str, f64)>,
        target: &'static str,
        target_params: Vec<(&'static str, f64)>,
    },
}

/// Box from which regular sample points are drawn by rejection.
#[derive(Clone, Debug)]
pub struct SampleBox {
    pub x_lo: Vec<f64>,
    pub x_hi: Vec<f64>,
    /// Fiber components are drawn from `[−y_max, y_max]`.
    pub y_max: f64,
    /// Minimum margin for accepted samples.
    pub min_margin: f64,
}

impl SampleBox {
    fn new(x_lo: Vec<f64>, x_hi: Vec<f64>) -> Self {
        Self {
            x_lo,
            x_hi,
            y_max: 1.0,
            min_margin: 1e-2,
        }
    }

    /// Draws `count` regular points; fails if the acceptance rate collapses.
    pub fn sample<R: Rng>(
        &self,
        model: &Model,
        rng: &mut R,
        count: usize,
        tol: &Tolerances,
    ) -> Result<Vec<PointedVector>> {
        let mut out = Vec::with_capacity(count);
        let mut attempts = 0usize;
        while out.len() < count {
            attempts += 1;
            if attempts > 1000 * count.max(1) {
                return Err(FinslerError::NumericalBreakdown(format!(
                    "sampler for {} accepted {} of {} points",
                    model.name(),
                    out.len(),
                    count
                )));
            }
            let x: Vec<f64> = self
                .x_lo
                .iter()
                .zip(&self.x_hi)
                .map(|(lo, hi)| if hi > lo { rng.gen_range(*lo..*hi) } else { *lo })
                .collect();
            let y: Vec<f64> = (0..x.len())
                .map(|_| rng.gen_range(-self.y_max..self.y_max))
                .collect();
            let p = PointedVector::new(x, y);
            if is_regular(model.as_ref(), &p, tol) && model.margin(&p.x, &p.y) >= self.min_margin {
                out.push(p);
            }
        }
        Ok(out)
    }
}

type Builder = fn(&BTreeMap<String, f64>) -> Result<Model>;

pub struct CatalogEntry {
    pub name: &'static str,
    pub description: &'static str,
    pub defaults: Vec<(&'static str, f64)>,
    build: Builder,
    pub reference_points: Vec<PointedVector>,
    pub known_facts: Vec<KnownFact>,
    pub sampler: SampleBox,
}

impl CatalogEntry {
    /// Builds the model with defaults overridden by `params`.
    pub fn build(&self, params: &BTreeMap<String, f64>) -> Result<Model> {
        let mut full: BTreeMap<String, f64> =
            self.defaults.iter().map(|(k, v)| (k.to_string(), *v)).collect();
        for (k, v) in params {
            if !full.contains_key(k) {
                return Err(FinslerError::bad_param(
                    k.clone(),
                    format!("not a parameter of model '{}'", self.name),
                ));
            }
            if !v.is_finite() {
                return Err(FinslerError::bad_param(k.clone(), "must be finite"));
            }
            full.insert(k.clone(), *v);
        }
        (self.build)(&full)
    }

    pub fn default_model(&self) -> Model {
        self.build(&BTreeMap::new())
            .expect("catalog defaults are valid")
    }
}

fn get(p: &BTreeMap<String, f64>, k: &str) -> f64 {
    p[k]
}

fn as_count(p: &BTreeMap<String, f64>, k: &str, min: usize) -> Result<usize> {
    let v = get(p, k);
    if v.fract() != 0.0 || v < min as f64 {
        return Err(FinslerError::bad_param(k, format!("must be an integer >= {min}")));
    }
    Ok(v as usize)
}

fn pv(x: &[f64], y: &[f64]) -> PointedVector {
    PointedVector::new(x.to_vec(), y.to_vec())
}

/// The full built-in catalog, in a fixed order.
pub fn catalog() -> Vec<CatalogEntry> {
    let h = PI / 2.0;
    let schw_box = SampleBox::new(vec![-1.0, 3.0, 0.3, 0.0], vec![1.0, 20.0, PI - 0.3, 2.0 * PI]);
    let flat4 = SampleBox::new(vec![-1.0; 4], vec![1.0; 4]);
    vec![
        CatalogEntry {
            name: "minkowski",
            description: "flat spacetime, L = eta(y, y)",
            defaults: vec![("n", 4.0)],
            build: |p| minkowski(as_count(p, "n", 2)?),
            reference_points: vec![
                pv(&[0.0; 4], &[1.0, 0.0, 0.0, 0.0]),
                pv(&[0.5, 1.0, -2.0, 0.3], &[1.0, 0.6, 0.0, 0.0]),
                pv(&[0.0; 4], &[0.2, 1.0, 0.3, -0.4]),
            ],
            known_facts: vec![KnownFact::LorentzianSignature, KnownFact::Reversible(true)],
            sampler: flat4.clone(),
        },
        CatalogEntry {
            name: "schwarzschild",
            description: "exterior Schwarzschild metric, spherical chart",
            defaults: vec![("m", 1.0)],
            build: |p| schwarzschild(get(p, "m")),
            reference_points: vec![
                pv(&[0.0, 4.0, h, 0.0], &[1.0, 0.0, 0.0, 0.0]),
                pv(&[0.0, 6.0, h, 0.0], &[1.0, 0.1, 0.0, 0.05]),
                pv(&[1.0, 10.0, 1.0, 2.0], &[1.0, -0.2, 0.03, 0.01]),
            ],
            known_facts: vec![KnownFact::LorentzianSignature, KnownFact::Reversible(true)],
            sampler: schw_box.clone(),
        },
        CatalogEntry {
            name: "product_sphere",
            description: "static product R x S^2",
            defaults: vec![],
            build: |_| Ok(product_sphere()),
            reference_points: vec![
                pv(&[0.0, h, 0.0], &[1.0, 0.0, 0.5]),
                pv(&[0.3, 1.0, 2.0], &[1.5, 0.3, -0.2]),
            ],
            known_facts: vec![KnownFact::LorentzianSignature, KnownFact::Reversible(true)],
            sampler: SampleBox::new(vec![-1.0, 0.3, 0.0], vec![1.0, PI - 0.3, 2.0 * PI]),
        },
        CatalogEntry {
            name: "rutz",
            description: "static spherically symmetric Finsler deformation of Schwarzschild",
            defaults: vec![("m", 1.0), ("delta", 0.01)],
            build: |p| rutz(get(p, "m"), get(p, "delta")),
            reference_points: vec![
                pv(&[0.0, 4.0, h, 0.0], &[1.0, 0.0, 0.05, 0.1]),
                pv(&[0.0, 6.0, 1.2, 0.5], &[1.0, 0.2, -0.1, 0.05]),
                pv(&[0.0, 10.0, h, 0.0], &[-1.0, 0.1, 0.2, 0.03]),
            ],
            known_facts: vec![
                KnownFact::LorentzianSignature,
                KnownFact::Reversible(false),
                KnownFact::ReducesTo {
                    set: vec![("delta", 0.0)],
                    target: "schwarzschild",
                    target_params: vec![("m", 1.0)],
                },
            ],
            sampler: schw_box,
        },
        CatalogEntry {
            name: "beem",
            description: "Beem's non-reversible planar example, L(-y) = -L(y)",
            defaults: vec![],
            build: |_| Ok(beem_r3()),
            reference_points: vec![
                pv(&[0.0, 0.0], &[1.0, 0.0]),
                pv(&[0.3, -0.2], &[0.4, 1.0]),
                pv(&[0.0, 0.0], &[-1.0, 0.2]),
            ],
            known_facts: vec![
                KnownFact::LorentzianSignature,
                KnownFact::Reversible(false),
                KnownFact::OddUnderReversal,
            ],
            sampler: SampleBox::new(vec![-1.0; 2], vec![1.0; 2]),
        },
        CatalogEntry {
            name: "bogoslovsky",
            description: "Bogoslovsky / very special relativity metric inside the light cone",
            defaults: vec![
                ("b", 0.1),
                ("nu0", 1.0),
                ("nu1", 0.0),
                ("nu2", 0.0),
                ("nu3", 1.0),
            ],
            build: |p| {
                bogoslovsky(
                    get(p, "b"),
                    vec![get(p, "nu0"), get(p, "nu1"), get(p, "nu2"), get(p, "nu3")],
                )
            },
            reference_points: vec![
                pv(&[0.0; 4], &[1.0, 0.0, 0.0, 0.0]),
                pv(&[0.0; 4], &[1.0, 0.3, -0.2, 0.1]),
                pv(&[1.0, 0.0, 0.0, 0.0], &[-1.2, 0.1, 0.5, -0.3]),
            ],
            known_facts: vec![
                KnownFact::LorentzianSignature,
                KnownFact::ReducesTo {
                    set: vec![("b", 0.0)],
                    target: "minkowski",
                    target_params: vec![("n", 4.0)],
                },
            ],
            sampler: flat4.clone(),
        },
        CatalogEntry {
            name: "bimetric",
            description: "birefringent bi-metric medium sqrt(L+ L-), light speed 1/a in L-",
            defaults: vec![("a", 1.2)],
            build: |p| Ok(Arc::new(Bimetric::isotropic(get(p, "a"))?) as Model),
            reference_points: vec![
                pv(&[0.0; 4], &[1.0, 0.0, 0.0, 0.0]),
                pv(&[0.0; 4], &[1.0, 0.3, 0.2, 0.0]),
                pv(&[0.0; 4], &[0.1, 1.0, 0.2, -0.3]),
            ],
            known_facts: vec![KnownFact::LorentzianSignature, KnownFact::Reversible(true)],
            sampler: flat4.clone(),
        },
        CatalogEntry {
            name: "dielectric",
            description: "anisotropic dielectric medium at rest, L = (l^2 - (U.y)^2)/2",
            defaults: vec![("index", 1.5), ("kappa", 0.1)],
            build: |p| Ok(Arc::new(anisotropic_medium(get(p, "index"), get(p, "kappa"))?) as Model),
            reference_points: vec![
                pv(&[0.0; 4], &[1.0, 0.0, 0.0, 0.0]),
                pv(&[0.0; 4], &[1.0, 0.5, 0.2, 0.1]),
                pv(&[0.0; 4], &[0.2, 1.0, -0.4, 0.3]),
            ],
            known_facts: vec![
                KnownFact::LorentzianSignature,
                KnownFact::Reversible(true),
                KnownFact::ReducesTo {
                    set: vec![("index", 1.0), ("kappa", 0.0)],
                    target: "half_minkowski",
                    target_params: vec![],
                },
            ],
            sampler: flat4.clone(),
        },
        CatalogEntry {
            name: "rainbow",
            description: "rainbow (energy-dependent) deformation of Minkowski space",
            defaults: vec![("c1", 0.01), ("sign", -1.0)],
            build: |p| {
                let sign = match get(p, "sign") {
                    s if s == -1.0 => RainbowSign::Timelike,
                    s if s == 1.0 => RainbowSign::Literal,
                    _ => return Err(FinslerError::bad_param("sign", "must be -1 or +1")),
                };
                rainbow(4, get(p, "c1"), vec![1.0, 0.0, 0.0, 0.0], sign)
            },
            reference_points: vec![
                pv(&[0.0; 4], &[1.0, 0.3, 0.0, 0.0]),
                pv(&[0.0; 4], &[1.0, 0.2, -0.3, 0.1]),
                pv(&[0.0; 4], &[-1.5, 0.1, 0.4, 0.2]),
            ],
            known_facts: vec![
                KnownFact::LorentzianSignature,
                KnownFact::Reversible(true),
                KnownFact::ReducesTo {
                    set: vec![("c1", 0.0)],
                    target: "minkowski",
                    target_params: vec![("n", 4.0)],
                },
            ],
            // Near the cone the C₁ term dominates and the signature is lost.
            sampler: SampleBox {
                min_margin: 0.1,
                ..flat4.clone()
            },
        },
        CatalogEntry {
            name: "berwald_moor",
            description: "Minkowski space perturbed by a small Berwald-Moor type 2p-form",
            defaults: vec![("kappa", 0.1), ("p", 2.0)],
            build: |p| {
                let order = as_count(p, "p", 1)? as u32;
                Ok(Arc::new(BerwaldMoor::pairwise(get(p, "kappa"), order)?) as Model)
            },
            reference_points: vec![
                pv(&[0.0; 4], &[1.0, 0.0, 0.0, 0.0]),
                pv(&[0.0; 4], &[1.0, 0.4, 0.3, 0.1]),
                pv(&[0.0; 4], &[0.2, 1.0, -0.5, 0.4]),
            ],
            known_facts: vec![
                KnownFact::LorentzianSignature,
                KnownFact::Reversible(true),
                KnownFact::ReducesTo {
                    set: vec![("kappa", 0.0)],
                    target: "minkowski",
                    target_params: vec![("n", 4.0)],
                },
            ],
            sampler: flat4,
        },
    ]
}

pub fn catalog_entry(name: &str) -> Result<CatalogEntry> {
    catalog()
        .into_iter()
        .find(|e| e.name == name)
        .ok_or_else(|| FinslerError::UnknownModel(name.to_string()))
}

/// Builds a catalog model by name with parameter overrides.
pub fn model_from_name(name: &str, params: &BTreeMap<String, f64>) -> Result<Model> {
    if name == "half_minkowski" && params.is_empty() {
        // Reduction target of the isotropic unit-index medium.
        return dielectric_medium(4, EuclideanSpatial, ConstantCovector(vec![1.0, 0.0, 0.0, 0.0]));
    }
    catalog_entry(name)?.build(params)
}

/// Default time orientation of `model` at `x`, if it has one.
pub fn default_time_orientation(model: &Model, x: &[f64]) -> Option<Vec<f64>> {
    model.time_orientation(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::evaluate;

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    #[test]
    fn minkowski_values() {
        let m = minkowski(4).unwrap();
        let x = [0.0; 4];
        assert_eq!(m.value(&x, &[1.0, 0.0, 0.0, 0.0]), -1.0);
        assert_eq!(m.value(&x, &[0.0, 1.0, 0.0, 0.0]), 1.0);
        assert_eq!(m.value(&x, &[1.0, 1.0, 0.0, 0.0]), 0.0);
        assert!(minkowski(1).is_err());
    }

    #[test]
    fn schwarzschild_values() {
        let s = schwarzschild(1.0).unwrap();
        let x = [0.0, 4.0, PI / 2.0, 0.0];
        assert!((s.value(&x, &[1.0, 0.0, 0.0, 0.0]) + 0.5).abs() < 1e-15);
        assert!((s.value(&x, &[0.0, 1.0, 0.0, 0.0]) - 2.0).abs() < 1e-15);
        // asymptotically flat
        let far = [0.0, 1e9, PI / 2.0, 0.0];
        assert!((s.value(&far, &[1.0, 0.0, 0.0, 0.0]) + 1.0).abs() < 1e-8);
        let horizon = PointedVector::new(vec![0.0, 2.0, 1.0, 0.0], vec![1.0, 0.0, 0.0, 0.0]);
        assert!(matches!(
            evaluate(s.as_ref(), &horizon, &tol()),
            Err(FinslerError::SingularPoint { .. })
        ));
        let axis = PointedVector::new(vec![0.0, 5.0, 0.0, 0.0], vec![1.0, 0.0, 0.0, 0.0]);
        assert!(evaluate(s.as_ref(), &axis, &tol()).is_err());
    }

    #[test]
    fn product_sphere_null() {
        let m = product_sphere();
        assert_eq!(m.value(&[0.0, PI / 2.0, 0.0], &[1.0, 1.0, 0.0]), 0.0);
    }

    #[test]
    fn constant_metric_matches_minkowski() {
        let h = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![-1.0, 1.0, 1.0]));
        let m = lorentzian_from_metric(ConstantMetric::new(h).unwrap());
        let k = minkowski(3).unwrap();
        let y = [0.7, -0.2, 1.3];
        assert_eq!(m.value(&[0.0; 3], &y), k.value(&[0.0; 3], &y));
        assert_eq!(m.time_orientation(&[0.0; 3]).unwrap(), vec![1.0, 0.0, 0.0]);
        let bad = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, 1.0, 1.0]));
        assert!(ConstantMetric::new(bad).is_err());
    }

    #[test]
    fn beem_is_odd_and_matches_formula() {
        let b = beem_r3();
        assert_eq!(b.value(&[0.0, 0.0], &[1.0, 0.0]), 1.0);
        let y = [0.3, -0.8];
        let ny = [-0.3, 0.8];
        assert!((b.value(&[0.0; 2], &y) + b.value(&[0.0; 2], &ny)).abs() < 1e-15);
    }

    #[test]
    fn rutz_singular_sets() {
        let r = rutz(1.0, 0.01).unwrap();
        let x = [0.0, 4.0, PI / 2.0, 0.0];
        let t = tol();
        let radial = PointedVector::new(x.to_vec(), vec![1.0, 0.3, 0.0, 0.0]);
        assert!(evaluate(r.as_ref(), &radial, &t).is_err());
        let no_time = PointedVector::new(x.to_vec(), vec![0.0, 0.3, 0.2, 0.1]);
        assert!(evaluate(r.as_ref(), &no_time, &t).is_err());
        let ok = PointedVector::new(x.to_vec(), vec![1.0, 0.0, 0.1, 0.1]);
        assert!(evaluate(r.as_ref(), &ok, &t).is_ok());
        let tiny = PointedVector::new(x.to_vec(), vec![1.0, 0.0, 1e-9, 0.0]);
        let loose = Tolerances {
            margin_floor: 1e-14,
            ..t
        };
        assert!(evaluate(r.as_ref(), &tiny, &loose).is_err());
    }

    #[test]
    fn bogoslovsky_cone_is_singular() {
        let b = bogoslovsky(0.1, vec![1.0, 0.0, 0.0, 1.0]).unwrap();
        let null = PointedVector::new(vec![0.0; 4], vec![1.0, 1.0, 0.0, 0.0]);
        assert!(evaluate(b.as_ref(), &null, &tol()).is_err());
        let timelike = PointedVector::new(vec![0.0; 4], vec![1.0, 0.0, 0.0, 0.0]);
        assert!((evaluate(b.as_ref(), &timelike, &tol()).unwrap() + 1.0).abs() < 1e-15);
        assert!(bogoslovsky(1.0, vec![1.0, 0.0, 0.0, 1.0]).is_err());
        assert!(bogoslovsky(0.1, vec![1.0, 0.0, 0.0, 0.5]).is_err());
    }

    #[test]
    fn bimetric_signs() {
        let same = bimetric(
            DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![-1.0, 1.0, 1.0, 1.0])),
            DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![-1.0, 1.0, 1.0, 1.0])),
        )
        .unwrap();
        let x = [0.0; 4];
        for y in [[1.0, 0.2, 0.3, 0.1], [0.1, 1.0, 0.3, 0.5]] {
            let l = same.value(&x, &y);
            assert!((l.abs() - eta(&y, &y).abs()).abs() < 1e-14);
            assert_eq!(l.signum(), eta(&y, &y).signum());
        }
        let b = model_from_name("bimetric", &BTreeMap::new()).unwrap();
        // null for h+ only
        let p = PointedVector::new(x.to_vec(), vec![1.0, 1.0, 0.0, 0.0]);
        assert!(evaluate(b.as_ref(), &p, &tol()).is_err());
        let l = b.value(&x, &[1.0, 0.1, 0.2, 0.0]);
        let lp: f64 = -1.0 + 0.01 + 0.04;
        let lm = -1.0 + 1.44 * 0.05;
        assert!((l + (lp * lm).sqrt()).abs() < 1e-14);
    }

    #[test]
    fn dielectric_isotropic_is_scaled_minkowski() {
        let d = model_from_name("half_minkowski", &BTreeMap::new()).unwrap();
        let y = [1.3, 0.2, -0.7, 0.4];
        assert!((d.value(&[0.0; 4], &y) - 0.5 * eta(&y, &y)).abs() < 1e-15);
    }

    #[test]
    fn rainbow_reductions_and_cone() {
        let r0 = rainbow(4, 0.0, vec![1.0, 0.0, 0.0, 0.0], RainbowSign::Timelike).unwrap();
        let y = [1.0, 0.3, 0.2, 0.0];
        assert_eq!(r0.value(&[0.0; 4], &y), eta(&y, &y));
        let lit = rainbow(4, 0.0, vec![1.0, 0.0, 0.0, 0.0], RainbowSign::Literal).unwrap();
        let s = [0.2, 1.0, 0.0, 0.0];
        assert_eq!(lit.value(&[0.0; 4], &s), eta(&s, &s));
        let r = model_from_name("rainbow", &BTreeMap::new()).unwrap();
        let cone = PointedVector::new(vec![0.0; 4], vec![1.0, 1.0, 0.0, 0.0]);
        assert!(evaluate(r.as_ref(), &cone, &tol()).is_err());
    }

    #[test]
    fn berwald_moor_reduces_and_bounds() {
        let flat = berwald_moor_perturbed(PolynomialForm { terms: vec![] }, 2, vec![1.0, 0.0, 0.0, 0.0])
            .unwrap();
        let y = [1.0, 0.3, -0.2, 0.5];
        assert_eq!(flat.value(&[0.0; 4], &y), eta(&y, &y));
        let big = PolynomialForm::pairwise(4, 2, 1.0);
        assert!(matches!(
            berwald_moor_perturbed(big, 2, vec![1.0, 0.0, 0.0, 0.0]),
            Err(FinslerError::DegenerateMetric { .. })
        ));
        // W-parallel fiber vector: perturbation vanishes, value finite
        let bm = model_from_name("berwald_moor", &BTreeMap::new()).unwrap();
        assert_eq!(bm.value(&[0.0; 4], &[2.0, 0.0, 0.0, 0.0]), -4.0);
    }

    #[test]
    fn catalog_reference_points_are_regular() {
        let t = tol();
        for entry in catalog() {
            let m = entry.default_model();
            for p in &entry.reference_points {
                assert!(is_regular(m.as_ref(), p, &t), "{} at {:?}", entry.name, p);
            }
        }
    }

    #[test]
    fn config_errors() {
        assert!(matches!(
            model_from_name("nope", &BTreeMap::new()),
            Err(FinslerError::UnknownModel(_))
        ));
        let bad = BTreeMap::from([("q".to_string(), 1.0)]);
        assert!(matches!(
            model_from_name("schwarzschild", &bad),
            Err(FinslerError::BadParameter { .. })
        ));
        let neg = BTreeMap::from([("m".to_string(), -1.0)]);
        assert!(model_from_name("schwarzschild", &neg).is_err());
    }
}
