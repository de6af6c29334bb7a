//! Invariant suite for catalog models: axioms, reversibility and the
//! catalog's known facts.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::Result;
use crate::model::{evaluate, Model};
use crate::models::{model_from_name, CatalogEntry, KnownFact};
use crate::point::{PointedVector, Tolerances};
use crate::vertical::{check_axioms, check_reversibility, AxiomReport, ReversibilityReport};

/// Axiom violations above this fail validation.
pub const AXIOM_TOL: f64 = 1e-8;
/// `|ΔL|` allowed between a reduced model and its target.
pub const REDUCTION_TOL: f64 = 1e-10;

#[derive(Clone, Debug, Serialize)]
pub struct FactCheck {
    pub fact: String,
    pub passed: bool,
    /// Largest deviation observed, where meaningful.
    pub deviation: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ValidationReport {
    pub model: String,
    pub params: BTreeMap<String, f64>,
    pub samples: usize,
    pub axioms: AxiomReport,
    pub reversibility: ReversibilityReport,
    pub facts: Vec<FactCheck>,
    pub passed: bool,
}

fn params_of(pairs: &[(&str, f64)]) -> BTreeMap<String, f64> {
    pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

fn reduction_gap(
    entry: &CatalogEntry,
    set: &[(&str, f64)],
    target: &str,
    target_params: &[(&str, f64)],
    tol: &Tolerances,
) -> Result<f64> {
    let reduced = entry.build(&params_of(set))?;
    let goal = model_from_name(target, &params_of(target_params))?;
    let mut worst: f64 = 0.0;
    for r in entry.reference_points.iter().filter(|r| r.dim() == reduced.dim()) {
        worst = worst.max((evaluate(reduced.as_ref(), r, tol)? - evaluate(goal.as_ref(), r, tol)?).abs());
    }
    Ok(worst)
}

/// Draws `samples` seeded regular points and runs every check.
pub fn validate_entry(
    entry: &CatalogEntry,
    params: &BTreeMap<String, f64>,
    samples: usize,
    seed: u64,
    tol: &Tolerances,
) -> Result<ValidationReport> {
    let model: Model = entry.build(params)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sampler = entry.sampler.clone();
    if sampler.x_lo.len() != model.dim() {
        sampler.x_lo = vec![-1.0; model.dim()];
        sampler.x_hi = vec![1.0; model.dim()];
    }
    let points = sampler.sample(&model, &mut rng, samples, tol)?;
    let axioms = check_axioms(model.as_ref(), &points, tol);
    let reversibility = check_reversibility(model.as_ref(), &points, tol);
    let mut facts = vec![FactCheck {
        fact: "axioms".into(),
        passed: axioms.max_violation() <= AXIOM_TOL,
        deviation: axioms.max_violation(),
    }];
    let refs: Vec<&PointedVector> = entry
        .reference_points
        .iter()
        .filter(|r| r.dim() == model.dim())
        .collect();
    for fact in &entry.known_facts {
        let check = match fact {
            KnownFact::LorentzianSignature => FactCheck {
                fact: "lorentzian_signature".into(),
                passed: axioms.signature_failures == 0,
                deviation: axioms.signature_failures as f64,
            },
            KnownFact::Reversible(want) => FactCheck {
                fact: format!("reversible={want}"),
                passed: reversibility.reversible == *want,
                deviation: reversibility.max_deviation,
            },
            KnownFact::OddUnderReversal => {
                let mut worst: f64 = 0.0;
                for r in &refs {
                    let a = evaluate(model.as_ref(), r, tol)?;
                    let b = evaluate(model.as_ref(), &r.reversed(), tol)?;
                    worst = worst.max((a + b).abs() / (1.0 + a.abs()));
                }
                FactCheck {
                    fact: "odd_under_reversal".into(),
                    passed: worst <= 1e-12,
                    deviation: worst,
                }
            }
            KnownFact::ReducesTo {
                set,
                target,
                target_params,
            } => {
                let gap = reduction_gap(entry, set, target, target_params, tol)?;
                FactCheck {
                    fact: format!("reduces_to={target}"),
                    passed: gap <= REDUCTION_TOL,
                    deviation: gap,
                }
            }
        };
        facts.push(check);
    }
    let passed = facts.iter().all(|f| f.passed) && axioms.signature_failures == 0;
    Ok(ValidationReport {
        model: entry.name.to_string(),
        params: model.params(),
        samples: points.len(),
        axioms,
        reversibility,
        facts,
        passed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::catalog_entry;

    #[test]
    fn rutz_validates_with_its_reduction() {
        let e = catalog_entry("rutz").unwrap();
        let r = validate_entry(&e, &BTreeMap::new(), 50, 1, &Tolerances::default()).unwrap();
        assert!(r.passed, "{r:?}");
        assert!(r.facts.iter().any(|f| f.fact == "reduces_to=schwarzschild"));
    }

    #[test]
    fn whole_catalog_validates() {
        for e in crate::models::catalog() {
            let r = validate_entry(&e, &BTreeMap::new(), 200, 7, &Tolerances::default()).unwrap();
            assert!(r.passed, "{}: {:?}", e.name, r.facts);
            assert_eq!(r.samples, 200);
        }
    }
}
