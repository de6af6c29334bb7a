//! One-call Fermat analysis: shoot, first and second variation, conjugate
//! points, Morse index and critical-point character.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::causal::{CausalClass, TimeOrientation};
use crate::connection::CurvatureRoute;
use crate::error::Result;
use crate::fermat::admissible::AdmissibilityReport;
use crate::fermat::jacobi::{find_conjugate_points, Character, ConjugatePoint, ConjugateScan};
use crate::fermat::observer::{Observer, ObserverSpec};
use crate::fermat::shooting::{shoot, ShootStats, ShotGeodesic};
use crate::fermat::variation::{
    first_variation_tau, hessian_directions, random_generators, second_variation_check, AllowedFamily,
    FirstVariation, HessianDirections, SecondVariation, SpatialModes,
};
use crate::model::Model;
use crate::point::Tolerances;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FermatSettings {
    /// Random allowed-variation generators for the first variation.
    pub generators: usize,
    /// Highest Fourier mode in random generators.
    pub max_mode: u32,
    /// Fields on which the second-variation identity is checked.
    pub second_variation_fields: usize,
    /// Scale applied to second-variation fields (max coefficient).
    pub amplitude: f64,
    /// Fourier modes searched for signed Hessian directions at saddles.
    pub hessian_modes: u32,
    /// `τ(ε)` sweep over `[−sweep_eps, sweep_eps]`.
    pub sweep_eps: f64,
    pub sweep_points: usize,
}

impl Default for FermatSettings {
    fn default() -> Self {
        Self {
            generators: 10,
            max_mode: 3,
            second_variation_fields: 5,
            amplitude: 0.5,
            hessian_modes: 3,
            sweep_eps: 0.1,
            sweep_points: 21,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct GapEntry {
    pub gap: f64,
}

/// The summary record; field names are part of the output contract.
#[derive(Clone, Debug, Serialize)]
pub struct FermatReport {
    pub model: String,
    pub params: BTreeMap<String, f64>,
    pub q: Vec<f64>,
    pub observer: ObserverSpec,
    pub c: f64,
    pub tau: f64,
    pub first_variation_residual: f64,
    pub conjugate_points: Vec<ConjugatePoint>,
    /// `None` when `λ(1)` is itself conjugate.
    pub morse_index: Option<usize>,
    pub character: Character,
    pub second_variation: Vec<GapEntry>,
}

#[derive(Clone, Debug, Serialize)]
pub struct SecondVariationSample {
    pub generator: SpatialModes,
    #[serde(flatten)]
    pub values: SecondVariation,
}

#[derive(Clone, Debug, Serialize)]
pub struct SignedDirection {
    pub generator: SpatialModes,
    pub fd_hessian: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct FermatDetails {
    pub y0: Vec<f64>,
    pub shooting: ShootStats,
    pub admissibility: AdmissibilityReport,
    pub causal: CausalClass,
    pub route: CurvatureRoute,
    pub first_variation: FirstVariation,
    pub second_variation: Vec<SecondVariationSample>,
    pub endpoint_conjugate: Option<ConjugatePoint>,
    pub negative_direction: Option<SignedDirection>,
    pub positive_direction: Option<SignedDirection>,
    pub notes: Vec<String>,
}

/// Everything an analysis produces; only `report` and `details` are
/// serialized, the rest feeds the CSV bundle.
#[derive(Clone, Debug)]
pub struct FermatAnalysis {
    pub report: FermatReport,
    pub details: FermatDetails,
    pub shot: ShotGeodesic,
    pub scan: ConjugateScan,
    /// `(ε, τ(ε))` along the first second-variation field.
    pub tau_sweep: Vec<(f64, f64)>,
}

fn signed(d: Option<(SpatialModes, f64)>) -> Option<SignedDirection> {
    d.map(|(generator, fd_hessian)| SignedDirection { generator, fd_hessian })
}

#[allow(clippy::too_many_arguments)]
pub fn analyze(
    model: &Model,
    q: &[f64],
    observer: &Observer,
    c: f64,
    t_orient: &TimeOrientation,
    guess: Option<&[f64]>,
    settings: &FermatSettings,
    seed: u64,
    tol: &Tolerances,
) -> Result<FermatAnalysis> {
    let n = model.dim();
    let shot = shoot(model, q, observer, c, t_orient, guess, tol)?;
    let fam = AllowedFamily::new(model.as_ref(), &shot.path, observer, c, t_orient, shot.tau, tol)?;
    let mut notes = Vec::new();
    if (fam.tau0 - shot.tau).abs() > 1e-8 * (1.0 + shot.tau.abs()) {
        notes.push(format!("family re-timing moved tau by {:e}", fam.tau0 - shot.tau));
    }

    let gens = random_generators(n, settings.generators, settings.max_mode, seed);
    let first_variation = first_variation_tau(&fam, &gens)?;

    let scan = find_conjugate_points(&shot.path, t_orient, tol)?;
    let character = scan.character();
    let morse_index = scan.morse_index().ok();
    if scan.endpoint.is_some() {
        notes.push("endpoint is conjugate to q: Morse index undefined".into());
    }
    if scan.causal == CausalClass::Lightlike {
        notes.push("lightlike Morse index counted on the complement of span(lambda', T)".into());
    }

    let fields: Vec<SpatialModes> = random_generators(n, settings.second_variation_fields, settings.max_mode, seed ^ 0x5eed)
        .into_iter()
        .map(|g| g.scaled(settings.amplitude))
        .collect();
    let mut second = Vec::with_capacity(fields.len());
    for g in &fields {
        let values = second_variation_check(&fam, g, scan.route)?;
        second.push(SecondVariationSample {
            generator: g.clone(),
            values,
        });
    }

    let (negative_direction, positive_direction) = if character == Character::Saddle {
        let HessianDirections { negative, positive } = hessian_directions(&fam, settings.hessian_modes)?;
        (signed(negative), signed(positive))
    } else {
        (None, None)
    };

    let tau_sweep = match fields.first() {
        Some(g) if settings.sweep_points >= 2 => {
            let m = settings.sweep_points - 1;
            let eps: Vec<f64> = (0..=m)
                .map(|k| settings.sweep_eps * (2.0 * k as f64 / m as f64 - 1.0))
                .collect();
            match fam.sweep(g, &eps) {
                Ok(v) => v,
                Err(e) => {
                    notes.push(format!("tau sweep stopped: {e}"));
                    Vec::new()
                }
            }
        }
        _ => Vec::new(),
    };

    let report = FermatReport {
        model: model.name().to_string(),
        params: model.params(),
        q: q.to_vec(),
        observer: observer.spec().clone(),
        c,
        tau: shot.tau,
        first_variation_residual: first_variation.residual,
        conjugate_points: scan.points.clone(),
        morse_index,
        character,
        second_variation: second.iter().map(|s| GapEntry { gap: s.values.gap }).collect(),
    };
    let details = FermatDetails {
        y0: shot.y0.clone(),
        shooting: shot.stats,
        admissibility: shot.admissibility.clone(),
        causal: scan.causal,
        route: scan.route,
        first_variation,
        second_variation: second,
        endpoint_conjugate: scan.endpoint,
        negative_direction,
        positive_direction,
        notes,
    };
    Ok(FermatAnalysis {
        report,
        details,
        shot,
        scan,
        tau_sweep,
    })
}
