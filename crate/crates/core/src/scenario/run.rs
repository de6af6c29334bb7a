use std::time::Instant;

use serde::Serialize;
use serde_json::{json, Value};

use crate::causal::{classify, classify_curve, future_pairing, CausalClass, TimeOrientation};
use crate::connection::CurvatureRoute;
use crate::curve::CurveLike;
use crate::error::{FinslerError, Result};
use crate::fermat::index_form::{index_form, orthogonality_residual, OrthogonalLift};
use crate::fermat::jacobi::{auto_route, find_conjugate_points, jacobi_integrate, pairing_affinity, ConjugateScan};
use crate::fermat::observer::Observer;
use crate::fermat::report::analyze;
use crate::fermat::variation::random_generators;
use crate::geodesic::{self, GeodesicIvp, GeodesicPath};
use crate::model::{evaluate, Model};
use crate::models::catalog_entry;
use crate::point::PointedVector;
use crate::scenario::config::{Analysis, ScenarioConfig};
use crate::validate::validate_entry;

pub const VERSION: &str = concat!("finsler-fermat ", env!("CARGO_PKG_VERSION"));

#[derive(Clone, Debug, Serialize)]
pub struct ErrorRecord {
    pub kind: String,
    pub message: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct AnalysisOutcome {
    pub analysis: Analysis,
    pub ok: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub result: Option<Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<ErrorRecord>,
}

/// The JSON report. Wall-clock timings live in [`RunArtifacts`] so the
/// report stays byte-stable.
#[derive(Clone, Debug, Serialize)]
pub struct RunReport {
    pub version: String,
    pub config: ScenarioConfig,
    pub analyses: Vec<AnalysisOutcome>,
    pub failed: usize,
}

impl RunReport {
    pub fn outcome(&self, a: Analysis) -> Option<&AnalysisOutcome> {
        self.analyses.iter().find(|o| o.analysis == a)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

/// Report plus the plotting data behind it.
#[derive(Clone, Debug)]
pub struct RunArtifacts {
    pub report: RunReport,
    /// The Fermat geodesic if shot, otherwise the `geodesic` analysis path.
    pub path: Option<GeodesicPath>,
    pub scan: Option<ConjugateScan>,
    pub tau_sweep: Vec<(f64, f64)>,
    pub timings: Vec<(Analysis, f64)>,
}

struct Context<'a> {
    cfg: &'a ScenarioConfig,
    model: Model,
    q: Vec<f64>,
    t_orient: Option<TimeOrientation>,
    geodesic: Option<GeodesicPath>,
    fermat_path: Option<GeodesicPath>,
    scan: Option<ConjugateScan>,
    tau_sweep: Vec<(f64, f64)>,
}

impl Context<'_> {
    fn t_orient(&self) -> Result<&TimeOrientation> {
        self.t_orient.as_ref().ok_or_else(|| {
            FinslerError::bad_param(
                "time_orientation",
                format!("model '{}' has no canonical time orientation; supply one", self.model.name()),
            )
        })
    }

    fn path(&self) -> Result<&GeodesicPath> {
        self.fermat_path
            .as_ref()
            .or(self.geodesic.as_ref())
            .ok_or_else(|| FinslerError::bad_param("analyses", "needs a geodesic from 'fermat' or 'geodesic'"))
    }

    fn scan(&mut self) -> Result<ConjugateScan> {
        if let Some(s) = &self.scan {
            return Ok(s.clone());
        }
        let scan = find_conjugate_points(self.path()?, self.t_orient()?, &self.cfg.tolerances)?;
        self.scan = Some(scan.clone());
        Ok(scan)
    }
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("result serializes")
}

fn classify_analysis(ctx: &Context) -> Result<Value> {
    let tol = &ctx.cfg.tolerances;
    let y = ctx.cfg.y.clone().expect("resolved config");
    let p = PointedVector::new(ctx.q.clone(), y);
    let l = evaluate(ctx.model.as_ref(), &p, tol)?;
    let class = classify(ctx.model.as_ref(), &p, tol);
    let future = match &ctx.t_orient {
        Some(t) if class.is_causal() => Some(future_pairing(ctx.model.as_ref(), &p, t, tol)? < 0.0),
        _ => None,
    };
    let r = p.reversed();
    let reversed = match evaluate(ctx.model.as_ref(), &r, tol) {
        Ok(lr) => json!({"class": classify(ctx.model.as_ref(), &r, tol), "L": lr}),
        Err(e) => json!({"class": CausalClass::Singular, "error": e.kind()}),
    };
    Ok(json!({
        "x": p.x,
        "y": p.y,
        "L": l,
        "class": class,
        "future_pointed": future,
        "reversed": reversed,
    }))
}

fn geodesic_analysis(ctx: &mut Context) -> Result<Value> {
    let cfg = ctx.cfg;
    let y0 = cfg.geodesic.y0.clone().or(cfg.y.clone()).expect("resolved config");
    let mut ivp = GeodesicIvp::new(ctx.q.clone(), y0);
    ivp.span = (cfg.geodesic.span[0], cfg.geodesic.span[1]);
    let run = geodesic::integrate_to_boundary(&ctx.model, &ivp, &cfg.tolerances)?;
    let nodes: Vec<PointedVector> = run.path.nodes().into_iter().map(|(_, p)| p).collect();
    let classes = classify_curve(ctx.model.as_ref(), &nodes, &cfg.tolerances)?;
    let end = run.path.end_point();
    let exit = run.exit.as_ref().map(|e| json!({"s": e.s, "x": e.point.x, "y": e.point.y, "margin": e.margin}));
    let value = json!({
        "ivp": ivp,
        "initial_energy": run.path.initial_energy(),
        "energy_drift": run.path.energy_drift,
        "class": classes.uniform_class(),
        "stats": run.path.stats,
        "end": {"x": end.x, "y": end.y},
        "exit": exit,
    });
    if run.exit.is_some() {
        ctx.geodesic = Some(run.path);
        return Err(FinslerError::LeftRegularDomain {
            s: run.exit.map(|e| e.s).unwrap_or(f64::NAN),
        });
    }
    if run.path.energy_drift > cfg.tolerances.energy {
        return Err(FinslerError::EnergyDriftExceeded {
            drift: run.path.energy_drift,
            tol: cfg.tolerances.energy,
        });
    }
    ctx.geodesic = Some(run.path);
    Ok(value)
}

fn fermat_analysis(ctx: &mut Context) -> Result<Value> {
    let cfg = ctx.cfg;
    let spec = cfg
        .observer
        .clone()
        .ok_or_else(|| FinslerError::bad_param("observer", "the fermat analysis needs an observer"))?;
    let observer = Observer::new(spec, ctx.model.dim())?;
    let t = ctx.t_orient()?;
    observer.validate(ctx.model.as_ref(), t, ctx.q[0], &cfg.tolerances)?;
    let a = analyze(
        &ctx.model,
        &ctx.q,
        &observer,
        cfg.c,
        t,
        cfg.initial_guess.as_deref(),
        &cfg.fermat,
        cfg.seed,
        &cfg.tolerances,
    )?;
    let value = json!({"report": a.report, "details": a.details});
    ctx.fermat_path = Some(a.shot.path);
    ctx.scan = Some(a.scan);
    ctx.tau_sweep = a.tau_sweep;
    Ok(value)
}

fn jacobi_analysis(ctx: &mut Context) -> Result<Value> {
    let scan = ctx.scan()?;
    Ok(json!({
        "causal": scan.causal,
        "route": scan.route,
        "conjugate_points": scan.points,
        "endpoint_conjugate": scan.endpoint,
        "morse_index": scan.morse_index().ok(),
        "character": scan.character(),
    }))
}

fn index_analysis(ctx: &mut Context) -> Result<Value> {
    let cfg = ctx.cfg;
    let tol = &cfg.tolerances;
    let scan = ctx.scan()?;
    let path = ctx.path()?;
    let model = ctx.model.as_ref();
    let route: CurvatureRoute = auto_route(model, &path.point(0.0), tol)?;
    let gens = random_generators(model.dim(), cfg.index.fields, cfg.index.max_mode, cfg.seed ^ 0x1dec);
    use rayon::prelude::*;
    let rows: Vec<(f64, f64)> = gens
        .par_iter()
        .map(|g| {
            let lift = OrthogonalLift {
                model,
                curve: path,
                field: g,
                tol: *tol,
            };
            let j = index_form(model, path, &lift, &lift, route, tol)?;
            let orth = [0.25, 0.5, 0.75]
                .iter()
                .map(|s| orthogonality_residual(model, path, &lift, *s, tol).map(f64::abs))
                .collect::<Result<Vec<f64>>>()?
                .into_iter()
                .fold(0.0, f64::max);
            Ok((j, orth))
        })
        .collect::<Result<_>>()?;
    let values: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let negative = values.iter().filter(|v| **v < 0.0).count();

    let p0 = path.point(0.0);
    // A generic initial derivative, not orthogonal to λ̇.
    let mut dy0 = p0.y.clone();
    dy0[0] += 1.0;
    dy0[model.dim() - 1] += 1.0;
    let field = jacobi_integrate(model, path, &vec![0.0; model.dim()], &dy0, tol)?;
    let (slope, intercept, resid) = pairing_affinity(model, path, &field, 0, cfg.index.pairing_samples.max(3), tol)?;
    Ok(json!({
        "route": route,
        "conjugate_free": scan.points.is_empty() && scan.endpoint.is_none(),
        "fields": values.len(),
        "negative": negative,
        "max_value": values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        "min_value": values.iter().copied().fold(f64::INFINITY, f64::min),
        "max_orthogonality_residual": rows.iter().map(|r| r.1).fold(0.0, f64::max),
        "pairing_fit": {"slope": slope, "intercept": intercept, "max_residual": resid},
    }))
}

fn validate_analysis(ctx: &Context) -> Result<Value> {
    let cfg = ctx.cfg;
    let entry = catalog_entry(&cfg.model)?;
    let rep = validate_entry(&entry, &cfg.params, cfg.validate.samples, cfg.seed, &cfg.tolerances)?;
    let passed = rep.passed;
    let v = to_value(&rep);
    if !passed {
        return Err(FinslerError::NumericalBreakdown(format!("validation failed: {v}")));
    }
    Ok(v)
}

/// Runs the requested analyses in dependency order. A failing analysis is
/// recorded and the rest still run.
pub fn run(cfg: &ScenarioConfig) -> Result<RunArtifacts> {
    let cfg = cfg.clone().resolve()?;
    let model = catalog_entry(&cfg.model)?.build(&cfg.params)?;
    let t_orient = match &cfg.time_orientation {
        Some(t) => Some(TimeOrientation::constant(t.clone())),
        None => TimeOrientation::for_model(&model).ok(),
    };
    let mut ctx = Context {
        cfg: &cfg,
        q: cfg.q.clone().expect("resolved config"),
        model,
        t_orient,
        geodesic: None,
        fermat_path: None,
        scan: None,
        tau_sweep: Vec::new(),
    };
    let mut order = cfg.analyses.clone();
    order.sort_by_key(|a| a.rank());
    let mut outcomes = Vec::new();
    let mut timings = Vec::new();
    for a in order {
        let start = Instant::now();
        let res = match a {
            Analysis::Classify => classify_analysis(&ctx),
            Analysis::Geodesic => geodesic_analysis(&mut ctx),
            Analysis::Fermat => fermat_analysis(&mut ctx),
            Analysis::Jacobi => jacobi_analysis(&mut ctx),
            Analysis::Index => index_analysis(&mut ctx),
            Analysis::Validate => validate_analysis(&ctx),
        };
        timings.push((a, start.elapsed().as_secs_f64()));
        outcomes.push(match res {
            Ok(v) => AnalysisOutcome {
                analysis: a,
                ok: true,
                result: Some(v),
                error: None,
            },
            Err(e) => AnalysisOutcome {
                analysis: a,
                ok: false,
                result: None,
                error: Some(ErrorRecord {
                    kind: e.kind().into(),
                    message: e.to_string(),
                }),
            },
        });
    }
    let failed = outcomes.iter().filter(|o| !o.ok).count();
    let path = ctx.fermat_path.take().or(ctx.geodesic.take());
    let scan = ctx.scan.take();
    let tau_sweep = std::mem::take(&mut ctx.tau_sweep);
    Ok(RunArtifacts {
        report: RunReport {
            version: VERSION.into(),
            config: cfg,
            analyses: outcomes,
            failed,
        },
        path,
        scan,
        tau_sweep,
        timings,
    })
}
