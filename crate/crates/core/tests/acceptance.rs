//! Acceptance battery: one PASS/FAIL line per criterion. Every tolerance is
//! pinned below; the test fails if any criterion does.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::time::Instant;

use nalgebra::DMatrix;

use finsler_core::causal::TimeOrientation;
use finsler_core::connection::{chern_coefficients, hh_curvature, CurvatureRoute};
use finsler_core::curve::{CurveLike, FnCurve};
use finsler_core::fermat::index_form::{index_form, OrthogonalLift};
use finsler_core::fermat::jacobi::{find_conjugate_points, jacobi_integrate, pairing_affinity, Character};
use finsler_core::fermat::observer::Observer;
use finsler_core::fermat::report::{analyze, FermatSettings};
use finsler_core::fermat::shooting::{shoot, ShotGeodesic};
use finsler_core::fermat::variation::{
    first_variation_tau, fourier_basis, negative_eigenvalues, random_generators, tau_hessian, AllowedFamily,
};
use finsler_core::geodesic::{integrate_to_boundary, GeodesicIvp};
use finsler_core::models::{self, catalog, catalog_entry, model_from_name};
use finsler_core::scenario::{parse_config, run};
use finsler_core::validate::validate_entry;
use finsler_core::{Model, Tolerances};

const AXIOM_TOL: f64 = 1e-8;
const AXIOM_SAMPLES: usize = 200;
const AXIOM_SECONDS: f64 = 10.0;
const REDUCTION_TOL: f64 = 1e-10;
const LEVI_CIVITA_REL: f64 = 1e-6;
const KRETSCHMANN_REL: f64 = 1e-6;
const ENERGY_DRIFT: f64 = 1e-8;
const ENERGY_SECONDS: f64 = 5.0;
const FIRST_VARIATION_TOL: f64 = 1e-6;
const ARRIVAL_TOL: f64 = 1e-8;
const ORBIT_TAU_REL: f64 = 1e-8;
const CONVERSE_MIN_SLOPE: f64 = 1e-3;
const SECOND_VARIATION_GAP: f64 = 1e-3;
const SECOND_VARIATION_FIELDS: usize = 5;
const CONJUGATE_S_TOL: f64 = 1e-6;
const JACOBI_ZERO_TOL: f64 = 1e-8;
const INDEX_FIELDS: usize = 100;
const PAIRING_AFFINE_TOL: f64 = 1e-8;
const BATTERY_SECONDS: f64 = 180.0;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        passed,
        detail: detail.into(),
    }
}

fn tol() -> Tolerances {
    Tolerances::default()
}

fn params(pairs: &[(&str, f64)]) -> BTreeMap<String, f64> {
    pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

// 1. Axioms on every catalog model.
fn axioms() -> Outcome {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    let mut failures = Vec::new();
    for e in catalog() {
        match validate_entry(&e, &BTreeMap::new(), AXIOM_SAMPLES, 1, &tol()) {
            Ok(r) => {
                worst = worst.max(r.axioms.max_violation());
                let ok = r.samples >= AXIOM_SAMPLES
                    && r.axioms.samples_checked >= AXIOM_SAMPLES
                    && r.axioms.max_violation() <= AXIOM_TOL
                    && r.axioms.signature_failures == 0;
                if !ok {
                    failures.push(format!("{} ({:e}, {} signature)", e.name, r.axioms.max_violation(), r.axioms.signature_failures));
                }
            }
            Err(err) => failures.push(format!("{}: {err}", e.name)),
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        failures.is_empty() && secs < AXIOM_SECONDS,
        format!("max violation {worst:.2e}, {secs:.1}s, failures {failures:?}"),
    )
}

// 2. Reduction oracles at reference points.
fn reductions() -> Outcome {
    let cases = [
        ("rutz", vec![("delta", 0.0)], "schwarzschild", vec![("m", 1.0)]),
        ("bogoslovsky", vec![("b", 0.0)], "minkowski", vec![("n", 4.0)]),
        ("rainbow", vec![("c1", 0.0)], "minkowski", vec![("n", 4.0)]),
    ];
    let mut worst: f64 = 0.0;
    for (name, set, target, tp) in &cases {
        let e = catalog_entry(name).unwrap();
        let reduced = e.build(&params(set)).unwrap();
        let goal = model_from_name(target, &params(tp)).unwrap();
        for p in &e.reference_points {
            worst = worst.max((reduced.value(&p.x, &p.y) - goal.value(&p.x, &p.y)).abs());
        }
    }
    outcome(worst <= REDUCTION_TOL, format!("max |dL| {worst:.2e}"))
}

// Closed-form Schwarzschild Christoffel symbols Γ^i_jk, i-major.
fn schwarzschild_gamma(m: f64, x: &[f64]) -> Vec<DMatrix<f64>> {
    let (r, th) = (x[1], x[2]);
    let f = 1.0 - 2.0 * m / r;
    let mut g = vec![DMatrix::zeros(4, 4); 4];
    let mut sym = |i: usize, j: usize, k: usize, v: f64| {
        g[i][(j, k)] = v;
        g[i][(k, j)] = v;
    };
    sym(0, 0, 1, m / (r * r * f));
    sym(1, 0, 0, m * f / (r * r));
    sym(1, 1, 1, -m / (r * r * f));
    sym(1, 2, 2, -r * f);
    sym(1, 3, 3, -r * f * th.sin().powi(2));
    sym(2, 1, 2, 1.0 / r);
    sym(2, 3, 3, -th.sin() * th.cos());
    sym(3, 1, 3, 1.0 / r);
    sym(3, 2, 3, th.cos() / th.sin());
    g
}

// Riemann R^i_jkl of the closed-form symbols; derivatives by a 4th-order stencil.
fn schwarzschild_riemann(m: f64, x: &[f64]) -> Vec<f64> {
    let h = 1e-3;
    let dgam: Vec<Vec<DMatrix<f64>>> = (0..4)
        .map(|k| {
            let at = |d: f64| {
                let mut y = x.to_vec();
                y[k] += d;
                schwarzschild_gamma(m, &y)
            };
            let (p1, m1, p2, m2) = (at(h), at(-h), at(2.0 * h), at(-2.0 * h));
            (0..4)
                .map(|i| (8.0 * (&p1[i] - &m1[i]) - (&p2[i] - &m2[i])) / (12.0 * h))
                .collect()
        })
        .collect();
    let g = schwarzschild_gamma(m, x);
    let mut out = vec![0.0; 256];
    for i in 0..4 {
        for j in 0..4 {
            for k in 0..4 {
                for l in 0..4 {
                    let mut v = dgam[k][i][(j, l)] - dgam[l][i][(j, k)];
                    for s in 0..4 {
                        v += g[i][(s, k)] * g[s][(j, l)] - g[i][(s, l)] * g[s][(j, k)];
                    }
                    out[((i * 4 + j) * 4 + k) * 4 + l] = v;
                }
            }
        }
    }
    out
}

fn kretschmann(m: f64, x: &[f64], riem: impl Fn(usize, usize, usize, usize) -> f64) -> f64 {
    let (r, th) = (x[1], x[2]);
    let f = 1.0 - 2.0 * m / r;
    let g = [-f, 1.0 / f, r * r, (r * th.sin()).powi(2)];
    let mut k = 0.0;
    for i in 0..4 {
        for j in 0..4 {
            for a in 0..4 {
                for b in 0..4 {
                    // Diagonal metric: R_ijab R^ijab = g_ii R^i_jab · R^i_jab · g^jj g^aa g^bb.
                    let v = riem(i, j, a, b);
                    k += v * v * g[i] / (g[j] * g[a] * g[b]);
                }
            }
        }
    }
    k
}

// 3. Chern coefficients and hh-curvature against the Levi-Civita oracle.
fn levi_civita() -> Outcome {
    let m = 1.0;
    let model = models::schwarzschild(m).unwrap();
    let mut worst_gamma: f64 = 0.0;
    let mut worst_riem: f64 = 0.0;
    let mut worst_kretsch: f64 = 0.0;
    for r in [4.0 * m, 6.0 * m, 10.0 * m] {
        let x = vec![0.3, r, 1.1, 0.4];
        let p = finsler_core::PointedVector::new(x.clone(), vec![1.0, 0.1, 0.02, 0.03]);
        let chern = chern_coefficients(model.as_ref(), &p, &tol()).unwrap();
        let oracle = schwarzschild_gamma(m, &x);
        let scale = oracle.iter().map(|g| g.amax()).fold(0.0, f64::max);
        let diff = chern.iter().zip(&oracle).map(|(a, b)| (a - b).amax()).fold(0.0, f64::max);
        worst_gamma = worst_gamma.max(diff / scale);

        let hh = hh_curvature(model.as_ref(), &p, &tol()).unwrap();
        let oracle = schwarzschild_riemann(m, &x);
        let scale = oracle.iter().fold(0.0f64, |a, b| a.max(b.abs()));
        let diff = hh.r.iter().zip(&oracle).fold(0.0f64, |a, (u, v)| a.max((u - v).abs()));
        worst_riem = worst_riem.max(diff / scale);

        let exact = 48.0 * m * m / r.powi(6);
        let k_oracle = kretschmann(m, &x, |i, j, k, l| oracle[((i * 4 + j) * 4 + k) * 4 + l]);
        let k_hh = kretschmann(m, &x, |i, j, k, l| hh.get(i, j, k, l));
        worst_kretsch = worst_kretsch
            .max((k_oracle - exact).abs() / exact)
            .max((k_hh - exact).abs() / exact);
    }
    outcome(
        worst_gamma <= LEVI_CIVITA_REL && worst_riem <= LEVI_CIVITA_REL && worst_kretsch <= KRETSCHMANN_REL,
        format!("Chern {worst_gamma:.2e}, hh {worst_riem:.2e}, Kretschmann {worst_kretsch:.2e} (relative)"),
    )
}

// 4. Energy conservation along integrated geodesics.
fn energy() -> Outcome {
    let cases: Vec<(&str, Model, Vec<f64>, Vec<f64>)> = vec![
        ("minkowski", models::minkowski(4).unwrap(), vec![0.0; 4], vec![1.0, 0.3, -0.2, 0.1]),
        (
            "schwarzschild",
            models::schwarzschild(1.0).unwrap(),
            vec![0.0, 10.0, PI / 2.0, 0.0],
            vec![1.2, -0.3, 0.01, 0.03],
        ),
        (
            "bogoslovsky",
            catalog_entry("bogoslovsky").unwrap().build(&params(&[("b", 0.1)])).unwrap(),
            vec![0.0; 4],
            vec![1.0, 0.2, 0.1, -0.3],
        ),
    ];
    let mut lines = Vec::new();
    let mut ok = true;
    for (name, model, x0, y0) in cases {
        let start = Instant::now();
        let run = integrate_to_boundary(&model, &GeodesicIvp::new(x0, y0), &tol()).unwrap();
        let l0 = run.path.initial_energy();
        let drift = (0..=400)
            .map(|k| {
                let p = run.path.point(k as f64 / 400.0);
                (model.value(&p.x, &p.y) - l0).abs()
            })
            .fold(0.0, f64::max);
        let secs = start.elapsed().as_secs_f64();
        ok &= run.exit.is_none() && drift <= ENERGY_DRIFT && secs < ENERGY_SECONDS;
        lines.push(format!("{name} {drift:.1e} ({secs:.2}s)"));
    }
    outcome(ok, lines.join(", "))
}

fn minkowski_shot(c: f64) -> (Model, TimeOrientation, Observer, ShotGeodesic) {
    let m = models::minkowski(4).unwrap();
    let t = TimeOrientation::for_model(&m).unwrap();
    let obs = Observer::fixed(vec![1.0, 0.0, 0.0]);
    let shot = shoot(&m, &[0.0; 4], &obs, c, &t, None, &tol()).unwrap();
    (m, t, obs, shot)
}

// Independent Schwarzschild arrival: the photon orbit u'' + u = 3mu² from
// φ = 0 to φ = π/2 at r = 10, then t = ∫ dφ / (b u² (1 − 2mu)).
fn orbit_arrival(m: f64, r: f64) -> f64 {
    let u0 = 1.0 / r;
    let steps = 20000;
    let h = (PI / 2.0) / steps as f64;
    let flight = |w: f64| -> (f64, f64) {
        let b = 1.0 / (w * w + u0 * u0 * (1.0 - 2.0 * m * u0)).sqrt();
        // State (u, u', t); classical RK4.
        let rhs = |s: [f64; 3]| [s[1], 3.0 * m * s[0] * s[0] - s[0], 1.0 / (b * s[0] * s[0] * (1.0 - 2.0 * m * s[0]))];
        let mut s = [u0, w, 0.0];
        for _ in 0..steps {
            let k1 = rhs(s);
            let k2 = rhs([0, 1, 2].map(|i| s[i] + 0.5 * h * k1[i]));
            let k3 = rhs([0, 1, 2].map(|i| s[i] + 0.5 * h * k2[i]));
            let k4 = rhs([0, 1, 2].map(|i| s[i] + h * k3[i]));
            s = [0, 1, 2].map(|i| s[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]));
        }
        (s[0] - u0, s[2])
    };
    // The chord bends inward: u first grows, so u'(0) > 0.
    let (mut lo, mut hi) = (0.0, 0.2);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if flight(mid).0 > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    flight(0.5 * (lo + hi)).1
}

// 5. First variation vanishes on shot geodesics; analytic arrivals.
fn fermat_forward() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for (c, exact) in [(0.0, 1.0), (1.0, 2f64.sqrt())] {
        let (m, t, obs, shot) = minkowski_shot(c);
        let fam = AllowedFamily::new(m.as_ref(), &shot.path, &obs, c, &t, shot.tau, &tol()).unwrap();
        let fv = first_variation_tau(&fam, &random_generators(4, 10, 3, 100 + c as u64)).unwrap();
        let err = (shot.tau - exact).abs();
        ok &= err <= ARRIVAL_TOL && fv.residual <= FIRST_VARIATION_TOL;
        parts.push(format!("minkowski c={c}: tau err {err:.1e}, dtau {:.1e}", fv.residual));
    }
    let m = models::schwarzschild(1.0).unwrap();
    let t = TimeOrientation::for_model(&m).unwrap();
    let obs = Observer::fixed(vec![10.0, PI / 2.0, PI / 2.0]);
    let q = [0.0, 10.0, PI / 2.0, 0.0];
    let shot = shoot(&m, &q, &obs, 0.0, &t, None, &tol()).unwrap();
    let fam = AllowedFamily::new(m.as_ref(), &shot.path, &obs, 0.0, &t, shot.tau, &tol()).unwrap();
    let fv = first_variation_tau(&fam, &random_generators(4, 10, 3, 11)).unwrap();
    let tau_orbit = orbit_arrival(1.0, 10.0);
    let rel = (shot.tau - tau_orbit).abs() / tau_orbit;
    ok &= fv.residual <= FIRST_VARIATION_TOL && rel <= ORBIT_TAU_REL;
    parts.push(format!("schwarzschild: dtau {:.1e}, tau vs orbit {rel:.1e}", fv.residual));
    outcome(ok, parts.join("; "))
}

// 6. A smoothed two-segment admissible curve is not critical.
fn fermat_converse() -> Outcome {
    let m = models::minkowski(4).unwrap();
    let t = TimeOrientation::for_model(&m).unwrap();
    let k = 20.0;
    let sm = move |s: f64| -((-k * s).exp() + (-k * (1.0 - s)).exp()).ln() / k;
    let (s0, s1) = (sm(0.0), sm(1.0));
    let bump = move |s: f64| 0.6 * (sm(s) - (1.0 - s) * s0 - s * s1);
    let base = FnCurve::new((0.0, 1.0), move |s| vec![2f64.sqrt() * s, s, bump(s), 0.0]);
    let obs = Observer::fixed(vec![1.0, 0.0, 0.0]);
    let fam = AllowedFamily::new(m.as_ref(), &base, &obs, 1.0, &t, 1.5, &tol()).unwrap();
    let fv = first_variation_tau(&fam, &random_generators(4, 10, 3, 3)).unwrap();
    outcome(
        fv.residual >= CONVERSE_MIN_SLOPE,
        format!("max |dtau/deps| {:.3e}, formula gap {:.1e}", fv.residual, fv.max_prediction_gap),
    )
}

fn sphere_shot(arc: f64) -> (Model, TimeOrientation, Observer, ShotGeodesic) {
    let m = models::product_sphere();
    let t = TimeOrientation::for_model(&m).unwrap();
    let obs = Observer::fixed(vec![PI / 2.0, arc]);
    let guess = [(1.0 + arc * arc).sqrt(), 0.0, arc];
    let shot = shoot(&m, &[0.0, PI / 2.0, 0.0], &obs, 1.0, &t, Some(&guess), &tol()).unwrap();
    (m, t, obs, shot)
}

// 7. FD Hessian of τ against the index-form prediction.
fn second_variation() -> Outcome {
    let settings = FermatSettings {
        generators: 0,
        second_variation_fields: SECOND_VARIATION_FIELDS,
        sweep_points: 0,
        ..FermatSettings::default()
    };
    let mut ok = true;
    let mut parts = Vec::new();
    let cases: Vec<(&str, Model, Vec<f64>, Observer, f64, Option<Vec<f64>>)> = vec![
        ("minkowski timelike", models::minkowski(4).unwrap(), vec![0.0; 4], Observer::fixed(vec![1.0, 0.0, 0.0]), 1.0, None),
        ("minkowski null", models::minkowski(4).unwrap(), vec![0.0; 4], Observer::fixed(vec![1.0, 0.0, 0.0]), 0.0, None),
        (
            "sphere short arc",
            models::product_sphere(),
            vec![0.0, PI / 2.0, 0.0],
            Observer::fixed(vec![PI / 2.0, PI / 2.0]),
            1.0,
            Some(vec![(1.0 + PI * PI / 4.0).sqrt(), 0.0, PI / 2.0]),
        ),
    ];
    for (name, m, q, obs, c, guess) in cases {
        let t = TimeOrientation::for_model(&m).unwrap();
        let a = analyze(&m, &q, &obs, c, &t, guess.as_deref(), &settings, 21, &tol()).unwrap();
        let gaps: Vec<f64> = a.report.second_variation.iter().map(|g| g.gap).collect();
        let worst = gaps.iter().copied().fold(0.0, f64::max);
        ok &= gaps.len() >= SECOND_VARIATION_FIELDS && worst <= SECOND_VARIATION_GAP;
        parts.push(format!("{name} {worst:.1e} over {}", gaps.len()));
    }
    outcome(ok, parts.join(", "))
}

// 8. Conjugate points, Morse index and character on R×S².
fn conjugate_points() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for (arc, want_index, want_char) in [
        (0.5 * PI, 0usize, Character::LocalMin),
        (1.5 * PI, 1, Character::Saddle),
        (2.5 * PI, 2, Character::Saddle),
    ] {
        let (m, t, obs, shot) = sphere_shot(arc);
        let scan = find_conjugate_points(&shot.path, &t, &tol()).unwrap();
        let index = scan.morse_index().unwrap();
        // Transverse Jacobi fields are sin(arc·s): zeros at s = kπ/arc.
        let zero_err = scan
            .points
            .iter()
            .enumerate()
            .map(|(k, p)| (p.s - (k + 1) as f64 * PI / arc).abs())
            .fold(0.0, f64::max);
        let mults_ok = scan.points.iter().all(|p| p.mult == 1);
        let fam = AllowedFamily::new(m.as_ref(), &shot.path, &obs, 1.0, &t, shot.tau, &tol()).unwrap();
        let hess = tau_hessian(&fam, &fourier_basis(3, 3)).unwrap();
        let negatives = negative_eigenvalues(&hess, 1e-6);
        let eig = hess.clone().symmetric_eigen();
        let has_pos = eig.eigenvalues.iter().any(|v| *v > 0.0);
        let has_neg = eig.eigenvalues.iter().any(|v| *v < 0.0);
        let signs_ok = match want_char {
            Character::Saddle => has_pos && has_neg,
            _ => has_pos && !has_neg,
        };
        let mut line_ok = index == want_index
            && scan.character() == want_char
            && scan.points.len() == want_index
            && mults_ok
            && zero_err <= JACOBI_ZERO_TOL
            && negatives == index
            && signs_ok;
        if want_index == 1 {
            line_ok &= (scan.points[0].s - PI / arc).abs() <= CONJUGATE_S_TOL;
        }
        ok &= line_ok;
        parts.push(format!(
            "arc {:.1}π: index {index}, {}, s* err {zero_err:.1e}, Hessian negatives {negatives}",
            arc / PI,
            scan.character()
        ));
    }
    outcome(ok, parts.join("; "))
}

// 9. Index form negative on V⊥₀ without conjugate points; g(Y, λ̇) affine.
fn index_negativity() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    let schw = models::schwarzschild(1.0).unwrap();
    let schw_path = integrate_to_boundary(
        &schw,
        &GeodesicIvp::new(vec![0.0, 10.0, PI / 2.0, 0.0], vec![6.0, -0.25, 0.05, 0.15]),
        &tol(),
    )
    .unwrap()
    .path;
    let paths = vec![
        ("minkowski", minkowski_shot(1.0).3.path),
        ("sphere short arc", sphere_shot(0.5 * PI).3.path),
        ("schwarzschild", schw_path),
    ];
    for (name, path) in paths {
        let model = path.model().clone();
        let t = TimeOrientation::for_model(&model).unwrap();
        let scan = find_conjugate_points(&path, &t, &tol()).unwrap();
        let free = scan.points.is_empty() && scan.endpoint.is_none();
        let n = model.dim();
        let gens = random_generators(n, INDEX_FIELDS, 3, 2024);
        let mut max_j = f64::NEG_INFINITY;
        for g in &gens {
            let lift = OrthogonalLift {
                model: model.as_ref(),
                curve: &path,
                field: g,
                tol: tol(),
            };
            let j = index_form(model.as_ref(), &path, &lift, &lift, CurvatureRoute::Formal, &tol()).unwrap();
            max_j = max_j.max(j);
        }
        let p0 = path.point(0.0);
        let mut dy0 = p0.y.clone();
        dy0[0] += 1.0;
        dy0[n - 1] += 0.5;
        let field = jacobi_integrate(model.as_ref(), &path, &vec![0.0; n], &dy0, &tol()).unwrap();
        let (slope, _, resid) = pairing_affinity(model.as_ref(), &path, &field, 0, 41, &tol()).unwrap();
        ok &= free && max_j < 0.0 && resid <= PAIRING_AFFINE_TOL && slope != 0.0;
        parts.push(format!("{name}: max J {max_j:.3e}, affine residual {resid:.1e}"));
    }
    outcome(ok, parts.join("; "))
}

// 10. Byte-identical reruns.
fn determinism() -> Outcome {
    let cfg = parse_config(
        r#"{"model": "product_sphere", "q": [0, 1.5707963267948966, 0],
            "observer": {"kind": "static", "position": [1.5707963267948966, 4.71238898038469]},
            "c": 1, "initial_guess": [4.821450394889489, 0, 4.71238898038469],
            "analyses": ["classify", "fermat", "jacobi", "index", "validate"], "seed": 77}"#,
    )
    .unwrap();
    let a = run(&cfg).unwrap().report.to_json();
    let b = run(&cfg).unwrap().report.to_json();
    outcome(a == b, format!("{} bytes, identical: {}", a.len(), a == b))
}

#[test]
fn acceptance() {
    let start = Instant::now();
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("axiom suite", axioms),
        ("reduction oracles", reductions),
        ("Lorentzian equivalence", levi_civita),
        ("energy conservation", energy),
        ("Fermat forward", fermat_forward),
        ("Fermat converse probe", fermat_converse),
        ("second-variation identity", second_variation),
        ("conjugate points and Morse index", conjugate_points),
        ("index-form negativity", index_negativity),
        ("determinism", determinism),
    ];
    let mut failed = Vec::new();
    for (k, (name, f)) in criteria.iter().enumerate() {
        let t0 = Instant::now();
        let o = f();
        let tag = if o.passed { "PASS" } else { "FAIL" };
        println!("criterion {:>2} {tag} {name} [{:.1}s]: {}", k + 1, t0.elapsed().as_secs_f64(), o.detail);
        if !o.passed {
            failed.push(k + 1);
        }
    }
    let total = start.elapsed().as_secs_f64();
    let fast = total < BATTERY_SECONDS;
    println!("battery {} in {total:.1}s (limit {BATTERY_SECONDS}s)", if fast { "PASS" } else { "FAIL" });
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
    assert!(fast);
}
