//! Allowed variations of an admissible curve and the numerical first and
//! second variation of the arrival time.
//!
//! A family member perturbs the spatial chart components by `ε·A`, bends
//! the end onto the observer with a smoothstep, and recovers the time
//! component from `dx⁰/ds = v⁰` where `v⁰` solves `L(x, (v⁰, ẋ̄)) = −c²`.
//! Its arrival time is where `x⁰(1)` meets `γ⁰(τ)`.

use std::cell::Cell;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::causal::{future_pairing, TimeOrientation};
use crate::connection::CurvatureRoute;
use crate::curve::{derivative, CurveLike, VectorField};
use crate::error::{FinslerError, Result};
use crate::fermat::admissible::shell_time_component;
use crate::fermat::index_form::{index_form, OrthogonalLift};
use crate::fermat::observer::Observer;
use crate::model::Lagrangian;
use crate::ode::{self, OdeOptions, OdeSolution};
use crate::point::{PointedVector, Tolerances};
use crate::quadrature;
use crate::vertical::{fundamental_tensor, second_order};

/// Steps tried for the first-derivative stencil, largest first.
pub const FIRST_STEPS: [f64; 9] = [0.04, 0.02, 0.01, 0.005, 0.0025, 0.00125, 6.25e-4, 3.125e-4, 1.5625e-4];
/// Steps tried for the second-derivative stencil, largest first.
pub const SECOND_STEPS: [f64; 6] = [0.1, 0.05, 0.025, 0.0125, 0.00625, 0.003125];

/// A spatial generator `A(s) = Σ sin(kπs) e_k` with vanishing time
/// component and endpoints.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpatialModes {
    pub n: usize,
    /// `(k, e)` pairs; `e[0]` is ignored.
    pub modes: Vec<(u32, Vec<f64>)>,
}

impl SpatialModes {
    /// `amplitude · sin(kπs) e_i` for spatial index `i ≥ 1`.
    pub fn single(n: usize, k: u32, i: usize, amplitude: f64) -> Self {
        let mut e = vec![0.0; n];
        e[i] = amplitude;
        Self { n, modes: vec![(k, e)] }
    }

    /// Uniform coefficients in `[−1, 1]` on modes `1..=max_mode`, rescaled
    /// to unit maximum coefficient.
    pub fn random<R: Rng>(n: usize, max_mode: u32, rng: &mut R) -> Self {
        let mut modes: Vec<(u32, Vec<f64>)> = (1..=max_mode)
            .map(|k| {
                let mut e = vec![0.0; n];
                for v in e.iter_mut().skip(1) {
                    *v = rng.gen_range(-1.0..1.0);
                }
                (k, e)
            })
            .collect();
        let big = modes
            .iter()
            .flat_map(|(_, e)| e.iter())
            .fold(0.0f64, |m, v| m.max(v.abs()));
        for (_, e) in modes.iter_mut() {
            for v in e.iter_mut() {
                *v /= big;
            }
        }
        Self { n, modes }
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            n: self.n,
            modes: self
                .modes
                .iter()
                .map(|(k, e)| (*k, e.iter().map(|v| v * c).collect()))
                .collect(),
        }
    }

    /// Sum of two generators.
    pub fn plus(&self, other: &Self) -> Self {
        let mut modes = self.modes.clone();
        modes.extend(other.modes.iter().cloned());
        Self { n: self.n, modes }
    }
}

impl VectorField for SpatialModes {
    fn value(&self, s: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        for (k, e) in &self.modes {
            let w = (*k as f64 * std::f64::consts::PI * s).sin();
            for i in 1..self.n {
                out[i] += w * e[i];
            }
        }
        out
    }

    fn derivative(&self, s: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        for (k, e) in &self.modes {
            let kk = *k as f64 * std::f64::consts::PI;
            let w = kk * (kk * s).cos();
            for i in 1..self.n {
                out[i] += w * e[i];
            }
        }
        out
    }
}

/// `count` seeded random generators on modes `1..=max_mode`.
pub fn random_generators(n: usize, count: usize, max_mode: u32, seed: u64) -> Vec<SpatialModes> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| SpatialModes::random(n, max_mode, &mut rng)).collect()
}

/// Fourier basis `sin(kπs) e_i`, `k = 1..=max_mode`, over all spatial `i`.
pub fn fourier_basis(n: usize, max_mode: u32) -> Vec<SpatialModes> {
    let mut out = Vec::new();
    for k in 1..=max_mode {
        for i in 1..n {
            out.push(SpatialModes::single(n, k, i, 1.0));
        }
    }
    out
}

fn smoothstep(s: f64) -> (f64, f64) {
    (s * s * (3.0 - 2.0 * s), 6.0 * s * (1.0 - s))
}

/// Allowed variations of an admissible curve `base` from `q = base(0)`.
pub struct AllowedFamily<'a> {
    pub model: &'a dyn Lagrangian,
    pub base: &'a dyn CurveLike,
    pub observer: &'a Observer,
    pub c: f64,
    pub t_orient: &'a TimeOrientation,
    pub tol: Tolerances,
    /// Arrival parameter of the unperturbed member.
    pub tau0: f64,
}

/// One curve of the family.
pub struct FamilyMember<'a> {
    family: &'a AllowedFamily<'a>,
    generator: &'a dyn VectorField,
    eps: f64,
    shift: Vec<f64>,
    time: OdeSolution,
    pub tau: f64,
}

impl<'a> AllowedFamily<'a> {
    /// Builds the family; the unperturbed arrival time is computed from
    /// the member at `ε = 0`, starting the search at `tau_guess`.
    pub fn new(
        model: &'a dyn Lagrangian,
        base: &'a dyn CurveLike,
        observer: &'a Observer,
        c: f64,
        t_orient: &'a TimeOrientation,
        tau_guess: f64,
        tol: &Tolerances,
    ) -> Result<Self> {
        let mut fam = Self {
            model,
            base,
            observer,
            c,
            t_orient,
            tol: *tol,
            tau0: tau_guess,
        };
        let n = model.dim();
        let zero = crate::curve::FnField::new(move |_| vec![0.0; n]);
        let tau0 = fam.member(&zero, 0.0)?.tau;
        fam.tau0 = tau0;
        Ok(fam)
    }

    fn n(&self) -> usize {
        self.model.dim()
    }

    fn spatial(&self, gen: &dyn VectorField, eps: f64, shift: &[f64], s: f64) -> (Vec<f64>, Vec<f64>) {
        let n = self.n();
        let (bx, bv) = (self.base.position(s), self.base.velocity(s));
        let (a, da) = (gen.value(s), gen.derivative(s));
        let (sig, dsig) = smoothstep(s);
        let x = (1..n).map(|i| bx[i] + eps * a[i] + sig * shift[i - 1]).collect();
        let v = (1..n).map(|i| bv[i] + eps * da[i] + dsig * shift[i - 1]).collect();
        (x, v)
    }

    fn fail(msg: impl Into<String>) -> FinslerError {
        FinslerError::VariationConstructionFailed(msg.into())
    }

    /// Integrates the time component for a given end shift.
    fn time_component(&self, gen: &dyn VectorField, eps: f64, shift: &[f64]) -> Result<OdeSolution> {
        let q0 = self.base.position(0.0)[0];
        let last = Cell::new(self.base.velocity(0.0)[0]);
        let rhs = |s: f64, st: &[f64], d: &mut [f64]| -> Result<()> {
            let (xs, vs) = self.spatial(gen, eps, shift, s);
            let mut x = vec![st[0]];
            x.extend_from_slice(&xs);
            let v0 = shell_time_component(self.model, &x, &vs, self.c, Some(last.get()), &self.tol)?;
            last.set(v0);
            d[0] = v0;
            Ok(())
        };
        let opts = OdeOptions::with_tol(1e-13, 1e-14);
        ode::integrate(rhs, 0.0, &[q0], 1.0, &opts, None::<fn(f64, &[f64]) -> f64>)
            .map_err(|e| Self::fail(format!("time component at eps={eps}: {e}")))
    }

    fn shift_for(&self, tau: f64) -> Vec<f64> {
        let end = self.base.position(1.0);
        let target = self.observer.position(tau);
        (1..self.n()).map(|i| target[i] - end[i]).collect()
    }

    /// The member `Λ(ε, ·)` generated by `gen`, re-timed onto the observer.
    pub fn member<'b>(&'b self, gen: &'b dyn VectorField, eps: f64) -> Result<FamilyMember<'b>> {
        let (shift, time, tau) = if self.observer.is_static() {
            let shift = self.shift_for(0.0);
            let time = self.time_component(gen, eps, &shift)?;
            let tau = time.at(1.0)[0];
            (shift, time, tau)
        } else {
            let eval = |tau: f64| -> Result<(f64, Vec<f64>, OdeSolution)> {
                let shift = self.shift_for(tau);
                let time = self.time_component(gen, eps, &shift)?;
                Ok((time.at(1.0)[0] - self.observer.position(tau)[0], shift, time))
            };
            let mut t_a = self.tau0;
            let (mut r_a, mut best) = {
                let (r, sh, ti) = eval(t_a)?;
                (r, (sh, ti, t_a))
            };
            let mut t_b = t_a + 1e-4 * (1.0 + t_a.abs());
            let mut converged = false;
            for _ in 0..60 {
                let (r_b, sh, ti) = eval(t_b)?;
                best = (sh, ti, t_b);
                if r_b.abs() <= 1e-14 * (1.0 + t_b.abs()) {
                    converged = true;
                    break;
                }
                let denom = r_b - r_a;
                if denom == 0.0 {
                    break;
                }
                let next = t_b - r_b * (t_b - t_a) / denom;
                t_a = t_b;
                r_a = r_b;
                t_b = next;
            }
            if !converged {
                return Err(Self::fail(format!("re-timing onto the observer failed at eps={eps}")));
            }
            best
        };
        let member = FamilyMember {
            family: self,
            generator: gen,
            eps,
            shift,
            time,
            tau,
        };
        for k in 0..=16 {
            let s = k as f64 / 16.0;
            let p = member.point(s);
            let pairing = future_pairing(self.model, &p, self.t_orient, &self.tol)
                .map_err(|e| Self::fail(format!("at s={s}: {e}")))?;
            if !(pairing < 0.0) {
                return Err(Self::fail(format!("member at eps={eps} is not future pointed at s={s}")));
            }
        }
        Ok(member)
    }

    pub fn tau(&self, gen: &dyn VectorField, eps: f64) -> Result<f64> {
        Ok(self.member(gen, eps)?.tau)
    }

    /// `(ε, τ(ε))` table.
    pub fn sweep(&self, gen: &dyn VectorField, eps: &[f64]) -> Result<Vec<(f64, f64)>> {
        eps.iter().map(|e| Ok((*e, self.tau(gen, *e)?))).collect()
    }

    /// `dτ/dε` at 0 with the step chosen by step doubling: `(value, h)`.
    pub fn dtau(&self, gen: &dyn VectorField) -> Result<(f64, f64)> {
        let est = |h: f64| -> Result<f64> {
            let t = |e: f64| self.tau(gen, e);
            Ok((-t(2.0 * h)? + 8.0 * t(h)? - 8.0 * t(-h)? + t(-2.0 * h)?) / (12.0 * h))
        };
        pick_step(&FIRST_STEPS, est)
    }

    /// `d²τ/dε²` at 0 by five-point stencils with step doubling: `(value, h)`.
    pub fn d2tau(&self, gen: &dyn VectorField) -> Result<(f64, f64)> {
        let t0 = self.tau(gen, 0.0)?;
        let est = |h: f64| -> Result<f64> {
            let t = |e: f64| self.tau(gen, e);
            Ok((-t(2.0 * h)? + 16.0 * t(h)? - 30.0 * t0 + 16.0 * t(-h)? - t(-2.0 * h)?) / (12.0 * h * h))
        };
        pick_step(&SECOND_STEPS, est)
    }

    /// `g(Λ̇(1), γ'(τ))` on the unperturbed member, stored convention.
    pub fn boundary_pairing(&self) -> Result<f64> {
        let p = self.base.point(1.0);
        let g = fundamental_tensor(self.model, &p, &self.tol)?;
        Ok(g.pair(&self.observer.velocity(self.tau0), &p.y))
    }

    /// `dτ/dε` predicted from the Euler–Lagrange residual of the unperturbed
    /// member: `−∫ EL·∂Λ/∂ε ds / g(Λ̇(1), γ'(τ))`.
    pub fn first_variation_formula(&self, gen: &dyn VectorField, h: f64) -> Result<f64> {
        let zero = crate::curve::FnField::new({
            let n = self.n();
            move |_| vec![0.0; n]
        });
        let m0 = self.member(&zero, 0.0)?;
        let members = [
            self.member(gen, -2.0 * h)?,
            self.member(gen, -h)?,
            self.member(gen, h)?,
            self.member(gen, 2.0 * h)?,
        ];
        let n = self.n();
        let integral = quadrature::integrate(
            |s| {
                let xs: Vec<Vec<f64>> = members.iter().map(|m| m.position(s)).collect();
                let w: Vec<f64> = (0..n)
                    .map(|i| (xs[0][i] - 8.0 * xs[1][i] + 8.0 * xs[2][i] - xs[3][i]) / (12.0 * h))
                    .collect();
                let p = m0.point(s);
                let so = second_order(self.model, &p, &self.tol)?;
                let acc = DVector::from_vec(m0.acceleration(s));
                let v = DVector::from_column_slice(&p.y);
                let el = &so.dl_dx - so.mixed.transpose() * v - &so.g * acc;
                Ok(el.iter().zip(&w).map(|(a, b)| a * b).sum())
            },
            0.0,
            1.0,
            1e-11,
            1e-9,
        )?;
        let p1 = m0.point(1.0);
        let so = second_order(self.model, &p1, &self.tol)?;
        let denom: f64 = so
            .dl_dy
            .iter()
            .zip(self.observer.velocity(m0.tau))
            .map(|(a, b)| a * b)
            .sum();
        Ok(-integral / denom)
    }
}

fn pick_step<F: Fn(f64) -> Result<f64>>(steps: &[f64], est: F) -> Result<(f64, f64)> {
    let vals: Vec<f64> = steps.iter().map(|h| est(*h)).collect::<Result<_>>()?;
    let mut best = (f64::INFINITY, vals[vals.len() - 1], steps[steps.len() - 1]);
    for k in 0..vals.len() - 1 {
        let err = (vals[k] - vals[k + 1]).abs();
        if err < best.0 {
            best = (err, vals[k + 1], steps[k + 1]);
        }
    }
    Ok((best.1, best.2))
}

impl FamilyMember<'_> {
    fn spatial(&self, s: f64) -> (Vec<f64>, Vec<f64>) {
        self.family.spatial(self.generator, self.eps, &self.shift, s)
    }
}

impl CurveLike for FamilyMember<'_> {
    fn span(&self) -> (f64, f64) {
        (0.0, 1.0)
    }

    fn position(&self, s: f64) -> Vec<f64> {
        let mut x = vec![self.time.at(s)[0]];
        x.extend(self.spatial(s).0);
        x
    }

    fn velocity(&self, s: f64) -> Vec<f64> {
        let f = self.family;
        let (xs, vs) = self.spatial(s);
        let mut x = vec![self.time.at(s)[0]];
        x.extend_from_slice(&xs);
        let guess = f.base.velocity(s)[0];
        let v0 = shell_time_component(f.model, &x, &vs, f.c, Some(guess), &f.tol).unwrap_or(f64::NAN);
        let mut v = vec![v0];
        v.extend(vs);
        v
    }

    fn acceleration(&self, s: f64) -> Vec<f64> {
        derivative(|r| self.velocity(r), s, 0.0, 1.0, 1e-3)
    }

    fn point(&self, s: f64) -> PointedVector {
        PointedVector::new(self.position(s), self.velocity(s))
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct FirstVariation {
    /// Finite-difference `dτ/dε` per generator.
    pub derivatives: Vec<f64>,
    /// The same from the Euler–Lagrange residual formula.
    pub predictions: Vec<f64>,
    pub steps: Vec<f64>,
    /// `max |dτ/dε|`.
    pub residual: f64,
    /// `max |derivative − prediction|`.
    pub max_prediction_gap: f64,
}

/// `dτ/dε` over a generator family, cross-checked against the formula.
pub fn first_variation_tau(family: &AllowedFamily, generators: &[SpatialModes]) -> Result<FirstVariation> {
    let rows: Vec<(f64, f64, f64)> = generators
        .par_iter()
        .map(|g| {
            let (d, h) = family.dtau(g)?;
            let p = family.first_variation_formula(g, h)?;
            Ok((d, p, h))
        })
        .collect::<Result<_>>()?;
    let residual = rows.iter().map(|r| r.0.abs()).fold(0.0, f64::max);
    let gap = rows.iter().map(|r| (r.0 - r.1).abs()).fold(0.0, f64::max);
    Ok(FirstVariation {
        derivatives: rows.iter().map(|r| r.0).collect(),
        predictions: rows.iter().map(|r| r.1).collect(),
        steps: rows.iter().map(|r| r.2).collect(),
        residual,
        max_prediction_gap: gap,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct SecondVariation {
    pub fd_hessian: f64,
    pub prediction: f64,
    pub index_form: f64,
    pub boundary_pairing: f64,
    pub gap: f64,
    pub step: f64,
}

/// Relative gap `|a − b| / max(|a|, |b|)`.
pub fn relative_gap(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

/// Fails when `|g(γ', λ̇(1))|` is negligible against the sizes involved.
pub fn check_boundary_pairing(family: &AllowedFamily) -> Result<f64> {
    let pairing = family.boundary_pairing()?;
    let p = family.base.point(1.0);
    let g = fundamental_tensor(family.model, &p, &family.tol)?;
    let gp = family.observer.velocity(family.tau0);
    let size = g.g.amax() * crate::point::norm(&gp) * p.y_norm();
    if pairing.abs() < 1e-8 * size {
        return Err(FinslerError::DegenerateBoundaryPairing { pairing });
    }
    Ok(pairing)
}

/// The τ-Hessian along `gen` by finite differences against
/// `J_λ(A, A)/g(γ', λ̇(1))`, `A` the orthogonal lift of `gen`.
pub fn second_variation_check(
    family: &AllowedFamily,
    gen: &SpatialModes,
    route: CurvatureRoute,
) -> Result<SecondVariation> {
    let pairing = check_boundary_pairing(family)?;
    let lift = OrthogonalLift {
        model: family.model,
        curve: family.base,
        field: gen,
        tol: family.tol,
    };
    let j = index_form(family.model, family.base, &lift, &lift, route, &family.tol)?;
    let prediction = j / pairing;
    let (fd, h) = family.d2tau(gen)?;
    Ok(SecondVariation {
        fd_hessian: fd,
        prediction,
        index_form: j,
        boundary_pairing: pairing,
        gap: relative_gap(fd, prediction),
        step: h,
    })
}

/// FD τ-Hessian on a basis, by polarization of second derivatives.
pub fn tau_hessian(family: &AllowedFamily, basis: &[SpatialModes]) -> Result<DMatrix<f64>> {
    let m = basis.len();
    let diag: Vec<f64> = basis.par_iter().map(|b| Ok(family.d2tau(b)?.0)).collect::<Result<_>>()?;
    let pairs: Vec<(usize, usize)> = (0..m).flat_map(|i| (i + 1..m).map(move |j| (i, j))).collect();
    let off: Vec<f64> = pairs
        .par_iter()
        .map(|(i, j)| Ok(family.d2tau(&basis[*i].plus(&basis[*j]))?.0))
        .collect::<Result<_>>()?;
    let mut h = DMatrix::zeros(m, m);
    for i in 0..m {
        h[(i, i)] = diag[i];
    }
    for ((i, j), v) in pairs.iter().zip(off) {
        let x = 0.5 * (v - diag[*i] - diag[*j]);
        h[(*i, *j)] = x;
        h[(*j, *i)] = x;
    }
    Ok(h)
}

/// Index-form prediction of [`tau_hessian`].
pub fn predicted_hessian(family: &AllowedFamily, basis: &[SpatialModes], route: CurvatureRoute) -> Result<DMatrix<f64>> {
    let pairing = check_boundary_pairing(family)?;
    let m = basis.len();
    let lifts: Vec<OrthogonalLift> = basis
        .iter()
        .map(|b| OrthogonalLift {
            model: family.model,
            curve: family.base,
            field: b,
            tol: family.tol,
        })
        .collect();
    let pairs: Vec<(usize, usize)> = (0..m).flat_map(|i| (i..m).map(move |j| (i, j))).collect();
    let vals: Vec<f64> = pairs
        .par_iter()
        .map(|(i, j)| index_form(family.model, family.base, &lifts[*i], &lifts[*j], route, &family.tol))
        .collect::<Result<_>>()?;
    let mut h = DMatrix::zeros(m, m);
    for ((i, j), v) in pairs.iter().zip(vals) {
        h[(*i, *j)] = v / pairing;
        h[(*j, *i)] = v / pairing;
    }
    Ok(h)
}

/// Number of eigenvalues below `−floor · max |λ|`.
pub fn negative_eigenvalues(h: &DMatrix<f64>, floor: f64) -> usize {
    let eig = h.clone().symmetric_eigen();
    let scale = eig.eigenvalues.amax();
    eig.eigenvalues.iter().filter(|v| **v < -floor * scale).count()
}

/// Directions with negative and positive FD τ-Hessian, if any.
#[derive(Clone, Debug, Serialize)]
pub struct HessianDirections {
    pub negative: Option<(SpatialModes, f64)>,
    pub positive: Option<(SpatialModes, f64)>,
}

/// Searches the Fourier basis for directions of both Hessian signs.
pub fn hessian_directions(family: &AllowedFamily, max_mode: u32) -> Result<HessianDirections> {
    let basis = fourier_basis(family.model.dim(), max_mode);
    let vals: Vec<f64> = basis.par_iter().map(|b| Ok(family.d2tau(b)?.0)).collect::<Result<_>>()?;
    let pick = |neg: bool| {
        basis
            .iter()
            .zip(&vals)
            .filter(|(_, v)| if neg { **v < 0.0 } else { **v > 0.0 })
            .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
            .map(|(b, v)| (b.clone(), *v))
    };
    Ok(HessianDirections {
        negative: pick(true),
        positive: pick(false),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fermat::shooting::shoot;
    use crate::models;
    use std::f64::consts::PI;

    #[test]
    fn minkowski_timelike_second_variation_closed_form() {
        let m = models::minkowski(4).unwrap();
        let tol = Tolerances::default();
        let t = TimeOrientation::for_model(&m).unwrap();
        let obs = Observer::fixed(vec![1.0, 0.0, 0.0]);
        let shot = shoot(&m, &[0.0; 4], &obs, 1.0, &t, None, &tol).unwrap();
        let fam = AllowedFamily::new(m.as_ref(), &shot.path, &obs, 1.0, &t, shot.tau, &tol).unwrap();
        assert!((fam.tau0 - 2f64.sqrt()).abs() < 1e-10);
        let a = SpatialModes::single(4, 1, 2, 1.0);
        let sv = second_variation_check(&fam, &a, CurvatureRoute::Formal).unwrap();
        let exact = PI * PI / (2.0 * 2f64.sqrt());
        assert!(relative_gap(sv.prediction, exact) < 1e-8, "{}", sv.prediction);
        assert!(sv.gap < 1e-3, "{sv:?}");
        let (d, _) = fam.dtau(&a).unwrap();
        assert!(d.abs() < 1e-7);
    }
}
