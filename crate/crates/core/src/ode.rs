//! Dormand–Prince 5(4) with PI step control, continuous extension and
//! guard-function events located by bisection on the dense output.

use crate::error::{FinslerError, Result};

const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];
const D: [f64; 7] = [
    -12715105075.0 / 11282082432.0,
    0.0,
    87487479700.0 / 32700410799.0,
    -10690763975.0 / 1880347072.0,
    701980252875.0 / 199316789632.0,
    -1453857185.0 / 822651844.0,
    69997945.0 / 29380423.0,
];

#[derive(Clone, Debug)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    pub h0: Option<f64>,
    pub h_max: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self {
            rtol: 1e-10,
            atol: 1e-12,
            h0: None,
            h_max: f64::INFINITY,
            max_steps: 100_000,
        }
    }
}

impl OdeOptions {
    pub fn with_tol(rtol: f64, atol: f64) -> Self {
        Self {
            rtol,
            atol,
            ..Self::default()
        }
    }
}

#[derive(Clone, Copy, Debug, Default, serde::Serialize)]
pub struct OdeStats {
    pub accepted: usize,
    pub rejected: usize,
    pub rhs_evals: usize,
}

/// Coefficients of the continuous extension on one accepted step.
#[derive(Clone, Debug)]
struct Segment {
    t0: f64,
    h: f64,
    r: [Vec<f64>; 5],
}

impl Segment {
    fn eval(&self, t: f64, out: &mut [f64]) {
        let th = (t - self.t0) / self.h;
        let th1 = 1.0 - th;
        for i in 0..out.len() {
            out[i] = self.r[0][i]
                + th * (self.r[1][i] + th1 * (self.r[2][i] + th * (self.r[3][i] + th1 * self.r[4][i])));
        }
    }
}

/// Dense solution on `[t0, t_end]` (either direction).
#[derive(Clone, Debug)]
pub struct OdeSolution {
    pub ts: Vec<f64>,
    pub ys: Vec<Vec<f64>>,
    segments: Vec<Segment>,
    pub stats: OdeStats,
    /// Set when a guard fired; the solution ends at the located crossing.
    pub event: Option<f64>,
}

impl OdeSolution {
    pub fn t_start(&self) -> f64 {
        self.ts[0]
    }

    pub fn t_end(&self) -> f64 {
        *self.ts.last().expect("nonempty solution")
    }

    pub fn dim(&self) -> usize {
        self.ys[0].len()
    }

    /// Interpolated state; clamps to the covered interval.
    pub fn at(&self, t: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.at_into(t, &mut out);
        out
    }

    pub fn at_into(&self, t: f64, out: &mut [f64]) {
        if self.segments.is_empty() {
            out.copy_from_slice(&self.ys[0]);
            return;
        }
        let forward = self.t_end() >= self.t_start();
        let key = |s: &Segment| if forward { s.t0 } else { -s.t0 };
        let tk = if forward { t } else { -t };
        let idx = self.segments.partition_point(|s| key(s) <= tk).saturating_sub(1);
        let seg = &self.segments[idx];
        let t = if forward {
            t.clamp(self.t_start(), self.t_end())
        } else {
            t.clamp(self.t_end(), self.t_start())
        };
        seg.eval(t, out);
    }
}

fn err_norm(err: &[f64], y0: &[f64], y1: &[f64], o: &OdeOptions) -> f64 {
    let n = err.len() as f64;
    let sum: f64 = err
        .iter()
        .zip(y0.iter().zip(y1))
        .map(|(e, (a, b))| {
            let sc = o.atol + o.rtol * a.abs().max(b.abs());
            (e / sc).powi(2)
        })
        .sum();
    (sum / n).sqrt()
}

/// Integrates `y' = f(t, y)` from `t0` to `t1`. A failing right-hand side
/// is treated like an error-test failure; a guard `g(t, y)` stops the run at
/// its first sign change from nonnegative to negative.
pub fn integrate<F, G>(
    mut f: F,
    t0: f64,
    y0: &[f64],
    t1: f64,
    opts: &OdeOptions,
    mut guard: Option<G>,
) -> Result<OdeSolution>
where
    F: FnMut(f64, &[f64], &mut [f64]) -> Result<()>,
    G: FnMut(f64, &[f64]) -> f64,
{
    let n = y0.len();
    let dir = if t1 >= t0 { 1.0 } else { -1.0 };
    let span = (t1 - t0).abs();
    let mut stats = OdeStats::default();
    let mut sol = OdeSolution {
        ts: vec![t0],
        ys: vec![y0.to_vec()],
        segments: Vec::new(),
        stats,
        event: None,
    };
    if span == 0.0 {
        return Ok(sol);
    }
    if let Some(g) = guard.as_mut() {
        if !(g(t0, y0) >= 0.0) {
            sol.event = Some(t0);
            return Ok(sol);
        }
    }
    let mut k: Vec<Vec<f64>> = vec![vec![0.0; n]; 7];
    let mut y = y0.to_vec();
    let mut t = t0;
    f(t, &y, &mut k[0]).map_err(|e| annotate(e, t))?;
    stats.rhs_evals += 1;

    let mut h = match opts.h0 {
        Some(h) => h.min(span),
        None => initial_step(&k[0], &y, opts, span),
    };
    let mut err_old: f64 = 1e-4;
    let mut last_rejected = false;
    let mut ytmp = vec![0.0; n];
    let mut ynew = vec![0.0; n];
    let mut errv = vec![0.0; n];
    let h_min = 1e-14 * span.max(t0.abs());
    let mut last_stage_err: Option<FinslerError> = None;

    while dir * (t1 - t) > 0.0 {
        if stats.accepted + stats.rejected >= opts.max_steps {
            return Err(FinslerError::StepFailure { s: t, h });
        }
        h = h.min(opts.h_max).min((t1 - t).abs());
        if (t1 - t).abs() - h < 1e-12 * span {
            h = (t1 - t).abs();
        }
        if h < h_min {
            return Err(last_stage_err.unwrap_or(FinslerError::StepFailure { s: t, h }));
        }
        let hs = dir * h;
        let mut stage_failed = None;
        for s in 1..7 {
            for i in 0..n {
                let mut acc = y[i];
                for j in 0..s {
                    acc += hs * A[s][j] * k[j][i];
                }
                ytmp[i] = acc;
            }
            if let Err(e) = f(t + C[s] * hs, &ytmp, &mut k[s]) {
                stage_failed = Some(e);
                break;
            }
            stats.rhs_evals += 1;
            if s == 6 {
                ynew.copy_from_slice(&ytmp);
            }
        }
        let err = if let Some(e) = stage_failed {
            last_stage_err = Some(annotate(e, t));
            f64::INFINITY
        } else {
            for i in 0..n {
                let mut e = 0.0;
                for j in 0..7 {
                    e += E[j] * k[j][i];
                }
                errv[i] = hs * e;
            }
            let v = err_norm(&errv, &y, &ynew, opts);
            if v.is_finite() {
                v
            } else {
                f64::INFINITY
            }
        };
        if err <= 1.0 {
            let mut r: [Vec<f64>; 5] = Default::default();
            r[0] = y.clone();
            r[1] = (0..n).map(|i| ynew[i] - y[i]).collect();
            r[2] = (0..n).map(|i| hs * k[0][i] - r[1][i]).collect();
            r[3] = (0..n).map(|i| r[1][i] - hs * k[6][i] - r[2][i]).collect();
            r[4] = (0..n)
                .map(|i| hs * (0..7).map(|j| D[j] * k[j][i]).sum::<f64>())
                .collect();
            let seg = Segment { t0: t, h: hs, r };
            let t_new = t + hs;
            if let Some(g) = guard.as_mut() {
                let gv = g(t_new, &ynew);
                if !(gv >= 0.0) {
                    let te = locate(&seg, t, t_new, g, n);
                    let mut ye = vec![0.0; n];
                    seg.eval(te, &mut ye);
                    sol.segments.push(Segment {
                        t0: t,
                        h: hs,
                        r: seg.r,
                    });
                    sol.ts.push(te);
                    sol.ys.push(ye);
                    stats.accepted += 1;
                    sol.stats = stats;
                    sol.event = Some(te);
                    return Ok(sol);
                }
            }
            sol.segments.push(seg);
            t = t_new;
            y.copy_from_slice(&ynew);
            sol.ts.push(t);
            sol.ys.push(y.clone());
            // FSAL: stage 7 is f(t_new, y_new).
            let last = k[6].clone();
            k[0].copy_from_slice(&last);
            stats.accepted += 1;
            let fac = if err == 0.0 {
                5.0
            } else {
                (0.9 * err.powf(-0.14) * err_old.powf(0.08)).clamp(0.2, 5.0)
            };
            let fac = if last_rejected { fac.min(1.0) } else { fac };
            err_old = err.max(1e-4);
            h *= fac;
            last_rejected = false;
        } else {
            stats.rejected += 1;
            let fac = if err.is_finite() {
                (0.9 * err.powf(-0.2)).clamp(0.1, 0.9)
            } else {
                0.25
            };
            h *= fac;
            last_rejected = true;
        }
    }
    sol.stats = stats;
    Ok(sol)
}

fn annotate(e: FinslerError, t: f64) -> FinslerError {
    match e {
        FinslerError::NumericalBreakdown(m) => FinslerError::NumericalBreakdown(format!("{m} at t={t}")),
        other => other,
    }
}

/// Bisection for the first crossing of the guard inside one step.
fn locate<G: FnMut(f64, &[f64]) -> f64>(seg: &Segment, ta: f64, tb: f64, g: &mut G, n: usize) -> f64 {
    let mut lo = ta;
    let mut hi = tb;
    let mut buf = vec![0.0; n];
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        seg.eval(mid, &mut buf);
        if g(mid, &buf) >= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

fn initial_step(f0: &[f64], y0: &[f64], o: &OdeOptions, span: f64) -> f64 {
    let sc: Vec<f64> = y0.iter().map(|v| o.atol + o.rtol * v.abs()).collect();
    let d0 = rms(y0, &sc);
    let d1 = rms(f0, &sc);
    let h = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 * span.max(1e-3) } else { 0.01 * d0 / d1 };
    h.min(0.1 * span).max(1e-10 * span)
}

fn rms(v: &[f64], sc: &[f64]) -> f64 {
    let s: f64 = v.iter().zip(sc).map(|(a, b)| (a / b).powi(2)).sum();
    (s / v.len() as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    type NoGuard = fn(f64, &[f64]) -> f64;

    #[test]
    fn harmonic_oscillator_and_dense_output() {
        let sol = integrate(
            |_, y: &[f64], d: &mut [f64]| {
                d[0] = y[1];
                d[1] = -y[0];
                Ok(())
            },
            0.0,
            &[0.0, 1.0],
            10.0,
            &OdeOptions::default(),
            None::<NoGuard>,
        )
        .unwrap();
        assert!((sol.at(10.0)[0] - 10f64.sin()).abs() < 1e-8);
        for t in [0.123, 3.3, 7.77] {
            assert!((sol.at(t)[0] - t.sin()).abs() < 1e-8);
        }
    }

    #[test]
    fn guard_stops_at_crossing() {
        let sol = integrate(
            |_, _y: &[f64], d: &mut [f64]| {
                d[0] = 1.0;
                Ok(())
            },
            0.0,
            &[0.0],
            2.0,
            &OdeOptions::default(),
            Some(|_t: f64, y: &[f64]| 0.75 - y[0]),
        )
        .unwrap();
        assert!((sol.event.unwrap() - 0.75).abs() < 1e-12);
    }

    #[test]
    fn backward_integration() {
        let sol = integrate(
            |_, y: &[f64], d: &mut [f64]| {
                d[0] = y[0];
                Ok(())
            },
            1.0,
            &[1.0],
            0.0,
            &OdeOptions::default(),
            None::<NoGuard>,
        )
        .unwrap();
        assert!((sol.at(0.0)[0] - (-1f64).exp()).abs() < 1e-10);
        assert!((sol.at(0.5)[0] - (-0.5f64).exp()).abs() < 1e-9);
    }
}
