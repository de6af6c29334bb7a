//! Adaptive Gauss–Kronrod (7/15) quadrature.

use crate::error::{FinslerError, Result};

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

fn gk15<F: FnMut(f64) -> Result<f64>>(f: &mut F, a: f64, b: f64) -> Result<(f64, f64)> {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c)?;
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx)? + f(c + dx)?;
        kron += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    Ok((kron * h, ((kron - gauss) * h).abs()))
}

/// `∫_a^b f` to `max(abs, rel·|I|)`, bisecting the worst subinterval.
pub fn integrate<F: FnMut(f64) -> Result<f64>>(mut f: F, a: f64, b: f64, abs: f64, rel: f64) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    let (v, e) = gk15(&mut f, a, b)?;
    let mut parts = vec![(a, b, v, e)];
    for _ in 0..2000 {
        let total: f64 = parts.iter().map(|p| p.2).sum();
        let err: f64 = parts.iter().map(|p| p.3).sum();
        if !total.is_finite() {
            return Err(FinslerError::NumericalBreakdown("non-finite integrand".into()));
        }
        if err <= abs.max(rel * total.abs()) {
            return Ok(total);
        }
        let (idx, _) = parts
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .expect("nonempty");
        let (lo, hi, _, _) = parts.swap_remove(idx);
        let mid = 0.5 * (lo + hi);
        let (v1, e1) = gk15(&mut f, lo, mid)?;
        let (v2, e2) = gk15(&mut f, mid, hi)?;
        parts.push((lo, mid, v1, e1));
        parts.push((mid, hi, v2, e2));
    }
    Err(FinslerError::NoConvergence {
        iterations: 2000,
        residual: parts.iter().map(|p| p.3).sum(),
    })
}

/// Integrates several integrands sharing one evaluation, adapting on the
/// largest component error.
pub fn integrate_vec<F: FnMut(f64) -> Result<Vec<f64>>>(
    mut f: F,
    dim: usize,
    a: f64,
    b: f64,
    abs: f64,
    rel: f64,
) -> Result<Vec<f64>> {
    type Part = (f64, f64, Vec<f64>, f64);
    let mut rule = |lo: f64, hi: f64| -> Result<Part> {
        let c = 0.5 * (lo + hi);
        let h = 0.5 * (hi - lo);
        let fc = f(c)?;
        let mut kron: Vec<f64> = fc.iter().map(|v| v * WGK[7]).collect();
        let mut gauss: Vec<f64> = fc.iter().map(|v| v * WG[3]).collect();
        for j in 0..7 {
            let dx = h * XGK[j];
            let l = f(c - dx)?;
            let r = f(c + dx)?;
            for i in 0..dim {
                let s = l[i] + r[i];
                kron[i] += WGK[j] * s;
                if j % 2 == 1 {
                    gauss[i] += WG[j / 2] * s;
                }
            }
        }
        let err = (0..dim).map(|i| ((kron[i] - gauss[i]) * h).abs()).fold(0.0, f64::max);
        Ok((lo, hi, kron.into_iter().map(|v| v * h).collect(), err))
    };
    if a == b {
        return Ok(vec![0.0; dim]);
    }
    let mut parts = vec![rule(a, b)?];
    for _ in 0..2000 {
        let mut total = vec![0.0; dim];
        for p in &parts {
            for i in 0..dim {
                total[i] += p.2[i];
            }
        }
        let err: f64 = parts.iter().map(|p| p.3).sum();
        let scale = total.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if err <= abs.max(rel * scale) {
            return Ok(total);
        }
        let (idx, _) = parts
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .expect("nonempty");
        let (lo, hi, _, _) = parts.swap_remove(idx);
        let mid = 0.5 * (lo + hi);
        parts.push(rule(lo, mid)?);
        parts.push(rule(mid, hi)?);
    }
    Err(FinslerError::NoConvergence {
        iterations: 2000,
        residual: parts.iter().map(|p| p.3).sum(),
    })
}
