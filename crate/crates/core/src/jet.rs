//! Truncated multivariate Taylor arithmetic for exact fiber and base derivatives.
//!
//! A [`MultiDual<C>`] carries `C = 2^K` coefficients, one per subset of `K`
//! nilpotent infinitesimals `ε_1 … ε_K` with `ε_i² = 0`. Seeding each
//! infinitesimal along one coordinate direction and reading the coefficient of
//! `ε_1 ε_2 … ε_K` yields the mixed partial derivative of order `K` exactly,
//! with no truncation error. `K = 1` is the ordinary dual number, `K = 2` the
//! hyper-dual number.
//!
//! Models are written once against the [`Scalar`] trait and are then evaluated
//! with `f64` for values and with the jet types for derivatives.

use std::fmt::Debug;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};

/// Arithmetic needed to evaluate a Lagrangian.
pub trait Scalar:
    Copy
    + Debug
    + Send
    + Sync
    + 'static
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Add<f64, Output = Self>
    + Sub<f64, Output = Self>
    + Mul<f64, Output = Self>
    + Div<f64, Output = Self>
    + AddAssign
    + SubAssign
    + MulAssign
{
    fn cst(v: f64) -> Self;
    /// Real (zeroth-order) part.
    fn re(&self) -> f64;
    fn sqrt(self) -> Self;
    fn powf(self, p: f64) -> Self;
    fn powi(self, k: i32) -> Self;
    fn sin(self) -> Self;
    fn cos(self) -> Self;
    fn exp(self) -> Self;
    fn ln(self) -> Self;
    fn abs(self) -> Self;
    fn recip(self) -> Self;

    fn zero() -> Self {
        Self::cst(0.0)
    }

    fn one() -> Self {
        Self::cst(1.0)
    }

    fn square(self) -> Self {
        self * self
    }
}

impl Scalar for f64 {
    fn cst(v: f64) -> Self {
        v
    }
    fn re(&self) -> f64 {
        *self
    }
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    fn powf(self, p: f64) -> Self {
        f64::powf(self, p)
    }
    fn powi(self, k: i32) -> Self {
        f64::powi(self, k)
    }
    fn sin(self) -> Self {
        f64::sin(self)
    }
    fn cos(self) -> Self {
        f64::cos(self)
    }
    fn exp(self) -> Self {
        f64::exp(self)
    }
    fn ln(self) -> Self {
        f64::ln(self)
    }
    fn abs(self) -> Self {
        f64::abs(self)
    }
    fn recip(self) -> Self {
        1.0 / self
    }
}

/// Highest number of infinitesimals supported (`C <= 16`).
pub const MAX_ORDER: usize = 4;

/// Number with `log2(C)` nilpotent infinitesimal parts.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MultiDual<const C: usize> {
    pub c: [f64; C],
}

/// One infinitesimal: value and first derivative.
pub type Dual = MultiDual<2>;
/// Two infinitesimals: exact second mixed partials.
pub type HyperDual = MultiDual<4>;
/// Three infinitesimals: exact third mixed partials.
pub type Jet3 = MultiDual<8>;
/// Four infinitesimals: exact fourth mixed partials.
pub type Jet4 = MultiDual<16>;

impl<const C: usize> MultiDual<C> {
    /// Number of infinitesimals.
    pub const ORDER: usize = C.trailing_zeros() as usize;

    pub fn constant(v: f64) -> Self {
        let mut c = [0.0; C];
        c[0] = v;
        Self { c }
    }

    /// `v + Σ ε_k` over the infinitesimals listed in `seeds`.
    pub fn seeded(v: f64, seeds: &[usize]) -> Self {
        let mut out = Self::constant(v);
        for &k in seeds {
            debug_assert!(k < Self::ORDER);
            out.c[1 << k] += 1.0;
        }
        out
    }

    /// Coefficient of the product of all infinitesimals.
    pub fn top(&self) -> f64 {
        self.c[C - 1]
    }

    /// Coefficient of `Π_{k ∈ mask} ε_k`.
    pub fn coeff(&self, mask: usize) -> f64 {
        self.c[mask]
    }

    /// Evaluates `f(self)` given `derivs[k] = f^(k)(re)` for `k = 0..=ORDER`.
    fn chain(self, derivs: &[f64; MAX_ORDER + 1]) -> Self {
        let derivs = &derivs[..=Self::ORDER];
        let mut delta = self;
        delta.c[0] = 0.0;
        let mut out = Self::constant(derivs[0]);
        let mut power = delta;
        let mut factorial = 1.0;
        for (k, d) in derivs.iter().enumerate().skip(1) {
            factorial *= k as f64;
            if *d != 0.0 {
                out += power * (d / factorial);
            }
            if k < derivs.len() - 1 {
                power = power * delta;
            }
        }
        out
    }

    fn power_derivs(a: f64, p: f64) -> [f64; MAX_ORDER + 1] {
        let mut out = [0.0; MAX_ORDER + 1];
        let base = a.powf(p - Self::ORDER as f64);
        // a^(p-k) = base * a^(ORDER-k), avoids repeated powf
        let mut coef = 1.0;
        for (k, slot) in out.iter_mut().enumerate().take(Self::ORDER + 1) {
            *slot = coef * base * a.powi((Self::ORDER - k) as i32);
            coef *= p - k as f64;
        }
        out
    }

    fn cyclic(vals: [f64; 4]) -> [f64; MAX_ORDER + 1] {
        let mut out = [0.0; MAX_ORDER + 1];
        for (k, slot) in out.iter_mut().enumerate() {
            *slot = vals[k % 4];
        }
        out
    }
}

impl<const C: usize> Add for MultiDual<C> {
    type Output = Self;
    fn add(mut self, rhs: Self) -> Self {
        for (a, b) in self.c.iter_mut().zip(rhs.c.iter()) {
            *a += b;
        }
        self
    }
}

impl<const C: usize> Sub for MultiDual<C> {
    type Output = Self;
    fn sub(mut self, rhs: Self) -> Self {
        for (a, b) in self.c.iter_mut().zip(rhs.c.iter()) {
            *a -= b;
        }
        self
    }
}

impl<const C: usize> Mul for MultiDual<C> {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        let mut out = [0.0; C];
        for (m, slot) in out.iter_mut().enumerate() {
            let mut acc = 0.0;
            let mut sub = m;
            loop {
                acc += self.c[sub] * rhs.c[m ^ sub];
                if sub == 0 {
                    break;
                }
                sub = (sub - 1) & m;
            }
            *slot = acc;
        }
        Self { c: out }
    }
}

impl<const C: usize> Div for MultiDual<C> {
    type Output = Self;
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn div(self, rhs: Self) -> Self {
        self * rhs.recip()
    }
}

impl<const C: usize> Neg for MultiDual<C> {
    type Output = Self;
    fn neg(mut self) -> Self {
        for a in self.c.iter_mut() {
            *a = -*a;
        }
        self
    }
}

impl<const C: usize> Add<f64> for MultiDual<C> {
    type Output = Self;
    fn add(mut self, rhs: f64) -> Self {
        self.c[0] += rhs;
        self
    }
}

impl<const C: usize> Sub<f64> for MultiDual<C> {
    type Output = Self;
    fn sub(mut self, rhs: f64) -> Self {
        self.c[0] -= rhs;
        self
    }
}

impl<const C: usize> Mul<f64> for MultiDual<C> {
    type Output = Self;
    fn mul(mut self, rhs: f64) -> Self {
        for a in self.c.iter_mut() {
            *a *= rhs;
        }
        self
    }
}

impl<const C: usize> Div<f64> for MultiDual<C> {
    type Output = Self;
    fn div(self, rhs: f64) -> Self {
        self * (1.0 / rhs)
    }
}

impl<const C: usize> AddAssign for MultiDual<C> {
    fn add_assign(&mut self, rhs: Self) {
        *self = *self + rhs;
    }
}

impl<const C: usize> SubAssign for MultiDual<C> {
    fn sub_assign(&mut self, rhs: Self) {
        *self = *self - rhs;
    }
}

impl<const C: usize> MulAssign for MultiDual<C> {
    fn mul_assign(&mut self, rhs: Self) {
        *self = *self * rhs;
    }
}

impl<const C: usize> Scalar for MultiDual<C> {
    fn cst(v: f64) -> Self {
        Self::constant(v)
    }

    fn re(&self) -> f64 {
        self.c[0]
    }

    fn sqrt(self) -> Self {
        self.powf(0.5)
    }

    fn powf(self, p: f64) -> Self {
        let d = Self::power_derivs(self.c[0], p);
        self.chain(&d)
    }

    fn powi(self, k: i32) -> Self {
        match k {
            0 => Self::constant(1.0),
            1 => self,
            2 => self * self,
            k if k > 0 => {
                let mut out = self;
                for _ in 1..k {
                    out = out * self;
                }
                out
            }
            k => self.powi(-k).recip(),
        }
    }

    fn sin(self) -> Self {
        let (s, c) = self.c[0].sin_cos();
        self.chain(&Self::cyclic([s, c, -s, -c]))
    }

    fn cos(self) -> Self {
        let (s, c) = self.c[0].sin_cos();
        self.chain(&Self::cyclic([c, -s, -c, s]))
    }

    fn exp(self) -> Self {
        self.chain(&[self.c[0].exp(); MAX_ORDER + 1])
    }

    fn ln(self) -> Self {
        let a = self.c[0];
        let mut d = [0.0; MAX_ORDER + 1];
        d[0] = a.ln();
        let mut coef = 1.0;
        for (k, slot) in d.iter_mut().enumerate().skip(1) {
            *slot = coef / a.powi(k as i32);
            coef *= -(k as f64);
        }
        self.chain(&d)
    }

    fn abs(self) -> Self {
        if self.c[0] < 0.0 {
            -self
        } else {
            self
        }
    }

    fn recip(self) -> Self {
        let a = self.c[0];
        let mut d = [0.0; MAX_ORDER + 1];
        let mut coef = 1.0;
        for (k, slot) in d.iter_mut().enumerate() {
            *slot = coef / a.powi(k as i32 + 1);
            coef *= -((k + 1) as f64);
        }
        self.chain(&d)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * (1.0 + b.abs())
    }

    #[test]
    fn hyperdual_second_derivative_of_product() {
        // f(x, y) = x^2 y^3 at (1.5, -0.7); d2f/dxdy = 6 x y^2
        let x = HyperDual::seeded(1.5, &[0]);
        let y = HyperDual::seeded(-0.7, &[1]);
        let f = x * x * y * y * y;
        assert!(close(f.coeff(1), 2.0 * 1.5 * (-0.7f64).powi(3), 1e-15));
        assert!(close(f.coeff(2), 3.0 * 1.5f64.powi(2) * 0.49, 1e-15));
        assert!(close(f.top(), 6.0 * 1.5 * 0.49, 1e-15));
    }

    #[test]
    fn repeated_seed_gives_pure_higher_derivative() {
        // d^4/dx^4 of sin at 0.3 is sin(0.3)
        let x = Jet4::seeded(0.3, &[0, 1, 2, 3]);
        assert!(close(x.sin().top(), 0.3f64.sin(), 1e-14));
        // d^3/dx^3 x^{5/2} = (5/2)(3/2)(1/2) x^{-1/2}
        let x = Jet3::seeded(2.0, &[0, 1, 2]);
        assert!(close(x.powf(2.5).top(), 2.5 * 1.5 * 0.5 / 2f64.sqrt(), 1e-14));
    }

    #[test]
    fn recip_ln_exp_chain_rules() {
        let x = Jet3::seeded(1.7, &[0, 1, 2]);
        // (1/x)''' = -6 / x^4
        assert!(close(x.recip().top(), -6.0 / 1.7f64.powi(4), 1e-14));
        // ln''' = 2 / x^3
        assert!(close(x.ln().top(), 2.0 / 1.7f64.powi(3), 1e-14));
        assert!(close(x.exp().top(), 1.7f64.exp(), 1e-14));
        let q = Jet3::seeded(1.7, &[0]) / Jet3::seeded(0.4, &[1]);
        // d2/dadb (a/b) = -1/b^2
        assert!(close(q.coeff(3), -1.0 / 0.16, 1e-14));
    }

    #[test]
    fn cos_and_abs() {
        let x = HyperDual::seeded(-0.4, &[0, 1]);
        assert!(close(x.cos().top(), -(0.4f64).cos(), 1e-15));
        let a = x.abs();
        assert_eq!(a.re(), 0.4);
        assert_eq!(a.coeff(1), -1.0);
        assert!(close(x.powi(-2).re(), 1.0 / 0.16, 1e-15));
    }
}
